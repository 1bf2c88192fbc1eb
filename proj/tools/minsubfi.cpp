// minsubfi: demonstration generation, training, evaluation and the
// initialization and demo-quality experiments.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "blob_hash.hpp"
#include "minsubfi/alpha_opt.hpp"
#include "minsubfi/demos.hpp"
#include "minsubfi/eval.hpp"
#include "minsubfi/learners.hpp"
#include "minsubfi/repr_learn.hpp"
#include "minsubfi/run_config.hpp"
#include "minsubfi/seeds.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace minsubfi;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw UsageError("failed writing '" + path.string() + "'");
}

std::string join(const std::vector<double>& v, char sep) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? std::string(1, sep) : "") << v[i];
  return os.str();
}

// Every RunConfig key is also a flag: --key-with-dashes VALUE. Values are
// converted according to the type of the key's default.
class ConfigFlags {
 public:
  void attach(CLI::App* app) {
    app->add_option("--config", config_path_, "flat JSON config file");
    const json defaults = to_json(RunConfig{});
    for (const auto& [key, value] : defaults.items()) {
      std::string flag = "--" + key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      const std::string k = key;
      const json def = value;
      app->add_option_function<std::string>(
          flag, [this, k, def](const std::string& raw) { overrides_[k] = convert(def, raw, k); },
          "override config key " + key);
    }
  }

  RunConfig resolve() const {
    RunConfig base = config_path_.empty() ? RunConfig{} : load_run_config(config_path_);
    RunConfig cfg = run_config_from_json(overrides_, base);
    cfg.validate();
    return cfg;
  }

 private:
  static json convert(const json& def, const std::string& raw, const std::string& key) {
    try {
      if (def.is_boolean()) {
        if (raw == "true" || raw == "1") return true;
        if (raw == "false" || raw == "0") return false;
        throw InvalidInput("expected true or false");
      }
      if (def.is_number_integer() || def.is_number_unsigned()) return std::stoll(raw);
      if (def.is_number()) return std::stod(raw);
      if (def.is_array()) {
        json arr = json::array();
        std::stringstream ss(raw);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) arr.push_back(std::stoull(item));
        return arr;
      }
      return raw;
    } catch (const InvalidInput&) {
      throw InvalidInput("--" + key + ": expected true or false");
    } catch (const std::exception&) {
      throw InvalidInput("--" + key + ": cannot parse '" + raw + "'");
    }
  }

  std::string config_path_;
  json overrides_ = json::object();
};

DemoSet load_configured_demos(const RunConfig& cfg) {
  if (cfg.demos.empty()) throw InvalidInput("no demonstration file given (--demos)");
  if (!fs::exists(cfg.demos)) throw InvalidInput("demonstration file '" + cfg.demos + "' does not exist");
  return load_demos(cfg.demos);
}

json file_entry(const fs::path& p) { return json{{"path", p.string()}, {"blob_sha1", tools::file_blob_hash(p.string())}}; }

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    const std::vector<fs::path>& outputs) {
  json m;
  m["tool"] = "minsubfi";
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["inputs"] = json::array();
  if (!cfg.demos.empty()) m["inputs"].push_back(file_entry(cfg.demos));
  if (!cfg.featnet.empty()) m["inputs"].push_back(file_entry(cfg.featnet));
  m["outputs"] = json::array();
  for (const auto& p : outputs) m["outputs"].push_back(file_entry(p));
  write_file(dir / "manifest.json", m.dump(1) + "\n");
}

HingeSlopes load_slopes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open slopes file '" + path + "'");
  try {
    const json j = json::parse(in);
    return HingeSlopes(j.at("alpha").get<std::vector<double>>(), j.value("lambda_alpha", 0.0));
  } catch (const json::exception& e) {
    throw InvalidInput("slopes file '" + path + "': " + e.what());
  }
}

std::string slopes_json(const HingeSlopes& s) {
  return json{{"alpha", s.alpha}, {"lambda_alpha", s.lambda_alpha}}.dump(1) + "\n";
}

// ---------------------------------------------------------------- gen-demos

struct GenDemosArgs {
  std::string env = "cartpole";
  int n = 100;
  double noise = 0.3;
  std::uint64_t seed = 0;
  int tasks = 1;
  std::string out;
};

int cmd_gen_demos(const GenDemosArgs& a) {
  if (a.n < 1) throw UsageError("--n must be >= 1");
  const EnvId id = parse_env_id(a.env);
  const DemoSet demos = gen_demos(id, a.n, a.noise, a.seed, DemoGenOptions{a.tasks});
  const std::string path = a.out.empty() ? a.env + ".demos.jsonl" : a.out;
  write_file(path, demos_to_jsonl(demos));
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  for (const auto& d : demos) {
    lo = std::min(lo, d.true_return);
    hi = std::max(hi, d.true_return);
    sum += d.true_return;
  }
  std::cout << "env,n,noise,seed,min_return,mean_return,max_return\n"
            << a.env << ',' << a.n << ',' << a.noise << ',' << a.seed << ',' << lo << ','
            << sum / static_cast<double>(demos.size()) << ',' << hi << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const RunConfig& cfg) {
  const DemoSet demos = load_configured_demos(cfg);
  const fs::path out(cfg.out_dir);
  std::vector<fs::path> outputs;
  for (std::uint64_t seed : cfg.seeds) {
    const PreparedRun run = prepare_run(cfg, demos, seed);
    const TrainResult r = train_run(cfg, run, seed);
    const fs::path dir = out / ("seed" + std::to_string(seed));
    write_file(dir / "policy.policy.json", policy_to_string(r.params));
    write_file(dir / "train_log.csv", train_log_csv(r.log));
    write_file(dir / "slopes.json", slopes_json(r.slopes));
    outputs.insert(outputs.end(), {dir / "policy.policy.json", dir / "train_log.csv", dir / "slopes.json"});
    if (run.features.net && cfg.featnet.empty()) {
      write_file(dir / "features.featnet.json", featnet_to_string(*run.features.net));
      outputs.push_back(dir / "features.featnet.json");
    }
    const auto& last = r.log.empty() ? TrainLogRow{} : r.log.back();
    std::cerr << "seed " << seed << ": " << r.log.size() << " log rows, final mean subdominance "
              << last.mean_subdom << ", env steps " << last.env_steps << "\n";
  }
  write_manifest(out, "train", cfg, outputs);
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string policy;
  double demonstrator_noise = -1.0;
  std::string slopes;
  std::string out;
};

int cmd_eval(const RunConfig& cfg, const EvalArgs& a) {
  if (a.policy.empty() == (a.demonstrator_noise < 0.0))
    throw UsageError("give exactly one of --policy or --demonstrator-noise");
  const DemoSet demos = load_configured_demos(cfg);
  const std::optional<PolicyParams> params =
      a.policy.empty() ? std::nullopt : std::optional<PolicyParams>(load_policy(a.policy));
  std::ostringstream csv;
  csv.precision(10);
  csv << "seed," << kEvalCsvHeader << ",relative_ratio_std\n";
  std::vector<EvalReport> reports;
  for (std::uint64_t seed : cfg.seeds) {
    const PreparedRun run = prepare_run(cfg, demos, seed);
    const HingeSlopes slopes =
        a.slopes.empty() ? HingeSlopes::ones(run.features.demos.front().step_features.front().size()) : load_slopes(a.slopes);
    const auto opt = run.eval_options(cfg.eval_rollouts, derive_seed(seed, SeedStream::eval),
                                      cfg.train_config(seed).subdom);
    const ActionFn act = params ? policy_actor(*params)
                                : (run.env->id() == EnvId::cartpole ? cartpole_demonstrator(a.demonstrator_noise)
                                                                    : ActionFn{});
    if (!act) throw UsageError("--demonstrator-noise is only available for cartpole");
    const EvalReport rep = evaluate(act, run.features.demos, *run.env, slopes, opt);
    csv << seed << ',' << to_csv_row(rep) << ",\n";
    reports.push_back(rep);
    std::cerr << "seed " << seed << '\n';
    print_report(std::cerr, rep);
  }
  EvalReport mean;
  double sq = 0.0;
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    mean.gamma_hat += r.gamma_hat / n;
    mean.demo_baseline_rate += r.demo_baseline_rate / n;
    mean.relative_ratio += r.relative_ratio / n;
    mean.baseline_zero = mean.baseline_zero || r.baseline_zero;
    mean.mean_return += r.mean_return / n;
    mean.std_return += r.std_return / n;
    mean.demo_mean_return += r.demo_mean_return / n;
    mean.bound_gamma += r.bound_gamma / n;
    mean.n_rollouts += r.n_rollouts;
    mean.n_demos = r.n_demos;
  }
  for (const auto& r : reports) sq += (r.relative_ratio - mean.relative_ratio) * (r.relative_ratio - mean.relative_ratio);
  const double sd = reports.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  csv << "aggregate," << to_csv_row(mean) << ',' << sd << '\n';
  if (a.out.empty())
    std::cout << csv.str();
  else
    write_file(a.out, csv.str());
  return 0;
}

// ---------------------------------------------------------------- bound

int cmd_bound(const RunConfig& cfg, const EvalArgs& a) {
  if (a.policy.empty()) throw UsageError("--policy is required");
  const DemoSet demos = load_configured_demos(cfg);
  const PolicyParams params = load_policy(a.policy);
  std::ostringstream csv;
  csv.precision(10);
  csv << "seed,bound_gamma,support_union,n_demos,alpha\n";
  for (std::uint64_t seed : cfg.seeds) {
    const PreparedRun run = prepare_run(cfg, demos, seed);
    const LearningProblem prob = run.problem();
    const DemoIndex index(prob);
    std::mt19937_64 rng(derive_seed(seed, SeedStream::eval));
    CostFeatures mean;
    for (int i = 0; i < cfg.eval_rollouts; ++i) {
      const Trajectory t = rollout(params, *run.env, rng, {}, run.features.map);
      const CostFeatures f = feature_total(prob.steps_of(t));
      if (mean.empty()) mean.assign(f.size(), 0.0);
      for (std::size_t k = 0; k < f.size(); ++k) mean[k] += f[k] / cfg.eval_rollouts;
    }
    const TrainConfig tc = cfg.train_config(seed);
    const HingeSlopes slopes =
        a.slopes.empty() ? alpha_analytic_all(mean, index.demo_totals, tc.alpha, tc.subdom.mode) : load_slopes(a.slopes);
    const auto sv = support_set(mean, index.demo_totals, slopes, tc.subdom);
    csv << seed << ',' << bound_gamma(mean, index.demo_totals, slopes, tc.subdom) << ',' << sv.union_size() << ','
        << index.demo_totals.size() << ',' << join(slopes.alpha, ';') << '\n';
  }
  if (a.out.empty())
    std::cout << csv.str();
  else
    write_file(a.out, csv.str());
  return 0;
}

// ---------------------------------------------------------------- experiments

struct SeedOutcome {
  EvalReport report;
  std::uint64_t env_steps = 0;
};

SeedOutcome train_and_evaluate(const RunConfig& cfg, const DemoSet& demos, std::uint64_t seed) {
  const PreparedRun run = prepare_run(cfg, demos, seed);
  const TrainResult r = train_run(cfg, run, seed);
  SeedOutcome o;
  o.env_steps = r.log.empty() ? 0 : r.log.back().env_steps;
  auto eval_env = make_env(run.env->id());
  o.report = evaluate(r.params, run.features.demos, *eval_env, r.slopes,
                      run.eval_options(cfg.eval_rollouts, derive_seed(seed, SeedStream::eval),
                                       cfg.train_config(seed).subdom));
  return o;
}

int cmd_ablate_init(RunConfig cfg) {
  if (cfg.seeds.size() < 5) throw UsageError("ablate-init needs at least 5 seeds");
  const DemoSet demos = load_configured_demos(cfg);
  cfg.variant = "online";
  std::ostringstream csv;
  csv.precision(10);
  csv << "condition,seed,relative_ratio,gamma_hat,demo_baseline_rate,mean_return,std_return,env_steps\n";
  for (const char* init : {"bc", "offline_minsubfi"}) {
    RunConfig c = cfg;
    c.init = init;
    for (std::uint64_t seed : cfg.seeds) {
      const SeedOutcome o = train_and_evaluate(c, demos, seed);
      csv << init << ',' << seed << ',' << o.report.relative_ratio << ',' << o.report.gamma_hat << ','
          << o.report.demo_baseline_rate << ',' << o.report.mean_return << ',' << o.report.std_return << ','
          << o.env_steps << '\n';
      std::cerr << init << " seed " << seed << ": relative ratio " << o.report.relative_ratio << '\n';
    }
  }
  const fs::path out = fs::path(cfg.out_dir) / "ablate_init.csv";
  write_file(out, csv.str());
  write_manifest(cfg.out_dir, "ablate-init", cfg, {out});
  return 0;
}

int cmd_quality_sweep(const RunConfig& cfg) {
  const DemoSet demos = load_configured_demos(cfg);
  std::ostringstream csv;
  csv.precision(10);
  csv << "keep,fraction,seed,n_demos,relative_ratio,gamma_hat,demo_baseline_rate,mean_return,demo_mean_return\n";
  for (Keep keep : {Keep::best, Keep::worst})
    for (double fraction : kQualityFractions) {
      const DemoSet subset = quality_subsets(demos, keep, fraction);
      for (std::uint64_t seed : cfg.seeds) {
        const SeedOutcome o = train_and_evaluate(cfg, subset, seed);
        csv << to_string(keep) << ',' << fraction << ',' << seed << ',' << subset.size() << ','
            << o.report.relative_ratio << ',' << o.report.gamma_hat << ',' << o.report.demo_baseline_rate << ','
            << o.report.mean_return << ',' << o.report.demo_mean_return << '\n';
        std::cerr << to_string(keep) << ' ' << fraction << " seed " << seed << ": relative ratio "
                  << o.report.relative_ratio << '\n';
      }
    }
  const fs::path out = fs::path(cfg.out_dir) / "quality_sweep.csv";
  write_file(out, csv.str());
  write_manifest(cfg.out_dir, "quality-sweep", cfg, {out});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subdominance-minimizing imitation learning"};
  app.require_subcommand(1);

  GenDemosArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-demos", "generate demonstrations from a scripted noisy controller");
  gen_cmd->add_option("--env", gen.env, "cartpole or lander")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "number of demonstrations")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "demonstrator noise level")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  gen_cmd->add_option("--tasks", gen.tasks, "number of tasks")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output .demos.jsonl path");

  ConfigFlags train_flags, eval_flags, bound_flags, ablate_flags, sweep_flags;
  auto* train_cmd = app.add_subcommand("train", "train a policy for every configured seed");
  train_flags.attach(train_cmd);

  EvalArgs eval_args, bound_args;
  auto* eval_cmd = app.add_subcommand("eval", "satisficing rates and returns of a policy");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--policy", eval_args.policy, ".policy.json file");
  eval_cmd->add_option("--demonstrator-noise", eval_args.demonstrator_noise,
                       "evaluate the scripted cartpole controller at this noise level instead");
  eval_cmd->add_option("--slopes", eval_args.slopes, "slopes.json for the bound column");
  eval_cmd->add_option("--out", eval_args.out, "CSV path (default stdout)");

  auto* bound_cmd = app.add_subcommand("bound", "support-set generalization bound of a policy");
  bound_flags.attach(bound_cmd);
  bound_cmd->add_option("--policy", bound_args.policy, ".policy.json file");
  bound_cmd->add_option("--slopes", bound_args.slopes, "slopes.json (default: optimal for the mean rollout)");
  bound_cmd->add_option("--out", bound_args.out, "CSV path (default stdout)");

  auto* ablate_cmd = app.add_subcommand("ablate-init", "BC versus offline-pretrained initialization");
  ablate_flags.attach(ablate_cmd);
  auto* sweep_cmd = app.add_subcommand("quality-sweep", "train on best or worst demonstration subsets");
  sweep_flags.attach(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_demos(gen);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve());
    if (eval_cmd->parsed()) return cmd_eval(eval_flags.resolve(), eval_args);
    if (bound_cmd->parsed()) return cmd_bound(bound_flags.resolve(), bound_args);
    if (ablate_cmd->parsed()) return cmd_ablate_init(ablate_flags.resolve());
    if (sweep_cmd->parsed()) return cmd_quality_sweep(sweep_flags.resolve());
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
