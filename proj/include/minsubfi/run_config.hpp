#pragma once

// Flat key-value run configuration shared by the command-line tool. Every
// key has a default; a JSON object may override any subset, and command
// line flags override the file.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsubfi/demos.hpp"
#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/eval.hpp"
#include "minsubfi/learners.hpp"
#include "minsubfi/repr_learn.hpp"

namespace minsubfi {

enum class FeatureSource { handcrafted, handcrafted_quadratic, learned };

inline const char* to_string(FeatureSource f) {
  switch (f) {
    case FeatureSource::handcrafted: return "handcrafted";
    case FeatureSource::handcrafted_quadratic: return "handcrafted_quadratic";
    case FeatureSource::learned: return "learned";
  }
  return "?";
}

inline FeatureSource parse_feature_source(const std::string& s) {
  if (s == "handcrafted") return FeatureSource::handcrafted;
  if (s == "handcrafted_quadratic") return FeatureSource::handcrafted_quadratic;
  if (s == "learned") return FeatureSource::learned;
  throw InvalidInput("unknown feature source '" + s + "'");
}

struct RunConfig {
  std::string env = "cartpole";
  std::string demos;
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds{0};

  std::string variant = "online";
  std::string init = "random";
  std::string subdom_mode = "absolute";
  std::string aggregation = "sum";
  std::string alpha_method = "analytic";
  double alpha_step = 1e-2;
  double alpha_lambda = 1e-2;
  double alpha_min = 1e-3;
  double alpha_max = 1e3;
  int alpha_warmup = 10;

  int updates = 100;
  int rollouts = 8;
  double lr = 1e-2;
  std::string baseline = "mean";
  std::string return_mode = "sparse_terminal";
  double snippet_fraction = 0.2;
  int snippet_count = 4;
  double lambda_theta = 0.0;
  std::string optimizer = "sgd";
  double max_grad_norm = 0.0;
  bool normalize_advantages = true;
  std::vector<std::size_t> hidden{32};
  int bc_epochs = 30;
  double bc_lr = 0.1;
  int offline_passes = 5;
  double offline_lr = 3e-3;

  std::string features = "handcrafted";
  std::string featnet;  // path; trained from the demos when empty and features = learned
  std::string pref_threshold = "median";  // or a return value
  int featnet_epochs = 300;
  double featnet_lr = 1e-2;
  bool padding = true;

  int eval_rollouts = 200;

  TrainConfig train_config(std::uint64_t seed) const {
    TrainConfig c;
    c.variant = parse_variant(variant);
    c.init = parse_init(init);
    c.rollouts_per_update = rollouts;
    c.learning_rate = lr;
    c.baseline = parse_baseline(baseline);
    c.return_mode = parse_return_mode(return_mode);
    c.snippet_fraction = snippet_fraction;
    c.snippet_count = snippet_count;
    c.updates = updates;
    c.seed = seed;
    c.lambda_theta = lambda_theta;
    c.alpha_method = parse_alpha_method(alpha_method);
    c.alpha = AlphaUpdateConfig{alpha_step, alpha_lambda, alpha_min, alpha_max};
    c.alpha_warmup = alpha_warmup;
    c.subdom = SubdomConfig{parse_subdom_mode(subdom_mode), parse_aggregation(aggregation)};
    c.optimizer = parse_optimizer(optimizer);
    c.max_grad_norm = max_grad_norm;
    c.normalize_advantages = normalize_advantages;
    c.hidden = hidden;
    c.bc_epochs = bc_epochs;
    c.bc_learning_rate = bc_lr;
    c.offline_passes = offline_passes;
    c.offline_learning_rate = offline_lr;
    return c;
  }

  // Parses every enumerated field and range-checks the numbers.
  void validate() const {
    parse_env_id(env);
    parse_feature_source(features);
    if (seeds.empty()) throw InvalidInput("seeds must be nonempty");
    if (eval_rollouts < 1) throw InvalidInput("eval_rollouts must be >= 1");
    if (featnet_epochs < 0) throw InvalidInput("featnet_epochs must be >= 0");
    train_config(seeds.front()).validate();
  }
};

#define MINSUBFI_RUN_CONFIG_FIELDS(X)                                                                            \
  X(env) X(demos) X(out_dir) X(seeds) X(variant) X(init) X(subdom_mode) X(aggregation) X(alpha_method)          \
  X(alpha_step) X(alpha_lambda) X(alpha_min) X(alpha_max) X(alpha_warmup) X(updates) X(rollouts) X(lr)        \
  X(baseline) X(return_mode) X(snippet_fraction) X(snippet_count) X(lambda_theta) X(optimizer)                \
  X(max_grad_norm) X(normalize_advantages) X(hidden) X(bc_epochs) X(bc_lr) X(offline_passes) X(offline_lr)    \
  X(features) X(featnet) X(pref_threshold) X(featnet_epochs) X(featnet_lr) X(padding) X(eval_rollouts)

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
#define X(name) j[#name] = c.name;
  MINSUBFI_RUN_CONFIG_FIELDS(X)
#undef X
  return j;
}

// Unknown keys are rejected so typos do not silently fall back to defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  static const std::set<std::string> known = {
#define X(name) #name,
      MINSUBFI_RUN_CONFIG_FIELDS(X)
#undef X
  };
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw InvalidInput("unknown config key '" + key + "'");
  try {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(base.name);
    MINSUBFI_RUN_CONFIG_FIELDS(X)
#undef X
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad config value: ") + e.what());
  }
  return base;
}

#undef MINSUBFI_RUN_CONFIG_FIELDS

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("config file '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

// Demonstrations re-expressed in the configured feature space together with
// the matching per-state feature map.
struct FeaturePipeline {
  FeatureMap map;
  DemoSet demos;
  std::optional<FeatureNetParams> net;  // set when features are learned
};

inline double median_return(const DemoSet& demos) {
  std::vector<double> r;
  for (const auto& d : demos) r.push_back(d.true_return);
  std::sort(r.begin(), r.end());
  return r.size() % 2 ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
}

inline FeaturePipeline build_features(const RunConfig& cfg, const Environment& env, const DemoSet& demos,
                                      std::uint64_t seed) {
  FeaturePipeline p;
  switch (parse_feature_source(cfg.features)) {
    case FeatureSource::handcrafted:
      p.map = env.feature_map();
      p.demos = demos;
      return p;
    case FeatureSource::handcrafted_quadratic:
      p.map = quadratic_feature_map(env.feature_map());
      break;
    case FeatureSource::learned:
      if (!cfg.featnet.empty()) {
        p.net = load_featnet(cfg.featnet);
      } else {
        // Strictly above the median keeps both classes nonempty unless all returns tie.
        double threshold = 0.0;
        if (cfg.pref_threshold == "median") {
          threshold = std::nextafter(median_return(demos), INFINITY);
        } else {
          try {
            threshold = std::stod(cfg.pref_threshold);
          } catch (const std::exception&) {
            throw InvalidInput("pref_threshold must be 'median' or a number");
          }
        }
        const auto prefs = build_preferences(demos, threshold);
        p.net = train_features(demos, prefs, default_featnet_architecture(env.state_dim()), cfg.featnet_epochs,
                               cfg.featnet_lr, derive_seed(seed, SeedStream::features));
      }
      if (p.net->arch.input_dim != env.state_dim()) throw InvalidInput("feature net does not match the environment");
      p.map = learned_feature_map(*p.net);
      break;
  }
  p.demos = featurize(demos, p.map);
  return p;
}

// Everything a training or evaluation run needs besides the policy.
struct PreparedRun {
  std::unique_ptr<Environment> env;
  FeaturePipeline features;
  std::optional<PaddingConfig> padding;

  LearningProblem problem() const {
    LearningProblem p;
    p.env = env.get();
    p.demos = &features.demos;
    p.features = features.map;
    p.padding = padding;
    if (padding) p.snippet_pad = padding->pad_features;
    return p;
  }

  EvalOptions eval_options(int n_rollouts, std::uint64_t seed, SubdomConfig subdom = {}) const {
    EvalOptions o;
    o.n_rollouts = n_rollouts;
    o.seed = seed;
    o.features = features.map;
    o.padding = padding;
    o.subdom = subdom;
    return o;
  }
};

inline PreparedRun prepare_run(const RunConfig& cfg, const DemoSet& demos, std::uint64_t seed) {
  if (demos.empty()) throw InvalidInput("no demonstrations");
  const EnvId id = parse_env_id(cfg.env);
  for (const auto& d : demos)
    if (d.env_id != id) throw InvalidInput("demonstrations were recorded in a different environment");
  PreparedRun run;
  run.env = make_env(id);
  run.features = build_features(cfg, *run.env, demos, seed);
  if (cfg.padding) run.padding = default_padding(run.features.demos);
  return run;
}

inline TrainResult train_run(const RunConfig& cfg, const PreparedRun& run, std::uint64_t seed) {
  return train(run.problem(), cfg.train_config(seed), run.env->state_dim(), run.env->num_actions());
}

}  // namespace minsubfi
