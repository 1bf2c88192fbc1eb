// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "minsubfi/minsubfi.hpp"
#include "oracles.hpp"

using namespace minsubfi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<CostFeatures> random_steps(std::mt19937_64& rng, std::size_t T, std::size_t K, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<CostFeatures> s(T, CostFeatures(K));
  for (auto& row : s)
    for (auto& v : row) v = u(rng);
  return s;
}

// 1. per-state contributions sum to the directly evaluated subdominance.
Outcome decomposition_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> states(1, 10), dims(1, 5), ndemo(1, 6);
  std::uniform_real_distribution<double> log_alpha(std::log(0.1), std::log(10.0));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const bool relative = i % 2 == 1;
    const std::size_t K = dims(rng), T = states(rng), N = ndemo(rng);
    const double lo = relative ? 0.05 : 0.0;
    const auto steps = random_steps(rng, T, K, lo, 10.0);
    std::vector<CostFeatures> demos;
    for (std::size_t j = 0; j < N; ++j) demos.push_back(feature_total(random_steps(rng, states(rng), K, lo, 10.0)));
    std::vector<double> alpha(K);
    for (auto& a : alpha) a = std::exp(log_alpha(rng));
    const SubdomConfig cfg{relative ? SubdomMode::relative : SubdomMode::absolute, Aggregation::sum};
    const auto c = decompose_per_state(steps, demos, HingeSlopes(alpha), cfg);
    const double sum = std::accumulate(c.begin(), c.end(), 0.0);
    const double direct = oracle::subdom(feature_total(steps), demos, alpha, relative);
    worst = std::max(worst, std::abs(sum - direct) / std::max(std::abs(direct), 1.0));
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "max relative error " << worst << ", " << secs << " s";
  return {worst <= 1e-9 && secs < 5.0, os.str()};
}

// 2. gradient of expected subdominance on an enumerable chain.
Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  oracle::ToyChain env(3);
  const auto paths = oracle::enumerate_toy(env);
  const std::vector<CostFeatures> demo_totals{{3.0, 1.5}, {3.5, 2.5}, {2.8, 2.8}};
  const std::vector<double> alpha{1.0, 1.0};
  auto cost = [&](const oracle::ToyPath& p) { return oracle::subdom(feature_total(p.steps), demo_totals, alpha); };

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0.0, 0.5);
  std::vector<double> theta(6);
  for (auto& w : theta) w = n01(rng);

  const auto exact = oracle::expected_cost_grad(theta, paths, cost);
  const auto fd = oracle::central_diff(
      [&](const std::vector<double>& w) { return oracle::expected_cost(w, paths, cost); }, theta, 1e-5);
  double scale = 0.0, fd_err = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    scale = std::max(scale, std::abs(exact[i]));
    fd_err = std::max(fd_err, std::abs(fd[i] - exact[i]));
  }
  const double fd_rel = fd_err / scale;

  // The learner's own update with one rollout, no baseline and unit step is
  // one REINFORCE sample of -grad E[subdom].
  DemoSet demos;
  for (const auto& f : demo_totals) {
    Trajectory d;
    d.states = {{1.0, 0.0}};
    d.step_features = {f};
    demos.push_back(d);
  }
  LearningProblem problem;
  problem.env = &env;
  problem.demos = &demos;
  problem.features = env.feature_map();
  const DemoIndex index(problem);
  TrainConfig cfg;
  cfg.rollouts_per_update = 1;
  cfg.learning_rate = 1.0;
  cfg.baseline = BaselineKind::none;
  cfg.alpha_method = AlphaMethod::fixed;
  cfg.normalize_advantages = false;

  LearnerState st;
  st.params = PolicyParams{Architecture{2, {}, 2}, theta, kPolicyVersion};
  st.slopes = HingeSlopes(alpha);
  st.rng.seed(17);
  const int n = 100000;
  std::vector<double> mean(6, 0.0), sq(6, 0.0);
  for (int i = 0; i < n; ++i) {
    st.params.weights = theta;
    st.slopes = HingeSlopes(alpha);
    online_update(st, problem, index, cfg);
    for (std::size_t k = 0; k < 6; ++k) {
      const double x = st.params.weights[k] - theta[k];
      mean[k] += x;
      sq[k] += x * x;
    }
  }
  double worst_z = 0.0;
  for (std::size_t k = 0; k < 6; ++k) {
    mean[k] /= n;
    const double var = sq[k] / n - mean[k] * mean[k];
    const double se = std::sqrt(var / n);
    const double z = se > 0.0 ? std::abs(mean[k] + exact[k]) / se : std::abs(mean[k] + exact[k]) * 1e300;
    worst_z = std::max(worst_z, z);
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "finite-difference relative error " << fd_rel << ", worst REINFORCE z-score " << worst_z << ", " << secs
     << " s";
  return {fd_rel <= 1e-4 && worst_z <= 3.0 && secs < 60.0, os.str()};
}

// 3. exact slope minimizer versus a dense log grid.
Outcome alpha_vs_grid() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> feat(0.0, 10.0), log_lambda(std::log(1e-3), std::log(1.0));
  std::uniform_int_distribution<int> ndemo(1, 8);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double f = feat(rng);
    std::vector<double> d(static_cast<std::size_t>(ndemo(rng)));
    for (auto& v : d) v = feat(rng);
    const double lambda = std::exp(log_lambda(rng));
    std::vector<CostFeatures> demos;
    for (double v : d) demos.push_back({v});
    const double a = alpha_analytic(std::vector<double>{f}, demos, lambda, 0, 1e-3, 1e3);
    auto g = [&](double x) { return oracle::alpha_objective(x, f, d, lambda); };
    const double grid = oracle::grid_min(g, 1e-3, 1e3, 100000);
    worst = std::max(worst, (g(a) - grid) / std::abs(grid));
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "max relative objective gap " << worst << ", " << secs << " s";
  return {worst <= 1e-4 && secs < 30.0, os.str()};
}

// 4. zero subdominance reachable for some slopes iff strict Pareto dominance.
Outcome satisficing_surrogate() {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> dims(1, 4);
  std::uniform_int_distribution<int> grid(0, 6);
  std::uniform_real_distribution<double> log_alpha(std::log(1e-3), std::log(1e3));
  int failures = 0, dominating = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = dims(rng);
    CostFeatures a(K), b(K);
    // Coarse integer grid (plus a little jitter half the time) so ties occur.
    std::uniform_real_distribution<double> jitter(0.0, 0.5);
    for (std::size_t k = 0; k < K; ++k) {
      a[k] = grid(rng) + (i % 2 ? jitter(rng) : 0.0);
      b[k] = grid(rng) + (i % 2 ? jitter(rng) : 0.0);
    }
    const bool dom = check_satisfices(a, b);
    dominating += dom;
    const auto witness = zero_subdominance_slopes(a, b);
    bool zero_found = !witness.empty() && subdom_pair(a, b, HingeSlopes(witness)) == 0.0;
    // Search for a counterexample in the other direction.
    for (int s = 0; s < 200 && !zero_found; ++s) {
      std::vector<double> alpha(K);
      for (auto& x : alpha) x = std::exp(log_alpha(rng));
      if (subdom_pair(a, b, HingeSlopes(alpha)) == 0.0) zero_found = true;
    }
    if (zero_found != dom || dom != oracle::strictly_dominates(a, b)) ++failures;
  }
  std::ostringstream os;
  os << failures << " failures (" << dominating << " dominating pairs)";
  return {failures == 0, os.str()};
}

// 5. support-set bound on hand-built instances.
Outcome bound_formula() {
  std::vector<CostFeatures> demos;
  for (int j = 0; j < 10; ++j) demos.push_back({static_cast<double>(j)});
  const HingeSlopes one = HingeSlopes::ones(1);
  // f + 1 >= demo: f = 1 makes demos 0, 1, 2 support vectors.
  const double g3 = bound_gamma(std::vector<double>{1.0}, demos, one);
  const double g_none = bound_gamma(std::vector<double>{-5.0}, demos, one);
  const double g_all = bound_gamma(std::vector<double>{20.0}, demos, one);
  // Two features whose support sets overlap in one demonstration.
  std::vector<CostFeatures> two{{0, 9}, {1, 1}, {9, 0}, {9, 9}};
  const double g_union = bound_gamma(std::vector<double>{0.0, 0.0}, two, HingeSlopes::ones(2));
  std::ostringstream os;
  os << "gamma " << g3 << ", " << g_none << ", " << g_all << ", overlap " << g_union;
  return {g3 == 0.7 && g_none == 1.0 && g_all == 0.0 && g_union == 0.25, os.str()};
}

struct CartpoleRun {
  double ratio = 0.0;
  double mean_return = 0.0;
  double demo_mean_return = 0.0;
  std::uint64_t env_steps = 0;
  double seconds = 0.0;
};

RunConfig cartpole_config(const std::string& init) {
  RunConfig cfg;
  cfg.env = "cartpole";
  cfg.variant = "online";
  cfg.init = init;
  cfg.updates = 100;
  cfg.rollouts = 8;
  cfg.lr = 1e-2;
  cfg.eval_rollouts = 500;
  return cfg;
}

DemoSet cartpole_demos(std::uint64_t seed) {
  return gen_demos(EnvId::cartpole, 50, 0.3, derive_seed(seed, SeedStream::env));
}

CartpoleRun run_cartpole(const RunConfig& cfg, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const DemoSet demos = cartpole_demos(seed);
  const PreparedRun run = prepare_run(cfg, demos, seed);
  const TrainResult r = train_run(cfg, run, seed);
  CartpoleRun out;
  out.seconds = seconds_since(t0);
  out.env_steps = r.log.empty() ? 0 : r.log.back().env_steps;
  auto eval_env = make_env(EnvId::cartpole);
  const EvalReport rep =
      evaluate(r.params, run.features.demos, *eval_env, r.slopes,
               run.eval_options(cfg.eval_rollouts, derive_seed(seed, SeedStream::eval)));
  out.ratio = rep.relative_ratio;
  out.mean_return = rep.mean_return;
  out.demo_mean_return = rep.demo_mean_return;
  return out;
}

// 6. online training from an offline-pretrained policy beats the demonstrators.
Outcome cartpole_end_to_end() {
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const CartpoleRun r = run_cartpole(cartpole_config("offline_minsubfi"), seed);
    ok = ok && r.ratio > 1.0 && r.mean_return >= r.demo_mean_return && r.env_steps <= 200000 && r.seconds <= 600.0;
    os << (seed ? "; " : "") << "seed " << seed << ": ratio " << r.ratio << ", return " << r.mean_return << " vs "
       << r.demo_mean_return << ", " << r.env_steps << " steps, " << r.seconds << " s";
  }
  return {ok, os.str()};
}

// Mean subdominance of rollouts against the training demonstrations, all
// padded alike, at unit slopes.
double rollout_subdominance(const PolicyParams& params, const PreparedRun& run, std::uint64_t seed, int n) {
  const LearningProblem prob = run.problem();
  const DemoIndex index(prob);
  auto env = make_env(run.env->id());
  std::mt19937_64 rng(seed);
  const HingeSlopes ones = HingeSlopes::ones(index.demo_totals.front().size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Trajectory t = rollout(params, *env, rng, {}, run.features.map);
    acc += subdom_vs_set(feature_total(prob.steps_of(t)), index.demo_totals, ones).value;
  }
  return acc / n;
}

// 7. the offline variant never touches the simulator and improves on BC.
Outcome offline_variant() {
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RunConfig cfg = cartpole_config("bc");
    cfg.variant = "offline";
    cfg.updates = 20;
    const DemoSet demos = cartpole_demos(seed);
    const PreparedRun run = prepare_run(cfg, demos, seed);
    const auto before = run.env->transitions();
    const TrainResult r = train_run(cfg, run, seed);
    const auto used = run.env->transitions() - before;
    std::uint64_t logged = 0;
    for (const auto& row : r.log) logged = std::max(logged, row.env_steps);
    const std::uint64_t eval_seed = derive_seed(seed, SeedStream::eval);
    const double s_bc = rollout_subdominance(*r.bc_params, run, eval_seed, 500);
    const double s_off = rollout_subdominance(r.params, run, eval_seed, 500);
    const double gain = (s_bc - s_off) / s_bc;
    ok = ok && used == 0 && logged == 0 && gain >= 0.10;
    os << (seed ? "; " : "") << "seed " << seed << ": env steps " << used << ", subdominance " << s_bc << " -> "
       << s_off << " (" << 100.0 * gain << "%)";
  }
  return {ok, os.str()};
}

// 8. snippet selection versus exhaustive pair enumeration.
Outcome snippet_enumeration() {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::size_t> nsnip(1, 4), dims(1, 3);
  std::uniform_real_distribution<double> log_alpha(std::log(0.2), std::log(5.0));
  int mismatches = 0, instances = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t N = nsnip(rng);
    const std::size_t max_len = 12 / N;
    const std::size_t T = N * std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
    const std::size_t K = dims(rng);
    // Integer features make ties frequent, which exercises the tie rules.
    std::uniform_int_distribution<int> feat(0, 3);
    std::vector<CostFeatures> imit(T, CostFeatures(K)), demo(T, CostFeatures(K));
    for (auto* s : {&imit, &demo})
      for (auto& row : *s)
        for (auto& v : row) v = feat(rng);
    std::vector<double> alpha(K);
    for (auto& a : alpha) a = i % 3 ? std::exp(log_alpha(rng)) : 1.0;

    const std::size_t len = T / N;
    auto prefix = [&](const std::vector<CostFeatures>& s, std::size_t m) {
      CostFeatures f(K, 0.0);
      for (std::size_t t = 0; t < (m + 1) * len; ++t)
        for (std::size_t k = 0; k < K; ++k) f[k] += s[t][k];
      return f;
    };
    std::vector<std::vector<double>> table(N, std::vector<double>(N));
    for (std::size_t d = 0; d < N; ++d)
      for (std::size_t m = 0; m < N; ++m) table[d][m] = oracle::subdom(prefix(imit, m), {prefix(demo, d)}, alpha);
    double best = -1.0;
    std::size_t best_d = 0, best_m = 0;
    for (std::size_t d = 0; d < N; ++d) {
      std::size_t m_min = 0;
      for (std::size_t m = 1; m < N; ++m)
        if (table[d][m] < table[d][m_min]) m_min = m;
      if (table[d][m_min] > best) {
        best = table[d][m_min];
        best_d = d;
        best_m = m_min;
      }
    }
    const auto sel = snippet_subdom(imit, demo, HingeSlopes(alpha), N);
    ++instances;
    if (sel.value != best || sel.demo_snippet != best_d || sel.imitator_snippet != best_m) ++mismatches;
  }
  std::ostringstream os;
  os << mismatches << " mismatches over " << instances << " instances";
  return {mismatches == 0, os.str()};
}

// Trajectories whose states are scalars drawn from disjoint ranges by class.
DemoSet separable_preference_demos(std::mt19937_64& rng, std::size_t per_class) {
  DemoSet demos;
  std::uniform_real_distribution<double> good(0.0, 0.3), bad(0.7, 1.0);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      Trajectory t;
      for (int s = 0; s < 5; ++s) t.states.push_back({c == 0 ? bad(rng) : good(rng)});
      t.actions.assign(4, 0);
      t.true_return = c == 0 ? 0.0 : 1.0;
      demos.push_back(t);
    }
  return demos;
}

// 9. preference loss at symmetric logits and on separable data.
Outcome preference_loss() {
  std::mt19937_64 rng(53);
  const auto net = init_featnet(Architecture{1, {8, 8}, 3}, 3);
  DemoSet twins(2);
  for (auto& t : twins) t.states = {{0.4}, {0.1}, {0.9}};
  const double sym = pref_loss(net, {0, 1}, twins, HingeSlopes::ones(3)).loss;

  const DemoSet demos = separable_preference_demos(rng, 6);
  const auto prefs = build_preferences(demos, 0.5);
  const auto trained = train_features(demos, prefs, Architecture{1, {8, 8}, 3}, 500, 0.05, 7);
  const double loss = mean_pref_loss(trained, prefs, demos, HingeSlopes::ones(3));
  std::ostringstream os;
  os.precision(15);
  os << "symmetric loss " << sym << ", separable mean loss after 500 epochs " << loss;
  return {std::abs(sym - std::log(2.0)) <= 1e-12 && loss < 0.1, os.str()};
}

// 10. offline-pretrained initialization versus behavior cloning, matched seeds.
Outcome init_ablation() {
  double bc = 0.0, off = 0.0;
  std::ostringstream os;
  const int seeds = 5;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const CartpoleRun a = run_cartpole(cartpole_config("bc"), seed);
    const CartpoleRun b = run_cartpole(cartpole_config("offline_minsubfi"), seed);
    bc += a.ratio / seeds;
    off += b.ratio / seeds;
    os << (seed ? "; " : "") << "seed " << seed << ": bc " << a.ratio << ", offline " << b.ratio;
  }
  os << "; mean bc " << bc << ", mean offline " << off;
  return {off >= bc, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 decomposition identity", decomposition_identity},
      {"2 gradient oracle", gradient_oracle},
      {"3 analytic slopes vs grid", alpha_vs_grid},
      {"4 dominance surrogate", satisficing_surrogate},
      {"5 bound formula", bound_formula},
      {"6 cartpole end-to-end", cartpole_end_to_end},
      {"7 offline variant", offline_variant},
      {"8 snippet enumeration", snippet_enumeration},
      {"9 preference loss", preference_loss},
      {"10 initialization ablation", init_ablation},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << "criterion " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
