#pragma once

// Satisficing rates measured by strict Pareto dominance of trajectory-total
// features, the support-set generalization bound and demo quality subsets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "minsubfi/demos.hpp"
#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/policy.hpp"
#include "minsubfi/subdominance.hpp"

namespace minsubfi {

// Fraction of rollouts that strictly dominate a uniformly drawn demonstration.
// `demo_totals` are compared against feature_total of each rollout's steps.
inline double gamma_satisficing(const ActionFn& act, std::span<const CostFeatures> demo_totals, Environment& env,
                                int n_rollouts, std::uint64_t seed, const FeatureMap& fmap = {}) {
  if (n_rollouts < 1) throw InvalidInput("n_rollouts must be >= 1");
  if (demo_totals.empty()) throw InvalidInput("gamma_satisficing: no demonstrations");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, demo_totals.size() - 1);
  const FeatureMap fm = fmap ? fmap : env.feature_map();
  int hits = 0;
  for (int i = 0; i < n_rollouts; ++i) {
    const Trajectory t = rollout_with(env, act, fm, rng);
    if (check_satisfices(t.features(), demo_totals[pick(rng)])) ++hits;
  }
  return static_cast<double>(hits) / n_rollouts;
}

inline std::vector<CostFeatures> demo_totals(const DemoSet& demos) {
  std::vector<CostFeatures> out;
  out.reserve(demos.size());
  for (const auto& d : demos) out.push_back(d.features());
  return out;
}

inline double gamma_satisficing(const PolicyParams& params, const DemoSet& demos, Environment& env, int n_rollouts,
                                std::uint64_t seed, const FeatureMap& fmap = {}) {
  return gamma_satisficing(policy_actor(params), demo_totals(demos), env, n_rollouts, seed, fmap);
}

// Fraction of ordered pairs (j, j'), j != j', where demo j strictly dominates demo j'.
inline double demo_baseline_rate(std::span<const CostFeatures> totals) {
  if (totals.size() < 2) throw InvalidInput("demo_baseline_rate needs at least two demonstrations");
  std::size_t hits = 0;
  for (std::size_t j = 0; j < totals.size(); ++j)
    for (std::size_t l = 0; l < totals.size(); ++l)
      if (j != l && check_satisfices(totals[j], totals[l])) ++hits;
  const double pairs = static_cast<double>(totals.size()) * static_cast<double>(totals.size() - 1);
  return static_cast<double>(hits) / pairs;
}

inline double demo_baseline_rate(const DemoSet& demos) { return demo_baseline_rate(demo_totals(demos)); }

struct RelativeRatio {
  double value = 0.0;
  bool baseline_zero = false;
};

inline RelativeRatio relative_ratio(double gamma_hat, double baseline) {
  if (baseline <= 0.0) return {0.0, true};
  return {gamma_hat / baseline, false};
}

// 1 - |union of support sets| / N
inline double bound_gamma(std::span<const double> f_imit, std::span<const CostFeatures> demos,
                          const HingeSlopes& slopes, SubdomConfig cfg = {}) {
  if (demos.empty()) throw InvalidInput("bound_gamma: no demonstrations");
  const auto sv = support_set(f_imit, demos, slopes, cfg);
  return 1.0 - static_cast<double>(sv.union_size()) / static_cast<double>(demos.size());
}

enum class Keep { best, worst };

inline Keep parse_keep(const std::string& s) {
  if (s == "best") return Keep::best;
  if (s == "worst") return Keep::worst;
  throw InvalidInput("keep must be 'best' or 'worst'");
}

inline const char* to_string(Keep k) { return k == Keep::best ? "best" : "worst"; }

inline constexpr double kQualityFractions[] = {0.9, 0.8, 0.7, 0.6};

// Keeps the highest (best) or lowest (worst) returns; equal returns keep
// their original order. The result preserves the original demo order.
inline DemoSet quality_subsets(const DemoSet& demos, Keep keep, double fraction) {
  if (std::find(std::begin(kQualityFractions), std::end(kQualityFractions), fraction) == std::end(kQualityFractions))
    throw InvalidInput("quality fraction must be one of 0.9, 0.8, 0.7, 0.6");
  std::vector<std::size_t> idx(demos.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return keep == Keep::best ? demos[a].true_return > demos[b].true_return
                              : demos[a].true_return < demos[b].true_return;
  });
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(demos.size())));
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  DemoSet out;
  for (std::size_t i : idx) out.push_back(demos[i]);
  return out;
}

struct EvalReport {
  double gamma_hat = 0.0;
  double demo_baseline_rate = 0.0;
  double relative_ratio = 0.0;
  bool baseline_zero = false;
  double mean_return = 0.0;
  double std_return = 0.0;
  double demo_mean_return = 0.0;
  double bound_gamma = 0.0;
  int n_rollouts = 0;
  std::size_t n_demos = 0;
};

struct EvalOptions {
  int n_rollouts = 200;
  std::uint64_t seed = 0;
  FeatureMap features;  // defaults to the environment's
  std::optional<PaddingConfig> padding;  // applied to rollouts and demonstrations alike
  SubdomConfig subdom;
};

// Each rollout is paired with one uniformly drawn demonstration. The bound
// uses the mean rollout feature vector at the given slopes.
inline EvalReport evaluate(const ActionFn& act, const DemoSet& demos, Environment& env, const HingeSlopes& slopes,
                           const EvalOptions& opt = {}) {
  if (opt.n_rollouts < 1) throw InvalidInput("n_rollouts must be >= 1");
  std::vector<CostFeatures> totals;
  for (const auto& d : demos)
    totals.push_back(opt.padding ? feature_total(padded_steps(d.step_features, *opt.padding)) : d.features());
  const FeatureMap fm = opt.features ? opt.features : env.feature_map();
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, totals.size() - 1);

  EvalReport r;
  r.n_rollouts = opt.n_rollouts;
  r.n_demos = demos.size();
  std::vector<double> returns;
  CostFeatures mean_f(totals.front().size(), 0.0);
  int hits = 0;
  for (int i = 0; i < opt.n_rollouts; ++i) {
    const Trajectory t = rollout_with(env, act, fm, rng);
    const CostFeatures f = opt.padding ? feature_total(padded_steps(t.step_features, *opt.padding)) : t.features();
    if (check_satisfices(f, totals[pick(rng)])) ++hits;
    returns.push_back(t.true_return);
    for (std::size_t k = 0; k < f.size(); ++k) mean_f[k] += f[k] / opt.n_rollouts;
  }
  r.gamma_hat = static_cast<double>(hits) / opt.n_rollouts;
  r.demo_baseline_rate = demo_baseline_rate(totals);
  const auto rr = relative_ratio(r.gamma_hat, r.demo_baseline_rate);
  r.relative_ratio = rr.value;
  r.baseline_zero = rr.baseline_zero;
  r.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
  double var = 0.0;
  for (double x : returns) var += (x - r.mean_return) * (x - r.mean_return);
  r.std_return = returns.size() > 1 ? std::sqrt(var / static_cast<double>(returns.size() - 1)) : 0.0;
  for (const auto& d : demos) r.demo_mean_return += d.true_return / static_cast<double>(demos.size());
  r.bound_gamma = bound_gamma(mean_f, totals, slopes, opt.subdom);
  return r;
}

inline EvalReport evaluate(const PolicyParams& params, const DemoSet& demos, Environment& env,
                           const HingeSlopes& slopes, const EvalOptions& opt = {}) {
  return evaluate(policy_actor(params), demos, env, slopes, opt);
}

inline constexpr const char* kEvalCsvHeader =
    "gamma_hat,demo_baseline_rate,relative_ratio,baseline_zero,mean_return,std_return,demo_mean_return,"
    "bound_gamma,n_rollouts,n_demos";

inline std::string to_csv_row(const EvalReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.gamma_hat << ',' << r.demo_baseline_rate << ',' << r.relative_ratio << ',' << (r.baseline_zero ? 1 : 0)
     << ',' << r.mean_return << ',' << r.std_return << ',' << r.demo_mean_return << ',' << r.bound_gamma << ','
     << r.n_rollouts << ',' << r.n_demos;
  return os.str();
}

inline void print_report(std::ostream& os, const EvalReport& r) {
  const auto flags = os.flags();
  os.setf(std::ios::fixed);
  const auto prec = os.precision(4);
  os << "rollouts            " << r.n_rollouts << "\n"
     << "demonstrations      " << r.n_demos << "\n"
     << "gamma_hat           " << r.gamma_hat << "\n"
     << "demo baseline rate  " << r.demo_baseline_rate << "\n"
     << "relative ratio      " << r.relative_ratio << (r.baseline_zero ? "  (baseline is zero)" : "") << "\n"
     << "mean true return    " << r.mean_return << " +/- " << r.std_return << "\n"
     << "demo mean return    " << r.demo_mean_return << "\n"
     << "bound gamma         " << r.bound_gamma << "\n";
  os.precision(prec);
  os.flags(flags);
}

}  // namespace minsubfi
