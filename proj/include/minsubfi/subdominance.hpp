#pragma once

// Margin-based subdominance of an imitator's cost features with respect to
// demonstrations, in absolute/relative mode with sum/max aggregation over
// feature dimensions, together with support sets, per-state decompositions
// and prefix-snippet selection.
//
// Everything here is a pure function of its arguments.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "minsubfi/errors.hpp"
#include "minsubfi/features.hpp"

namespace minsubfi {

enum class SubdomMode { absolute, relative };
enum class Aggregation { sum, max };

struct SubdomConfig {
  SubdomMode mode = SubdomMode::absolute;
  Aggregation aggregation = Aggregation::sum;
};

inline const char* to_string(SubdomMode m) { return m == SubdomMode::absolute ? "absolute" : "relative"; }
inline const char* to_string(Aggregation a) { return a == Aggregation::sum ? "sum" : "max"; }

inline SubdomMode parse_subdom_mode(const std::string& s) {
  if (s == "absolute") return SubdomMode::absolute;
  if (s == "relative") return SubdomMode::relative;
  throw InvalidInput("unknown subdominance mode '" + s + "'");
}

inline Aggregation parse_aggregation(const std::string& s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "max") return Aggregation::max;
  throw InvalidInput("unknown aggregation '" + s + "'");
}

namespace detail {

inline void check_slope(double alpha_k) {
  require_finite(alpha_k, "hinge slope");
  if (alpha_k <= 0.0) throw InvalidInput("hinge slope must be positive");
}

inline void check_relative_denominator(double f_demo) {
  if (!(f_demo > 0.0))
    throw DomainError("relative subdominance needs a positive demonstration feature");
}

}  // namespace detail

// Argument of the hinge for one feature, before clipping at zero.
inline double hinge_argument(SubdomMode mode, double f_imit, double f_demo, double alpha_k) {
  if (mode == SubdomMode::absolute) return alpha_k * (f_imit - f_demo) + 1.0;
  detail::check_relative_denominator(f_demo);
  return alpha_k * (f_imit / f_demo - 1.0) + 1.0;
}

// [alpha_k (f_imit - f_demo) + 1]_+
inline double subdom_feature_abs(double f_imit, double f_demo, double alpha_k) {
  require_finite(f_imit, "imitator feature");
  require_finite(f_demo, "demonstration feature");
  detail::check_slope(alpha_k);
  return std::max(hinge_argument(SubdomMode::absolute, f_imit, f_demo, alpha_k), 0.0);
}

// [alpha_k (f_imit / f_demo - 1) + 1]_+
inline double subdom_feature_rel(double f_imit, double f_demo, double alpha_k) {
  require_finite(f_imit, "imitator feature");
  require_finite(f_demo, "demonstration feature");
  detail::check_slope(alpha_k);
  return std::max(hinge_argument(SubdomMode::relative, f_imit, f_demo, alpha_k), 0.0);
}

inline double subdom_feature(SubdomMode mode, double f_imit, double f_demo, double alpha_k) {
  return mode == SubdomMode::absolute ? subdom_feature_abs(f_imit, f_demo, alpha_k)
                                      : subdom_feature_rel(f_imit, f_demo, alpha_k);
}

// Support-vector membership of one demonstration for one feature. In
// absolute mode this is literally f_k(imit) + 1/alpha_k >= f_k(demo), so a
// demonstration sitting exactly on the margin is a support vector even
// though its hinge term is zero.
inline bool is_support(SubdomMode mode, double f_imit, double f_demo, double alpha_k) {
  if (mode == SubdomMode::absolute) return f_imit + 1.0 / alpha_k >= f_demo;
  return hinge_argument(SubdomMode::relative, f_imit, f_demo, alpha_k) >= 0.0;
}

inline double subdom_pair(std::span<const double> f_imit, std::span<const double> f_demo,
                          const HingeSlopes& slopes, SubdomConfig cfg = {}) {
  if (f_imit.size() != f_demo.size() || f_imit.size() != slopes.size())
    throw InvalidInput("subdom_pair: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < f_imit.size(); ++k) {
    const double term = subdom_feature(cfg.mode, f_imit[k], f_demo[k], slopes[k]);
    acc = cfg.aggregation == Aggregation::sum ? acc + term : std::max(acc, term);
  }
  return acc;
}

struct SupportSet {
  std::size_t num_demos = 0;
  std::size_t num_features = 0;
  std::vector<std::vector<std::size_t>> per_feature;  // demo indices, ascending
  std::vector<std::vector<char>> member;               // [demo][feature]

  SupportSet() = default;
  SupportSet(std::size_t n, std::size_t k)
      : num_demos(n), num_features(k), per_feature(k), member(n, std::vector<char>(k, 0)) {}

  void add(std::size_t demo, std::size_t k) {
    member[demo][k] = 1;
    per_feature[k].push_back(demo);
  }
  bool contains(std::size_t demo, std::size_t k) const { return member[demo][k] != 0; }
  std::size_t count(std::size_t k) const { return per_feature[k].size(); }

  bool empty() const {
    return std::all_of(per_feature.begin(), per_feature.end(),
                       [](const auto& v) { return v.empty(); });
  }

  // |union over k of SV_k|
  std::size_t union_size() const {
    std::size_t n = 0;
    for (const auto& row : member)
      if (std::any_of(row.begin(), row.end(), [](char c) { return c != 0; })) ++n;
    return n;
  }
};

namespace detail {

inline void check_demo_set(std::span<const CostFeatures> demos, std::size_t k) {
  if (demos.empty()) throw InvalidInput("demonstration set is empty");
  for (const auto& d : demos)
    if (d.size() != k) throw InvalidInput("demonstration feature dimension mismatch");
}

// Feature that carries demonstration `demo` under max aggregation:
// the argmax of the hinge arguments (lowest index on ties).
inline std::size_t max_feature(std::span<const double> f_imit, std::span<const double> f_demo,
                               const HingeSlopes& slopes, SubdomMode mode) {
  std::size_t best = 0;
  double best_arg = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f_imit.size(); ++k) {
    const double arg = hinge_argument(mode, f_imit[k], f_demo[k], slopes[k]);
    if (arg > best_arg) {
      best_arg = arg;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

// Under max aggregation each demonstration supports at most one feature.
inline SupportSet support_set(std::span<const double> f_imit, std::span<const CostFeatures> demos,
                              const HingeSlopes& slopes, SubdomConfig cfg = {}) {
  const std::size_t K = f_imit.size();
  if (slopes.size() != K) throw InvalidInput("support_set: slope dimension mismatch");
  detail::check_demo_set(demos, K);
  SupportSet sv(demos.size(), K);
  for (std::size_t j = 0; j < demos.size(); ++j) {
    if (cfg.aggregation == Aggregation::sum) {
      for (std::size_t k = 0; k < K; ++k)
        if (is_support(cfg.mode, f_imit[k], demos[j][k], slopes[k])) sv.add(j, k);
    } else {
      const std::size_t k = detail::max_feature(f_imit, demos[j], slopes, cfg.mode);
      if (is_support(cfg.mode, f_imit[k], demos[j][k], slopes[k])) sv.add(j, k);
    }
  }
  return sv;
}

struct SubdomResult {
  double value = 0.0;
  SupportSet support;
};

// (1/|demos|) sum_j subdom_pair(f_imit, demos[j]) and the support set.
inline SubdomResult subdom_vs_set(std::span<const double> f_imit, std::span<const CostFeatures> demos,
                                  const HingeSlopes& slopes, SubdomConfig cfg = {}) {
  detail::check_demo_set(demos, f_imit.size());
  SubdomResult r;
  double acc = 0.0;
  for (const auto& d : demos) acc += subdom_pair(f_imit, d, slopes, cfg);
  r.value = acc / static_cast<double>(demos.size());
  r.support = support_set(f_imit, demos, slopes, cfg);
  return r;
}

// Per-state contributions of absolute subdominance. Support sets are fixed
// from the trajectory total first; contribution t is
//   sum_k C_k/T + C_k a_k f_k(s_t) - a_k F_k/(T N)
// with C_k = |SV_k|/N and F_k the summed features of the support demos.
inline std::vector<double> decompose_per_state_abs(std::span<const CostFeatures> step_features,
                                                   std::span<const CostFeatures> demos,
                                                   const HingeSlopes& slopes,
                                                   Aggregation aggregation = Aggregation::sum) {
  if (step_features.empty()) throw InvalidInput("decompose: empty trajectory");
  const CostFeatures total = feature_total(step_features);
  const SupportSet sv = support_set(total, demos, slopes, {SubdomMode::absolute, aggregation});
  const std::size_t K = total.size();
  const double T = static_cast<double>(step_features.size());
  const double N = static_cast<double>(demos.size());

  std::vector<double> coverage(K), sv_feature_sum(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    coverage[k] = static_cast<double>(sv.count(k)) / N;
    for (std::size_t j : sv.per_feature[k]) sv_feature_sum[k] += demos[j][k];
  }

  std::vector<double> out(step_features.size(), 0.0);
  for (std::size_t t = 0; t < step_features.size(); ++t) {
    double c = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (sv.count(k) == 0) continue;
      c += coverage[k] / T + coverage[k] * slopes[k] * step_features[t][k] -
           slopes[k] * sv_feature_sum[k] / (T * N);
    }
    out[t] = c;
  }
  return out;
}

// Per-state contributions of relative subdominance:
//   sum_k C_k (1 - a_k)/T + a_k f_k(s_t) R_k / N
// with R_k = sum over support demos of 1/f_k(demo).
inline std::vector<double> decompose_per_state_rel(std::span<const CostFeatures> step_features,
                                                   std::span<const CostFeatures> demos,
                                                   const HingeSlopes& slopes,
                                                   Aggregation aggregation = Aggregation::sum) {
  if (step_features.empty()) throw InvalidInput("decompose: empty trajectory");
  const CostFeatures total = feature_total(step_features);
  const SupportSet sv = support_set(total, demos, slopes, {SubdomMode::relative, aggregation});
  const std::size_t K = total.size();
  const double T = static_cast<double>(step_features.size());
  const double N = static_cast<double>(demos.size());

  std::vector<double> coverage(K), inverse_sum(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    coverage[k] = static_cast<double>(sv.count(k)) / N;
    for (std::size_t j : sv.per_feature[k]) {
      detail::check_relative_denominator(demos[j][k]);
      inverse_sum[k] += 1.0 / demos[j][k];
    }
  }

  std::vector<double> out(step_features.size(), 0.0);
  for (std::size_t t = 0; t < step_features.size(); ++t) {
    double c = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (sv.count(k) == 0) continue;
      c += coverage[k] * (1.0 - slopes[k]) / T + slopes[k] * step_features[t][k] * inverse_sum[k] / N;
    }
    out[t] = c;
  }
  return out;
}

inline std::vector<double> decompose_per_state(std::span<const CostFeatures> step_features,
                                               std::span<const CostFeatures> demos,
                                               const HingeSlopes& slopes, SubdomConfig cfg = {}) {
  return cfg.mode == SubdomMode::absolute
             ? decompose_per_state_abs(step_features, demos, slopes, cfg.aggregation)
             : decompose_per_state_rel(step_features, demos, slopes, cfg.aggregation);
}

struct SnippetSelection {
  double value = 0.0;
  std::size_t imitator_snippet = 0;  // prefix index m: snippet covers steps [0, (m+1) T/N)
  std::size_t demo_snippet = 0;
  std::size_t imitator_length = 0;   // steps in the selected imitator prefix
  std::size_t demo_length = 0;
};

// Prefix-snippet subdominance. Both step sequences have a common length T
// divisible by n_snippets; snippet m covers steps [0, (m+1) T/N). For every
// demonstration snippet the imitator snippet of least subdominance is kept,
// and the demonstration snippet whose kept value is largest is selected.
// Ties resolve to the lowest index.
inline SnippetSelection snippet_subdom(std::span<const CostFeatures> imitator_steps,
                                       std::span<const CostFeatures> demo_steps,
                                       const HingeSlopes& slopes, std::size_t n_snippets,
                                       SubdomConfig cfg = {}) {
  const std::size_t T = imitator_steps.size();
  if (n_snippets == 0) throw InvalidInput("snippet count must be positive");
  if (demo_steps.size() != T) throw InvalidInput("snippet trajectories must share a horizon");
  if (T < n_snippets) throw InvalidInput("horizon shorter than the snippet count");
  if (T % n_snippets != 0) throw InvalidInput("snippet count must divide the horizon");
  const std::size_t len = T / n_snippets;

  auto prefix_totals = [&](std::span<const CostFeatures> steps) {
    std::vector<CostFeatures> out;
    for (std::size_t m = 1; m <= n_snippets; ++m) out.push_back(feature_total(steps.subspan(0, m * len)));
    return out;
  };
  const auto imit = prefix_totals(imitator_steps);
  const auto demo = prefix_totals(demo_steps);

  SnippetSelection best;
  best.value = -1.0;
  for (std::size_t d = 0; d < n_snippets; ++d) {
    std::size_t arg_min = 0;
    double min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_snippets; ++i) {
      const double v = subdom_pair(imit[i], demo[d], slopes, cfg);
      if (v < min_value) {
        min_value = v;
        arg_min = i;
      }
    }
    if (min_value > best.value) {
      best.value = min_value;
      best.imitator_snippet = arg_min;
      best.demo_snippet = d;
    }
  }
  best.imitator_length = (best.imitator_snippet + 1) * len;
  best.demo_length = (best.demo_snippet + 1) * len;
  return best;
}

// Slopes witnessing zero subdominance (alpha_k = 2 / (f_demo_k - f_imit_k))
// when f_imit strictly dominates f_demo; empty otherwise.
inline std::vector<double> zero_subdominance_slopes(std::span<const double> f_imit,
                                                    std::span<const double> f_demo) {
  if (!check_satisfices(f_imit, f_demo)) return {};
  std::vector<double> alpha(f_imit.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] = 2.0 / (f_demo[k] - f_imit[k]);
  return alpha;
}

}  // namespace minsubfi
