#pragma once

// Hinge-slope optimization for a fixed imitator feature vector and
// demonstration set: multiplicative (exponentiated-gradient) steps, their
// importance-weighted offline form, and an exact per-feature minimizer of
//   g(a) = (1/N) sum_j [a d_j + 1]_+ + (lambda/2) a^2   over [a_min, a_max].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "minsubfi/errors.hpp"
#include "minsubfi/features.hpp"
#include "minsubfi/subdominance.hpp"

namespace minsubfi {

struct AlphaUpdateConfig {
  double step_size = 1e-2;  // eta'
  double lambda = 1e-2;
  double alpha_min = 1e-3;
  double alpha_max = 1e3;

  void validate() const {
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidInput("alpha step size must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("alpha lambda must be nonnegative");
    if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max) || !std::isfinite(alpha_max))
      throw InvalidInput("alpha bounds must satisfy 0 < alpha_min <= alpha_max");
  }
};

inline constexpr double kAlphaExponentClip = 50.0;

namespace detail {

// d/d(alpha_k) of the hinge argument: f - f_demo (absolute) or f/f_demo - 1.
inline double slope_derivative(SubdomMode mode, double f_imit, double f_demo) {
  if (mode == SubdomMode::absolute) return f_imit - f_demo;
  check_relative_denominator(f_demo);
  return f_imit / f_demo - 1.0;
}

inline HingeSlopes eg_step(const HingeSlopes& slopes, std::span<const double> f_imit,
                           std::span<const CostFeatures> demos, double weight,
                           const AlphaUpdateConfig& cfg, SubdomConfig subdom) {
  cfg.validate();
  slopes.validate();
  const SupportSet sv = support_set(f_imit, demos, slopes, subdom);
  const double n = static_cast<double>(demos.size());
  std::vector<double> next(slopes.alpha);
  for (std::size_t k = 0; k < next.size(); ++k) {
    double diff = 0.0;
    for (std::size_t j : sv.per_feature[k]) diff += slope_derivative(subdom.mode, f_imit[k], demos[j][k]);
    double exponent = -cfg.step_size * (weight * diff + cfg.lambda * n * slopes[k]);
    exponent = std::clamp(exponent, -kAlphaExponentClip, kAlphaExponentClip);
    next[k] = std::clamp(slopes[k] * std::exp(exponent), cfg.alpha_min, cfg.alpha_max);
  }
  return HingeSlopes(std::move(next), slopes.lambda_alpha);
}

}  // namespace detail

// One multiplicative step per feature:
//   a_k <- clamp(a_k exp{-eta' [sum_{SV_k} (f_k - f_k(demo_j)) + lambda N a_k]})
// with the support set taken at the incoming slopes.
inline HingeSlopes alpha_eg_update(const HingeSlopes& slopes, std::span<const double> f_imit,
                                   std::span<const CostFeatures> demos, const AlphaUpdateConfig& cfg = {},
                                   SubdomConfig subdom = {}) {
  return detail::eg_step(slopes, f_imit, demos, 1.0, cfg, subdom);
}

// Offline form: the support-set feature differences are scaled by the
// importance ratio pi_theta(demo) / pi_ref(demo) of the demonstration that
// plays the imitator.
inline HingeSlopes alpha_offline_update(const HingeSlopes& slopes, std::span<const double> f_demo_as_imitator,
                                        std::span<const CostFeatures> demos, double importance_ratio,
                                        const AlphaUpdateConfig& cfg = {}, SubdomConfig subdom = {}) {
  if (!std::isfinite(importance_ratio) || importance_ratio <= 0.0)
    throw InvalidInput("importance ratio must be finite and positive");
  return detail::eg_step(slopes, f_demo_as_imitator, demos, importance_ratio, cfg, subdom);
}

// Exact minimizer over [alpha_min, alpha_max] of
//   g(a) = (1/N) sum_j [a d_j + 1]_+ + (lambda/2) a^2.
// Hinges with d_j < 0 switch off past the breakpoint a = -1/d_j; between
// consecutive breakpoints g is a fixed quadratic, minimized in closed form
// and clamped to its interval. Ties resolve to the smallest slope.
inline double alpha_analytic_1d(std::span<const double> slope_derivatives, double lambda, double alpha_min,
                                double alpha_max) {
  if (slope_derivatives.empty()) throw InvalidInput("alpha_analytic: empty demonstration set");
  if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max)) throw InvalidInput("alpha_analytic: bad bounds");
  if (lambda < 0.0) throw InvalidInput("alpha_analytic: lambda must be nonnegative");
  const double n = static_cast<double>(slope_derivatives.size());

  auto objective = [&](double a) {
    double acc = 0.0;
    for (double d : slope_derivatives) acc += std::max(a * d + 1.0, 0.0);
    return acc / n + 0.5 * lambda * a * a;
  };

  std::vector<double> knots{alpha_min, alpha_max};
  for (double d : slope_derivatives) {
    if (d >= 0.0) continue;
    const double b = -1.0 / d;
    if (b > alpha_min && b < alpha_max) knots.push_back(b);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<double> candidates(knots);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double lo = knots[i], hi = knots[i + 1];
    const double mid = 0.5 * (lo + hi);
    double slope = 0.0;  // linear coefficient of g on (lo, hi)
    for (double d : slope_derivatives)
      if (mid * d + 1.0 > 0.0) slope += d;
    slope /= n;
    if (lambda > 0.0) candidates.push_back(std::clamp(-slope / lambda, lo, hi));
  }
  std::sort(candidates.begin(), candidates.end());

  double best = candidates.front();
  double best_value = objective(best);
  for (double a : candidates) {
    const double v = objective(a);
    if (v < best_value - 1e-14 * std::max(1.0, std::abs(best_value))) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

// Per-feature exact slope for feature k of f_imit against the demonstration set.
inline double alpha_analytic(std::span<const double> f_imit, std::span<const CostFeatures> demos, double lambda,
                             std::size_t k, double alpha_min = 1e-3, double alpha_max = 1e3,
                             SubdomMode mode = SubdomMode::absolute) {
  detail::check_demo_set(demos, f_imit.size());
  if (k >= f_imit.size()) throw InvalidInput("alpha_analytic: feature index out of range");
  std::vector<double> d;
  d.reserve(demos.size());
  for (const auto& demo : demos) d.push_back(detail::slope_derivative(mode, f_imit[k], demo[k]));
  return alpha_analytic_1d(d, lambda, alpha_min, alpha_max);
}

// Exact slopes for every feature (sum aggregation decouples the features).
inline HingeSlopes alpha_analytic_all(std::span<const double> f_imit, std::span<const CostFeatures> demos,
                                      const AlphaUpdateConfig& cfg = {}, SubdomMode mode = SubdomMode::absolute) {
  std::vector<double> alpha(f_imit.size());
  for (std::size_t k = 0; k < alpha.size(); ++k)
    alpha[k] = alpha_analytic(f_imit, demos, cfg.lambda, k, cfg.alpha_min, cfg.alpha_max, mode);
  return HingeSlopes(std::move(alpha), cfg.lambda);
}

}  // namespace minsubfi
