#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "minsubfi/errors.hpp"

namespace minsubfi {

// Nonnegative K-dimensional cost feature vector of a state or of a whole
// trajectory (the element-wise sum over its states).
using CostFeatures = std::vector<double>;

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " is not finite");
}

inline void validate_features(std::span<const double> f, const char* what = "cost features") {
  if (f.empty()) throw InvalidInput(std::string(what) + " must have K >= 1");
  for (double v : f) {
    require_finite(v, what);
    if (v < 0.0) throw InvalidInput(std::string(what) + " must be nonnegative");
  }
}

// Per-feature hinge slopes alpha (all strictly positive) and the weight of
// the (lambda/2)||alpha||^2 regularizer.
struct HingeSlopes {
  std::vector<double> alpha;
  double lambda_alpha = 0.0;

  HingeSlopes() = default;
  explicit HingeSlopes(std::vector<double> a, double lambda = 0.0)
      : alpha(std::move(a)), lambda_alpha(lambda) {
    validate();
  }

  static HingeSlopes ones(std::size_t k, double lambda = 0.0) {
    return HingeSlopes(std::vector<double>(k, 1.0), lambda);
  }

  std::size_t size() const { return alpha.size(); }
  double operator[](std::size_t k) const { return alpha[k]; }

  void validate() const {
    if (alpha.empty()) throw InvalidInput("hinge slopes must have K >= 1");
    for (double a : alpha) {
      require_finite(a, "hinge slope");
      if (a <= 0.0) throw InvalidInput("hinge slopes must be strictly positive");
    }
    require_finite(lambda_alpha, "lambda_alpha");
    if (lambda_alpha < 0.0) throw InvalidInput("lambda_alpha must be nonnegative");
  }
};

// Element-wise sum of per-step features.
inline CostFeatures feature_total(std::span<const CostFeatures> steps) {
  if (steps.empty()) return {};
  CostFeatures total(steps.front().size(), 0.0);
  for (const auto& f : steps) {
    if (f.size() != total.size()) throw InvalidInput("per-step feature dimensions disagree");
    for (std::size_t k = 0; k < f.size(); ++k) total[k] += f[k];
  }
  return total;
}

// vec(f f^T), row-major, length K^2.
inline CostFeatures quadratic_expand(std::span<const double> f) {
  CostFeatures out;
  out.reserve(f.size() * f.size());
  for (double fi : f)
    for (double fj : f) out.push_back(fi * fj);
  return out;
}

// True iff f_imit is strictly smaller than f_demo in every coordinate.
inline bool check_satisfices(std::span<const double> f_imit, std::span<const double> f_demo) {
  if (f_imit.size() != f_demo.size()) throw InvalidInput("feature dimensions disagree");
  for (std::size_t k = 0; k < f_imit.size(); ++k)
    if (!(f_imit[k] < f_demo[k])) return false;
  return true;
}

}  // namespace minsubfi
