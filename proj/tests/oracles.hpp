#pragma once

// Independent reference implementations used by the tests. They share no
// code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "minsubfi/env.hpp"
#include "minsubfi/features.hpp"

namespace oracle {

using minsubfi::CostFeatures;

// Direct subdominance of one imitator against a set, sum or max over
// features, absolute or relative hinges.
inline double subdom(const std::vector<double>& f, const std::vector<CostFeatures>& demos,
                     const std::vector<double>& alpha, bool relative = false, bool use_max = false) {
  double total = 0.0;
  for (const auto& d : demos) {
    double agg = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double ratio = relative ? f[k] / d[k] - 1.0 : f[k] - d[k];
      const double h = std::max(0.0, alpha[k] * ratio + 1.0);
      agg = use_max ? std::max(agg, h) : agg + h;
    }
    total += agg;
  }
  return total / static_cast<double>(demos.size());
}

// g(a) = (1/N) sum_j [a (f - f_j) + 1]_+ + (lambda/2) a^2 for one feature.
inline double alpha_objective(double a, double f, const std::vector<double>& demo_f, double lambda) {
  double acc = 0.0;
  for (double fd : demo_f) acc += std::max(0.0, a * (f - fd) + 1.0);
  return acc / static_cast<double>(demo_f.size()) + 0.5 * lambda * a * a;
}

// Best objective value over n log-spaced points of [lo, hi].
inline double grid_min(const std::function<double(double)>& g, double lo, double hi, int n) {
  double best = std::numeric_limits<double>::infinity();
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i) {
    const double a = std::exp(llo + (lhi - llo) * i / (n - 1));
    best = std::min(best, g(a));
  }
  return best;
}

inline bool strictly_dominates(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!(a[k] < b[k])) return false;
  return true;
}

// Two-state chain: the state is the one-hot code of the last action, the
// episode lasts `horizon` transitions from state 0. Per-state features
// depend on the state and on the action taken there.
class ToyChain final : public minsubfi::Environment {
 public:
  explicit ToyChain(int horizon = 3) : horizon_(horizon) {}

  minsubfi::EnvId id() const override { return minsubfi::EnvId::cartpole; }
  std::size_t state_dim() const override { return 2; }
  std::size_t num_actions() const override { return 2; }
  std::size_t feature_dim() const override { return 2; }
  int step_limit() const override { return horizon_; }

  minsubfi::EnvState initial_state(int, std::mt19937_64&) const override { return {1.0, 0.0}; }

  CostFeatures features(const minsubfi::EnvState& s, std::optional<int> a) const override {
    const bool in_one = s[1] > 0.5;
    CostFeatures f{in_one ? 0.2 : 1.0, in_one ? 1.0 : 0.3};
    if (a && *a == 1) f[0] += 0.5;
    return f;
  }

  double true_return(const minsubfi::Trajectory& t) const override {
    return static_cast<double>(t.actions.size());
  }

 protected:
  minsubfi::StepResult advance(const minsubfi::EnvState&, int action, int step_index) const override {
    minsubfi::StepResult r;
    r.state = action == 0 ? minsubfi::EnvState{1.0, 0.0} : minsubfi::EnvState{0.0, 1.0};
    r.terminated = step_index + 1 >= horizon_;
    return r;
  }

 private:
  int horizon_;
};

// All 2^horizon action sequences of the toy chain with their state and
// step-feature sequences.
struct ToyPath {
  std::vector<int> actions;
  std::vector<minsubfi::EnvState> states;
  std::vector<CostFeatures> steps;
};

inline std::vector<ToyPath> enumerate_toy(const ToyChain& env) {
  const int H = env.step_limit();
  std::vector<ToyPath> out;
  for (int code = 0; code < (1 << H); ++code) {
    ToyPath p;
    minsubfi::EnvState s{1.0, 0.0};
    for (int t = 0; t < H; ++t) {
      const int a = (code >> t) & 1;
      p.states.push_back(s);
      p.actions.push_back(a);
      p.steps.push_back(env.features(s, a));
      s = a == 0 ? minsubfi::EnvState{1.0, 0.0} : minsubfi::EnvState{0.0, 1.0};
    }
    p.states.push_back(s);
    p.steps.push_back(env.features(s, std::nullopt));
    out.push_back(std::move(p));
  }
  return out;
}

// Softmax of a linear (no hidden layer) two-action policy whose weights
// are laid out as W (2x2, row-major) then b (2).
inline std::vector<double> linear_policy(const std::vector<double>& w, const minsubfi::EnvState& s) {
  double z[2];
  for (int o = 0; o < 2; ++o) z[o] = w[o * 2] * s[0] + w[o * 2 + 1] * s[1] + w[4 + o];
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

inline double path_prob(const std::vector<double>& w, const ToyPath& p) {
  double prob = 1.0;
  for (std::size_t t = 0; t < p.actions.size(); ++t)
    prob *= linear_policy(w, p.states[t])[static_cast<std::size_t>(p.actions[t])];
  return prob;
}

// Exact E[cost(path)] under the linear policy.
inline double expected_cost(const std::vector<double>& w, const std::vector<ToyPath>& paths,
                            const std::function<double(const ToyPath&)>& cost) {
  double acc = 0.0;
  for (const auto& p : paths) acc += path_prob(w, p) * cost(p);
  return acc;
}

// Exact gradient sum_paths P(path) cost(path) d log P(path)/dw, with the
// score function written out for the linear softmax.
inline std::vector<double> expected_cost_grad(const std::vector<double>& w, const std::vector<ToyPath>& paths,
                                              const std::function<double(const ToyPath&)>& cost) {
  std::vector<double> g(6, 0.0);
  for (const auto& p : paths) {
    const double weight = path_prob(w, p) * cost(p);
    for (std::size_t t = 0; t < p.actions.size(); ++t) {
      const auto pi = linear_policy(w, p.states[t]);
      for (int o = 0; o < 2; ++o) {
        const double coeff = (o == p.actions[t] ? 1.0 : 0.0) - pi[static_cast<std::size_t>(o)];
        g[static_cast<std::size_t>(o * 2)] += weight * coeff * p.states[t][0];
        g[static_cast<std::size_t>(o * 2 + 1)] += weight * coeff * p.states[t][1];
        g[static_cast<std::size_t>(4 + o)] += weight * coeff;
      }
    }
  }
  return g;
}

// Central differences of a scalar function of a parameter vector.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + eps;
    const double up = f(x);
    x[i] = x0 - eps;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace oracle
