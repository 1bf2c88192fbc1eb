#pragma once

// Learned nonnegative cost features from two-level trajectory preferences.
// The logit of "xi_i preferred over xi_j" is the subdominance of xi_j's
// learned totals against xi_i's, so the preferred trajectory should make
// the other look subdominant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/mlp.hpp"
#include "minsubfi/policy.hpp"
#include "minsubfi/subdominance.hpp"

namespace minsubfi {

inline constexpr const char* kFeatNetFormat = "minsubfi.featnet";
inline constexpr int kFeatNetVersion = 1;

struct PreferencePair {
  std::size_t less_preferred = 0;
  std::size_t more_preferred = 0;
};

// Every (below threshold, at or above threshold) cross pair.
inline std::vector<PreferencePair> build_preferences(const DemoSet& demos, double threshold) {
  std::vector<std::size_t> low, high;
  for (std::size_t j = 0; j < demos.size(); ++j) (demos[j].true_return >= threshold ? high : low).push_back(j);
  if (low.empty() || high.empty())
    throw InvalidInput("preference threshold leaves one class empty");
  std::vector<PreferencePair> out;
  for (std::size_t l : low)
    for (std::size_t h : high) out.push_back({l, h});
  return out;
}

// MLP with a softplus output layer.
struct FeatureNetParams {
  Architecture arch;
  std::vector<double> weights;
  int version = kFeatNetVersion;

  void validate() const {
    if (arch.input_dim == 0 || arch.output_dim == 0) throw InvalidInput("feature net needs inputs and outputs");
    if (weights.size() != arch.param_count()) throw InvalidInput("feature net weight count does not match");
    for (double w : weights)
      if (!std::isfinite(w)) throw NumericalFailure("feature net weights are not finite");
  }
};

// Two hidden layers of width 8, three outputs.
inline Architecture default_featnet_architecture(std::size_t state_dim, std::size_t k = 3) {
  return Architecture{state_dim, {8, 8}, k};
}

inline FeatureNetParams init_featnet(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureNetParams p{arch, xavier_init(arch, rng), kFeatNetVersion};
  p.validate();
  return p;
}

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline CostFeatures extract_features(const FeatureNetParams& net, std::span<const double> state) {
  auto z = mlp_forward(net.arch, net.weights, state);
  for (auto& v : z) v = softplus(v);
  return z;
}

inline CostFeatures learned_total(const FeatureNetParams& net, const Trajectory& traj) {
  CostFeatures total(net.arch.output_dim, 0.0);
  for (const auto& s : traj.states) {
    const auto f = extract_features(net, s);
    for (std::size_t k = 0; k < f.size(); ++k) total[k] += f[k];
  }
  return total;
}

// Per-state learned features as a FeatureMap; the action is ignored.
inline FeatureMap learned_feature_map(FeatureNetParams net) {
  return [net = std::move(net)](const EnvState& s, std::optional<int>) { return extract_features(net, s); };
}

struct PrefLoss {
  double loss = 0.0;
  std::vector<double> grad;
};

namespace detail {

// d/dF of subdom(F_imit, F_demo) at fixed slopes, as (d/dF_imit, d/dF_demo).
// On the flat side of a hinge, including the kink itself, the derivative is 0.
inline std::pair<std::vector<double>, std::vector<double>> subdom_pair_grad(std::span<const double> fi,
                                                                            std::span<const double> fd,
                                                                            const HingeSlopes& a) {
  std::vector<double> gi(fi.size(), 0.0), gd(fi.size(), 0.0);
  for (std::size_t k = 0; k < fi.size(); ++k)
    if (a[k] * (fi[k] - fd[k]) + 1.0 > 0.0) {
      gi[k] = a[k];
      gd[k] = -a[k];
    }
  return {gi, gd};
}

// grad += sum_s J_s^T upstream, J_s the Jacobian of the softplus outputs at state s.
inline void accumulate_total_grad(const FeatureNetParams& net, const Trajectory& traj,
                                  std::span<const double> upstream, std::vector<double>& grad) {
  std::vector<double> u(upstream.size());
  for (const auto& s : traj.states) {
    MlpTape tape;
    const auto z = mlp_forward(net.arch, net.weights, s, &tape);
    for (std::size_t k = 0; k < z.size(); ++k) u[k] = upstream[k] * sigmoid(z[k]);
    mlp_backward(net.arch, net.weights, tape, u, 1.0, grad);
  }
}

}  // namespace detail

// c_ij = subdom(F(less), F(more)) and c_ji = subdom(F(more), F(less));
// loss = -log softmax(c_ij, c_ji)[0] = log(1 + exp(c_ji - c_ij)).
inline PrefLoss pref_loss(const FeatureNetParams& net, const PreferencePair& pair, const DemoSet& demos,
                          const HingeSlopes& alpha) {
  if (pair.less_preferred >= demos.size() || pair.more_preferred >= demos.size() ||
      pair.less_preferred == pair.more_preferred)
    throw InvalidInput("preference pair ids must be distinct and present");
  if (alpha.size() != net.arch.output_dim) throw InvalidInput("slopes do not match the feature net output");
  const Trajectory& lo = demos[pair.less_preferred];
  const Trajectory& hi = demos[pair.more_preferred];
  const CostFeatures Fl = learned_total(net, lo);
  const CostFeatures Fh = learned_total(net, hi);
  const double cij = subdom_pair(Fl, Fh, alpha);
  const double cji = subdom_pair(Fh, Fl, alpha);
  const double d = cji - cij;
  PrefLoss out;
  out.loss = d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
  const double p = sigmoid(d);  // d loss / d cji; d loss / d cij = -p

  const auto [gij_l, gij_h] = detail::subdom_pair_grad(Fl, Fh, alpha);
  const auto [gji_h, gji_l] = detail::subdom_pair_grad(Fh, Fl, alpha);
  std::vector<double> ul(Fl.size()), uh(Fl.size());
  for (std::size_t k = 0; k < ul.size(); ++k) {
    ul[k] = -p * gij_l[k] + p * gji_l[k];
    uh[k] = -p * gij_h[k] + p * gji_h[k];
  }
  out.grad.assign(net.weights.size(), 0.0);
  detail::accumulate_total_grad(net, lo, ul, out.grad);
  detail::accumulate_total_grad(net, hi, uh, out.grad);
  return out;
}

inline double mean_pref_loss(const FeatureNetParams& net, const std::vector<PreferencePair>& prefs,
                             const DemoSet& demos, const HingeSlopes& alpha) {
  double acc = 0.0;
  for (const auto& p : prefs) acc += pref_loss(net, p, demos, alpha).loss;
  return acc / static_cast<double>(prefs.size());
}

// Full-batch gradient descent on the mean preference loss with all-ones slopes.
inline FeatureNetParams train_features(const DemoSet& demos, const std::vector<PreferencePair>& prefs,
                                       const Architecture& arch, int epochs, double lr, std::uint64_t seed) {
  if (prefs.empty()) throw InvalidInput("train_features: no preferences");
  if (epochs < 0) throw InvalidInput("train_features: epochs must be >= 0");
  FeatureNetParams net = init_featnet(arch, seed);
  const HingeSlopes alpha = HingeSlopes::ones(arch.output_dim);
  const double scale = 1.0 / static_cast<double>(prefs.size());
  for (int e = 0; e < epochs; ++e) {
    std::vector<double> grad(net.weights.size(), 0.0);
    for (const auto& p : prefs) {
      const auto l = pref_loss(net, p, demos, alpha);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += scale * l.grad[i];
    }
    for (std::size_t i = 0; i < grad.size(); ++i) net.weights[i] -= lr * grad[i];
  }
  net.validate();
  return net;
}

inline std::string featnet_to_string(const FeatureNetParams& n) {
  auto j = network_to_json(kFeatNetFormat, n.version, n.arch, n.weights);
  j["output_activation"] = "softplus";
  return j.dump(1) + "\n";
}

inline FeatureNetParams featnet_from_json(const nlohmann::json& j) {
  FeatureNetParams n;
  try {
    if (j.at("format").get<std::string>() != kFeatNetFormat) throw InvalidInput("not a feature net file");
    n.version = j.at("version").get<int>();
    n.arch = j.at("architecture").get<Architecture>();
    n.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed feature net file: ") + e.what());
  }
  n.validate();
  return n;
}

inline void save_featnet(const std::string& path, const FeatureNetParams& n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << featnet_to_string(n);
}

inline FeatureNetParams load_featnet(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open feature net file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("feature net file '" + path + "': " + e.what());
  }
  return featnet_from_json(j);
}

}  // namespace minsubfi
