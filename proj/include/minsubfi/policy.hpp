#pragma once

// Stochastic discrete-action policy: softmax over the logits of an MLP.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/mlp.hpp"

namespace minsubfi {

inline constexpr const char* kPolicyFormat = "minsubfi.policy";
inline constexpr int kPolicyVersion = 1;

struct PolicyParams {
  Architecture arch;
  std::vector<double> weights;
  int version = kPolicyVersion;

  void validate() const {
    if (arch.input_dim == 0 || arch.output_dim < 2) throw InvalidInput("policy needs inputs and >= 2 actions");
    if (weights.size() != arch.param_count()) throw InvalidInput("policy weight count does not match architecture");
    for (double w : weights)
      if (!std::isfinite(w)) throw NumericalFailure("policy weights are not finite");
  }
};

// One hidden layer of width 32.
inline Architecture default_policy_architecture(std::size_t state_dim, std::size_t num_actions) {
  return Architecture{state_dim, {32}, num_actions};
}

inline PolicyParams init_policy(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolicyParams p{arch, xavier_init(arch, rng), kPolicyVersion};
  p.validate();
  return p;
}

inline PolicyParams zero_policy(const Architecture& arch) {
  return PolicyParams{arch, std::vector<double>(arch.param_count(), 0.0), kPolicyVersion};
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lse = m + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline std::vector<double> action_distribution(const PolicyParams& params, std::span<const double> state) {
  return softmax(mlp_forward(params.arch, params.weights, state));
}

inline double log_prob(const PolicyParams& params, std::span<const double> state, int action) {
  const auto lp = log_softmax(mlp_forward(params.arch, params.weights, state));
  if (action < 0 || static_cast<std::size_t>(action) >= lp.size()) throw InvalidInput("invalid action");
  return lp[static_cast<std::size_t>(action)];
}

// grad += scale * d log pi(action | state) / d theta; returns log pi(action | state).
inline double accumulate_grad_log_prob(const PolicyParams& params, std::span<const double> state, int action,
                                       double scale, std::span<double> grad) {
  MlpTape tape;
  const auto logits = mlp_forward(params.arch, params.weights, state, &tape);
  if (action < 0 || static_cast<std::size_t>(action) >= logits.size()) throw InvalidInput("invalid action");
  const auto a = static_cast<std::size_t>(action);
  const auto lp = log_softmax(logits);
  std::vector<double> upstream(logits.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = (i == a ? 1.0 : 0.0) - std::exp(lp[i]);
  mlp_backward(params.arch, params.weights, tape, upstream, scale, grad);
  return lp[a];
}

inline std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const double> state, int action) {
  std::vector<double> g(params.weights.size(), 0.0);
  accumulate_grad_log_prob(params, state, action, 1.0, g);
  return g;
}

// sum_t log pi(a_t | s_t); dynamics terms cancel in trajectory likelihood ratios.
inline double traj_log_prob(const PolicyParams& params, const Trajectory& traj) {
  double acc = 0.0;
  for (std::size_t t = 0; t < traj.actions.size(); ++t) acc += log_prob(params, traj.states[t], traj.actions[t]);
  return acc;
}

inline ActionFn policy_actor(const PolicyParams& params) {
  return [&params](const EnvState& s, std::mt19937_64& rng) {
    const auto p = action_distribution(params, s);
    std::discrete_distribution<int> d(p.begin(), p.end());
    const int a = d(rng);
    return std::pair<int, double>(a, std::log(p[static_cast<std::size_t>(a)]));
  };
}

// Most probable action, log-probability 0.
inline ActionFn greedy_actor(const PolicyParams& params) {
  return [&params](const EnvState& s, std::mt19937_64&) {
    const auto p = action_distribution(params, s);
    const auto a = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return std::pair<int, double>(a, 0.0);
  };
}

inline Trajectory rollout(const PolicyParams& params, Environment& env, std::mt19937_64& rng,
                          const RolloutOptions& opt = {}, const FeatureMap& fmap = {}) {
  if (params.arch.input_dim != env.state_dim() || params.arch.output_dim != env.num_actions())
    throw InvalidInput("policy does not match the environment");
  return rollout_with(env, policy_actor(params), fmap ? fmap : env.feature_map(), rng, opt);
}

inline Trajectory rollout(const PolicyParams& params, Environment& env, std::uint64_t seed,
                          const RolloutOptions& opt = {}, const FeatureMap& fmap = {}) {
  std::mt19937_64 rng(seed);
  return rollout(params, env, rng, opt, fmap);
}

// ---------------------------------------------------------------- behavior cloning

// First and second moment estimates for Adam ascent steps.
struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;

  // w += lr * mhat / (sqrt(vhat) + eps) - lr * decay * w
  void ascend(std::vector<double>& w, std::span<const double> direction, double lr, double decay = 0.0) {
    if (m.size() != w.size()) {
      m.assign(w.size(), 0.0);
      v.assign(w.size(), 0.0);
      t = 0;
    }
    ++t;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * direction[i];
      v[i] = b2 * v[i] + (1.0 - b2) * direction[i] * direction[i];
      w[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps) - lr * decay * w[i];
    }
  }
};

struct BcResult {
  PolicyParams params;
  double final_nll = 0.0;
};

struct BcOptions {
  int batch_size = 32;
  bool adam = false;  // per-parameter step scaling; plain SGD otherwise
};

inline double mean_nll(const PolicyParams& params, const DemoSet& demos) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& d : demos)
    for (std::size_t t = 0; t < d.actions.size(); ++t, ++n) acc -= log_prob(params, d.states[t], d.actions[t]);
  return n ? acc / static_cast<double>(n) : 0.0;
}

// Minibatch SGD on the mean negative log-likelihood of demonstrated actions,
// starting from `init`.
inline BcResult bc_train(const DemoSet& demos, PolicyParams init, int epochs, double lr, std::uint64_t seed,
                         BcOptions opt = {}) {
  if (demos.empty()) throw InvalidInput("bc_train: no demonstrations");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < demos.size(); ++j)
    for (std::size_t t = 0; t < demos[j].actions.size(); ++t) pairs.emplace_back(j, t);
  if (pairs.empty()) throw InvalidInput("bc_train: demonstrations contain no actions");

  std::mt19937_64 rng(seed);
  PolicyParams p = std::move(init);
  std::vector<double> grad(p.weights.size());
  AdamState adam;
  const auto batch = static_cast<std::size_t>(std::max(1, opt.batch_size));
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (std::size_t start = 0; start < pairs.size(); start += batch) {
      const std::size_t stop = std::min(pairs.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto [j, t] = pairs[i];
        accumulate_grad_log_prob(p, demos[j].states[t], demos[j].actions[t], scale, grad);
      }
      if (opt.adam)
        adam.ascend(p.weights, grad, lr);
      else
        for (std::size_t i = 0; i < grad.size(); ++i) p.weights[i] += lr * grad[i];  // ascend log-likelihood
    }
  }
  p.validate();
  return BcResult{p, mean_nll(p, demos)};
}

inline BcResult bc_train(const DemoSet& demos, const Architecture& arch, int epochs, double lr, std::uint64_t seed,
                         BcOptions opt = {}) {
  return bc_train(demos, init_policy(arch, seed), epochs, lr, seed ^ 0x5bd1e995ULL, opt);
}

// ---------------------------------------------------------------- serialization

inline nlohmann::json network_to_json(const char* format, int version, const Architecture& arch,
                                      const std::vector<double>& weights) {
  return nlohmann::json{{"format", format}, {"version", version}, {"architecture", arch}, {"weights", weights}};
}

inline std::string policy_to_string(const PolicyParams& p) {
  return network_to_json(kPolicyFormat, p.version, p.arch, p.weights).dump(1) + "\n";
}

inline PolicyParams policy_from_json(const nlohmann::json& j) {
  PolicyParams p;
  try {
    if (j.at("format").get<std::string>() != kPolicyFormat) throw InvalidInput("not a policy file");
    p.version = j.at("version").get<int>();
    p.arch = j.at("architecture").get<Architecture>();
    p.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed policy file: ") + e.what());
  }
  p.validate();
  return p;
}

inline void save_policy(const std::string& path, const PolicyParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << policy_to_string(p);
}

inline PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open policy file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("policy file '" + path + "': " + e.what());
  }
  return policy_from_json(j);
}

}  // namespace minsubfi
