#pragma once

// Scripted suboptimal demonstrators, demonstration generation, trajectory
// padding and the `.demos.jsonl` file format.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsubfi/cartpole.hpp"
#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/lander.hpp"

namespace minsubfi {

inline std::unique_ptr<Environment> make_env(EnvId id) {
  if (id == EnvId::cartpole) return std::make_unique<CartPole>();
  return std::make_unique<Lander>();
}

inline std::unique_ptr<Environment> make_env(const std::string& id) { return make_env(parse_env_id(id)); }

// Bang-bang on the pole angle with rate damping: push right iff
// theta + 0.2 omega > 0. With probability `flip` the action is inverted.
inline ActionFn cartpole_demonstrator(double flip) {
  return [flip](const EnvState& s, std::mt19937_64& rng) {
    int a = s[2] + 0.2 * s[3] > 0.0 ? CartPole::right : CartPole::left;
    if (flip > 0.0 && std::bernoulli_distribution(std::min(flip, 1.0))(rng)) a = 1 - a;
    return std::pair<int, double>(a, 0.0);
  };
}

struct LanderGains {
  double descent = 0.4;    // target vy = -(0.15 + descent * y)
  double position = 0.5;   // theta_des = position * x + velocity * vx
  double velocity = 1.0;
  double damping = 2.0;    // attitude error includes damping * omega
};

// PD controller steering toward the pad: the main engine holds a
// height-dependent descent rate, the side thrusters track a tilt that
// cancels lateral offset.
inline ActionFn lander_demonstrator(LanderGains g) {
  return [g](const EnvState& s, std::mt19937_64&) {
    const double x = s[0], y = s[1], vx = s[2], vy = s[3], theta = s[4], omega = s[5];
    const double target_vy = -(0.15 + g.descent * std::max(y, 0.0));
    const double theta_des = std::clamp(g.position * x + g.velocity * vx, -0.2, 0.2);
    const double attitude = theta - theta_des + g.damping * omega;
    int a = Lander::noop;
    if (vy < target_vy - 0.02)
      a = Lander::main;
    else if (attitude > 0.01)
      a = Lander::right;
    else if (attitude < -0.01)
      a = Lander::left;
    return std::pair<int, double>(a, 0.0);
  };
}

inline LanderGains perturbed_gains(double noise, std::mt19937_64& rng) {
  LanderGains g;
  if (noise <= 0.0) return g;
  std::normal_distribution<double> n(0.0, noise);
  g.descent *= 1.0 + n(rng);
  g.position *= 1.0 + n(rng);
  g.velocity *= 1.0 + n(rng);
  g.damping *= 1.0 + n(rng);
  return g;
}

struct DemoGenOptions {
  int num_tasks = 1;
};

// n demonstrations; demo j belongs to task j % num_tasks and is generated
// from its own seed derived from `seed`, so sets are reproducible bit-for-bit.
inline DemoSet gen_demos(EnvId env_id, int n, double noise_level, std::uint64_t seed,
                         DemoGenOptions opt = {}) {
  if (n < 1) throw InvalidInput("gen_demos: n must be >= 1");
  if (noise_level < 0.0 || !std::isfinite(noise_level)) throw InvalidInput("gen_demos: bad noise level");
  if (opt.num_tasks < 1) throw InvalidInput("gen_demos: num_tasks must be >= 1");
  auto env = make_env(env_id);
  std::mt19937_64 master(seed);
  DemoSet demos;
  demos.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const std::uint64_t demo_seed = master();
    std::mt19937_64 rng(demo_seed);
    ActionFn act = env_id == EnvId::cartpole ? cartpole_demonstrator(noise_level)
                                             : lander_demonstrator(perturbed_gains(noise_level, rng));
    RolloutOptions ro;
    ro.task_id = j % opt.num_tasks;
    Trajectory t = rollout_with(*env, act, env->feature_map(), rng, ro);
    t.logprobs.clear();
    t.seed = demo_seed;
    demos.push_back(std::move(t));
  }
  return demos;
}

inline double true_return(EnvId env_id, const Trajectory& traj) { return make_env(env_id)->true_return(traj); }

// ---------------------------------------------------------------- padding

struct PaddingConfig {
  std::size_t horizon = 200;
  CostFeatures pad_features;
};

// Appends copies of pad_features until the feature sequence reaches the
// horizon. States and actions are left alone.
inline std::vector<CostFeatures> padded_steps(const std::vector<CostFeatures>& steps, const PaddingConfig& cfg) {
  validate_features(cfg.pad_features, "padding features");
  std::vector<CostFeatures> out(steps);
  while (out.size() < cfg.horizon) out.push_back(cfg.pad_features);
  return out;
}

inline Trajectory pad_trajectory(const Trajectory& traj, const PaddingConfig& cfg) {
  Trajectory out = traj;
  out.step_features = padded_steps(traj.step_features, cfg);
  return out;
}

// Per-feature quantile of all demonstration step features.
inline CostFeatures step_feature_quantile(const DemoSet& demos, double q) {
  if (demos.empty() || demos.front().step_features.empty()) throw InvalidInput("no demonstration features");
  const std::size_t K = demos.front().step_features.front().size();
  CostFeatures out(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> v;
    for (const auto& d : demos)
      for (const auto& f : d.step_features) v.push_back(f[k]);
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
    out[k] = v[idx];
  }
  return out;
}

// Horizon 200 and the 95th percentile of demonstration step features.
inline PaddingConfig default_padding(const DemoSet& demos) {
  return PaddingConfig{200, step_feature_quantile(demos, 0.95)};
}

// --------------------------------------------------------------- file I/O

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
  nlohmann::json j;
  j["task_id"] = t.task_id;
  j["states"] = t.states;
  j["actions"] = t.actions;
  j["step_features"] = t.step_features;
  j["true_return"] = t.true_return;
  j["env_id"] = to_string(t.env_id);
  j["seed"] = t.seed;
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  try {
    t.task_id = j.at("task_id").get<int>();
    t.states = j.at("states").get<std::vector<EnvState>>();
    t.actions = j.at("actions").get<std::vector<int>>();
    t.step_features = j.at("step_features").get<std::vector<CostFeatures>>();
    t.true_return = j.at("true_return").get<double>();
    t.env_id = parse_env_id(j.at("env_id").get<std::string>());
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed demonstration record: ") + e.what());
  }
  if (t.states.empty() || t.actions.size() + 1 != t.states.size())
    throw InvalidInput("demonstration record: |actions| must equal |states| - 1");
  if (t.step_features.size() != t.states.size())
    throw InvalidInput("demonstration record: |step_features| must equal |states|");
  return t;
}

inline std::string demos_to_jsonl(const DemoSet& demos) {
  std::string out;
  for (const auto& d : demos) {
    out += trajectory_to_json(d).dump();
    out += '\n';
  }
  return out;
}

inline DemoSet demos_from_jsonl(std::istream& in) {
  DemoSet demos;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput("line " + std::to_string(lineno) + ": " + e.what());
    }
    demos.push_back(trajectory_from_json(j));
  }
  return demos;
}

inline void save_demos(const std::string& path, const DemoSet& demos) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << demos_to_jsonl(demos);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline DemoSet load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open demonstration file '" + path + "'");
  return demos_from_jsonl(in);
}

}  // namespace minsubfi
