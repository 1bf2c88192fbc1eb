#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "minsubfi/errors.hpp"
#include "minsubfi/features.hpp"

namespace minsubfi {

enum class EnvId { cartpole, lander };

inline const char* to_string(EnvId id) { return id == EnvId::cartpole ? "cartpole" : "lander"; }

inline EnvId parse_env_id(const std::string& s) {
  if (s == "cartpole") return EnvId::cartpole;
  if (s == "lander") return EnvId::lander;
  throw InvalidInput("unknown environment id '" + s + "'");
}

// cartpole: (x, v, theta, omega); lander: (x, y, vx, vy, theta, omega)
using EnvState = std::vector<double>;

struct StepResult {
  EnvState state;
  bool terminated = false;
  bool landed = false;
};

struct Trajectory {
  EnvId env_id = EnvId::cartpole;
  int task_id = 0;
  std::uint64_t seed = 0;
  std::vector<EnvState> states;
  std::vector<int> actions;                  // |states| - 1 entries
  std::vector<CostFeatures> step_features;   // one per state (more once padded)
  std::vector<double> logprobs;              // per action, nats; may be empty
  double true_return = 0.0;

  CostFeatures features() const { return feature_total(step_features); }
};

using DemoSet = std::vector<Trajectory>;

// Demonstration indices grouped by task id.
inline std::map<int, std::vector<std::size_t>> tasks_of(const DemoSet& demos) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t j = 0; j < demos.size(); ++j) out[demos[j].task_id].push_back(j);
  return out;
}

// Per-state cost features; the action is absent for the final state.
using FeatureMap = std::function<CostFeatures(const EnvState&, std::optional<int>)>;

// Episodic environment with deterministic physics. step() is a pure function
// of (state, action, step index) apart from the transition counter, which
// lets callers verify that a code path never touched the simulator.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvId id() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual int step_limit() const = 0;

  virtual EnvState initial_state(int task_id, std::mt19937_64& rng) const = 0;
  virtual CostFeatures features(const EnvState& s, std::optional<int> action) const = 0;
  virtual double true_return(const Trajectory& traj) const = 0;

  StepResult step(const EnvState& s, int action, int step_index) {
    if (s.size() != state_dim()) throw InvalidInput("state dimension mismatch");
    if (action < 0 || static_cast<std::size_t>(action) >= num_actions()) throw InvalidInput("invalid action");
    ++transitions_;
    return advance(s, action, step_index);
  }

  FeatureMap feature_map() const {
    return [this](const EnvState& s, std::optional<int> a) { return features(s, a); };
  }

  std::uint64_t transitions() const { return transitions_; }

 protected:
  // step_index counts transitions already taken in the episode.
  virtual StepResult advance(const EnvState& s, int action, int step_index) const = 0;

 private:
  std::uint64_t transitions_ = 0;
};

// Chooses an action in a state; returns (action, log-probability).
using ActionFn = std::function<std::pair<int, double>(const EnvState&, std::mt19937_64&)>;

struct RolloutOptions {
  int task_id = 0;
  std::optional<EnvState> start_state;
  int max_steps = -1;       // < 0: the environment's step limit
  int start_step_index = 0; // episode clock when starting mid-trajectory
};

inline Trajectory rollout_with(Environment& env, const ActionFn& act, const FeatureMap& fmap,
                               std::mt19937_64& rng, const RolloutOptions& opt = {}) {
  Trajectory traj;
  traj.env_id = env.id();
  traj.task_id = opt.task_id;
  EnvState s = opt.start_state ? *opt.start_state : env.initial_state(opt.task_id, rng);
  if (s.size() != env.state_dim()) throw InvalidInput("start state dimension mismatch");
  traj.states.push_back(s);
  const int limit = opt.max_steps < 0 ? env.step_limit() : opt.max_steps;
  for (int t = 0; t < limit; ++t) {
    const auto [a, logp] = act(s, rng);
    traj.step_features.push_back(fmap(s, a));
    traj.actions.push_back(a);
    traj.logprobs.push_back(logp);
    StepResult r = env.step(s, a, opt.start_step_index + t);
    s = std::move(r.state);
    traj.states.push_back(s);
    if (r.terminated) break;
  }
  traj.step_features.push_back(fmap(s, std::nullopt));
  traj.true_return = env.true_return(traj);
  return traj;
}

// Recomputes every demonstration's step features under a feature map.
inline DemoSet featurize(const DemoSet& demos, const FeatureMap& fmap) {
  DemoSet out = demos;
  for (auto& d : out) {
    d.step_features.clear();
    for (std::size_t t = 0; t < d.states.size(); ++t) {
      std::optional<int> a;
      if (t < d.actions.size()) a = d.actions[t];
      d.step_features.push_back(fmap(d.states[t], a));
    }
  }
  return out;
}

inline FeatureMap quadratic_feature_map(FeatureMap base) {
  return [base = std::move(base)](const EnvState& s, std::optional<int> a) {
    return quadratic_expand(base(s, a));
  };
}

}  // namespace minsubfi
