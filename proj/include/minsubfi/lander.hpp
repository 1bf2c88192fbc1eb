#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "minsubfi/env.hpp"

namespace minsubfi {

struct LanderParams {
  double gravity = 1.6;       // m/s^2, acts on vy
  double main_accel = 3.0;    // m/s^2 along the body axis
  double side_accel = 0.05;   // rad/s^2 on omega
  double dt = 0.05;
  double x_limit = 2.0;
  int step_limit = 400;
  // touchdown tolerances
  double land_x = 0.2;
  double land_vx = 0.5;
  double land_vy = 1.0;
  double land_theta = 0.3;
};

// Point-mass 2-D lander. Actions: 0 = noop, 1 = main engine, 2 = left
// thruster (+omega), 3 = right thruster (-omega). Each task fixes a base
// initial state; episodes jitter it slightly.
class Lander final : public Environment {
 public:
  enum Action : int { noop = 0, main = 1, left = 2, right = 3 };

  explicit Lander(LanderParams p = {}) : p_(p) {}

  const LanderParams& params() const { return p_; }

  EnvId id() const override { return EnvId::lander; }
  std::size_t state_dim() const override { return 6; }
  std::size_t num_actions() const override { return 4; }
  std::size_t feature_dim() const override { return 7; }
  int step_limit() const override { return p_.step_limit; }

  static EnvState task_base_state(int task_id) {
    std::mt19937_64 task_rng(0x6c616e646572ULL ^ (static_cast<std::uint64_t>(task_id) * 0x9e3779b97f4a7c15ULL));
    std::uniform_real_distribution<double> ux(-0.1, 0.1), uvx(-0.03, 0.03), uth(-0.03, 0.03);
    const double x = ux(task_rng), vx = uvx(task_rng), th = uth(task_rng);
    return {x, 1.5, vx, 0.0, th, 0.0};
  }

  EnvState initial_state(int task_id, std::mt19937_64& rng) const override {
    EnvState s = task_base_state(task_id);
    std::normal_distribution<double> jitter(0.0, 0.01);
    s[0] += jitter(rng);
    s[2] += jitter(rng);
    s[4] += jitter(rng);
    return s;
  }

  // (x^2, y^2, vx^2, vy^2, theta^2, omega^2, |a|^2) with a the thrust
  // indicator vector; the final state carries no control cost.
  CostFeatures features(const EnvState& s, std::optional<int> action) const override {
    const double control = action && *action != noop ? 1.0 : 0.0;
    return {s[0] * s[0], s[1] * s[1], s[2] * s[2], s[3] * s[3], s[4] * s[4], s[5] * s[5], control};
  }

  bool landed(const EnvState& s) const {
    return s[1] <= 0.0 && std::abs(s[0]) <= p_.land_x && std::abs(s[2]) <= p_.land_vx &&
           std::abs(s[3]) <= p_.land_vy && std::abs(s[4]) <= p_.land_theta;
  }

  // 100 * landed - sum_t (x^2 + vx^2 + vy^2) dt - 0.1 * (thrusting steps)
  double true_return(const Trajectory& traj) const override {
    double cost = 0.0;
    for (const auto& s : traj.states) cost += (s[0] * s[0] + s[2] * s[2] + s[3] * s[3]) * p_.dt;
    int thrusts = 0;
    for (int a : traj.actions) thrusts += a != noop ? 1 : 0;
    const bool ok = !traj.states.empty() && landed(traj.states.back());
    return (ok ? 100.0 : 0.0) - cost - 0.1 * thrusts;
  }

 protected:
  StepResult advance(const EnvState& s, int action, int step_index) const override {
    const double x = s[0], y = s[1], vx = s[2], vy = s[3], theta = s[4], omega = s[5];
    double ax = 0.0, ay = -p_.gravity, alpha = 0.0;
    if (action == main) {
      ax -= p_.main_accel * std::sin(theta);
      ay += p_.main_accel * std::cos(theta);
    } else if (action == left) {
      alpha = p_.side_accel;
    } else if (action == right) {
      alpha = -p_.side_accel;
    }
    StepResult r;
    r.state = {x + p_.dt * vx,  y + p_.dt * vy,        vx + p_.dt * ax,
               vy + p_.dt * ay, theta + p_.dt * omega, omega + p_.dt * alpha};
    const bool touchdown = r.state[1] <= 0.0;
    r.landed = touchdown && landed(r.state);
    r.terminated = touchdown || std::abs(r.state[0]) > p_.x_limit || step_index + 1 >= p_.step_limit;
    return r;
  }

 private:
  LanderParams p_;
};

}  // namespace minsubfi
