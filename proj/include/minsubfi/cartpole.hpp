#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "minsubfi/env.hpp"

namespace minsubfi {

// Cart-pole balancing, explicit Euler integration. Actions: 0 = push left,
// 1 = push right. Return is the number of steps survived.
class CartPole final : public Environment {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kTotalMass = kCartMass + kPoleMass;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kPoleMassLength = kPoleMass * kHalfLength;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kThetaLimit = 12.0 * std::numbers::pi / 180.0;
  static constexpr double kXLimit = 2.4;
  static constexpr int kStepLimit = 200;

  enum Action : int { left = 0, right = 1 };

  EnvId id() const override { return EnvId::cartpole; }
  std::size_t state_dim() const override { return 4; }
  std::size_t num_actions() const override { return 2; }
  std::size_t feature_dim() const override { return 4; }
  int step_limit() const override { return kStepLimit; }

  EnvState initial_state(int /*task_id*/, std::mt19937_64& rng) const override {
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    EnvState s(4);
    for (auto& v : s) v = u(rng);
    return s;
  }

  // (x^2, v^2, theta^2, omega^2)
  CostFeatures features(const EnvState& s, std::optional<int> /*action*/) const override {
    return {s[0] * s[0], s[1] * s[1], s[2] * s[2], s[3] * s[3]};
  }

  double true_return(const Trajectory& traj) const override {
    return static_cast<double>(traj.actions.size());
  }

  static bool out_of_bounds(const EnvState& s) {
    return std::abs(s[0]) > kXLimit || std::abs(s[2]) > kThetaLimit;
  }

 protected:
  StepResult advance(const EnvState& s, int action, int step_index) const override {
    const double x = s[0], v = s[1], theta = s[2], omega = s[3];
    const double force = action == right ? kForce : -kForce;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double temp = (force + kPoleMassLength * omega * omega * sin_t) / kTotalMass;
    const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

    StepResult r;
    r.state = {x + kDt * v, v + kDt * x_acc, theta + kDt * omega, omega + kDt * theta_acc};
    r.terminated = out_of_bounds(r.state) || step_index + 1 >= kStepLimit;
    return r;
  }
};

}  // namespace minsubfi
