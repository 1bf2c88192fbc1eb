#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "minsubfi/demos.hpp"

using namespace minsubfi;

namespace {

ActionFn fixed_actions(std::vector<int> seq) {
  auto i = std::make_shared<std::size_t>(0);
  return [seq = std::move(seq), i](const EnvState&, std::mt19937_64&) {
    const int a = seq[*i % seq.size()];
    ++*i;
    return std::pair<int, double>(a, 0.0);
  };
}

}  // namespace

TEST(CartPole, AlternatingForcesSurviveTwoSteps) {
  CartPole env;
  EnvState s{0, 0, 0, 0};
  for (int t = 0; t < 2; ++t) {
    const auto r = env.step(s, t % 2, t);
    EXPECT_FALSE(r.terminated);
    s = r.state;
  }
}

TEST(CartPole, PastAngleLimitTerminatesImmediately) {
  CartPole env;
  const double thirteen = 13.0 * std::numbers::pi / 180.0;
  EXPECT_TRUE(env.step({0, 0, thirteen, 0}, CartPole::left, 0).terminated);
  EXPECT_TRUE(env.step({0, 0, -thirteen, 0}, CartPole::right, 0).terminated);
}

TEST(CartPole, CartLimitTerminates) {
  CartPole env;
  EXPECT_TRUE(env.step({2.5, 0, 0, 0}, CartPole::left, 0).terminated);
}

TEST(CartPole, StepCapGivesReturn200) {
  auto env = make_env(EnvId::cartpole);
  std::mt19937_64 rng(3);
  const auto t = rollout_with(*env, cartpole_demonstrator(0.0), env->feature_map(), rng);
  EXPECT_EQ(t.actions.size(), 200u);
  EXPECT_DOUBLE_EQ(t.true_return, 200.0);
}

TEST(CartPole, Features) {
  CartPole env;
  const auto f = env.features({0.1, -0.2, 0.05, 0.0}, 0);
  ASSERT_EQ(f.size(), 4u);
  EXPECT_DOUBLE_EQ(f[0], 0.01);
  EXPECT_DOUBLE_EQ(f[1], 0.04);
  EXPECT_DOUBLE_EQ(f[2], 0.0025);
  EXPECT_DOUBLE_EQ(f[3], 0.0);
}

TEST(CartPole, RejectsBadActionAndState) {
  CartPole env;
  EXPECT_THROW(env.step({0, 0, 0, 0}, 2, 0), InvalidInput);
  EXPECT_THROW(env.step({0, 0, 0}, 0, 0), InvalidInput);
}

TEST(Lander, FreeFall) {
  Lander env;
  const auto r = env.step({0, 1, 0, 0, 0, 0}, Lander::noop, 0);
  EXPECT_NEAR(r.state[3], -0.08, 1e-15);
  EXPECT_DOUBLE_EQ(r.state[1], 1.0);
  EXPECT_FALSE(r.terminated);
}

TEST(Lander, HoverKeepsHeight) {
  LanderParams p;
  p.main_accel = p.gravity;
  Lander env(p);
  const auto r = env.step({0, 1, 0, 0, 0, 0}, Lander::main, 0);
  EXPECT_DOUBLE_EQ(r.state[1], 1.0);
  EXPECT_DOUBLE_EQ(r.state[3], 0.0);
}

TEST(Lander, SideThrustersTurn) {
  Lander env;
  EXPECT_NEAR(env.step({0, 1, 0, 0, 0, 0}, Lander::left, 0).state[5], 0.05 * 0.05, 1e-15);
  EXPECT_NEAR(env.step({0, 1, 0, 0, 0, 0}, Lander::right, 0).state[5], -0.05 * 0.05, 1e-15);
}

TEST(Lander, GentleTouchdownLands) {
  Lander env;
  const auto r = env.step({0, 0.001, 0, -0.1, 0, 0}, Lander::noop, 0);
  EXPECT_TRUE(r.terminated);
  EXPECT_TRUE(r.landed);
}

TEST(Lander, HardTouchdownCrashes) {
  Lander env;
  const auto r = env.step({0, 0.01, 0, -2.0, 0, 0}, Lander::noop, 0);
  EXPECT_TRUE(r.terminated);
  EXPECT_FALSE(r.landed);
}

TEST(Lander, DriftOutTerminates) {
  Lander env;
  EXPECT_TRUE(env.step({1.99, 1, 1.0, 0, 0, 0}, Lander::noop, 0).terminated);
}

TEST(Lander, ControlCostFeature) {
  Lander env;
  const EnvState s{0.1, 1, 0, 0, 0, 0};
  EXPECT_EQ(env.features(s, Lander::noop)[6], 0.0);
  EXPECT_EQ(env.features(s, Lander::main)[6], 1.0);
  EXPECT_EQ(env.features(s, std::nullopt)[6], 0.0);
  EXPECT_EQ(env.features(s, Lander::noop).size(), 7u);
}

TEST(Lander, UnlandedSingleStateReturnIsNonpositive) {
  Trajectory t;
  t.env_id = EnvId::lander;
  t.states = {{0, 0.5, 0, 0, 0, 0}};
  EXPECT_LE(true_return(EnvId::lander, t), 0.0);
}

TEST(Lander, ControllerLandsWithPositiveReturn) {
  const auto demos = gen_demos(EnvId::lander, 5, 0.0, 11);
  for (const auto& d : demos) EXPECT_GT(d.true_return, 0.0);
}

TEST(Envs, EveryEpisodeTerminatesWithinCap) {
  for (auto id : {EnvId::cartpole, EnvId::lander}) {
    auto env = make_env(id);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
      std::uniform_int_distribution<int> u(0, static_cast<int>(env->num_actions()) - 1);
      ActionFn act = [&u](const EnvState&, std::mt19937_64& r) { return std::pair<int, double>(u(r), 0.0); };
      const auto t = rollout_with(*env, act, env->feature_map(), rng);
      EXPECT_LE(static_cast<int>(t.actions.size()), env->step_limit());
      EXPECT_EQ(t.actions.size() + 1, t.states.size());
      EXPECT_EQ(t.step_features.size(), t.states.size());
    }
  }
}

TEST(Envs, FeaturesNonnegativeAndAdditive) {
  for (auto id : {EnvId::cartpole, EnvId::lander}) {
    for (const auto& d : gen_demos(id, 10, 0.3, 5)) {
      CostFeatures total(d.step_features.front().size(), 0.0);
      for (const auto& f : d.step_features)
        for (std::size_t k = 0; k < f.size(); ++k) {
          EXPECT_GE(f[k], 0.0);
          total[k] += f[k];
        }
      EXPECT_EQ(d.features(), total);
    }
  }
}

TEST(Envs, SameSeedAndActionsGiveSameTrajectory) {
  for (auto id : {EnvId::cartpole, EnvId::lander}) {
    auto env = make_env(id);
    std::mt19937_64 r1(9), r2(9);
    const auto a = rollout_with(*env, fixed_actions({0, 1, 1, 0}), env->feature_map(), r1);
    const auto b = rollout_with(*env, fixed_actions({0, 1, 1, 0}), env->feature_map(), r2);
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.step_features, b.step_features);
  }
}

TEST(Envs, UnknownIdRejected) { EXPECT_THROW(parse_env_id("mountaincar"), InvalidInput); }

TEST(Padding, AppendsPadFeatures) {
  Trajectory t;
  t.step_features = {{1}, {2}, {3}};
  const auto p = pad_trajectory(t, PaddingConfig{5, {10}});
  ASSERT_EQ(p.step_features.size(), 5u);
  EXPECT_EQ(p.step_features[3], CostFeatures{10});
  EXPECT_EQ(p.step_features[4], CostFeatures{10});
  EXPECT_DOUBLE_EQ(p.features()[0], t.features()[0] + 20.0);
}

TEST(Padding, FullLengthUnchanged) {
  Trajectory t;
  t.step_features = {{1}, {2}, {3}, {4}, {5}};
  EXPECT_EQ(pad_trajectory(t, PaddingConfig{5, {10}}).step_features, t.step_features);
}

TEST(Padding, ZeroPadKeepsTotals) {
  Trajectory t;
  t.states = {{0}, {0}};
  t.actions = {0};
  t.step_features = {{1, 2}, {3, 4}};
  const auto p = pad_trajectory(t, PaddingConfig{7, {0, 0}});
  EXPECT_EQ(p.step_features.size(), 7u);
  EXPECT_EQ(p.features(), t.features());
  EXPECT_EQ(p.states, t.states);
  EXPECT_EQ(p.actions, t.actions);
}

TEST(Padding, NegativePadRejected) {
  Trajectory t;
  t.step_features = {{1}};
  EXPECT_THROW(pad_trajectory(t, PaddingConfig{3, {-1}}), InvalidInput);
}

TEST(Padding, DefaultIsUpperQuantile) {
  DemoSet demos(1);
  for (int i = 0; i <= 100; ++i) demos[0].step_features.push_back({double(i)});
  const auto p = default_padding(demos);
  EXPECT_EQ(p.horizon, 200u);
  EXPECT_DOUBLE_EQ(p.pad_features[0], 95.0);
}

TEST(GenDemos, NoiselessCartpoleAlwaysSurvives) {
  for (const auto& d : gen_demos(EnvId::cartpole, 20, 0.0, 1)) EXPECT_DOUBLE_EQ(d.true_return, 200.0);
}

TEST(GenDemos, RandomActionsFallEarly) {
  // Flipping half the time makes every action a fair coin.
  double mean = 0.0;
  const auto demos = gen_demos(EnvId::cartpole, 50, 0.5, 2);
  for (const auto& d : demos) mean += d.true_return / 50.0;
  EXPECT_LT(mean, 60.0);
}

TEST(GenDemos, NoiseSpreadsQuality) {
  for (auto id : {EnvId::cartpole, EnvId::lander}) {
    const auto demos = gen_demos(id, 30, 0.3, 3);
    double m = 0.0, sq = 0.0;
    for (const auto& d : demos) m += d.true_return / 30.0;
    for (const auto& d : demos) sq += (d.true_return - m) * (d.true_return - m);
    EXPECT_GT(sq, 0.0) << to_string(id);
  }
}

TEST(GenDemos, Deterministic) {
  for (auto id : {EnvId::cartpole, EnvId::lander})
    EXPECT_EQ(demos_to_jsonl(gen_demos(id, 8, 0.3, 42)), demos_to_jsonl(gen_demos(id, 8, 0.3, 42)));
  EXPECT_NE(demos_to_jsonl(gen_demos(EnvId::cartpole, 8, 0.3, 42)),
            demos_to_jsonl(gen_demos(EnvId::cartpole, 8, 0.3, 43)));
}

TEST(GenDemos, TasksAssignedRoundRobin) {
  const auto demos = gen_demos(EnvId::lander, 6, 0.1, 4, DemoGenOptions{3});
  for (std::size_t j = 0; j < demos.size(); ++j) EXPECT_EQ(demos[j].task_id, static_cast<int>(j % 3));
}

TEST(GenDemos, RejectsBadArguments) {
  EXPECT_THROW(gen_demos(EnvId::cartpole, 0, 0.1, 1), InvalidInput);
  EXPECT_THROW(gen_demos(EnvId::cartpole, 3, -0.1, 1), InvalidInput);
}

TEST(DemoFiles, JsonlRoundTrip) {
  const auto demos = gen_demos(EnvId::lander, 4, 0.2, 7, DemoGenOptions{2});
  const std::string text = demos_to_jsonl(demos);
  std::istringstream in(text);
  const auto back = demos_from_jsonl(in);
  ASSERT_EQ(back.size(), demos.size());
  for (std::size_t j = 0; j < demos.size(); ++j) {
    EXPECT_EQ(back[j].states, demos[j].states);
    EXPECT_EQ(back[j].actions, demos[j].actions);
    EXPECT_EQ(back[j].step_features, demos[j].step_features);
    EXPECT_EQ(back[j].true_return, demos[j].true_return);
    EXPECT_EQ(back[j].task_id, demos[j].task_id);
    EXPECT_EQ(back[j].seed, demos[j].seed);
    EXPECT_EQ(back[j].env_id, demos[j].env_id);
  }
  EXPECT_EQ(demos_to_jsonl(back), text);
}

TEST(DemoFiles, MalformedRecordsRejected) {
  std::istringstream bad_json("{not json}\n");
  EXPECT_THROW(demos_from_jsonl(bad_json), InvalidInput);
  std::istringstream missing(R"({"task_id":0})" "\n");
  EXPECT_THROW(demos_from_jsonl(missing), InvalidInput);
  std::istringstream lengths(
      R"({"task_id":0,"states":[[0,0,0,0]],"actions":[1],"step_features":[[0,0,0,0]],"true_return":1,"env_id":"cartpole","seed":1})"
      "\n");
  EXPECT_THROW(demos_from_jsonl(lengths), InvalidInput);
  EXPECT_THROW(load_demos("/nonexistent/x.demos.jsonl"), InvalidInput);
}
