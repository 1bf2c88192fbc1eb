#pragma once

// Subdominance policy-gradient training: online rollouts, restart-from-demo
// snippets, and offline importance-weighted updates over the demonstrations
// themselves, plus the orchestration that chains initialization phases.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "minsubfi/alpha_opt.hpp"
#include "minsubfi/demos.hpp"
#include "minsubfi/env.hpp"
#include "minsubfi/errors.hpp"
#include "minsubfi/policy.hpp"
#include "minsubfi/seeds.hpp"
#include "minsubfi/subdominance.hpp"

namespace minsubfi {

enum class Variant { online, snippet, snippet_opt, offline };
enum class BaselineKind { none, mean };
enum class ReturnMode { per_state, sparse_terminal };
enum class InitKind { random, bc, offline_minsubfi };
enum class AlphaMethod { analytic, eg, fixed };
enum class OptimizerKind { sgd, adam };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::online: return "online";
    case Variant::snippet: return "snippet";
    case Variant::snippet_opt: return "snippet_opt";
    case Variant::offline: return "offline";
  }
  return "?";
}
inline const char* to_string(InitKind v) {
  switch (v) {
    case InitKind::random: return "random";
    case InitKind::bc: return "bc";
    case InitKind::offline_minsubfi: return "offline_minsubfi";
  }
  return "?";
}
inline const char* to_string(ReturnMode m) { return m == ReturnMode::per_state ? "per_state" : "sparse_terminal"; }
inline const char* to_string(BaselineKind b) { return b == BaselineKind::none ? "none" : "mean"; }
inline const char* to_string(AlphaMethod a) {
  return a == AlphaMethod::analytic ? "analytic" : a == AlphaMethod::eg ? "eg" : "fixed";
}
inline const char* to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "online") return Variant::online;
  if (s == "snippet") return Variant::snippet;
  if (s == "snippet_opt") return Variant::snippet_opt;
  if (s == "offline") return Variant::offline;
  throw InvalidInput("unknown variant '" + s + "'");
}
inline InitKind parse_init(const std::string& s) {
  if (s == "random") return InitKind::random;
  if (s == "bc") return InitKind::bc;
  if (s == "offline_minsubfi") return InitKind::offline_minsubfi;
  throw InvalidInput("unknown init '" + s + "'");
}
inline ReturnMode parse_return_mode(const std::string& s) {
  if (s == "per_state") return ReturnMode::per_state;
  if (s == "sparse_terminal") return ReturnMode::sparse_terminal;
  throw InvalidInput("unknown return mode '" + s + "'");
}
inline BaselineKind parse_baseline(const std::string& s) {
  if (s == "none") return BaselineKind::none;
  if (s == "mean") return BaselineKind::mean;
  throw InvalidInput("unknown baseline '" + s + "'");
}
inline AlphaMethod parse_alpha_method(const std::string& s) {
  if (s == "analytic") return AlphaMethod::analytic;
  if (s == "eg") return AlphaMethod::eg;
  if (s == "fixed") return AlphaMethod::fixed;
  throw InvalidInput("unknown alpha method '" + s + "'");
}
inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw InvalidInput("unknown optimizer '" + s + "'");
}

struct TrainConfig {
  Variant variant = Variant::online;
  int rollouts_per_update = 8;  // M
  double learning_rate = 1e-2;  // eta
  BaselineKind baseline = BaselineKind::mean;
  ReturnMode return_mode = ReturnMode::sparse_terminal;
  double snippet_fraction = 0.2;
  int snippet_count = 4;  // N
  int updates = 200;
  std::uint64_t seed = 0;
  double lambda_theta = 0.0;
  InitKind init = InitKind::random;

  AlphaMethod alpha_method = AlphaMethod::analytic;
  AlphaUpdateConfig alpha;
  int alpha_warmup = 10;  // updates without slope re-optimization after random init
  SubdomConfig subdom;

  OptimizerKind optimizer = OptimizerKind::sgd;
  bool normalize_advantages = true;
  double max_grad_norm = 0.0;  // 0 disables clipping

  std::vector<std::size_t> hidden{32};
  int bc_epochs = 30;
  double bc_learning_rate = 0.1;
  int offline_passes = 5;
  double offline_learning_rate = 3e-3;
  double log_ratio_clip = 10.0;

  void validate() const {
    if (rollouts_per_update < 1) throw InvalidInput("rollouts per update must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
    if (snippet_fraction < 0.10 || snippet_fraction > 0.25)
      throw InvalidInput("snippet fraction must lie in [0.10, 0.25]");
    if (snippet_count < 1) throw InvalidInput("snippet count must be >= 1");
    if (updates < 0) throw InvalidInput("updates must be >= 0");
    if (lambda_theta < 0.0) throw InvalidInput("lambda_theta must be nonnegative");
    if (bc_epochs < 0 || offline_passes < 0) throw InvalidInput("epoch counts must be >= 0");
    alpha.validate();
  }
};

// Environment, demonstrations and the feature pipeline shared by all updates.
// Demonstration step features must already be expressed in `features`.
struct LearningProblem {
  Environment* env = nullptr;  // unused by offline updates
  const DemoSet* demos = nullptr;
  FeatureMap features;
  std::optional<PaddingConfig> padding;
  CostFeatures snippet_pad;  // fills snippets cut short by termination

  std::vector<CostFeatures> steps_of(const Trajectory& t) const {
    return padding ? padded_steps(t.step_features, *padding) : t.step_features;
  }
};

// Per-task demonstration totals after padding.
struct DemoIndex {
  std::map<int, std::vector<std::size_t>> members;
  std::map<int, std::vector<CostFeatures>> totals;
  std::vector<CostFeatures> demo_totals;  // indexed like the demo set
  std::size_t total = 0;

  explicit DemoIndex(const LearningProblem& problem) {
    if (!problem.demos || problem.demos->empty()) throw InvalidInput("no demonstrations");
    const DemoSet& demos = *problem.demos;
    total = demos.size();
    for (const auto& d : demos) demo_totals.push_back(feature_total(problem.steps_of(d)));
    members = tasks_of(demos);
    for (const auto& [task, idx] : members)
      for (std::size_t j : idx) totals[task].push_back(demo_totals[j]);
  }

  // Totals of the other demonstrations in demo j's task.
  std::vector<CostFeatures> others(const DemoSet& demos, std::size_t j) const {
    std::vector<CostFeatures> out;
    for (std::size_t i : members.at(demos[j].task_id))
      if (i != j) out.push_back(demo_totals[i]);
    return out;
  }

  double weight(int task) const {
    return static_cast<double>(members.at(task).size()) / static_cast<double>(total);
  }
};

struct UpdateMetrics {
  double mean_subdom = 0.0;
  double support_fraction = 0.0;
  double mean_true_return = 0.0;
  std::uint64_t env_steps = 0;  // transitions taken during this update
  int skipped_tasks = 0;
};

struct LearnerState {
  PolicyParams params;
  HingeSlopes slopes;
  AdamState optimizer;
  std::mt19937_64 rng;
  int updates_done = 0;
  bool random_init = false;
};

namespace detail {

// theta <- theta + eta * step(direction) - eta * lambda_theta * theta
inline void apply_update(LearnerState& st, std::vector<double> direction, double lr, const TrainConfig& cfg) {
  auto& w = st.params.weights;
  if (cfg.max_grad_norm > 0.0) {
    double norm = 0.0;
    for (double g : direction) norm += g * g;
    norm = std::sqrt(norm);
    if (norm > cfg.max_grad_norm)
      for (auto& g : direction) g *= cfg.max_grad_norm / norm;
  }
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += lr * direction[i] - lr * cfg.lambda_theta * w[i];
  } else {
    st.optimizer.ascend(w, direction, lr, cfg.lambda_theta);
  }
  for (double x : w)
    if (!std::isfinite(x)) throw NumericalFailure("policy parameters became non-finite");
}

// Leave-one-out means of `values`; the baseline for sample m uses the
// other samples only, so it is independent of sample m.
inline std::vector<double> loo_baselines(const std::vector<double>& values, BaselineKind kind) {
  std::vector<double> b(values.size(), 0.0);
  if (kind == BaselineKind::none || values.size() < 2) return b;
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  const double n = static_cast<double>(values.size() - 1);
  for (std::size_t i = 0; i < values.size(); ++i) b[i] = (sum - values[i]) / n;
  return b;
}

// Divides by the root mean square so the step size does not depend on
// the scale of the slopes.
inline void normalize_scale(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double rms = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(v.size(), 1)));
  if (rms > 0.0)
    for (auto& x : v) x /= rms;
}

inline double geometric_mean_into(std::vector<double>& log_acc, const HingeSlopes& a, std::size_t count) {
  if (log_acc.empty()) log_acc.assign(a.size(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) log_acc[k] += std::log(a[k]);
  return static_cast<double>(count);
}

}  // namespace detail

// Per-step rewards whose sum is the negated trajectory subdominance: either
// the negated per-state contributions or a single terminal cost.
inline std::vector<double> step_rewards(const std::vector<CostFeatures>& steps, std::span<const CostFeatures> demos,
                                        const HingeSlopes& slopes, SubdomConfig cfg, ReturnMode mode) {
  std::vector<double> r(steps.size(), 0.0);
  if (mode == ReturnMode::per_state) {
    const auto c = decompose_per_state(steps, demos, slopes, cfg);
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = -c[t];
  } else {
    r.back() = -subdom_vs_set(feature_total(steps), demos, slopes, cfg).value;
  }
  return r;
}

// G_t = sum_{t' >= t} r_t'
inline std::vector<double> returns_to_go(const std::vector<double>& rewards) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) g[t] = (acc += rewards[t]);
  return g;
}

// Slopes used for one rollout with total features f against a task's demos.
inline HingeSlopes choose_slopes(const LearnerState& st, std::span<const double> f, std::span<const CostFeatures> demos,
                                 const TrainConfig& cfg, HingeSlopes& running) {
  const bool warmup = st.random_init && st.updates_done < cfg.alpha_warmup;
  if (warmup || cfg.alpha_method == AlphaMethod::fixed) return running;
  if (cfg.alpha_method == AlphaMethod::eg) {
    running = alpha_eg_update(running, f, demos, cfg.alpha, cfg.subdom);
    return running;
  }
  if (cfg.subdom.aggregation == Aggregation::max) {
    running = alpha_eg_update(running, f, demos, cfg.alpha, cfg.subdom);
    return running;
  }
  return alpha_analytic_all(f, demos, cfg.alpha, cfg.subdom.mode);
}

// One online update: M rollouts per task, slopes per rollout, and
//   theta <- theta + eta sum_i w_i (1/M) sum_m sum_t (G_t - b) grad log pi(a_t|s_t)
// with w_i = |task i demos| / |demos|.
inline UpdateMetrics online_update(LearnerState& st, const LearningProblem& problem, const DemoIndex& index,
                                   const TrainConfig& cfg) {
  if (!problem.env) throw InvalidInput("online update needs an environment");
  Environment& env = *problem.env;
  const auto before = env.transitions();
  UpdateMetrics metrics;
  std::vector<double> direction(st.params.weights.size(), 0.0);
  HingeSlopes running = st.slopes;
  std::vector<double> log_alpha;
  std::size_t alpha_count = 0;
  std::size_t total_rollouts = 0;

  for (const auto& [task, demo_totals] : index.totals) {
    if (demo_totals.empty()) {
      ++metrics.skipped_tasks;
      continue;
    }
    const double w = index.weight(task);
    const int M = cfg.rollouts_per_update;
    std::vector<Trajectory> trajs;
    std::vector<std::vector<double>> returns;
    std::vector<double> totals;
    for (int m = 0; m < M; ++m) {
      RolloutOptions ro;
      ro.task_id = task;
      Trajectory traj = rollout(st.params, env, st.rng, ro, problem.features);
      const auto steps = problem.steps_of(traj);
      const CostFeatures f = feature_total(steps);
      const HingeSlopes a = choose_slopes(st, f, demo_totals, cfg, running);
      detail::geometric_mean_into(log_alpha, a, ++alpha_count);
      const auto res = subdom_vs_set(f, demo_totals, a, cfg.subdom);
      metrics.mean_subdom += res.value;
      metrics.support_fraction += static_cast<double>(res.support.union_size()) / static_cast<double>(demo_totals.size());
      metrics.mean_true_return += traj.true_return;
      ++total_rollouts;
      auto g = returns_to_go(step_rewards(steps, demo_totals, a, cfg.subdom, cfg.return_mode));
      totals.push_back(g.front());
      returns.push_back(std::move(g));
      trajs.push_back(std::move(traj));
    }
    const auto base = detail::loo_baselines(totals, cfg.baseline);
    for (int m = 0; m < M; ++m) {
      const auto& traj = trajs[static_cast<std::size_t>(m)];
      const auto& g = returns[static_cast<std::size_t>(m)];
      for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        const double coeff = w * (g[t] - base[static_cast<std::size_t>(m)]) / M;
        if (coeff != 0.0) accumulate_grad_log_prob(st.params, traj.states[t], traj.actions[t], coeff, direction);
      }
    }
  }

  detail::apply_update(st, std::move(direction), cfg.learning_rate, cfg);
  if (alpha_count > 0 && cfg.alpha_method == AlphaMethod::analytic && cfg.subdom.aggregation == Aggregation::sum &&
      !(st.random_init && st.updates_done < cfg.alpha_warmup)) {
    std::vector<double> a(log_alpha.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::exp(log_alpha[k] / static_cast<double>(alpha_count));
    st.slopes = HingeSlopes(std::move(a), st.slopes.lambda_alpha);
  } else {
    st.slopes = running;
  }
  ++st.updates_done;
  if (total_rollouts > 0) {
    const double n = static_cast<double>(total_rollouts);
    metrics.mean_subdom /= n;
    metrics.support_fraction /= n;
    metrics.mean_true_return /= n;
  }
  metrics.env_steps = env.transitions() - before;
  if (!std::isfinite(metrics.mean_subdom)) throw NumericalFailure("non-finite subdominance");
  return metrics;
}

// Snippet horizon: fraction of the episode limit, rounded up to a multiple of N.
inline std::size_t snippet_horizon(int step_limit, double fraction, int n_snippets) {
  const auto n = static_cast<std::size_t>(n_snippets);
  auto T = static_cast<std::size_t>(std::ceil(fraction * step_limit));
  T = std::max(T, n);
  return (T + n - 1) / n * n;
}

// Legal restart indices 0 < t < |states| - 1; the final state is absorbing.
inline std::pair<std::size_t, std::size_t> restart_range(const Trajectory& demo) {
  if (demo.states.size() < 3) return {1, 0};
  return {1, demo.states.size() - 2};
}

// One snippet update: M restarts from interior demonstration states.
inline UpdateMetrics snippet_update(LearnerState& st, const LearningProblem& problem, const DemoIndex& index,
                                    const TrainConfig& cfg) {
  if (!problem.env) throw InvalidInput("snippet update needs an environment");
  Environment& env = *problem.env;
  const DemoSet& demos = *problem.demos;
  const auto before = env.transitions();
  const std::size_t T = snippet_horizon(env.step_limit(), cfg.snippet_fraction, cfg.snippet_count);
  const CostFeatures pad = problem.snippet_pad.empty() ? CostFeatures(index.demo_totals.front().size(), 0.0)
                                                       : problem.snippet_pad;
  auto fill = [&](std::vector<CostFeatures> steps) {
    if (steps.size() > T) steps.resize(T);
    while (steps.size() < T) steps.push_back(pad);
    return steps;
  };

  UpdateMetrics metrics;
  std::vector<double> direction(st.params.weights.size(), 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, demos.size() - 1);
  std::vector<Trajectory> trajs;
  std::vector<std::size_t> lengths;
  std::vector<double> values;

  for (int m = 0; m < cfg.rollouts_per_update; ++m) {
    std::size_t j = pick(st.rng);
    for (int tries = 0; demos[j].states.size() < 3 && tries < 100; ++tries) j = pick(st.rng);
    if (demos[j].states.size() < 3) {
      ++metrics.skipped_tasks;
      continue;
    }
    const auto [lo, hi] = restart_range(demos[j]);
    const std::size_t t0 = std::uniform_int_distribution<std::size_t>(lo, hi)(st.rng);

    RolloutOptions ro;
    ro.task_id = demos[j].task_id;
    ro.start_state = demos[j].states[t0];
    ro.max_steps = static_cast<int>(T);
    ro.start_step_index = static_cast<int>(t0);
    Trajectory traj = rollout(st.params, env, st.rng, ro, problem.features);

    const auto imit_steps = fill(traj.step_features);
    std::vector<CostFeatures> demo_tail(demos[j].step_features.begin() + static_cast<std::ptrdiff_t>(t0),
                                        demos[j].step_features.end());
    const auto demo_steps = fill(std::move(demo_tail));

    SnippetSelection sel = snippet_subdom(imit_steps, demo_steps, st.slopes, static_cast<std::size_t>(cfg.snippet_count),
                                          cfg.subdom);
    double value = sel.value;
    if (cfg.variant == Variant::snippet_opt) {
      const CostFeatures fi = feature_total(std::span(imit_steps).subspan(0, sel.imitator_length));
      const std::vector<CostFeatures> fd{feature_total(std::span(demo_steps).subspan(0, sel.demo_length))};
      const HingeSlopes a = alpha_analytic_all(fi, fd, cfg.alpha, cfg.subdom.mode);
      value = subdom_pair(fi, fd.front(), a, cfg.subdom);
    }
    metrics.mean_subdom += value;
    metrics.support_fraction += value > 0.0 ? 1.0 : 0.0;
    metrics.mean_true_return += traj.true_return;
    values.push_back(-value);
    lengths.push_back(std::min(sel.imitator_length, traj.actions.size()));
    trajs.push_back(std::move(traj));
  }

  const auto base = detail::loo_baselines(values, cfg.baseline);
  const double M = static_cast<double>(std::max<std::size_t>(trajs.size(), 1));
  for (std::size_t m = 0; m < trajs.size(); ++m) {
    const double coeff = (values[m] - base[m]) / M;
    if (coeff == 0.0) continue;
    for (std::size_t t = 0; t < lengths[m]; ++t)
      accumulate_grad_log_prob(st.params, trajs[m].states[t], trajs[m].actions[t], coeff, direction);
  }
  detail::apply_update(st, std::move(direction), cfg.learning_rate, cfg);
  ++st.updates_done;
  if (!trajs.empty()) {
    metrics.mean_subdom /= M;
    metrics.support_fraction /= M;
    metrics.mean_true_return /= M;
  }
  metrics.env_steps = env.transitions() - before;
  return metrics;
}

inline double clipped_importance_ratio(const PolicyParams& params, const PolicyParams& reference,
                                       const Trajectory& demo, double log_clip) {
  const double log_ratio = traj_log_prob(params, demo) - traj_log_prob(reference, demo);
  return std::exp(std::clamp(log_ratio, -log_clip, log_clip));
}

// Self-normalized importance-weighted subdominance of the training
// demonstrations under `params` (reference policy `reference`). Each
// demonstration is compared with the rest of its task.
inline double offline_objective(const PolicyParams& params, const PolicyParams& reference,
                                const LearningProblem& problem, const DemoIndex& index, const HingeSlopes& slopes,
                                SubdomConfig subdom = {}, double log_clip = 10.0) {
  const DemoSet& demos = *problem.demos;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < demos.size(); ++j) {
    const auto others = index.others(demos, j);
    const double r = clipped_importance_ratio(params, reference, demos[j], log_clip);
    const double s = others.empty() ? 0.0 : subdom_vs_set(index.demo_totals[j], others, slopes, subdom).value;
    num += r * s;
    den += r;
  }
  return num / den;
}

// One pass over the demonstrations, each treated as a rollout and compared
// with the other demonstrations of its task. Slopes take
// one importance-weighted multiplicative step per demonstration, then the
// policy takes a single step along
//   -(1/N) sum_j w_j (subdom_j - b_j) sum_t grad log pi(a_t|s_t)
// where w_j is the clipped likelihood ratio against the reference policy,
// divided by the mean ratio, and b_j the leave-one-out task mean.
// No environment transitions happen here.
inline UpdateMetrics offline_update(LearnerState& st, const LearningProblem& problem, const DemoIndex& index,
                                    const PolicyParams& reference, const TrainConfig& cfg) {
  const DemoSet& demos = *problem.demos;
  const std::size_t N = demos.size();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), st.rng);

  std::vector<double> ratio(N);
  for (std::size_t j = 0; j < N; ++j)
    ratio[j] = clipped_importance_ratio(st.params, reference, demos[j], cfg.log_ratio_clip);
  const double mean_ratio = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(N);

  const bool update_alpha =
      !(st.random_init && st.updates_done < cfg.alpha_warmup) && cfg.alpha_method != AlphaMethod::fixed;
  std::vector<std::vector<CostFeatures>> others(N);
  for (std::size_t j = 0; j < N; ++j) others[j] = index.others(demos, j);
  if (update_alpha)
    for (std::size_t j : order)
      if (!others[j].empty())
        st.slopes = alpha_offline_update(st.slopes, index.demo_totals[j], others[j], ratio[j], cfg.alpha, cfg.subdom);

  UpdateMetrics metrics;
  std::vector<double> subdom(N, 0.0), support(N, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    if (others[j].empty()) continue;
    const auto res = subdom_vs_set(index.demo_totals[j], others[j], st.slopes, cfg.subdom);
    subdom[j] = res.value;
    support[j] = static_cast<double>(res.support.union_size()) / static_cast<double>(others[j].size());
  }
  std::vector<double> advantage(N, 0.0);
  for (const auto& [task, members] : index.members) {
    std::vector<double> s;
    for (std::size_t j : members) s.push_back(subdom[j]);
    const auto base = detail::loo_baselines(s, cfg.baseline);
    for (std::size_t i = 0; i < members.size(); ++i) advantage[members[i]] = s[i] - base[i];
  }
  if (cfg.normalize_advantages) detail::normalize_scale(advantage);

  std::vector<double> direction(st.params.weights.size(), 0.0);
  for (std::size_t j : order) {
    const double w = ratio[j] / mean_ratio;
    const double coeff = -w * advantage[j] / static_cast<double>(N);
    if (coeff != 0.0)
      for (std::size_t t = 0; t < demos[j].actions.size(); ++t)
        accumulate_grad_log_prob(st.params, demos[j].states[t], demos[j].actions[t], coeff, direction);
    metrics.mean_subdom += w * subdom[j] / static_cast<double>(N);
    metrics.support_fraction += w * support[j] / static_cast<double>(N);
    metrics.mean_true_return += w * demos[j].true_return / static_cast<double>(N);
  }
  detail::apply_update(st, std::move(direction), cfg.offline_learning_rate, cfg);
  ++st.updates_done;
  metrics.env_steps = 0;
  if (!std::isfinite(metrics.mean_subdom)) throw NumericalFailure("non-finite offline subdominance");
  return metrics;
}

// ---------------------------------------------------------------- orchestration

struct TrainLogRow {
  int update = 0;
  std::string variant;
  double mean_subdom = 0.0;
  double support_fraction = 0.0;
  double mean_true_return = 0.0;
  std::uint64_t env_steps = 0;  // cumulative
  double wall_ms = 0.0;
};

struct TrainResult {
  PolicyParams params;
  HingeSlopes slopes;
  std::optional<PolicyParams> bc_params;
  std::vector<TrainLogRow> log;
};

inline constexpr const char* kPretrainMarker = "offline_pretrain";

inline PolicyParams behavior_clone(const LearningProblem& problem, const Architecture& arch, const TrainConfig& cfg) {
  return bc_train(*problem.demos, init_policy(arch, derive_seed(cfg.seed, SeedStream::init)), cfg.bc_epochs,
                  cfg.bc_learning_rate, derive_seed(cfg.seed, SeedStream::bc))
      .params;
}

// Initialization (random, behavior cloning, or behavior cloning followed by
// offline subdominance passes) and then cfg.updates updates of the variant.
inline TrainResult train(const LearningProblem& problem, const TrainConfig& cfg, std::size_t state_dim,
                         std::size_t num_actions) {
  cfg.validate();
  if (!problem.demos || problem.demos->empty()) throw InvalidInput("train: no demonstrations");
  const DemoIndex index(problem);
  const Architecture arch{state_dim, cfg.hidden, num_actions};
  const std::size_t K = index.demo_totals.front().size();

  TrainResult result;
  LearnerState st;
  st.rng.seed(derive_seed(cfg.seed, SeedStream::train));
  st.slopes = HingeSlopes::ones(K, cfg.alpha.lambda);
  const auto env_start = problem.env ? problem.env->transitions() : 0;
  auto env_steps = [&] { return problem.env ? problem.env->transitions() - env_start : 0; };

  const bool needs_bc = cfg.init != InitKind::random || cfg.variant == Variant::offline;
  if (needs_bc) result.bc_params = behavior_clone(problem, arch, cfg);

  if (cfg.init == InitKind::random) {
    st.params = init_policy(arch, derive_seed(cfg.seed, SeedStream::init));
    st.random_init = true;
  } else {
    st.params = *result.bc_params;
  }

  if (cfg.init == InitKind::offline_minsubfi) {
    const auto t0 = std::chrono::steady_clock::now();
    LearnerState pre;
    pre.params = st.params;
    pre.slopes = st.slopes;
    pre.rng.seed(derive_seed(cfg.seed, SeedStream::offline));
    UpdateMetrics m;
    for (int p = 0; p < cfg.offline_passes; ++p) m = offline_update(pre, problem, index, *result.bc_params, cfg);
    st.params = pre.params;
    st.slopes = pre.slopes;
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back({0, kPretrainMarker, m.mean_subdom, m.support_fraction, m.mean_true_return, env_steps(), ms});
  }

  for (int u = 1; u <= cfg.updates; ++u) {
    const auto t0 = std::chrono::steady_clock::now();
    UpdateMetrics m;
    switch (cfg.variant) {
      case Variant::online: m = online_update(st, problem, index, cfg); break;
      case Variant::snippet:
      case Variant::snippet_opt: m = snippet_update(st, problem, index, cfg); break;
      case Variant::offline: m = offline_update(st, problem, index, *result.bc_params, cfg); break;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back({u, to_string(cfg.variant), m.mean_subdom, m.support_fraction, m.mean_true_return,
                          env_steps(), ms});
  }
  st.params.validate();
  result.params = std::move(st.params);
  result.slopes = std::move(st.slopes);
  return result;
}

inline constexpr const char* kTrainLogHeader =
    "update,variant,mean_subdom,support_fraction,mean_true_return,env_steps,wall_ms";

inline std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream os;
  os.precision(10);
  os << kTrainLogHeader << '\n';
  for (const auto& r : log)
    os << r.update << ',' << r.variant << ',' << r.mean_subdom << ',' << r.support_fraction << ','
       << r.mean_true_return << ',' << r.env_steps << ',' << r.wall_ms << '\n';
  return os.str();
}

}  // namespace minsubfi
