#include "sdt/env/behavior.hpp"

#include <algorithm>
#include <cmath>

#include "sdt/common/error.hpp"
#include "sdt/stl/formula.hpp"

namespace sdt::env {

BehaviorMix default_mix(EnvKind kind) {
  if (kind == EnvKind::kRun) {
    return {{0.10, 0.3, 0.1}, {0.20, 0.08, 0.15}, {0.35, -0.05, 0.15}, {0.35, -0.3, 0.2}};
  }
  return {{0.15, 0.25, 0.1}, {0.25, 0.08, 0.15}, {0.35, -0.05, 0.15}, {0.25, -0.25, 0.2}};
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

BehaviorParams sample_behavior(const EnvConfig& config, const MixComponent& component,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  BehaviorParams p;
  p.margin = component.margin + uniform(-0.05, 0.05);
  p.noise = component.noise * uniform(0.5, 1.5);
  p.speed_gain = uniform(1.5, 3.0);
  p.position_gain = uniform(1.0, 2.0);
  p.damping = uniform(1.2, 2.0);
  if (config.kind == EnvKind::kRun) {
    p.speed_setpoint = config.v_lim - p.margin;
    p.lateral_setpoint = uniform(-0.6, 0.6) * config.y_lim;
  } else {
    p.lateral_setpoint = config.x_lim - p.margin;
    p.speed_setpoint = 1.0 - p.margin + uniform(-0.2, 0.2);
  }
  return p;
}

ScriptedController::ScriptedController(const EnvConfig& config, const BehaviorParams& params)
    : config_(config), params_(params) {}

Action ScriptedController::setpoint_action(const EnvState& s) {
  const auto& p = params_;
  if (config_.kind == EnvKind::kRun) {
    return {p.speed_gain * (p.speed_setpoint - s.vx),
            p.position_gain * (p.lateral_setpoint - s.y) - p.damping * s.vy};
  }
  if (config_.kind == EnvKind::kReach && !reached_goal_) {
    const double dx = config_.goal_a[0] - s.x;
    const double dy = config_.goal_a[1] - s.y;
    if (std::max(std::fabs(dx), std::fabs(dy)) < 0.5 * config_.goal_half_width) {
      reached_goal_ = true;
    } else {
      return {p.position_gain * dx - p.damping * s.vx, p.position_gain * dy - p.damping * s.vy};
    }
  }
  // Counterclockwise orbit: tangential speed setpoint plus radial correction.
  const double r = std::max(std::sqrt(s.x * s.x + s.y * s.y), 1e-9);
  const double ux = s.x / r, uy = s.y / r;
  const double radial = p.position_gain * (p.lateral_setpoint - r);
  const double want_vx = -uy * p.speed_setpoint + ux * radial;
  const double want_vy = ux * p.speed_setpoint + uy * radial;
  return {p.speed_gain * (want_vx - s.vx), p.speed_gain * (want_vy - s.vy)};
}

Action ScriptedController::act(const EnvState& state, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rho = params_.noise_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho) * params_.noise;
  Action a = setpoint_action(state);
  for (std::size_t i = 0; i < kActionDim; ++i) {
    noise_[i] = rho * noise_[i] + innovation * gauss(rng);
    a[i] = std::clamp(a[i] + noise_[i], -config_.action_bound, config_.action_bound);
  }
  return a;
}

data::Trajectory make_trajectory(const EnvConfig& config, const std::vector<EnvState>& states,
                                 const std::vector<Action>& actions,
                                 const std::vector<double>& rewards) {
  data::Trajectory t;
  t.schema = state_schema();
  t.action_dim = kActionDim;
  t.states.reserve(states.size() * kStateChannels);
  for (const auto& s : states) {
    const auto obs = observe(s);
    t.states.insert(t.states.end(), obs.begin(), obs.end());
    const auto costs = per_step_costs(config, s);
    t.costs_p.push_back(costs.position);
    if (config.kind == EnvKind::kRun) {
      if (!t.costs_v) t.costs_v.emplace();
      t.costs_v->push_back(costs.velocity);
    }
  }
  for (const auto& a : actions) t.actions.insert(t.actions.end(), a.begin(), a.end());
  t.rewards = rewards;
  t.check();
  return t;
}

data::Trajectory run_behavior(const EnvConfig& config, const BehaviorParams& params,
                              std::mt19937_64& rng) {
  ScriptedController controller(config, params);
  std::vector<EnvState> states;
  std::vector<Action> actions;
  std::vector<double> rewards;
  EnvState s = initial_state(config, rng);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const Action a = controller.act(s, rng);
    const auto result = step(config, s, a);
    states.push_back(s);
    actions.push_back(a);
    rewards.push_back(result.reward);
    s = result.state;
  }
  return make_trajectory(config, states, actions, rewards);
}

data::OfflineDataset generate_dataset(const EnvConfig& config, std::size_t n, const BehaviorMix& mix,
                                      std::uint64_t seed) {
  config.validate();
  if (n == 0) throw UsageError("generate_dataset needs n >= 1");
  if (mix.empty()) throw UsageError("behavior mix is empty");
  double total = 0.0;
  for (const auto& c : mix) {
    if (!(c.fraction >= 0) || !std::isfinite(c.margin) || !(c.noise >= 0)) {
      throw UsageError("behavior mix entries need fraction >= 0, finite margin, noise >= 0");
    }
    total += c.fraction;
  }
  if (!(total > 0)) throw UsageError("behavior mix fractions sum to zero");

  data::OfflineDataset dataset;
  dataset.env = to_string(config.kind);
  dataset.spec = stl::to_string(builtin_spec(config));
  dataset.trajectories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double position = (static_cast<double>(i) + 0.5) / static_cast<double>(n) * total;
    std::size_t k = 0;
    double cumulative = mix[0].fraction;
    while (k + 1 < mix.size() && position >= cumulative) cumulative += mix[++k].fraction;
    auto rng = seeded_rng(seed, i);
    const auto params = sample_behavior(config, mix[k], rng);
    dataset.trajectories.push_back(run_behavior(config, params, rng));
  }
  return dataset;
}

}  // namespace sdt::env
