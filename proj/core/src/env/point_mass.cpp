#include "sdt/env/point_mass.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "sdt/common/error.hpp"

namespace sdt::env {

using nlohmann::json;

void EnvConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid env config: " + what);
  };
  require(std::isfinite(dt) && dt > 0, "dt must be > 0");
  require(horizon >= 10, "horizon must be >= 10");
  require(std::isfinite(action_bound) && action_bound > 0, "action_bound must be > 0");
  require(y_lim > 0 && x_lim > 0 && v_lim > 0, "limits must be > 0");
  require(radius > 0, "radius must be > 0");
  require(goal_half_width > 0, "goal_half_width must be > 0");
  for (const auto& g : {goal_a, goal_b}) {
    require(std::fabs(g[0]) + goal_half_width < x_lim && std::fabs(g[1]) + goal_half_width < y_lim,
            "goals must lie inside the safe region");
  }
}

std::string to_json(const EnvConfig& c) {
  json j{{"kind", to_string(c.kind)},
         {"dt", c.dt},
         {"action_bound", c.action_bound},
         {"horizon", c.horizon},
         {"y_lim", c.y_lim},
         {"x_lim", c.x_lim},
         {"v_lim", c.v_lim},
         {"radius", c.radius},
         {"goal_a", c.goal_a},
         {"goal_b", c.goal_b},
         {"goal_half_width", c.goal_half_width},
         {"seed", c.seed}};
  return j.dump();
}

EnvConfig env_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("env config is not valid JSON: ") + e.what());
  }
  EnvConfig c;
  if (j.contains("kind")) c.kind = parse_env_kind(j.at("kind").get<std::string>());
  try {
    c.dt = j.value("dt", c.dt);
    c.action_bound = j.value("action_bound", c.action_bound);
    c.horizon = j.value("horizon", c.horizon);
    c.y_lim = j.value("y_lim", c.y_lim);
    c.x_lim = j.value("x_lim", c.x_lim);
    c.v_lim = j.value("v_lim", c.v_lim);
    c.radius = j.value("radius", c.radius);
    c.goal_a = j.value("goal_a", c.goal_a);
    c.goal_b = j.value("goal_b", c.goal_b);
    c.goal_half_width = j.value("goal_half_width", c.goal_half_width);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw UsageError(std::string("env config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

EnvConfig default_config(EnvKind kind) {
  EnvConfig c;
  c.kind = kind;
  return c;
}

double EnvState::speed() const { return std::sqrt(vx * vx + vy * vy); }

const std::vector<std::string>& state_schema() {
  static const std::vector<std::string> kSchema{"x", "y", "vx", "vy", "speed", "abs_x", "abs_y"};
  return kSchema;
}

std::array<double, kStateChannels> observe(const EnvState& s) {
  return {s.x, s.y, s.vx, s.vy, s.speed(), std::fabs(s.x), std::fabs(s.y)};
}

StepResult step(const EnvConfig& config, const EnvState& state, Action action) {
  for (auto& a : action) {
    a = std::isnan(a) ? 0.0 : std::clamp(a, -config.action_bound, config.action_bound);
  }
  StepResult out;
  EnvState& s = out.state;
  s.vx = state.vx + action[0] * config.dt;
  s.vy = state.vy + action[1] * config.dt;
  s.x = state.x + s.vx * config.dt;
  s.y = state.y + s.vy * config.dt;
  if (config.kind == EnvKind::kRun) {
    out.reward = s.vx;
  } else {
    const double r = std::sqrt(s.x * s.x + s.y * s.y);
    out.reward = (-s.y * s.vx + s.x * s.vy) / (1.0 + std::fabs(r - config.radius));
  }
  return out;
}

StepCosts per_step_costs(const EnvConfig& config, const EnvState& state) {
  if (config.kind == EnvKind::kRun) {
    return {std::fabs(state.y) > config.y_lim ? 1.0 : 0.0, state.speed() > config.v_lim ? 1.0 : 0.0};
  }
  return {std::fabs(state.x) > config.x_lim ? 1.0 : 0.0, 0.0};
}

EnvState initial_state(const EnvConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EnvState s;
  if (config.kind == EnvKind::kRun) {
    s.y = -0.3 + 0.6 * unit(rng);
    return s;
  }
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  const double r = config.kind == EnvKind::kCircle ? 0.3 + 0.3 * unit(rng) : 0.2 * unit(rng);
  s.x = r * std::cos(angle);
  s.y = r * std::sin(angle);
  return s;
}

stl::SpecParameters spec_parameters(const EnvConfig& c) {
  stl::SpecParameters p;
  p.y_lim = c.y_lim;
  p.x_lim = c.x_lim;
  p.v_lim = c.v_lim;
  p.goal_a_x = c.goal_a[0];
  p.goal_a_y = c.goal_a[1];
  p.goal_b_x = c.goal_b[0];
  p.goal_b_y = c.goal_b[1];
  p.goal_half_width = c.goal_half_width;
  return p;
}

stl::Formula builtin_spec(const EnvConfig& config) {
  const auto p = spec_parameters(config);
  switch (config.kind) {
    case EnvKind::kRun:
      return stl::run_spec(p);
    case EnvKind::kCircle:
      return stl::circle_spec(p);
    case EnvKind::kReach:
      return stl::reach_spec(p);
  }
  return stl::run_spec(p);
}

}  // namespace sdt::env
