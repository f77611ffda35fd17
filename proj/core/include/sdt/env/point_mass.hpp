#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdt/common/env_kind.hpp"
#include "sdt/stl/formula.hpp"
#include "sdt/stl/specs.hpp"

namespace sdt::env {

struct EnvConfig {
  EnvKind kind = EnvKind::kRun;
  double dt = 0.1;
  double action_bound = 1.0;  // per axis, m/s^2
  std::size_t horizon = 60;
  double y_lim = 1.0;
  double x_lim = 1.0;
  double v_lim = 1.5;
  double radius = 1.0;
  std::array<double, 2> goal_a{0.5, 0.0};
  std::array<double, 2> goal_b{-0.5, 0.0};
  double goal_half_width = 0.2;
  std::uint64_t seed = 0;

  // Throws UsageError on invariant violations.
  void validate() const;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

std::string to_json(const EnvConfig& config);
EnvConfig env_config_from_json(const std::string& text);
EnvConfig default_config(EnvKind kind);

struct EnvState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  double speed() const;
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

inline constexpr std::size_t kStateChannels = 7;
inline constexpr std::size_t kActionDim = 2;

/// {"x", "y", "vx", "vy", "speed", "abs_x", "abs_y"}
const std::vector<std::string>& state_schema();
std::array<double, kStateChannels> observe(const EnvState& state);

using Action = std::array<double, kActionDim>;

struct StepResult {
  EnvState state;
  double reward = 0.0;
};

/// Clips the action to the bound, then v += a dt, p += v dt. The reward is
/// evaluated on the post-step state: Run earns vx, Circle/Reach earn
/// (-y vx + x vy) / (1 + |r_p - r|).
StepResult step(const EnvConfig& config, const EnvState& state, Action action);

struct StepCosts {
  double position = 0.0;
  double velocity = 0.0;
};

/// Run: c_p = 1(|y| > y_lim), c_v = 1(speed > v_lim). Circle/Reach:
/// c_p = 1(|x| > x_lim), c_v = 0.
StepCosts per_step_costs(const EnvConfig& config, const EnvState& state);

/// Initial-state distribution. Run starts at rest at x = 0 with y ~ U(-0.3, 0.3);
/// Circle and Reach start at rest at radius U(0.3, 0.6) (Circle) or inside
/// |p| < 0.2 (Reach) with a uniform angle.
EnvState initial_state(const EnvConfig& config, std::mt19937_64& rng);

stl::SpecParameters spec_parameters(const EnvConfig& config);
stl::Formula builtin_spec(const EnvConfig& config);

}  // namespace sdt::env
