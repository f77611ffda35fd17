#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sdt/data/dataset.hpp"
#include "sdt/env/point_mass.hpp"

namespace sdt::env {

/// One entry of a behavior mix: the share of trajectories it produces, the
/// nominal safety margin of its setpoints (negative means the setpoints lie
/// beyond the limits), and the scale of its exploration noise.
struct MixComponent {
  double fraction = 1.0;
  double margin = 0.2;
  double noise = 0.1;
};

using BehaviorMix = std::vector<MixComponent>;

BehaviorMix default_mix(EnvKind kind);

/// Per-trajectory controller parameters drawn around a mix component.
struct BehaviorParams {
  double margin = 0.2;
  double noise = 0.0;
  double speed_gain = 2.0;
  double position_gain = 1.5;
  double damping = 1.5;
  double speed_setpoint = 1.0;
  double lateral_setpoint = 0.0;  // Run: lane y; Circle/Reach: radius
  double noise_correlation = 0.8;
};

BehaviorParams sample_behavior(const EnvConfig& config, const MixComponent& component,
                               std::mt19937_64& rng);

/// Proportional controller toward a velocity/position setpoint with AR(1)
/// Gaussian action noise.
class ScriptedController {
 public:
  ScriptedController(const EnvConfig& config, const BehaviorParams& params);

  Action act(const EnvState& state, std::mt19937_64& rng);

 private:
  Action setpoint_action(const EnvState& state);

  EnvConfig config_;
  BehaviorParams params_;
  Action noise_{0.0, 0.0};
  bool reached_goal_ = false;
};

/// Packs an episode into a Trajectory, deriving costs from the states.
data::Trajectory make_trajectory(const EnvConfig& config, const std::vector<EnvState>& states,
                                 const std::vector<Action>& actions,
                                 const std::vector<double>& rewards);

data::Trajectory run_behavior(const EnvConfig& config, const BehaviorParams& params,
                              std::mt19937_64& rng);

/// Trajectory i is generated from an RNG seeded by (seed, i), and its mix
/// component is fixed by i's position in the cumulative fractions, so the
/// result is independent of generation order.
data::OfflineDataset generate_dataset(const EnvConfig& config, std::size_t n, const BehaviorMix& mix,
                                      std::uint64_t seed);

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace sdt::env
