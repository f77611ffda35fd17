#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdt/data/dataset.hpp"
#include "sdt/env/point_mass.hpp"
#include "sdt/policy/policy.hpp"
#include "sdt/stl/formula.hpp"

namespace sdt::eval {

enum class ScheduleKind { kFixed, kLinear, kMean, kMax };

/// Target-suffix generator. `value` is the target for fixed and linear
/// schedules and is ignored by mean/max.
struct SuffixSchedule {
  ScheduleKind kind = ScheduleKind::kFixed;
  double value = 0.02;

  friend bool operator==(const SuffixSchedule&, const SuffixSchedule&) = default;
};

/// "fixed:v", "linear:v", "mean" or "max". Throws UsageError.
SuffixSchedule parse_schedule(const std::string& text);
std::string to_string(const SuffixSchedule& schedule);

/// Per-step target suffix of length `horizon`. Fixed is constant, linear
/// ramps from 0 at t = 1 to the target at t = T, mean/max read the dataset's
/// per-step safe-suffix curves. Throws DataError when mean/max lack stats.
std::vector<double> suffix_schedule(const SuffixSchedule& schedule, const data::DatasetStats* stats,
                                    std::size_t horizon);

enum class ActionMode { kMean, kSample };

struct EvalConfig {
  double target_reward = 0.0;
  SuffixSchedule schedule;
  std::vector<double> explicit_schedule;  // overrides `schedule` when nonempty
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  ActionMode mode = ActionMode::kMean;

  // Throws UsageError.
  void validate(std::size_t horizon) const;
};

std::string to_json(const EvalConfig& config);

/// Default targets re-derived from dataset stats: the 90th percentile of
/// safe returns and the median safe full-trace robustness. Throws DataError
/// without safe trajectories.
std::pair<double, double> default_targets(const data::DatasetStats& stats);

/// A realized episode together with the tokens the policy was conditioned on.
struct Episode {
  data::Trajectory trajectory;      // states, actions, rewards, costs
  std::vector<double> prefix;       // online rho(s_{1:t}, 1, phi)
  std::vector<double> target_suffix;
  std::vector<double> return_to_go;  // R_1 = target, R_{t+1} = R_t - r_t
};

/// Algorithm 1 for `episodes` independent episodes in lockstep. Episode i
/// starts from env::initial_state with an RNG seeded by (seed, i). Throws
/// DataError when the policy, env and formula schemas disagree and
/// NumericalError on a non-finite action.
std::vector<Episode> rollout(policy::Policy& policy, const env::EnvConfig& env, const stl::Formula& formula,
                             const std::vector<double>& target_suffix, double target_reward,
                             std::size_t episodes, std::uint64_t seed, ActionMode mode = ActionMode::kMean);

struct EpisodeMetrics {
  double reward = 0.0;
  double cost = 0.0;        // sum of formula-exact relabeled costs
  double robustness = 0.0;  // rho(tau, 1, phi), also the achieved suffix
  bool satisfied = false;   // robustness > 0
};

struct EvalReport {
  std::vector<EpisodeMetrics> episodes;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::optional<double> normalized_reward_mean;  // requires defined reward stats
  std::optional<double> normalized_reward_std;
  double cost_mean = 0.0;
  double cost_std = 0.0;
  double satisfaction_rate = 0.0;
  double suffix_mean = 0.0;
  double suffix_std = 0.0;
};

EpisodeMetrics episode_metrics(const Episode& episode, EnvKind kind, const stl::Formula& formula);

/// Aggregates use the population standard deviation.
EvalReport summarize(std::vector<EpisodeMetrics> episodes, const data::DatasetStats* stats);

EvalReport evaluate(policy::Policy& policy, const env::EnvConfig& env, const stl::Formula& formula,
                    const EvalConfig& config, const data::DatasetStats* stats = nullptr);

std::string to_json(const EvalReport& report);

struct SweepRow {
  double target_reward = 0.0;
  double target_suffix = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double suffix_mean = 0.0;
  double suffix_std = 0.0;
  double satisfaction_rate = 0.0;
};

/// Runs a fixed-suffix evaluation per grid cell; rows are sorted by
/// (target_reward, target_suffix). Throws UsageError for an empty grid.
std::vector<SweepRow> alignment_sweep(policy::Policy& policy, const env::EnvConfig& env,
                                      const stl::Formula& formula,
                                      std::vector<std::pair<double, double>> grid, std::size_t episodes,
                                      std::uint64_t seed, ActionMode mode = ActionMode::kMean);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant. Throws UsageError on size mismatch or n < 2.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sdt::eval
