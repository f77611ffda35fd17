#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdt/data/trajectory.hpp"
#include "sdt/stl/formula.hpp"

namespace sdt::data {

struct OfflineDataset {
  std::string env;   // "run" | "circle" | "reach", empty when unknown
  std::string spec;  // formula text the dataset is declared against
  std::vector<Trajectory> trajectories;

  bool empty() const { return trajectories.empty(); }
  const std::vector<std::string>& schema() const;

  friend bool operator==(const OfflineDataset&, const OfflineDataset&) = default;
};

/// Statistics used for normalization and target-suffix schedules. A
/// trajectory is safe when rho(tau, 1, phi) > 0; ties count as unsafe.
struct DatasetStats {
  std::size_t trajectories = 0;
  std::size_t safe_trajectories = 0;
  double satisfaction_fraction = 0.0;

  // Total reward over the safe subset; undefined without safe trajectories.
  std::optional<double> r_min;
  std::optional<double> r_max;
  std::vector<double> safe_returns;     // sorted ascending
  std::vector<double> safe_robustness;  // full-trace rho of safe trajectories, sorted

  // Per-channel mean/std over every step of every trajectory.
  std::vector<double> state_mean;
  std::vector<double> state_std;

  // Per-step suffix statistics across safe trajectories (step t uses the safe
  // trajectories of length >= t).
  std::vector<double> suffix_mean;
  std::vector<double> suffix_max;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

/// Deterministic in the trajectory order. Throws DataError for channel mismatch.
DatasetStats compute_stats(const OfflineDataset& dataset, const stl::Formula& formula);

/// Linear-interpolated percentile, q in [0, 1], of an ascending-sorted sample.
double percentile(const std::vector<double>& sorted, double q);

/// (R - r_min) / (r_max - r_min); values outside [0, 1] are allowed. Throws
/// DataError when the stats are undefined or degenerate.
double normalized_reward(double total_reward, const DatasetStats& stats);

std::string to_json(const DatasetStats& stats);
DatasetStats dataset_stats_from_json(const std::string& text);

/// JSON Lines: a header object {"env", "spec"} followed by one trajectory
/// object per line. Doubles are written in shortest round-trip form, so a
/// save/load cycle is bit-exact.
void save_dataset(const OfflineDataset& dataset, std::ostream& out);
void save_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset(std::istream& in);
OfflineDataset load_dataset(const std::string& path);

}  // namespace sdt::data
