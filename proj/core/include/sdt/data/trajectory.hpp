#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdt/stl/signal.hpp"

namespace sdt::data {

/// One episode: aligned per-step states, actions, rewards and costs. Costs at
/// step t are the costs of state t; reward t is earned by taking action t.
struct Trajectory {
  std::vector<std::string> schema;
  std::size_t action_dim = 0;
  std::vector<double> states;   // T x schema.size(), row-major
  std::vector<double> actions;  // T x action_dim, row-major
  std::vector<double> rewards;
  std::vector<double> costs_p;
  std::optional<std::vector<double>> costs_v;  // Run-kind data only

  std::optional<std::vector<double>> relabeled_costs;
  std::optional<std::vector<double>> prefix;
  std::optional<std::vector<double>> suffix;
  std::optional<std::vector<double>> return_to_go;

  std::size_t length() const { return rewards.size(); }
  double total_reward() const;

  /// States as a signal over `schema`.
  stl::Signal signal() const;

  /// Throws DataError naming the offending field when lengths disagree,
  /// values are non-finite, or relabeled costs leave {0, 1}.
  void check() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// R_t = sum_{t' >= t} r_t', built by the backward recurrence R_t = R_{t+1} + r_t.
std::vector<double> return_to_go(const std::vector<double>& rewards);

/// Running sum sum_{i <= t} r_i.
std::vector<double> reward_prefix(const std::vector<double>& rewards);

}  // namespace sdt::data
