#include "sdt/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sdt/common/error.hpp"
#include "sdt/stl/robustness.hpp"

namespace sdt::data {

using nlohmann::json;

const std::vector<std::string>& OfflineDataset::schema() const {
  static const std::vector<std::string> kEmpty;
  return trajectories.empty() ? kEmpty : trajectories.front().schema;
}

DatasetStats compute_stats(const OfflineDataset& dataset, const stl::Formula& formula) {
  DatasetStats stats;
  stats.trajectories = dataset.trajectories.size();
  if (dataset.empty()) return stats;

  const auto& schema = dataset.schema();
  const std::size_t channels = schema.size();
  stl::validate(formula, schema);

  std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
  std::size_t steps = 0;
  std::vector<double> suffix_sum;
  std::vector<std::size_t> suffix_count;

  for (const auto& traj : dataset.trajectories) {
    if (traj.schema != schema) throw DataError("trajectories disagree on the state schema");
    for (std::size_t t = 0; t < traj.length(); ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = traj.states[t * channels + c];
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    steps += traj.length();

    const auto trace = stl::robustness_trace(traj.signal(), formula);
    const double rho = trace.at(1);
    if (!stl::satisfied(rho)) continue;
    ++stats.safe_trajectories;
    stats.safe_returns.push_back(traj.total_reward());
    stats.safe_robustness.push_back(rho);
    // For future-only formulas the suffix at t equals the trace at t.
    if (suffix_sum.size() < trace.length()) {
      suffix_sum.resize(trace.length(), 0.0);
      suffix_count.resize(trace.length(), 0);
      stats.suffix_max.resize(trace.length(), -std::numeric_limits<double>::infinity());
    }
    for (std::size_t t = 0; t < trace.length(); ++t) {
      suffix_sum[t] += trace.values[t];
      ++suffix_count[t];
      stats.suffix_max[t] = std::max(stats.suffix_max[t], trace.values[t]);
    }
  }

  stats.state_mean.resize(channels);
  stats.state_std.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double mean = sum[c] / static_cast<double>(steps);
    stats.state_mean[c] = mean;
    stats.state_std[c] = std::sqrt(std::max(0.0, sum_sq[c] / static_cast<double>(steps) - mean * mean));
  }
  stats.satisfaction_fraction =
      static_cast<double>(stats.safe_trajectories) / static_cast<double>(stats.trajectories);
  std::sort(stats.safe_returns.begin(), stats.safe_returns.end());
  std::sort(stats.safe_robustness.begin(), stats.safe_robustness.end());
  if (!stats.safe_returns.empty()) {
    stats.r_min = stats.safe_returns.front();
    stats.r_max = stats.safe_returns.back();
  }
  stats.suffix_mean.resize(suffix_sum.size());
  for (std::size_t t = 0; t < suffix_sum.size(); ++t) {
    stats.suffix_mean[t] = suffix_sum[t] / static_cast<double>(suffix_count[t]);
  }
  return stats;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of an empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double normalized_reward(double total_reward, const DatasetStats& stats) {
  if (!stats.r_min || !stats.r_max) {
    throw DataError("normalized reward needs r_min/r_max (dataset has no safe trajectories)");
  }
  if (!(*stats.r_max > *stats.r_min)) {
    throw DataError("normalized reward is undefined when r_max == r_min");
  }
  return (total_reward - *stats.r_min) / (*stats.r_max - *stats.r_min);
}

std::string to_json(const DatasetStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j{{"trajectories", s.trajectories},
         {"safe_trajectories", s.safe_trajectories},
         {"satisfaction_fraction", s.satisfaction_fraction},
         {"r_min", opt(s.r_min)},
         {"r_max", opt(s.r_max)},
         {"safe_returns", s.safe_returns},
         {"safe_robustness", s.safe_robustness},
         {"state_mean", s.state_mean},
         {"state_std", s.state_std},
         {"suffix_mean", s.suffix_mean},
         {"suffix_max", s.suffix_max}};
  return j.dump();
}

DatasetStats dataset_stats_from_json(const std::string& text) {
  DatasetStats s;
  try {
    const json j = json::parse(text);
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<double>();
    };
    s.trajectories = j.at("trajectories").get<std::size_t>();
    s.safe_trajectories = j.at("safe_trajectories").get<std::size_t>();
    s.satisfaction_fraction = j.at("satisfaction_fraction").get<double>();
    s.r_min = opt("r_min");
    s.r_max = opt("r_max");
    s.safe_returns = j.at("safe_returns").get<std::vector<double>>();
    s.safe_robustness = j.at("safe_robustness").get<std::vector<double>>();
    s.state_mean = j.at("state_mean").get<std::vector<double>>();
    s.state_std = j.at("state_std").get<std::vector<double>>();
    s.suffix_mean = j.at("suffix_mean").get<std::vector<double>>();
    s.suffix_max = j.at("suffix_max").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed dataset stats: ") + e.what());
  }
  return s;
}

namespace {

json rows_to_json(const std::vector<double>& flat, std::size_t width) {
  json rows = json::array();
  for (std::size_t i = 0; i + width <= flat.size() && width > 0; i += width) {
    rows.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                       flat.begin() + static_cast<std::ptrdiff_t>(i + width)));
  }
  return rows;
}

json trajectory_to_json(const Trajectory& traj) {
  json j;
  j["schema"] = traj.schema;
  j["states"] = rows_to_json(traj.states, traj.schema.size());
  j["actions"] = rows_to_json(traj.actions, traj.action_dim);
  j["rewards"] = traj.rewards;
  j["costs_p"] = traj.costs_p;
  if (traj.costs_v) j["costs_v"] = *traj.costs_v;
  if (traj.relabeled_costs) j["relabeled_costs"] = *traj.relabeled_costs;
  if (traj.prefix) j["prefix"] = *traj.prefix;
  if (traj.suffix) j["suffix"] = *traj.suffix;
  if (traj.return_to_go) j["rtg"] = *traj.return_to_go;
  return j;
}

std::vector<double> number_array(const json& j, const char* field) {
  if (!j.is_array()) throw DataError(std::string("field '") + field + "' is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(std::string("field '") + field + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> matrix(const json& j, const char* field, std::size_t& width) {
  if (!j.is_array()) throw DataError(std::string("field '") + field + "' is not an array");
  std::vector<double> out;
  width = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    auto row = number_array(j[r], field);
    if (r == 0) width = row.size();
    if (row.size() != width) throw DataError(std::string("field '") + field + "' is ragged");
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

const json& required(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw DataError(std::string("missing field '") + field + "'");
  return *it;
}

std::optional<std::vector<double>> optional_array(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) return std::nullopt;
  return number_array(*it, field);
}

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_object()) throw DataError("row is not a JSON object");
  Trajectory traj;
  const auto& schema = required(j, "schema");
  if (!schema.is_array()) throw DataError("field 'schema' is not an array");
  for (const auto& name : schema) {
    if (!name.is_string()) throw DataError("field 'schema' holds a non-string");
    traj.schema.push_back(name.get<std::string>());
  }
  std::size_t width = 0;
  traj.states = matrix(required(j, "states"), "states", width);
  if (width != traj.schema.size()) {
    throw DataError("field 'states' rows have " + std::to_string(width) + " values for " +
                    std::to_string(traj.schema.size()) + " channels");
  }
  traj.actions = matrix(required(j, "actions"), "actions", traj.action_dim);
  traj.rewards = number_array(required(j, "rewards"), "rewards");
  traj.costs_p = number_array(required(j, "costs_p"), "costs_p");
  traj.costs_v = optional_array(j, "costs_v");
  traj.relabeled_costs = optional_array(j, "relabeled_costs");
  traj.prefix = optional_array(j, "prefix");
  traj.suffix = optional_array(j, "suffix");
  traj.return_to_go = optional_array(j, "rtg");
  traj.check();
  return traj;
}

}  // namespace

void save_dataset(const OfflineDataset& dataset, std::ostream& out) {
  json header{{"env", dataset.env}, {"spec", dataset.spec}};
  out << header.dump() << '\n';
  for (const auto& traj : dataset.trajectories) out << trajectory_to_json(traj).dump() << '\n';
}

void save_dataset(const OfflineDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_dataset(dataset, out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

OfflineDataset load_dataset(std::istream& in) {
  OfflineDataset dataset;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!header_seen && j.is_object() && !j.contains("states")) {
      header_seen = true;
      if (j.contains("env")) dataset.env = j["env"].get<std::string>();
      if (j.contains("spec")) dataset.spec = j["spec"].get<std::string>();
      continue;
    }
    header_seen = true;
    try {
      dataset.trajectories.push_back(trajectory_from_json(j));
      if (dataset.trajectories.back().schema != dataset.trajectories.front().schema) {
        throw DataError("schema differs from the first trajectory");
      }
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + " (trajectory " +
                      std::to_string(dataset.trajectories.size()) + "): " + e.what());
    }
  }
  return dataset;
}

OfflineDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_dataset(in);
}

}  // namespace sdt::data
