#include "sdt/data/trajectory.hpp"

#include <cmath>

#include "sdt/common/error.hpp"

namespace sdt::data {

double Trajectory::total_reward() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

stl::Signal Trajectory::signal() const { return stl::Signal(schema, states); }

namespace {

void check_series(const std::vector<double>& v, std::size_t expected, const char* field) {
  if (v.size() != expected) {
    throw DataError(std::string("field '") + field + "' has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DataError(std::string("field '") + field + "' value " + std::to_string(i) +
                      " is not finite");
    }
  }
}

}  // namespace

void Trajectory::check() const {
  const std::size_t n = length();
  if (n == 0) throw DataError("field 'rewards' is empty");
  if (schema.empty()) throw DataError("field 'schema' is empty");
  check_series(states, n * schema.size(), "states");
  check_series(actions, n * action_dim, "actions");
  check_series(costs_p, n, "costs_p");
  if (costs_v) check_series(*costs_v, n, "costs_v");
  if (relabeled_costs) {
    check_series(*relabeled_costs, n, "relabeled_costs");
    for (double c : *relabeled_costs) {
      if (c != 0.0 && c != 1.0) throw DataError("field 'relabeled_costs' has a value outside {0,1}");
    }
  }
  if (prefix) check_series(*prefix, n, "prefix");
  if (suffix) check_series(*suffix, n, "suffix");
  if (return_to_go) check_series(*return_to_go, n, "rtg");
}

std::vector<double> return_to_go(const std::vector<double>& rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = acc + rewards[t];
    out[t] = acc;
  }
  return out;
}

std::vector<double> reward_prefix(const std::vector<double>& rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    acc += rewards[t];
    out[t] = acc;
  }
  return out;
}

}  // namespace sdt::data
