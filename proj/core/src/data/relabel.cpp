#include "sdt/data/relabel.hpp"

#include <cmath>

#include "sdt/common/error.hpp"
#include "sdt/stl/robustness.hpp"

namespace sdt::data {

namespace {

constexpr std::size_t kRecoveryWindow = 5;

// Windowed rule on one {0,1} cost channel (0-based storage).
std::vector<double> window_rule(const std::vector<double>& c, RelabelRule rule) {
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    bool window = t >= kRecoveryWindow;
    for (std::size_t k = 1; window && k <= kRecoveryWindow; ++k) window = c[t - k] == 1.0;
    if (rule == RelabelRule::kPublished) {
      out[t] = window ? 1.0 : 0.0;
    } else {
      const bool here = c[t] == 1.0;
      out[t] = here && (window || t + 1 == n) ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace

std::vector<double> relabel_costs(const Trajectory& trajectory, EnvKind kind, RelabelRule rule) {
  if (trajectory.costs_p.size() != trajectory.length()) {
    throw DataError("relabeling needs field 'costs_p'");
  }
  if (kind != EnvKind::kRun) return window_rule(trajectory.costs_p, rule);
  if (!trajectory.costs_v) throw DataError("Run relabeling needs field 'costs_v'");
  std::vector<double> out = window_rule(*trajectory.costs_v, rule);
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (trajectory.costs_p[t] == 1.0) out[t] = 1.0;
  }
  return out;
}

RelabelAudit relabel_dataset(OfflineDataset& dataset, EnvKind kind, const stl::Formula& formula,
                             RelabelRule rule, double tolerance) {
  RelabelAudit audit;
  for (auto& traj : dataset.trajectories) {
    traj.relabeled_costs = relabel_costs(traj, kind, rule);
    const double rho = stl::robustness(traj.signal(), 1, formula);
    if (std::fabs(rho) <= tolerance) {
      ++audit.skipped;
      continue;
    }
    double total = 0.0;
    for (double c : *traj.relabeled_costs) total += c;
    ++audit.checked;
    if ((total == 0.0) != stl::satisfied(rho)) ++audit.mismatches;
  }
  return audit;
}

RobustnessAnnotation annotate_robustness(const Trajectory& trajectory, const stl::Formula& formula) {
  const stl::Signal signal = trajectory.signal();
  stl::validate(formula, signal.schema());
  const std::size_t n = signal.length();
  RobustnessAnnotation out;
  // Future-only operators: rho(tau[t:T], 1) == rho(tau, t).
  out.suffix = stl::robustness_trace(signal, formula).values;
  out.prefix.resize(n);
  for (std::size_t t = 1; t <= n; ++t) out.prefix[t - 1] = stl::prefix_robustness(signal, t, formula);
  return out;
}

void annotate_dataset(OfflineDataset& dataset, const stl::Formula& formula) {
  for (auto& traj : dataset.trajectories) {
    auto ann = annotate_robustness(traj, formula);
    traj.prefix = std::move(ann.prefix);
    traj.suffix = std::move(ann.suffix);
    traj.return_to_go = return_to_go(traj.rewards);
  }
}

}  // namespace sdt::data
