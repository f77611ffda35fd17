#pragma once

#include <utility>
#include <vector>

#include "sdt/common/env_kind.hpp"
#include "sdt/data/dataset.hpp"
#include "sdt/stl/formula.hpp"

namespace sdt::data {

enum class RelabelRule {
  // c'_t = 1 iff the five preceding costs c_{t-5..t-1} are all 1 (plus c_p,t = 1
  // for Run). Steps t <= 5 never trigger the window condition.
  kPublished,
  // c'_t = 1 iff c_t and the five preceding costs are all 1, or t = T and
  // c_T = 1 (plus c_p,t = 1 for Run). Matches G(!psi -> F[1,5] psi) under
  // window clamping: sum c' = 0 iff rho > 0 whenever rho != 0.
  kFormulaExact,
};

/// Relabeled {0,1} cost per step. Run needs costs_p and costs_v; Circle uses
/// costs_p only. Reach is relabeled with the Circle rule, which covers the
/// boundary part of its specification only. Throws DataError when a required
/// cost channel is missing.
std::vector<double> relabel_costs(const Trajectory& trajectory, EnvKind kind,
                                  RelabelRule rule = RelabelRule::kFormulaExact);

struct RelabelAudit {
  std::size_t checked = 0;     // trajectories with |rho| > tolerance
  std::size_t mismatches = 0;  // (sum c' == 0) != (rho > 0)
  std::size_t skipped = 0;     // |rho| <= tolerance
};

/// Relabels every trajectory in place and compares against `formula`.
RelabelAudit relabel_dataset(OfflineDataset& dataset, EnvKind kind, const stl::Formula& formula,
                             RelabelRule rule = RelabelRule::kFormulaExact,
                             double tolerance = 1e-6);

struct RobustnessAnnotation {
  std::vector<double> prefix;  // rho(tau[1:t], 1, phi)
  std::vector<double> suffix;  // rho(tau[t:T], 1, phi)
};

RobustnessAnnotation annotate_robustness(const Trajectory& trajectory, const stl::Formula& formula);

/// Fills prefix, suffix and return-to-go on every trajectory.
void annotate_dataset(OfflineDataset& dataset, const stl::Formula& formula);

}  // namespace sdt::data
