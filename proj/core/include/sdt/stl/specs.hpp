#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdt/stl/formula.hpp"

namespace sdt::stl {

/// Thresholds the built-in specifications are instantiated with. Defaults
/// match the default toy-environment configuration.
struct SpecParameters {
  double y_lim = 1.0;
  double x_lim = 1.0;
  double v_lim = 1.5;
  double goal_a_x = 0.5;
  double goal_a_y = 0.0;
  double goal_b_x = -0.5;
  double goal_b_y = 0.0;
  double goal_half_width = 0.2;
};

/// Axis-aligned goal box as the conjunction of four labeled linear predicates
/// over channels x and y.
Formula goal_box(const std::string& label, double gx, double gy, double half_width);

Formula run_spec(const SpecParameters& p = {});
Formula circle_spec(const SpecParameters& p = {});
Formula reach_spec(const SpecParameters& p = {});

/// {"run", "circle", "reach"} -> formula.
std::map<std::string, Formula> builtin_specs(const SpecParameters& p = {});

/// Replaces every predicate whose label is in `labels` by (alpha * mu) < (alpha * c)
/// (or > for greater-than predicates). Throws UsageError for alpha <= 0 and
/// for labels that match no predicate.
Formula scale_predicate(const Formula& formula, const std::vector<std::string>& labels,
                        double alpha);

}  // namespace sdt::stl
