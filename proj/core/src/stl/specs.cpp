#include "sdt/stl/specs.hpp"

#include <algorithm>
#include <cmath>

#include "sdt/common/error.hpp"

namespace sdt::stl {

namespace {

Predicate make_pred(std::string label, Expr expr, double bound) {
  return Predicate{std::move(label), std::move(expr), Comparison::kLess, bound};
}

Formula bounded_recovery(const Formula& guard) {
  // !psi -> F[1,5] psi
  return Formula::implication(Formula::negation(guard),
                              Formula::eventually(Interval{1, 5}, guard));
}

}  // namespace

Formula goal_box(const std::string& label, double gx, double gy, double half_width) {
  const double d = half_width;
  const Expr x = Expr::channel("x");
  const Expr y = Expr::channel("y");
  // -s < d - g  and  s < g + d on both axes.
  Formula f = Formula::atom(make_pred(label, Expr::neg(x), d - gx));
  f = Formula::conjunction(f, Formula::atom(make_pred(label, x, gx + d)));
  f = Formula::conjunction(f, Formula::atom(make_pred(label, Expr::neg(y), d - gy)));
  f = Formula::conjunction(f, Formula::atom(make_pred(label, y, gy + d)));
  return f;
}

Formula run_spec(const SpecParameters& p) {
  const Formula bndry = Formula::atom(make_pred("bndry", Expr::channel("abs_y"), p.y_lim));
  const Formula vel = Formula::atom(make_pred("vel", Expr::channel("speed"), p.v_lim));
  return Formula::globally(Interval::unbounded(),
                           Formula::conjunction(bndry, bounded_recovery(vel)));
}

Formula circle_spec(const SpecParameters& p) {
  const Formula bndry = Formula::atom(make_pred("bndry", Expr::channel("abs_x"), p.x_lim));
  return Formula::globally(Interval::unbounded(), bounded_recovery(bndry));
}

Formula reach_spec(const SpecParameters& p) {
  const Formula a = goal_box("goalA", p.goal_a_x, p.goal_a_y, p.goal_half_width);
  const Formula b = goal_box("goalB", p.goal_b_x, p.goal_b_y, p.goal_half_width);
  return Formula::conjunction(
      circle_spec(p),
      Formula::eventually(Interval::unbounded(),
                          Formula::until(Interval::unbounded(), Formula::negation(b), a)));
}

std::map<std::string, Formula> builtin_specs(const SpecParameters& p) {
  return {{"run", run_spec(p)}, {"circle", circle_spec(p)}, {"reach", reach_spec(p)}};
}

namespace {

Formula rescale(const Formula& f, const std::vector<std::string>& labels, double alpha,
                std::vector<bool>& used) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      return f;
    case Formula::Kind::kPredicate: {
      const auto& p = f.predicate();
      auto it = std::find(labels.begin(), labels.end(), p.label);
      if (p.label.empty() || it == labels.end()) return f;
      used[static_cast<std::size_t>(it - labels.begin())] = true;
      return Formula::atom(Predicate{p.label, Expr::mul(Expr::constant(alpha), p.expr),
                                     p.comparison, alpha * p.bound});
    }
    case Formula::Kind::kNot:
      return Formula::negation(rescale(f.child(0), labels, alpha, used));
    case Formula::Kind::kAnd:
      return Formula::conjunction(rescale(f.child(0), labels, alpha, used),
                                  rescale(f.child(1), labels, alpha, used));
    case Formula::Kind::kOr:
      return Formula::disjunction(rescale(f.child(0), labels, alpha, used),
                                  rescale(f.child(1), labels, alpha, used));
    case Formula::Kind::kImplies:
      return Formula::implication(rescale(f.child(0), labels, alpha, used),
                                  rescale(f.child(1), labels, alpha, used));
    case Formula::Kind::kGlobally:
      return Formula::globally(f.interval(), rescale(f.child(0), labels, alpha, used));
    case Formula::Kind::kFinally:
      return Formula::eventually(f.interval(), rescale(f.child(0), labels, alpha, used));
    case Formula::Kind::kUntil:
      return Formula::until(f.interval(), rescale(f.child(0), labels, alpha, used),
                            rescale(f.child(1), labels, alpha, used));
  }
  return f;
}

}  // namespace

Formula scale_predicate(const Formula& formula, const std::vector<std::string>& labels,
                        double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw UsageError("scale factor must be positive and finite");
  }
  std::vector<bool> used(labels.size(), false);
  Formula out = rescale(formula, labels, alpha, used);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!used[i]) throw UsageError("no predicate labeled '" + labels[i] + "'");
  }
  return out;
}

}  // namespace sdt::stl
