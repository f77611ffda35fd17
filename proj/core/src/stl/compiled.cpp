#include "compiled.hpp"

#include <algorithm>
#include <cmath>

#include "sdt/stl/robustness.hpp"

namespace sdt::stl::detail {

CompiledExpr::CompiledExpr(const Expr& expr, std::span<const std::string> schema) {
  root_ = add(expr, schema);
}

int CompiledExpr::add(const Expr& expr, std::span<const std::string> schema) {
  Node node{expr.kind()};
  switch (expr.kind()) {
    case Expr::Kind::kChannel: {
      auto it = std::find(schema.begin(), schema.end(), expr.channel_name());
      if (it == schema.end()) {
        throw UnknownChannelError("unknown channel '" + expr.channel_name() + "'");
      }
      node.channel = static_cast<std::size_t>(it - schema.begin());
      break;
    }
    case Expr::Kind::kConstant:
      node.value = expr.constant_value();
      break;
    case Expr::Kind::kNeg:
    case Expr::Kind::kAbs:
      node.lhs = add(expr.lhs(), schema);
      break;
    default:
      node.lhs = add(expr.lhs(), schema);
      node.rhs = add(expr.rhs(), schema);
  }
  nodes_.push_back(node);
  return static_cast<int>(nodes_.size()) - 1;
}

double CompiledExpr::eval_node(int i, std::span<const double> row) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case Expr::Kind::kChannel:
      return row[n.channel];
    case Expr::Kind::kConstant:
      return n.value;
    case Expr::Kind::kAdd:
      return eval_node(n.lhs, row) + eval_node(n.rhs, row);
    case Expr::Kind::kSub:
      return eval_node(n.lhs, row) - eval_node(n.rhs, row);
    case Expr::Kind::kMul:
      return eval_node(n.lhs, row) * eval_node(n.rhs, row);
    case Expr::Kind::kNeg:
      return -eval_node(n.lhs, row);
    case Expr::Kind::kAbs:
      return std::fabs(eval_node(n.lhs, row));
  }
  return 0.0;
}

CompiledFormula compile(const Formula& formula, std::span<const std::string> schema) {
  CompiledFormula out{formula.kind(), formula.interval(), {}, Comparison::kLess, 0.0, {}};
  if (formula.kind() == Formula::Kind::kPredicate) {
    const auto& p = formula.predicate();
    out.expr = CompiledExpr(p.expr, schema);
    out.comparison = p.comparison;
    out.bound = p.bound;
  }
  out.children.reserve(formula.children().size());
  for (const auto& c : formula.children()) out.children.push_back(compile(c, schema));
  return out;
}

Window window(const Interval& interval, std::size_t t, std::size_t length) {
  const auto lo = static_cast<std::size_t>(interval.lo);
  const std::size_t first = t + lo;
  std::size_t last = length;
  if (interval.hi) last = std::min(length, t + static_cast<std::size_t>(*interval.hi));
  return {first, last};
}

void check_step(std::size_t t, std::size_t length) {
  if (t < 1 || t > length) {
    throw DataError("step " + std::to_string(t) + " outside [1," + std::to_string(length) + "]");
  }
}

}  // namespace sdt::stl::detail
