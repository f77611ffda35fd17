#pragma once

// Formula trees with channel names resolved to schema indices. Shared by the
// evaluators in this directory; not part of the public interface.

#include <span>
#include <string>
#include <vector>

#include "sdt/stl/formula.hpp"

namespace sdt::stl::detail {

class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& expr, std::span<const std::string> schema);

  double eval(std::span<const double> row) const { return eval_node(root_, row); }

 private:
  struct Node {
    Expr::Kind kind;
    std::size_t channel = 0;
    double value = 0.0;
    int lhs = -1;
    int rhs = -1;
  };

  int add(const Expr& expr, std::span<const std::string> schema);
  double eval_node(int i, std::span<const double> row) const;

  std::vector<Node> nodes_;
  int root_ = -1;
};

struct CompiledFormula {
  Formula::Kind kind;
  Interval interval;
  CompiledExpr expr;
  Comparison comparison = Comparison::kLess;
  double bound = 0.0;
  std::vector<CompiledFormula> children;

  double predicate_value(std::span<const double> row) const {
    const double mu = expr.eval(row);
    return comparison == Comparison::kLess ? bound - mu : mu - bound;
  }
  bool predicate_holds(std::span<const double> row) const {
    const double mu = expr.eval(row);
    return comparison == Comparison::kLess ? mu < bound : mu > bound;
  }
};

// Throws UnknownChannelError for channels missing from the schema.
CompiledFormula compile(const Formula& formula, std::span<const std::string> schema);

// Clamped window [t + lo, t + hi] ∩ [1, T] as (first, last); empty when first > last.
struct Window {
  std::size_t first;
  std::size_t last;
  bool empty() const { return first > last; }
};
Window window(const Interval& interval, std::size_t t, std::size_t length);

void check_step(std::size_t t, std::size_t length);

}  // namespace sdt::stl::detail
