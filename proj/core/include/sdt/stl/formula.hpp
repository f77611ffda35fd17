#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sdt::stl {

/// Arithmetic expression over named signal channels. Immutable; copies share
/// the underlying tree.
class Expr {
 public:
  enum class Kind { kChannel, kConstant, kAdd, kSub, kMul, kNeg, kAbs };

  Expr();  // the constant 0

  static Expr channel(std::string name);
  static Expr constant(double value);
  static Expr add(Expr lhs, Expr rhs);
  static Expr sub(Expr lhs, Expr rhs);
  static Expr mul(Expr lhs, Expr rhs);
  static Expr neg(Expr operand);
  static Expr abs(Expr operand);

  Kind kind() const;
  const std::string& channel_name() const;
  double constant_value() const;
  // Binary nodes use lhs/rhs; unary nodes (kNeg, kAbs) use lhs only.
  const Expr& lhs() const;
  const Expr& rhs() const;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

enum class Comparison { kLess, kGreater };

/// Atomic proposition `expr < bound` or `expr > bound`. The label is optional
/// and names the leaf for predicate rescaling.
struct Predicate {
  std::string label;
  Expr expr;
  Comparison comparison = Comparison::kLess;
  double bound = 0.0;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Step-offset interval [lo, hi]; hi == nullopt means unbounded.
struct Interval {
  std::int64_t lo = 0;
  std::optional<std::int64_t> hi;

  bool bounded() const { return hi.has_value(); }
  static Interval unbounded() { return {}; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

class Formula {
 public:
  enum class Kind { kTrue, kPredicate, kNot, kAnd, kOr, kImplies, kGlobally, kFinally, kUntil };

  static Formula truth();
  static Formula atom(Predicate predicate);
  static Formula negation(Formula operand);
  static Formula conjunction(Formula lhs, Formula rhs);
  static Formula disjunction(Formula lhs, Formula rhs);
  static Formula implication(Formula lhs, Formula rhs);
  // Throws IntervalError when lo > hi or lo < 0.
  static Formula globally(Interval interval, Formula operand);
  static Formula eventually(Interval interval, Formula operand);
  static Formula until(Interval interval, Formula lhs, Formula rhs);

  Kind kind() const;
  const Predicate& predicate() const;
  const Interval& interval() const;
  // Unary nodes have one child, binary nodes two (lhs first).
  const std::vector<Formula>& children() const;
  const Formula& child(std::size_t i) const { return children().at(i); }

  bool is_temporal() const;
  std::size_t depth() const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Channel names referenced by the formula, deduplicated, in first-use order.
std::vector<std::string> referenced_channels(const Formula& formula);

/// Labels of all labeled predicate leaves, deduplicated, in first-use order.
std::vector<std::string> predicate_labels(const Formula& formula);

/// Canonical text. parse_formula(to_string(f)) == f for every formula built by
/// the parser.
std::string to_string(const Formula& formula);
std::string to_string(const Expr& expr);

}  // namespace sdt::stl
