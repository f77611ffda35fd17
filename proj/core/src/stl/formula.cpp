#include "sdt/stl/formula.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "sdt/stl/parser.hpp"

namespace sdt::stl {

struct Expr::Node {
  Kind kind;
  std::string name;
  double value = 0.0;
  std::vector<Expr> operands;
};

Expr::Expr() : node_(constant(0.0).node_) {}

Expr Expr::channel(std::string name) {
  return Expr(std::make_shared<const Node>(Node{Kind::kChannel, std::move(name), 0.0, {}}));
}

Expr Expr::constant(double value) {
  return Expr(std::make_shared<const Node>(Node{Kind::kConstant, {}, value, {}}));
}

Expr Expr::add(Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Kind::kAdd, {}, 0.0, {std::move(lhs), std::move(rhs)}}));
}

Expr Expr::sub(Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Kind::kSub, {}, 0.0, {std::move(lhs), std::move(rhs)}}));
}

Expr Expr::mul(Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const Node>(Node{Kind::kMul, {}, 0.0, {std::move(lhs), std::move(rhs)}}));
}

Expr Expr::neg(Expr operand) {
  return Expr(std::make_shared<const Node>(Node{Kind::kNeg, {}, 0.0, {std::move(operand)}}));
}

Expr Expr::abs(Expr operand) {
  return Expr(std::make_shared<const Node>(Node{Kind::kAbs, {}, 0.0, {std::move(operand)}}));
}

Expr::Kind Expr::kind() const { return node_->kind; }
const std::string& Expr::channel_name() const { return node_->name; }
double Expr::constant_value() const { return node_->value; }
const Expr& Expr::lhs() const { return node_->operands.at(0); }
const Expr& Expr::rhs() const { return node_->operands.at(1); }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  return x.kind == y.kind && x.name == y.name && x.value == y.value && x.operands == y.operands;
}

struct Formula::Node {
  Kind kind;
  Predicate predicate;
  Interval interval;
  std::vector<Formula> children;
};

namespace {

void check_interval(const Interval& interval) {
  if (interval.lo < 0) {
    throw IntervalError("interval lower bound " + std::to_string(interval.lo) + " is negative");
  }
  if (interval.hi && *interval.hi < interval.lo) {
    throw IntervalError("interval [" + std::to_string(interval.lo) + "," +
                        std::to_string(*interval.hi) + "] has t1 > t2");
  }
}

}  // namespace

Formula Formula::truth() {
  return Formula(std::make_shared<const Node>(Node{Kind::kTrue, {}, {}, {}}));
}

Formula Formula::atom(Predicate predicate) {
  return Formula(std::make_shared<const Node>(Node{Kind::kPredicate, std::move(predicate), {}, {}}));
}

Formula Formula::negation(Formula operand) {
  return Formula(std::make_shared<const Node>(Node{Kind::kNot, {}, {}, {std::move(operand)}}));
}

Formula Formula::conjunction(Formula lhs, Formula rhs) {
  return Formula(
      std::make_shared<const Node>(Node{Kind::kAnd, {}, {}, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::disjunction(Formula lhs, Formula rhs) {
  return Formula(
      std::make_shared<const Node>(Node{Kind::kOr, {}, {}, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::implication(Formula lhs, Formula rhs) {
  return Formula(
      std::make_shared<const Node>(Node{Kind::kImplies, {}, {}, {std::move(lhs), std::move(rhs)}}));
}

Formula Formula::globally(Interval interval, Formula operand) {
  check_interval(interval);
  return Formula(
      std::make_shared<const Node>(Node{Kind::kGlobally, {}, interval, {std::move(operand)}}));
}

Formula Formula::eventually(Interval interval, Formula operand) {
  check_interval(interval);
  return Formula(
      std::make_shared<const Node>(Node{Kind::kFinally, {}, interval, {std::move(operand)}}));
}

Formula Formula::until(Interval interval, Formula lhs, Formula rhs) {
  check_interval(interval);
  return Formula(std::make_shared<const Node>(
      Node{Kind::kUntil, {}, interval, {std::move(lhs), std::move(rhs)}}));
}

Formula::Kind Formula::kind() const { return node_->kind; }

const Predicate& Formula::predicate() const {
  if (node_->kind != Kind::kPredicate) throw std::logic_error("formula node is not a predicate");
  return node_->predicate;
}

const Interval& Formula::interval() const { return node_->interval; }
const std::vector<Formula>& Formula::children() const { return node_->children; }

bool Formula::is_temporal() const {
  return node_->kind == Kind::kGlobally || node_->kind == Kind::kFinally ||
         node_->kind == Kind::kUntil;
}

std::size_t Formula::depth() const {
  std::size_t d = 0;
  for (const auto& c : node_->children) d = std::max(d, c.depth() + 1);
  return d;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind || x.children != y.children) return false;
  if (x.kind == Formula::Kind::kPredicate && !(x.predicate == y.predicate)) return false;
  if (a.is_temporal() && !(x.interval == y.interval)) return false;
  return true;
}

namespace {

void collect_channels(const Expr& e, std::vector<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::kChannel:
      if (std::find(out.begin(), out.end(), e.channel_name()) == out.end()) {
        out.push_back(e.channel_name());
      }
      break;
    case Expr::Kind::kConstant:
      break;
    case Expr::Kind::kNeg:
    case Expr::Kind::kAbs:
      collect_channels(e.lhs(), out);
      break;
    default:
      collect_channels(e.lhs(), out);
      collect_channels(e.rhs(), out);
  }
}

template <typename Fn>
void visit_predicates(const Formula& f, Fn&& fn) {
  if (f.kind() == Formula::Kind::kPredicate) {
    fn(f.predicate());
    return;
  }
  for (const auto& c : f.children()) visit_predicates(c, fn);
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

// Precedence levels for printing: larger binds tighter.
int expr_level(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::kAdd:
    case Expr::Kind::kSub:
      return 1;
    case Expr::Kind::kMul:
      return 2;
    default:
      return 3;
  }
}

void print_expr(const Expr& e, std::string& out);

void print_expr_at(const Expr& e, int min_level, std::string& out) {
  if (expr_level(e) < min_level) {
    out += '(';
    print_expr(e, out);
    out += ')';
  } else {
    print_expr(e, out);
  }
}

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::kChannel:
      out += e.channel_name();
      break;
    case Expr::Kind::kConstant:
      if (e.constant_value() < 0 || (e.constant_value() == 0 && std::signbit(e.constant_value()))) {
        out += '(' + format_number(e.constant_value()) + ')';
      } else {
        out += format_number(e.constant_value());
      }
      break;
    case Expr::Kind::kAdd:
      print_expr_at(e.lhs(), 1, out);
      out += " + ";
      print_expr_at(e.rhs(), 2, out);
      break;
    case Expr::Kind::kSub:
      print_expr_at(e.lhs(), 1, out);
      out += " - ";
      print_expr_at(e.rhs(), 2, out);
      break;
    case Expr::Kind::kMul:
      print_expr_at(e.lhs(), 2, out);
      out += " * ";
      print_expr_at(e.rhs(), 3, out);
      break;
    case Expr::Kind::kNeg:
      out += '-';
      print_expr_at(e.lhs(), 3, out);
      break;
    case Expr::Kind::kAbs:
      out += "abs(";
      print_expr(e.lhs(), out);
      out += ')';
      break;
  }
}

int formula_level(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::kImplies:
      return 1;
    case Formula::Kind::kOr:
      return 2;
    case Formula::Kind::kAnd:
      return 3;
    case Formula::Kind::kUntil:
      return 4;
    case Formula::Kind::kNot:
    case Formula::Kind::kGlobally:
    case Formula::Kind::kFinally:
      return 5;
    case Formula::Kind::kPredicate:
    case Formula::Kind::kTrue:
      return 6;
  }
  return 6;
}

std::string format_interval(const Interval& iv) {
  if (!iv.bounded() && iv.lo == 0) return "";
  return "[" + std::to_string(iv.lo) + "," + (iv.hi ? std::to_string(*iv.hi) : "inf") + "]";
}

void print_formula(const Formula& f, std::string& out);

void print_formula_at(const Formula& f, int min_level, std::string& out) {
  if (formula_level(f) < min_level) {
    out += '(';
    print_formula(f, out);
    out += ')';
  } else {
    print_formula(f, out);
  }
}

// Operands of unary/temporal operators: predicates are parenthesized for
// readability even though the grammar does not require it.
void print_operand(const Formula& f, std::string& out) {
  if (f.kind() == Formula::Kind::kPredicate) {
    out += '(';
    print_formula(f, out);
    out += ')';
  } else {
    print_formula_at(f, 5, out);
  }
}

void print_binary(const Formula& f, const char* op, int level, bool right_assoc, std::string& out) {
  print_formula_at(f.child(0), right_assoc ? level + 1 : level, out);
  out += op;
  print_formula_at(f.child(1), right_assoc ? level : level + 1, out);
}

void print_formula(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      out += 'T';
      break;
    case Formula::Kind::kPredicate: {
      const auto& p = f.predicate();
      if (!p.label.empty()) out += '@' + p.label + ": ";
      print_expr(p.expr, out);
      out += p.comparison == Comparison::kLess ? " < " : " > ";
      out += format_number(p.bound);
      break;
    }
    case Formula::Kind::kNot:
      out += '!';
      print_operand(f.child(0), out);
      break;
    case Formula::Kind::kAnd:
      print_binary(f, " && ", 3, false, out);
      break;
    case Formula::Kind::kOr:
      print_binary(f, " || ", 2, false, out);
      break;
    case Formula::Kind::kImplies:
      print_binary(f, " -> ", 1, true, out);
      break;
    case Formula::Kind::kUntil:
      print_formula_at(f.child(0), 4, out);
      out += " U" + format_interval(f.interval()) + " ";
      print_formula_at(f.child(1), 5, out);
      break;
    case Formula::Kind::kGlobally:
    case Formula::Kind::kFinally:
      out += f.kind() == Formula::Kind::kGlobally ? 'G' : 'F';
      out += format_interval(f.interval());
      out += ' ';
      print_operand(f.child(0), out);
      break;
  }
}

}  // namespace

std::vector<std::string> referenced_channels(const Formula& formula) {
  std::vector<std::string> out;
  visit_predicates(formula, [&](const Predicate& p) { collect_channels(p.expr, out); });
  return out;
}

std::vector<std::string> predicate_labels(const Formula& formula) {
  std::vector<std::string> out;
  visit_predicates(formula, [&](const Predicate& p) {
    if (!p.label.empty() && std::find(out.begin(), out.end(), p.label) == out.end()) {
      out.push_back(p.label);
    }
  });
  return out;
}

std::string to_string(const Formula& formula) {
  std::string out;
  print_formula(formula, out);
  return out;
}

std::string to_string(const Expr& expr) {
  std::string out;
  print_expr(expr, out);
  return out;
}

}  // namespace sdt::stl
