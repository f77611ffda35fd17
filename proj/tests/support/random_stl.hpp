#pragma once

// Random formula/signal generators shared by unit and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include "sdt/stl/formula.hpp"
#include "sdt/stl/signal.hpp"

namespace sdt::testing {

class RandomStl {
 public:
  explicit RandomStl(std::uint64_t seed, std::vector<std::string> schema = {"x", "y", "z"})
      : rng_(seed), schema_(std::move(schema)) {}

  std::mt19937_64& rng() { return rng_; }
  const std::vector<std::string>& schema() const { return schema_; }

  stl::Signal signal(std::size_t length, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(length * schema_.size());
    for (auto& x : v) x = u(rng_);
    return stl::Signal(schema_, std::move(v));
  }

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  stl::Expr expr(int depth) {
    const std::size_t pick = depth <= 0 ? uniform(0, 1) : uniform(0, 6);
    switch (pick) {
      case 0:
      case 1:
        return stl::Expr::channel(schema_[uniform(0, schema_.size() - 1)]);
      case 2:
        return stl::Expr::add(expr(depth - 1), expr(depth - 1));
      case 3:
        return stl::Expr::sub(expr(depth - 1), expr(depth - 1));
      case 4:
        return stl::Expr::mul(stl::Expr::constant(constant(0.1, 3.0)), expr(depth - 1));
      case 5:
        return stl::Expr::neg(expr(depth - 1));
      default:
        return stl::Expr::abs(expr(depth - 1));
    }
  }

  stl::Predicate predicate(const std::string& label = "") {
    stl::Predicate p;
    p.label = label;
    p.expr = expr(1);
    p.comparison = uniform(0, 1) ? stl::Comparison::kLess : stl::Comparison::kGreater;
    p.bound = constant(-1.5, 1.5);
    return p;
  }

  stl::Interval interval() {
    if (uniform(0, 3) == 0) {
      return stl::Interval{static_cast<std::int64_t>(uniform(0, 2)), std::nullopt};
    }
    const auto lo = static_cast<std::int64_t>(uniform(0, 4));
    return stl::Interval{lo, lo + static_cast<std::int64_t>(uniform(0, 6))};
  }

  // Boolean combination of predicates without temporal operators.
  stl::Formula propositional(int depth) {
    if (depth <= 0 || uniform(0, 3) == 0) {
      return stl::Formula::atom(predicate("p" + std::to_string(uniform(0, 3))));
    }
    switch (uniform(0, 3)) {
      case 0:
        return stl::Formula::negation(propositional(depth - 1));
      case 1:
        return stl::Formula::conjunction(propositional(depth - 1), propositional(depth - 1));
      case 2:
        return stl::Formula::disjunction(propositional(depth - 1), propositional(depth - 1));
      default:
        return stl::Formula::implication(propositional(depth - 1), propositional(depth - 1));
    }
  }

  // Operator nesting depth at most `depth`; leaves are labeled "p0".."p3".
  stl::Formula formula(int depth, bool allow_true = true) {
    if (depth <= 0 || uniform(0, 4) == 0) {
      if (allow_true && uniform(0, 19) == 0) return stl::Formula::truth();
      return stl::Formula::atom(predicate("p" + std::to_string(uniform(0, 3))));
    }
    switch (uniform(0, 6)) {
      case 0:
        return stl::Formula::negation(formula(depth - 1, allow_true));
      case 1:
        return stl::Formula::conjunction(formula(depth - 1, allow_true),
                                         formula(depth - 1, allow_true));
      case 2:
        return stl::Formula::disjunction(formula(depth - 1, allow_true),
                                         formula(depth - 1, allow_true));
      case 3:
        return stl::Formula::implication(formula(depth - 1, allow_true),
                                         formula(depth - 1, allow_true));
      case 4:
        return stl::Formula::globally(interval(), formula(depth - 1, allow_true));
      case 5:
        return stl::Formula::eventually(interval(), formula(depth - 1, allow_true));
      default:
        return stl::Formula::until(interval(), formula(depth - 1, allow_true),
                                   formula(depth - 1, allow_true));
    }
  }

 private:
  double constant(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  std::mt19937_64 rng_;
  std::vector<std::string> schema_;
};

}  // namespace sdt::testing
