#include <gtest/gtest.h>

#include "sdt/stl/parser.hpp"
#include "sdt/stl/specs.hpp"
#include "support/random_stl.hpp"

namespace sdt::stl {
namespace {

Predicate less(const std::string& channel, double bound, const std::string& label = "") {
  return Predicate{label, Expr::channel(channel), Comparison::kLess, bound};
}

TEST(ParserTest, GloballyWithInterval) {
  const Formula f = parse_formula("G[1,5] (vel < 1.0)");
  EXPECT_EQ(f, Formula::globally(Interval{1, 5}, Formula::atom(less("vel", 1.0))));
}

TEST(ParserTest, ImplicationOfNegationAndFinally) {
  const Formula f = parse_formula("!(x < 2) -> F[1,5] (x < 2)");
  const Formula p = Formula::atom(less("x", 2.0));
  EXPECT_EQ(f, Formula::implication(Formula::negation(p), Formula::eventually(Interval{1, 5}, p)));
}

TEST(ParserTest, RejectsDecreasingInterval) {
  EXPECT_THROW(parse_formula("G[5,1] (x < 0)"), IntervalError);
  EXPECT_THROW(Formula::globally(Interval{3, 2}, Formula::truth()), IntervalError);
}

TEST(ParserTest, Precedence) {
  const Formula a = Formula::atom(less("a", 0));
  const Formula b = Formula::atom(less("b", 0));
  const Formula c = Formula::atom(less("c", 0));
  EXPECT_EQ(parse_formula("a < 0 || b < 0 && c < 0"),
            Formula::disjunction(a, Formula::conjunction(b, c)));
  EXPECT_EQ(parse_formula("a < 0 && b < 0 && c < 0"),
            Formula::conjunction(Formula::conjunction(a, b), c));
  EXPECT_EQ(parse_formula("a < 0 -> b < 0 -> c < 0"),
            Formula::implication(a, Formula::implication(b, c)));
  EXPECT_EQ(parse_formula("a < 0 && b < 0 U c < 0"),
            Formula::conjunction(a, Formula::until(Interval::unbounded(), b, c)));
  EXPECT_EQ(parse_formula("!a < 0 U G b < 0"),
            Formula::until(Interval::unbounded(), Formula::negation(a),
                           Formula::globally(Interval::unbounded(), b)));
}

TEST(ParserTest, PredicateExpressions) {
  const Formula f = parse_formula("@goal: (x + 2) * 3 - abs(-y) > -0.5");
  const auto& p = f.predicate();
  EXPECT_EQ(p.label, "goal");
  EXPECT_EQ(p.comparison, Comparison::kGreater);
  EXPECT_EQ(p.bound, -0.5);
  const Expr expected = Expr::sub(
      Expr::mul(Expr::add(Expr::channel("x"), Expr::constant(2)), Expr::constant(3)),
      Expr::abs(Expr::neg(Expr::channel("y"))));
  EXPECT_EQ(p.expr, expected);
}

TEST(ParserTest, ParenthesizedFormulaVersusExpression) {
  EXPECT_EQ(parse_formula("((x < 1))"), Formula::atom(less("x", 1)));
  EXPECT_EQ(parse_formula("(x) < 1"), Formula::atom(less("x", 1)));
  EXPECT_EQ(parse_formula("T && (x < 1)"),
            Formula::conjunction(Formula::truth(), Formula::atom(less("x", 1))));
}

TEST(ParserTest, UnboundedIntervalSpelling) {
  EXPECT_EQ(parse_formula("F[2,inf] x < 1"),
            Formula::eventually(Interval{2, std::nullopt}, Formula::atom(less("x", 1))));
  EXPECT_EQ(parse_formula("F[0,inf] x < 1"), parse_formula("F x < 1"));
}

TEST(ParserTest, SyntaxErrorReportsPosition) {
  try {
    parse_formula("G[1,5] (x < )");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 13u);
    EXPECT_FALSE(e.expected().empty());
  }
  try {
    parse_formula("x < 1 &&\n  y <");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_formula("x < 1 $"), ParseError);
  EXPECT_THROW(parse_formula("G < 1"), ParseError);
  EXPECT_THROW(parse_formula(""), ParseError);
}

TEST(ParserTest, PrintParseFixedPointOnBuiltins) {
  for (const auto& [name, f] : builtin_specs()) {
    const std::string text = to_string(f);
    EXPECT_EQ(parse_formula(text), f) << name << ": " << text;
    EXPECT_EQ(to_string(parse_formula(text)), text);
  }
}

TEST(ParserTest, PrintParseFixedPointOnRandomFormulas) {
  testing::RandomStl gen(7);
  for (int i = 0; i < 500; ++i) {
    const Formula f = gen.formula(4);
    const std::string text = to_string(f);
    const Formula back = parse_formula(text);
    ASSERT_EQ(back, f) << text;
    ASSERT_EQ(to_string(back), text);
  }
}

}  // namespace
}  // namespace sdt::stl
