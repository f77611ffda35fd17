#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sdt/common/error.hpp"
#include "sdt/stl/formula.hpp"

namespace sdt::stl {

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected,
             const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::vector<std::string> expected_;
};

/// Raised for t1 > t2 (or negative bounds), both from the parser and from the
/// Formula factories.
class IntervalError : public DataError {
 public:
  using DataError::DataError;
};

/// Parses the ASCII formula grammar:
///
///   formula  = "T" | pred | "!" formula | formula "&&" formula
///            | formula "||" formula | formula "->" formula
///            | ("G"|"F") [interval] formula | formula "U" [interval] formula
///            | "(" formula ")" ;
///   interval = "[" uint "," uint "]" ;
///   pred     = ["@" label ":"] expr ("<"|">") number ;
///   expr     = term {("+"|"-") term} ;  term = factor {"*" factor} ;
///   factor   = ident | number | "-" factor | "abs" "(" expr ")" | "(" expr ")" ;
///
/// Binding, tightest first: unary/temporal, U, &&, ||, ->. `&&`, `||` and `U`
/// associate left, `->` associates right. "T", "G", "F", "U" and "abs" are
/// reserved and cannot name channels. The upper interval bound may be written
/// "inf".
Formula parse_formula(std::string_view text);

}  // namespace sdt::stl
