#include "sdt/stl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <set>

namespace sdt::stl {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected,
                       const std::string& message)
    : DataError("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                message + (expected.empty() ? "" : " (expected one of: " + join(expected) + ")")),
      line_(line),
      column_(column),
      expected_(std::move(expected)) {}

namespace {

enum class Tok {
  kIdent,
  kNumber,
  kBang,
  kAndAnd,
  kOrOr,
  kArrow,
  kLParen,
  kRParen,
  kLBracket,
  kRBracket,
  kComma,
  kLess,
  kGreater,
  kPlus,
  kMinus,
  kStar,
  kAt,
  kColon,
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::kEnd, "end of input", line_, col_});
        return out;
      }
      const std::size_t line = line_, col = col_;
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          advance();
        }
        out.push_back({Tok::kIdent, std::string(text_.substr(start, pos_ - start)), line, col});
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
          advance();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
          std::size_t save = pos_;
          advance();
          if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
          if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
              advance();
            }
          } else {
            col_ -= pos_ - save;
            pos_ = save;
          }
        }
        out.push_back({Tok::kNumber, std::string(text_.substr(start, pos_ - start)), line, col});
        continue;
      }
      auto two = [&](char a, char b) {
        return c == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b;
      };
      if (two('&', '&')) {
        push2(out, Tok::kAndAnd, "&&", line, col);
      } else if (two('|', '|')) {
        push2(out, Tok::kOrOr, "||", line, col);
      } else if (two('-', '>')) {
        push2(out, Tok::kArrow, "->", line, col);
      } else {
        Tok kind;
        switch (c) {
          case '!': kind = Tok::kBang; break;
          case '(': kind = Tok::kLParen; break;
          case ')': kind = Tok::kRParen; break;
          case '[': kind = Tok::kLBracket; break;
          case ']': kind = Tok::kRBracket; break;
          case ',': kind = Tok::kComma; break;
          case '<': kind = Tok::kLess; break;
          case '>': kind = Tok::kGreater; break;
          case '+': kind = Tok::kPlus; break;
          case '-': kind = Tok::kMinus; break;
          case '*': kind = Tok::kStar; break;
          case '@': kind = Tok::kAt; break;
          case ':': kind = Tok::kColon; break;
          default:
            throw ParseError(line, col, {}, std::string("unexpected character '") + c + "'");
        }
        out.push_back({kind, std::string(1, c), line, col});
        advance();
      }
    }
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  void push2(std::vector<Token>& out, Tok kind, const char* text, std::size_t line,
             std::size_t col) {
    out.push_back({kind, text, line, col});
    advance();
    advance();
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

bool is_reserved(const std::string& word) {
  return word == "T" || word == "G" || word == "F" || word == "U" || word == "abs" ||
         word == "inf";
}

// Thrown internally to unwind a failed alternative; the user-facing error is
// assembled from the furthest failure position.
struct Backtrack {};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Formula run() {
    try {
      Formula f = implication();
      expect(Tok::kEnd, "end of input");
      return f;
    } catch (const Backtrack&) {
      const Token& t = tokens_.at(std::min(furthest_, tokens_.size() - 1));
      std::vector<std::string> expected(expected_.begin(), expected_.end());
      throw ParseError(t.line, t.column, expected, "unexpected '" + t.text + "'");
    }
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }

  bool peek_ident(const char* word) const {
    return peek().kind == Tok::kIdent && peek().text == word;
  }

  [[noreturn]] void fail(const std::string& expected) {
    if (pos_ > furthest_) {
      furthest_ = pos_;
      expected_.clear();
    }
    if (pos_ == furthest_) expected_.insert(expected);
    throw Backtrack{};
  }

  bool accept(Tok kind, const std::string& expected) {
    if (peek().kind == kind) {
      ++pos_;
      return true;
    }
    note(expected);
    return false;
  }

  // Records an alternative that was tried and not taken at the current position.
  void note(const std::string& expected) {
    if (pos_ > furthest_) {
      furthest_ = pos_;
      expected_.clear();
    }
    if (pos_ == furthest_) expected_.insert(expected);
  }

  const Token& expect(Tok kind, const std::string& expected) {
    if (peek().kind != kind) fail(expected);
    return tokens_[pos_++];
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (accept(Tok::kArrow, "'->'")) {
      return Formula::implication(std::move(lhs), implication());
    }
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (accept(Tok::kOrOr, "'||'")) lhs = Formula::disjunction(std::move(lhs), conjunction());
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = until();
    while (accept(Tok::kAndAnd, "'&&'")) lhs = Formula::conjunction(std::move(lhs), until());
    return lhs;
  }

  Formula until() {
    Formula lhs = unary();
    while (true) {
      if (!peek_ident("U")) {
        note("'U'");
        return lhs;
      }
      ++pos_;
      Interval iv = optional_interval();
      lhs = Formula::until(iv, std::move(lhs), unary());
    }
  }

  Formula unary() {
    if (accept(Tok::kBang, "'!'")) return Formula::negation(unary());
    if (peek_ident("G") || peek_ident("F")) {
      const bool globally = peek().text == "G";
      ++pos_;
      Interval iv = optional_interval();
      Formula operand = unary();
      return globally ? Formula::globally(iv, std::move(operand))
                      : Formula::eventually(iv, std::move(operand));
    }
    note("'G'");
    note("'F'");
    return primary();
  }

  Formula primary() {
    if (peek_ident("T")) {
      ++pos_;
      return Formula::truth();
    }
    note("'T'");
    // A leading '(' may open either a parenthesized formula or an arithmetic
    // sub-expression of a predicate; try the predicate reading first.
    const std::size_t start = pos_;
    try {
      return Formula::atom(predicate());
    } catch (const Backtrack&) {
      pos_ = start;
    }
    if (peek().kind == Tok::kLParen) {
      ++pos_;
      Formula inner = implication();
      expect(Tok::kRParen, "')'");
      return inner;
    }
    fail("formula");
  }

  Interval optional_interval() {
    if (peek().kind != Tok::kLBracket) {
      note("'['");
      return Interval::unbounded();
    }
    const Token& open = tokens_[pos_++];
    const std::int64_t lo = unsigned_integer();
    expect(Tok::kComma, "','");
    std::optional<std::int64_t> hi;
    if (peek_ident("inf")) {
      ++pos_;
    } else {
      hi = unsigned_integer();
    }
    expect(Tok::kRBracket, "']'");
    if (hi && lo > *hi) {
      throw IntervalError("interval error at " + std::to_string(open.line) + ":" +
                          std::to_string(open.column) + ": [" + std::to_string(lo) + "," +
                          std::to_string(*hi) + "] has t1 > t2");
    }
    return Interval{lo, hi};
  }

  std::int64_t unsigned_integer() {
    const Token& t = expect(Tok::kNumber, "unsigned integer");
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      --pos_;
      fail("unsigned integer");
    }
    return v;
  }

  double number_literal() {
    const Token& t = expect(Tok::kNumber, "number");
    double v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      --pos_;
      fail("number");
    }
    return v;
  }

  Predicate predicate() {
    Predicate p;
    if (accept(Tok::kAt, "'@'")) {
      const Token& label = expect(Tok::kIdent, "label");
      p.label = label.text;
      expect(Tok::kColon, "':'");
    }
    p.expr = expr();
    if (accept(Tok::kLess, "'<'")) {
      p.comparison = Comparison::kLess;
    } else if (accept(Tok::kGreater, "'>'")) {
      p.comparison = Comparison::kGreater;
    } else {
      fail("comparison");
    }
    const bool negative = accept(Tok::kMinus, "'-'");
    p.bound = number_literal();
    if (negative) p.bound = -p.bound;
    return p;
  }

  Expr expr() {
    Expr lhs = term();
    while (true) {
      if (accept(Tok::kPlus, "'+'")) {
        lhs = Expr::add(std::move(lhs), term());
      } else if (peek().kind == Tok::kMinus) {
        ++pos_;
        lhs = Expr::sub(std::move(lhs), term());
      } else {
        note("'-'");
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    while (accept(Tok::kStar, "'*'")) lhs = Expr::mul(std::move(lhs), factor());
    return lhs;
  }

  Expr factor() {
    const Token& t = peek();
    if (t.kind == Tok::kMinus) {
      ++pos_;
      return Expr::neg(factor());
    }
    if (t.kind == Tok::kNumber) return Expr::constant(number_literal());
    if (t.kind == Tok::kLParen) {
      ++pos_;
      Expr inner = expr();
      expect(Tok::kRParen, "')'");
      return inner;
    }
    if (t.kind == Tok::kIdent && t.text == "abs") {
      ++pos_;
      expect(Tok::kLParen, "'('");
      Expr inner = expr();
      expect(Tok::kRParen, "')'");
      return Expr::abs(std::move(inner));
    }
    if (t.kind == Tok::kIdent && !is_reserved(t.text)) {
      ++pos_;
      return Expr::channel(t.text);
    }
    fail("channel name");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t furthest_ = 0;
  std::set<std::string> expected_;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(Lexer(text).run()).run(); }

}  // namespace sdt::stl
