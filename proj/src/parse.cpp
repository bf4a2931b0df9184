#include "geoflow/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

namespace geoflow {

namespace {

class Parser {
public:
  Parser(std::string_view text, std::span<const std::string> vars) : text_(text), vars_(vars) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])) != 0) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::raw(NodeKind::Sum, {lhs, parse_term()});
      } else if (accept('-')) {
        Expr rhs = parse_term();
        lhs = Expr::raw(NodeKind::Sum, {lhs, Expr::raw(NodeKind::Negation, {rhs})});
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::raw(NodeKind::Product, {lhs, parse_unary()});
      } else if (accept('/')) {
        lhs = Expr::raw(NodeKind::Quotient, {lhs, parse_unary()});
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::raw(NodeKind::Negation, {parse_unary()});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    int k = parse_exponent();
    if (peek() == '^') fail("chained '^' is ambiguous; use parentheses");
    return Expr::raw(NodeKind::Power, {base}, k);
  }

  int parse_exponent() {
    bool paren = accept('(');
    int sign = 1;
    if (accept('-')) {
      sign = -1;
    } else {
      accept('+');
    }
    skip_space();
    std::size_t start = pos_;
    double v = parse_number_literal();
    if (v != std::floor(v) || std::fabs(v) > 1e6) {
      pos_ = start;
      fail("non-integer exponent");
    }
    if (paren && !accept(')')) fail("expected ')'");
    return sign * static_cast<int>(v);
  }

  double parse_number_literal() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '(')) {
        fail("non-integer exponent");
      }
      fail("expected number");
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return v;
  }

  Expr parse_primary() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '.') return Expr(parse_number_literal());
    if (std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) != 0 || text_[pos_] == '_')) {
        ++pos_;
      }
      std::string_view name = text_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) return Expr::variable(static_cast<int>(i));
      }
      NodeKind fn{};
      if (name == "sin") {
        fn = NodeKind::Sin;
      } else if (name == "cos") {
        fn = NodeKind::Cos;
      } else if (name == "exp") {
        fn = NodeKind::Exp;
      } else if (name == "log") {
        fn = NodeKind::Log;
      } else if (name == "sqrt") {
        fn = NodeKind::Sqrt;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after " + std::string(name));
      Expr arg = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return Expr::raw(fn, {arg});
    }
    if (c == '\0') fail("unexpected end of input");
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::span<const std::string> vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, std::span<const std::string> vars) {
  Parser p(text, vars);
  return p.parse_all();
}

}  // namespace geoflow
