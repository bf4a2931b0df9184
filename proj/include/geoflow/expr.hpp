#pragma once

// Symbolic scalar expressions over an indexed variable list.
//
// Expressions are immutable trees with structural sharing. Every node carries a
// content hash so that equality tests and canonical ordering are cheap. The
// smart constructors (operator overloads, pow, sin, ...) perform local
// simplification; `parse` produces raw, unsimplified trees.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoflow {

enum class NodeKind : std::uint8_t {
  Constant,
  Variable,
  Sum,
  Product,
  Quotient,
  Negation,
  Power,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
};

class Expr;

struct Node {
  NodeKind kind;
  double value = 0.0;     // Constant
  int index = 0;          // Variable index, or integer exponent for Power
  std::vector<Expr> args; // operands
  std::uint64_t hash = 0;
};

class Expr {
public:
  Expr();  // the constant 0
  Expr(double c);  // NOLINT(google-explicit-constructor): literals read naturally

  static Expr constant(double c);
  static Expr variable(int index);

  // Raw constructors: build the node exactly as given, no simplification.
  static Expr raw(NodeKind kind, std::vector<Expr> args, int index = 0);

  NodeKind kind() const { return node_->kind; }
  double value() const { return node_->value; }
  int index() const { return node_->index; }
  int exponent() const { return node_->index; }
  const std::vector<Expr>& args() const { return node_->args; }
  std::uint64_t hash() const { return node_->hash; }
  const Node* node() const { return node_.get(); }

  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_constant(double c) const { return is_constant() && value() == c; }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Total order used to canonicalize sums and products.
int compare(const Expr& a, const Expr& b);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

Expr sum(std::span<const Expr> terms);
Expr product(std::span<const Expr> factors);

// Exact symbolic derivative with respect to variable `var`.
Expr diff(const Expr& e, int var);

// Bottom-up single pass: constant folding, neutral-element elimination,
// like-term collection and like-power merging.
Expr simplify(const Expr& e);

// Distributes products and positive integer powers over sums, so polynomial
// inputs come back as a flat sum of monomials.
Expr expand(const Expr& e);

double eval(const Expr& e, std::span<const double> point);

// Number of distinct nodes reachable from e.
std::size_t node_count(const Expr& e);

// Highest variable index referenced, or -1 for a closed expression.
int max_variable(const Expr& e);

std::string to_string(const Expr& e, std::span<const std::string> names);

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

// Infix grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' ['+' | '-'] integer)?
//   primary := number | name | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt
// Whitespace is insignificant. Exponents must be integer literals.
Expr parse(std::string_view text, std::span<const std::string> vars);

// x1..xn
std::vector<std::string> chart_names(int n);
// x1..xn, p1..pn (phase-space expressions: p_i has index n + i - 1)
std::vector<std::string> phase_names(int n);

}  // namespace geoflow
