#pragma once

// Truncated multivariate Taylor polynomials around a point, used to evaluate
// iterated Lie brackets numerically without symbolic expansion.

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "geoflow/expr.hpp"
#include "geoflow/geometry.hpp"

namespace geoflow {

// Monomials in n variables of total degree <= order, graded lexicographic.
class JetSpace {
public:
  JetSpace(int n, int order);

  int n() const { return n_; }
  int order() const { return order_; }
  std::size_t size() const { return exps_.size(); }
  const std::vector<int>& exponents(std::size_t m) const { return exps_[m]; }
  int degree(std::size_t m) const { return deg_[m]; }
  // index of the monomial with exponent vector e, or -1 if beyond the order
  int index(const std::vector<int>& e) const;

  struct Term {
    int a, b, c;  // coeff[c] += x[a] * y[b]
  };
  const std::vector<Term>& products() const { return prod_; }
  // d/dx_var maps monomial m to (target, factor); target -1 for constants
  const std::vector<std::pair<int, double>>& derivative(int var) const { return deriv_[static_cast<std::size_t>(var)]; }

private:
  int n_;
  int order_;
  std::vector<std::vector<int>> exps_;
  std::vector<int> deg_;
  std::vector<Term> prod_;
  std::vector<std::vector<std::pair<int, double>>> deriv_;
};

class Jet {
public:
  Jet() = default;
  explicit Jet(std::shared_ptr<const JetSpace> space, double c = 0.0);
  // x_var + value: the coordinate function centred at the expansion point
  static Jet coordinate(std::shared_ptr<const JetSpace> space, int var, double value);

  const std::shared_ptr<const JetSpace>& space() const { return space_; }
  double value() const { return c_[0]; }
  double operator[](std::size_t m) const { return c_[m]; }
  double& operator[](std::size_t m) { return c_[m]; }
  std::size_t size() const { return c_.size(); }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);
  Jet operator-() const;

  Jet derivative(int var) const;

private:
  std::shared_ptr<const JetSpace> space_;
  std::vector<double> c_;
};

// f(a + N) for a nilpotent N, given f^(k)(a)/k! for k = 0..order.
Jet compose(const Jet& x, std::span<const double> taylor);

Jet pow(const Jet& x, int e);
Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sqrt(const Jet& x);

// Expression over x1..xn evaluated as a jet around `at`.
Jet eval_jet(const Expr& e, std::shared_ptr<const JetSpace> space, const Eigen::VectorXd& at);

using JetField = std::vector<Jet>;

JetField eval_jet(const VectorField& v, std::shared_ptr<const JetSpace> space, const Eigen::VectorXd& at);

// [V,W]_j = sum_i V_i d_i W_j - W_i d_i V_j
JetField bracket(const JetField& v, const JetField& w);

Eigen::VectorXd values(const JetField& v);

}  // namespace geoflow
