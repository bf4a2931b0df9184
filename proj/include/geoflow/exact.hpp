#pragma once

// Exact rational arithmetic for the Young-diagram constant and the matrix and
// binomial identities behind it.

#include <gmpxx.h>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace geoflow {

using Rational = mpq_class;  // gmp keeps results canonical
using Integer = mpz_class;

std::string to_string(const Rational& q);  // "num/den" or "num"
Integer factorial(int n);
Integer binomial(int n, int k);  // 0 outside 0 <= k <= n

class RationalMatrix {
public:
  RationalMatrix() = default;
  RationalMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols)) {}
  static RationalMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Rational& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b);
  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> a_;
};

// Fraction-free (Bareiss) elimination on row-integerized copies.
Rational determinant(const RationalMatrix& m);
// Throws std::domain_error when singular.
RationalMatrix inverse(const RationalMatrix& m);
Rational trace(const RationalMatrix& m);

// nhat_ij = (-1)^(j-1)/(i+j-1)!, ghat_ij = (-1)^(j-1)/(i+j+1)!, 1-based i, j.
RationalMatrix nhat(int n);
RationalMatrix ghat(int n);
RationalMatrix nhat_inverse_closed(int n);

Rational det_nhat(int n);
// prod_{j<n} j! / prod_{j=n}^{2n-1} j!
Rational det_formula(int n);

// prod over Young-diagram rows of det_formula(row length)
Rational leading_constant_exact(std::span<const int> rows);

// (tr(nhat^-1 ghat), n / (2(4n^2 - 1)))
std::pair<Rational, Rational> trace_identity(int n);

Rational comb_identity_A(int n);
Rational comb_identity_B(int n);

// (sum_{j=1}^k (-1)^j C(n+k, n+j), -C(n+k-1, k-1))
std::pair<Rational, Rational> partial_alternating_sum(int n, int k);

// H_ij = 1/(a_i - b_j)
RationalMatrix hilbert_matrix(std::span<const Rational> a, std::span<const Rational> b);

struct HilbertInverse {
  RationalMatrix inverse;         // closed form
  std::vector<Rational> row_sums; // closed form
};

// Throws std::invalid_argument if the parameters are not pairwise distinct.
HilbertInverse hilbert_inverse(std::span<const Rational> a, std::span<const Rational> b);

struct IdentityCheck {
  std::string identity;
  std::string range;
  bool pass = false;
};

// Runs every identity over its range, capped at nmax.
std::vector<IdentityCheck> verify_identities(int nmax);

}  // namespace geoflow
