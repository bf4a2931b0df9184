#include "geoflow/exact.hpp"

#include <stdexcept>

namespace geoflow {

namespace {

Rational sign(int k) { return (k % 2 == 0) ? Rational(1) : Rational(-1); }

Rational q(const Integer& num, const Integer& den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

// Rows scaled to integers: m = diag(1/scale) * ints.
struct Integerized {
  std::vector<std::vector<Integer>> rows;
  std::vector<Integer> scale;
};

Integerized integerize(const RationalMatrix& m) {
  Integerized out;
  for (int i = 0; i < m.rows(); ++i) {
    Integer l = 1;
    for (int j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).get_den_mpz_t());
    std::vector<Integer> row;
    for (int j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j).get_num() * (l / m(i, j).get_den()));
    out.rows.push_back(std::move(row));
    out.scale.push_back(l);
  }
  return out;
}

// Bareiss forward elimination in place over rows of width >= n; returns the
// determinant of the leading n x n block (sign included).
Integer bareiss(std::vector<std::vector<Integer>>& a, int n) {
  Integer prev = 1;
  int swaps = 0;
  const std::size_t width = a.empty() ? 0 : a[0].size();
  for (int k = 0; k < n; ++k) {
    int piv = k;
    while (piv < n && a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(k)] == 0) ++piv;
    if (piv == n) return 0;
    if (piv != k) {
      std::swap(a[static_cast<std::size_t>(piv)], a[static_cast<std::size_t>(k)]);
      ++swaps;
    }
    const auto& pk = a[static_cast<std::size_t>(k)];
    for (int i = k + 1; i < n; ++i) {
      auto& ai = a[static_cast<std::size_t>(i)];
      for (std::size_t j = static_cast<std::size_t>(k) + 1; j < width; ++j) {
        ai[j] = pk[static_cast<std::size_t>(k)] * ai[j] - ai[static_cast<std::size_t>(k)] * pk[j];
        mpz_divexact(ai[j].get_mpz_t(), ai[j].get_mpz_t(), prev.get_mpz_t());
      }
      ai[static_cast<std::size_t>(k)] = 0;
    }
    prev = pk[static_cast<std::size_t>(k)];
  }
  Integer det = a[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(n - 1)];
  return swaps % 2 == 0 ? det : Integer(-det);
}

}  // namespace

std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Integer factorial(int n) {
  if (n < 0) throw std::domain_error("factorial of a negative number");
  Integer f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
  return f;
}

Integer binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) return 0;
  Integer b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return b;
}

RationalMatrix RationalMatrix::identity(int n) {
  RationalMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

bool operator==(const RationalMatrix& a, const RationalMatrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix shape mismatch");
  RationalMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      Rational s = 0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

Rational determinant(const RationalMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant of a non-square matrix");
  if (m.rows() == 0) return 1;
  Integerized z = integerize(m);
  Integer d = bareiss(z.rows, m.rows());
  Integer s = 1;
  for (const Integer& x : z.scale) s *= x;
  return q(d, s);
}

RationalMatrix inverse(const RationalMatrix& m) {
  const int n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("inverse of a non-square matrix");
  Integerized z = integerize(m);
  for (int i = 0; i < n; ++i) {
    auto& row = z.rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) row.emplace_back(i == j ? 1 : 0);
  }
  Integer det = bareiss(z.rows, n);
  if (det == 0) throw std::domain_error("singular matrix");
  // Back substitution for X = det * A'^-1, which is integral (the adjugate).
  std::vector<std::vector<Integer>> x(static_cast<std::size_t>(n), std::vector<Integer>(static_cast<std::size_t>(n)));
  for (int c = 0; c < n; ++c) {
    for (int i = n - 1; i >= 0; --i) {
      const auto& row = z.rows[static_cast<std::size_t>(i)];
      Integer acc = det * row[static_cast<std::size_t>(n + c)];
      for (int j = i + 1; j < n; ++j) acc -= row[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      const Integer& piv = row[static_cast<std::size_t>(i)];
      if (mpz_divisible_p(acc.get_mpz_t(), piv.get_mpz_t()) == 0) throw std::logic_error("inexact back substitution");
      mpz_divexact(acc.get_mpz_t(), acc.get_mpz_t(), piv.get_mpz_t());
      x[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = acc;
    }
  }
  // A = S^-1 A' so A^-1 = A'^-1 S: column c picks up scale[c].
  RationalMatrix inv(n, n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < n; ++c) {
      inv(i, c) = q(x[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] * z.scale[static_cast<std::size_t>(c)], det);
    }
  }
  return inv;
}

Rational trace(const RationalMatrix& m) {
  Rational s = 0;
  for (int i = 0; i < std::min(m.rows(), m.cols()); ++i) s += m(i, i);
  return s;
}

RationalMatrix nhat(int n) {
  RationalMatrix m(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) m(i - 1, j - 1) = sign(j - 1) / Rational(factorial(i + j - 1));
  }
  return m;
}

RationalMatrix ghat(int n) {
  RationalMatrix m(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) m(i - 1, j - 1) = sign(j - 1) / Rational(factorial(i + j + 1));
  }
  return m;
}

RationalMatrix nhat_inverse_closed(int n) {
  RationalMatrix m(n, n);
  const Integer nf2 = factorial(n) * factorial(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      Rational s = 0;
      for (int k = j; k <= n; ++k) {
        Integer num = binomial(n + i - 1, i - 1) * binomial(n + k - 1, k - 1) * nf2;
        Integer den = Integer(i + k - 1) * factorial(k - j) * factorial(n - i) * factorial(n - k);
        s += sign(k - j) * q(num, den);
      }
      m(i - 1, j - 1) = s;
    }
  }
  return m;
}

Rational det_nhat(int n) { return determinant(nhat(n)); }

Rational det_formula(int n) {
  Integer num = 1;
  Integer den = 1;
  for (int j = 0; j < n; ++j) num *= factorial(j);
  for (int j = n; j <= 2 * n - 1; ++j) den *= factorial(j);
  return q(num, den);
}

Rational leading_constant_exact(std::span<const int> rows) {
  Rational c = 1;
  for (int r : rows) {
    if (r < 1) throw std::invalid_argument("Young diagram rows must be positive");
    c *= det_formula(r);
  }
  return c;
}

std::pair<Rational, Rational> trace_identity(int n) {
  Rational lhs = trace(inverse(nhat(n)) * ghat(n));
  Rational rhs = q(Integer(n), Integer(2 * (4 * n * n - 1)));
  return {lhs, rhs};
}

Rational comb_identity_A(int n) {
  Rational s = 0;
  for (int k = 1; k <= n; ++k) {
    Integer b = binomial(n + k - 1, k - 1);
    s += sign(n + k) * q(binomial(2 * n, n - k) * b * b, Integer(n + k - 2));
  }
  return s;
}

Rational comb_identity_B(int n) {
  Rational s = 0;
  for (int k = 1; k <= n; ++k) {
    Integer b = binomial(n + k, k - 1);
    s += sign(n + k) * q(binomial(2 * n + 1, n - k) * b * b, Integer((n + k) * (n + k - 1)));
  }
  return s;
}

std::pair<Rational, Rational> partial_alternating_sum(int n, int k) {
  Rational lhs = 0;
  for (int j = 1; j <= k; ++j) lhs += sign(j) * Rational(binomial(n + k, n + j));
  return {lhs, Rational(-binomial(n + k - 1, k - 1))};
}

RationalMatrix hilbert_matrix(std::span<const Rational> a, std::span<const Rational> b) {
  const int n = static_cast<int>(a.size());
  RationalMatrix h(n, static_cast<int>(b.size()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < h.cols(); ++j) {
      Rational d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
      if (d == 0) throw std::invalid_argument("a_i = b_j makes the Hilbert matrix undefined");
      h(i, j) = 1 / d;
    }
  }
  return h;
}

HilbertInverse hilbert_inverse(std::span<const Rational> a, std::span<const Rational> b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("a and b must have equal length");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a[i] == b[j] || (i != j && (a[i] == a[j] || b[i] == b[j]))) {
        throw std::invalid_argument("Hilbert parameters must be pairwise distinct");
      }
    }
  }
  HilbertInverse out{RationalMatrix(static_cast<int>(n), static_cast<int>(n)), {}};
  for (std::size_t i = 0; i < n; ++i) {
    Rational pb = 1;  // prod_k (b_i - a_k)
    Rational qb = 1;  // prod_{l != i} (b_i - b_l)
    for (std::size_t k = 0; k < n; ++k) {
      pb *= b[i] - a[k];
      if (k != i) qb *= b[i] - b[k];
    }
    for (std::size_t j = 0; j < n; ++j) {
      Rational pa = 1;  // prod_k (a_j - b_k)
      Rational qa = 1;  // prod_{k != j} (a_j - a_k)
      for (std::size_t k = 0; k < n; ++k) {
        pa *= a[j] - b[k];
        if (k != j) qa *= a[j] - a[k];
      }
      out.inverse(static_cast<int>(i), static_cast<int>(j)) = pb * pa / ((b[i] - a[j]) * qa * qb);
    }
    out.row_sums.push_back(-pb / qb);
  }
  return out;
}

std::vector<IdentityCheck> verify_identities(int nmax) {
  std::vector<IdentityCheck> out;
  auto range = [](int lo, int hi) { return std::to_string(lo) + ".." + std::to_string(hi); };
  {
    bool ok = true;
    for (int n = 1; n <= nmax; ++n) ok = ok && det_nhat(n) == det_formula(n);
    out.push_back({"det nhat = factorial product", "n=" + range(1, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 2; n <= nmax; ++n) {
      Integer f = factorial(n - 1);
      ok = ok && det_nhat(n) / det_nhat(n - 1) == q(f * f, factorial(2 * n - 2) * factorial(2 * n - 1));
    }
    out.push_back({"det recursion", "n=" + range(2, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 1; n <= nmax; ++n) ok = ok && nhat_inverse_closed(n) == inverse(nhat(n));
    out.push_back({"closed-form nhat inverse", "n=" + range(1, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 1; n <= nmax; ++n) {
      auto [lhs, rhs] = trace_identity(n);
      ok = ok && lhs == rhs;
    }
    out.push_back({"tr(nhat^-1 ghat) = n/(2(4n^2-1))", "n=" + range(1, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 2; n <= nmax; ++n) ok = ok && comb_identity_A(n) == Rational(1, 2) && comb_identity_B(n) == Rational(1, 2);
    out.push_back({"alternating binomial sums = 1/2", "n=" + range(2, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 1; n <= nmax; ++n) {
      for (int k = 1; k <= nmax; ++k) {
        auto [lhs, rhs] = partial_alternating_sum(n, k);
        ok = ok && lhs == rhs;
      }
    }
    out.push_back({"alternating partial binomial sum", "n,k=" + range(1, nmax), ok});
  }
  {
    bool ok = true;
    for (int n = 1; n <= nmax; ++n) {
      std::vector<Rational> a;
      std::vector<Rational> b;
      for (int i = 1; i <= n; ++i) {
        a.emplace_back(i);
        b.emplace_back(1 - i);
      }
      HilbertInverse h = hilbert_inverse(a, b);
      RationalMatrix elim = inverse(hilbert_matrix(a, b));
      ok = ok && h.inverse == elim;
      for (int i = 0; i < n; ++i) {
        Rational s = 0;
        for (int j = 0; j < n; ++j) s += elim(i, j);
        ok = ok && s == h.row_sums[static_cast<std::size_t>(i)];
      }
      Integer f = factorial(n - 1);
      ok = ok && h.row_sums.back() == q(factorial(2 * n - 1), f * f);
    }
    out.push_back({"generalized Hilbert inverse and row sums", "n=" + range(1, nmax), ok});
  }
  {
    const std::vector<std::vector<int>> diagrams{{1, 1, 1}, {2, 1}, {3, 1}, {2, 2, 1}, {4, 2, 1}};
    bool ok = true;
    for (const auto& rows : diagrams) {
      Rational prod = 1;
      for (int r : rows) prod *= det_nhat(r);
      ok = ok && prod == leading_constant_exact(rows);
    }
    out.push_back({"leading constant = product of block determinants", "sample diagrams", ok});
  }
  return out;
}

}  // namespace geoflow
