#include "geoflow/jet.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace geoflow {

namespace {

long encode(const std::vector<int>& e, int base) {
  long key = 0;
  for (int v : e) key = key * base + v;
  return key;
}

void enumerate(int n, int remaining, std::vector<int>& cur, int var, std::vector<std::vector<int>>& out) {
  if (var == n) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int d = remaining; d >= 0; --d) {
    cur[static_cast<std::size_t>(var)] = d;
    enumerate(n, remaining - d, cur, var + 1, out);
  }
  cur[static_cast<std::size_t>(var)] = 0;
}

}  // namespace

JetSpace::JetSpace(int n, int order) : n_(n), order_(order) {
  if (n < 1 || order < 0) throw std::invalid_argument("bad jet space");
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  for (int d = 0; d <= order; ++d) enumerate(n, d, cur, 0, exps_);
  std::unordered_map<long, int> lookup;
  for (std::size_t m = 0; m < exps_.size(); ++m) {
    int d = 0;
    for (int v : exps_[m]) d += v;
    deg_.push_back(d);
    lookup[encode(exps_[m], order + 1)] = static_cast<int>(m);
  }
  std::vector<int> sum(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < exps_.size(); ++a) {
    for (std::size_t b = 0; b < exps_.size() && deg_[a] + deg_[b] <= order; ++b) {
      for (int i = 0; i < n; ++i) sum[static_cast<std::size_t>(i)] = exps_[a][static_cast<std::size_t>(i)] + exps_[b][static_cast<std::size_t>(i)];
      prod_.push_back({static_cast<int>(a), static_cast<int>(b), lookup.at(encode(sum, order + 1))});
    }
  }
  deriv_.resize(static_cast<std::size_t>(n));
  for (int var = 0; var < n; ++var) {
    auto& d = deriv_[static_cast<std::size_t>(var)];
    for (const auto& e : exps_) {
      int p = e[static_cast<std::size_t>(var)];
      if (p == 0) {
        d.emplace_back(-1, 0.0);
        continue;
      }
      std::vector<int> lower = e;
      --lower[static_cast<std::size_t>(var)];
      d.emplace_back(lookup.at(encode(lower, order + 1)), static_cast<double>(p));
    }
  }
}

int JetSpace::index(const std::vector<int>& e) const {
  int d = 0;
  for (int v : e) d += v;
  if (d > order_ || static_cast<int>(e.size()) != n_) return -1;
  for (std::size_t m = 0; m < exps_.size(); ++m) {
    if (exps_[m] == e) return static_cast<int>(m);
  }
  return -1;
}

Jet::Jet(std::shared_ptr<const JetSpace> space, double c) : space_(std::move(space)), c_(space_->size(), 0.0) {
  c_[0] = c;
}

Jet Jet::coordinate(std::shared_ptr<const JetSpace> space, int var, double value) {
  Jet j(space, value);
  std::vector<int> e(static_cast<std::size_t>(space->n()), 0);
  e[static_cast<std::size_t>(var)] = 1;
  int m = space->index(e);
  if (m >= 0) j.c_[static_cast<std::size_t>(m)] = 1.0;
  return j;
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t m = 0; m < c_.size(); ++m) c_[m] += o.c_[m];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t m = 0; m < c_.size(); ++m) c_[m] -= o.c_[m];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.space_);
  for (const auto& t : a.space_->products()) {
    r.c_[static_cast<std::size_t>(t.c)] += a.c_[static_cast<std::size_t>(t.a)] * b.c_[static_cast<std::size_t>(t.b)];
  }
  return r;
}

Jet Jet::operator-() const {
  Jet r = *this;
  r *= -1.0;
  return r;
}

Jet Jet::derivative(int var) const {
  Jet r(space_);
  const auto& d = space_->derivative(var);
  for (std::size_t m = 0; m < c_.size(); ++m) {
    if (d[m].first >= 0) r.c_[static_cast<std::size_t>(d[m].first)] += d[m].second * c_[m];
  }
  return r;
}

Jet compose(const Jet& x, std::span<const double> taylor) {
  Jet nil = x;
  nil[0] = 0.0;
  Jet r(x.space(), taylor[0]);
  Jet p = nil;
  const int order = x.space()->order();
  for (int k = 1; k <= order && k < static_cast<int>(taylor.size()); ++k) {
    r += p * taylor[static_cast<std::size_t>(k)];
    if (k < order) p = p * nil;
  }
  return r;
}

namespace {

// (a + N)^r = a^r sum_k binom(r, k) (N/a)^k
Jet binomial_series(const Jet& x, double r) {
  const double a = x.value();
  if (a == 0.0) throw std::domain_error("jet power at zero");
  const int order = x.space()->order();
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  double coef = std::pow(a, r);
  for (int k = 0; k <= order; ++k) {
    t[static_cast<std::size_t>(k)] = coef;
    coef *= (r - k) / ((k + 1) * a);
  }
  return compose(x, t);
}

}  // namespace

Jet pow(const Jet& x, int e) {
  if (e < 0) return binomial_series(x, e);
  Jet r(x.space(), 1.0);
  Jet b = x;
  while (e > 0) {
    if (e & 1) r = r * b;
    e >>= 1;
    if (e > 0) b = b * b;
  }
  return r;
}

Jet sin(const Jet& x) {
  const int order = x.space()->order();
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  double s = std::sin(x.value()), c = std::cos(x.value());
  double d[4] = {s, c, -s, -c};
  double f = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) f *= k;
    t[static_cast<std::size_t>(k)] = d[k % 4] / f;
  }
  return compose(x, t);
}

Jet cos(const Jet& x) {
  const int order = x.space()->order();
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  double s = std::sin(x.value()), c = std::cos(x.value());
  double d[4] = {c, -s, -c, s};
  double f = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) f *= k;
    t[static_cast<std::size_t>(k)] = d[k % 4] / f;
  }
  return compose(x, t);
}

Jet exp(const Jet& x) {
  const int order = x.space()->order();
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  double v = std::exp(x.value());
  for (int k = 0; k <= order; ++k) {
    t[static_cast<std::size_t>(k)] = v;
    v /= (k + 1);
  }
  return compose(x, t);
}

Jet log(const Jet& x) {
  const double a = x.value();
  if (!(a > 0.0)) throw std::domain_error("jet log of non-positive value");
  const int order = x.space()->order();
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  t[0] = std::log(a);
  double ak = 1.0;
  for (int k = 1; k <= order; ++k) {
    ak *= a;
    t[static_cast<std::size_t>(k)] = (k % 2 == 1 ? 1.0 : -1.0) / (k * ak);
  }
  return compose(x, t);
}

Jet sqrt(const Jet& x) {
  if (!(x.value() > 0.0)) throw std::domain_error("jet sqrt of non-positive value");
  return binomial_series(x, 0.5);
}

namespace {

using JetMemo = std::unordered_map<const Node*, Jet>;

Jet eval_memo(const Expr& e, const std::shared_ptr<const JetSpace>& space, const Eigen::VectorXd& at, JetMemo& memo) {
  std::function<Jet(const Expr&)> rec = [&](const Expr& f) -> Jet {
    auto it = memo.find(f.node());
    if (it != memo.end()) return it->second;
    Jet r;
    switch (f.kind()) {
      case NodeKind::Constant:
        r = Jet(space, f.value());
        break;
      case NodeKind::Variable:
        if (f.index() >= space->n()) throw std::invalid_argument("jet evaluation of a non-chart variable");
        r = Jet::coordinate(space, f.index(), at(f.index()));
        break;
      case NodeKind::Sum:
        r = Jet(space);
        for (const Expr& a : f.args()) r += rec(a);
        break;
      case NodeKind::Product:
        r = Jet(space, 1.0);
        for (const Expr& a : f.args()) r = r * rec(a);
        break;
      case NodeKind::Quotient:
        r = rec(f.args()[0]) * pow(rec(f.args()[1]), -1);
        break;
      case NodeKind::Negation:
        r = -rec(f.args()[0]);
        break;
      case NodeKind::Power:
        r = pow(rec(f.args()[0]), f.exponent());
        break;
      case NodeKind::Sin:
        r = sin(rec(f.args()[0]));
        break;
      case NodeKind::Cos:
        r = cos(rec(f.args()[0]));
        break;
      case NodeKind::Exp:
        r = exp(rec(f.args()[0]));
        break;
      case NodeKind::Log:
        r = log(rec(f.args()[0]));
        break;
      case NodeKind::Sqrt:
        r = sqrt(rec(f.args()[0]));
        break;
    }
    memo.emplace(f.node(), r);
    return r;
  };
  return rec(e);
}

}  // namespace

Jet eval_jet(const Expr& e, std::shared_ptr<const JetSpace> space, const Eigen::VectorXd& at) {
  JetMemo memo;
  return eval_memo(e, space, at, memo);
}

JetField eval_jet(const VectorField& v, std::shared_ptr<const JetSpace> space, const Eigen::VectorXd& at) {
  JetMemo memo;
  JetField out;
  out.reserve(v.size());
  for (const Expr& c : v) out.push_back(eval_memo(c, space, at, memo));
  return out;
}

JetField bracket(const JetField& v, const JetField& w) {
  const std::size_t n = v.size();
  JetField out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Jet r(v[j].space());
    for (std::size_t i = 0; i < n; ++i) {
      r += v[i] * w[j].derivative(static_cast<int>(i));
      r -= w[i] * v[j].derivative(static_cast<int>(i));
    }
    out.push_back(std::move(r));
  }
  return out;
}

Eigen::VectorXd values(const JetField& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].value();
  return out;
}

}  // namespace geoflow
