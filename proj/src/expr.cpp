#include "geoflow/expr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <utility>

namespace geoflow {

namespace {

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finalizer over the running state
  std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_node(const Node& n) {
  std::uint64_t h = mix(0x51ed270b27c1f2a3ULL, static_cast<std::uint64_t>(n.kind));
  switch (n.kind) {
    case NodeKind::Constant: {
      double v = n.value == 0.0 ? 0.0 : n.value;  // fold -0.0
      h = mix(h, std::bit_cast<std::uint64_t>(v));
      break;
    }
    case NodeKind::Variable:
    case NodeKind::Power:
      h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.index)));
      break;
    default:
      break;
  }
  for (const Expr& a : n.args) h = mix(h, a.hash());
  return h;
}

double apply_function(NodeKind k, double x) {
  switch (k) {
    case NodeKind::Sin: return std::sin(x);
    case NodeKind::Cos: return std::cos(x);
    case NodeKind::Exp: return std::exp(x);
    case NodeKind::Log: return std::log(x);
    case NodeKind::Sqrt: return std::sqrt(x);
    default: return std::nan("");
  }
}

double int_pow(double b, int k) {
  if (k < 0) return 1.0 / int_pow(b, -k);
  double r = 1.0;
  double p = b;
  unsigned e = static_cast<unsigned>(k);
  while (e != 0U) {
    if ((e & 1U) != 0U) r *= p;
    p *= p;
    e >>= 1U;
  }
  return r;
}

int kind_rank(NodeKind k) {
  switch (k) {
    case NodeKind::Constant: return 0;
    case NodeKind::Variable: return 1;
    case NodeKind::Power: return 2;
    case NodeKind::Product: return 3;
    case NodeKind::Sum: return 4;
    default: return 5 + static_cast<int>(k);
  }
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
  if (a.kind() == NodeKind::Constant) return a.value() == b.value();
  if (a.index() != b.index() || a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    if (!structurally_equal(a.args()[i], b.args()[i])) return false;
  }
  return true;
}

// Splits a term into numeric coefficient and the remaining factor list.
std::pair<double, Expr> split_coefficient(const Expr& e) {
  if (e.is_constant()) return {e.value(), Expr(1.0)};
  if (e.kind() == NodeKind::Product && !e.args().empty() && e.args().front().is_constant()) {
    const auto& a = e.args();
    if (a.size() == 2) return {a[0].value(), a[1]};
    std::vector<Expr> rest(a.begin() + 1, a.end());
    return {a[0].value(), Expr::raw(NodeKind::Product, std::move(rest))};
  }
  return {1.0, e};
}

std::pair<Expr, int> split_power(const Expr& e) {
  if (e.kind() == NodeKind::Power) return {e.args()[0], e.exponent()};
  return {e, 1};
}

// Equality-keyed bucket keyed on hash, preserving first-seen order.
template <typename Value>
class ExprTable {
public:
  Value& operator[](const Expr& key) {
    auto& bucket = index_[key.hash()];
    for (std::size_t slot : bucket) {
      if (structurally_equal(entries_[slot].first, key)) return entries_[slot].second;
    }
    bucket.push_back(entries_.size());
    entries_.emplace_back(key, Value{});
    return entries_.back().second;
  }
  std::vector<std::pair<Expr, Value>>& entries() { return entries_; }

private:
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> index_;
  std::vector<std::pair<Expr, Value>> entries_;
};

Expr make_power(const Expr& base, int k);

Expr make_product(std::span<const Expr> factors) {
  double coeff = 1.0;
  ExprTable<int> powers;
  std::vector<Expr> stack(factors.rbegin(), factors.rend());
  while (!stack.empty()) {
    Expr f = std::move(stack.back());
    stack.pop_back();
    switch (f.kind()) {
      case NodeKind::Constant:
        coeff *= f.value();
        break;
      case NodeKind::Product:
        for (auto it = f.args().rbegin(); it != f.args().rend(); ++it) stack.push_back(*it);
        break;
      case NodeKind::Negation:
        coeff = -coeff;
        stack.push_back(f.args()[0]);
        break;
      case NodeKind::Quotient:
        stack.push_back(make_power(f.args()[1], -1));
        stack.push_back(f.args()[0]);
        break;
      default: {
        auto [b, k] = split_power(f);
        powers[b] += k;
        break;
      }
    }
  }
  if (coeff == 0.0) return Expr(0.0);
  std::vector<Expr> out;
  for (auto& [b, k] : powers.entries()) {
    if (k == 0) continue;
    Expr p = make_power(b, k);
    if (p.is_constant()) {
      coeff *= p.value();
    } else if (p.kind() == NodeKind::Product) {
      // (c*x)^k splits into coefficient and factors again
      auto [c, rest] = split_coefficient(p);
      coeff *= c;
      if (rest.kind() == NodeKind::Product) {
        out.insert(out.end(), rest.args().begin(), rest.args().end());
      } else {
        out.push_back(rest);
      }
    } else {
      out.push_back(p);
    }
  }
  if (coeff == 0.0) return Expr(0.0);
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (out.empty()) return Expr(coeff);
  if (out.size() == 1 && coeff == 1.0) return out.front();
  if (coeff != 1.0) out.insert(out.begin(), Expr(coeff));
  return Expr::raw(NodeKind::Product, std::move(out));
}

Expr make_sum(std::span<const Expr> terms) {
  double constant = 0.0;
  ExprTable<double> coeffs;
  std::vector<Expr> stack(terms.rbegin(), terms.rend());
  while (!stack.empty()) {
    Expr t = std::move(stack.back());
    stack.pop_back();
    if (t.is_constant()) {
      constant += t.value();
    } else if (t.kind() == NodeKind::Sum) {
      for (auto it = t.args().rbegin(); it != t.args().rend(); ++it) stack.push_back(*it);
    } else if (t.kind() == NodeKind::Negation) {
      stack.push_back(make_product(std::vector<Expr>{Expr(-1.0), t.args()[0]}));
    } else {
      auto [c, rest] = split_coefficient(t);
      coeffs[rest] += c;
    }
  }
  std::vector<Expr> out;
  for (auto& [rest, c] : coeffs.entries()) {
    if (c == 0.0) continue;
    if (c == 1.0) {
      out.push_back(rest);
    } else if (rest.kind() == NodeKind::Product) {
      std::vector<Expr> f;
      f.reserve(rest.args().size() + 1);
      f.emplace_back(c);
      f.insert(f.end(), rest.args().begin(), rest.args().end());
      out.push_back(Expr::raw(NodeKind::Product, std::move(f)));
    } else {
      out.push_back(Expr::raw(NodeKind::Product, {Expr(c), rest}));
    }
  }
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (constant != 0.0 || out.empty()) out.insert(out.begin(), Expr(constant));
  if (out.size() == 1) return out.front();
  return Expr::raw(NodeKind::Sum, std::move(out));
}

Expr make_power(const Expr& base, int k) {
  if (k == 0) return Expr(1.0);
  if (k == 1) return base;
  if (base.is_constant()) {
    double v = int_pow(base.value(), k);
    if (std::isfinite(v)) return Expr(v);
    return Expr::raw(NodeKind::Power, {base}, k);
  }
  switch (base.kind()) {
    case NodeKind::Power:
      return make_power(base.args()[0], base.exponent() * k);
    case NodeKind::Product: {
      std::vector<Expr> f;
      f.reserve(base.args().size());
      for (const Expr& a : base.args()) f.push_back(make_power(a, k));
      return make_product(f);
    }
    case NodeKind::Negation:
      return make_product(std::vector<Expr>{Expr(k % 2 == 0 ? 1.0 : -1.0), make_power(base.args()[0], k)});
    case NodeKind::Quotient:
      return make_product(std::vector<Expr>{make_power(base.args()[0], k), make_power(base.args()[1], -k)});
    default:
      return Expr::raw(NodeKind::Power, {base}, k);
  }
}

Expr make_function(NodeKind kind, const Expr& a) {
  if (a.is_constant()) {
    double v = apply_function(kind, a.value());
    if (std::isfinite(v)) return Expr(v);
  }
  return Expr::raw(kind, {a});
}

}  // namespace

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double c) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = c == 0.0 ? 0.0 : c;
  n->hash = hash_node(*n);
  node_ = std::move(n);
}

Expr Expr::constant(double c) { return Expr(c); }

Expr Expr::variable(int index) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->index = index;
  n->hash = hash_node(*n);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::raw(NodeKind kind, std::vector<Expr> args, int index) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->index = index;
  n->args = std::move(args);
  n->hash = hash_node(*n);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

bool operator==(const Expr& a, const Expr& b) { return structurally_equal(a, b); }

int compare(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return 0;
  int ra = kind_rank(a.kind());
  int rb = kind_rank(b.kind());
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind()) {
    case NodeKind::Constant:
      if (a.value() == b.value()) return 0;
      return a.value() < b.value() ? -1 : 1;
    case NodeKind::Variable:
      if (a.index() == b.index()) return 0;
      return a.index() < b.index() ? -1 : 1;
    case NodeKind::Power: {
      int c = compare(a.args()[0], b.args()[0]);
      if (c != 0) return c;
      if (a.exponent() == b.exponent()) return 0;
      return a.exponent() < b.exponent() ? -1 : 1;
    }
    default:
      break;
  }
  if (a.hash() != b.hash()) return a.hash() < b.hash() ? -1 : 1;
  if (structurally_equal(a, b)) return 0;
  // Hash collision between distinct trees: fall back to a deep lexicographic order.
  if (a.args().size() != b.args().size()) return a.args().size() < b.args().size() ? -1 : 1;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    int c = compare(a.args()[i], b.args()[i]);
    if (c != 0) return c;
  }
  return a.index() < b.index() ? -1 : (a.index() > b.index() ? 1 : 0);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return make_sum(std::vector<Expr>{a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  return make_sum(std::vector<Expr>{a, -b});
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return make_product(std::vector<Expr>{a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant() && b.value() != 0.0) return a * Expr(1.0 / b.value());
  if (b.is_constant()) return Expr::raw(NodeKind::Quotient, {a, b});
  if (a.is_constant(0.0)) return Expr(0.0);
  if (a == b) return Expr(1.0);
  return a * make_power(b, -1);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.value());
  return make_product(std::vector<Expr>{Expr(-1.0), a});
}

Expr pow(const Expr& base, int exponent) { return make_power(base, exponent); }
Expr sin(const Expr& a) { return make_function(NodeKind::Sin, a); }
Expr cos(const Expr& a) { return make_function(NodeKind::Cos, a); }
Expr exp(const Expr& a) { return make_function(NodeKind::Exp, a); }
Expr log(const Expr& a) { return make_function(NodeKind::Log, a); }
Expr sqrt(const Expr& a) { return make_function(NodeKind::Sqrt, a); }

Expr sum(std::span<const Expr> terms) { return make_sum(terms); }
Expr product(std::span<const Expr> factors) { return make_product(factors); }

namespace {

class Differentiator {
public:
  explicit Differentiator(int var) : var_(var) {}

  const Expr& run(const Expr& e) {
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second.second;
    Expr d = compute(e);
    auto [it, inserted] = memo_.emplace(e.node(), std::make_pair(e, std::move(d)));
    return it->second.second;
  }

private:
  Expr compute(const Expr& e) {
    const auto& a = e.args();
    switch (e.kind()) {
      case NodeKind::Constant:
        return Expr(0.0);
      case NodeKind::Variable:
        return Expr(e.index() == var_ ? 1.0 : 0.0);
      case NodeKind::Sum: {
        std::vector<Expr> terms;
        for (const Expr& t : a) {
          const Expr& dt = run(t);
          if (!dt.is_constant(0.0)) terms.push_back(dt);
        }
        return make_sum(terms);
      }
      case NodeKind::Product: {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < a.size(); ++i) {
          const Expr& di = run(a[i]);
          if (di.is_constant(0.0)) continue;
          std::vector<Expr> f;
          f.reserve(a.size());
          for (std::size_t j = 0; j < a.size(); ++j) f.push_back(j == i ? di : a[j]);
          terms.push_back(make_product(f));
        }
        return make_sum(terms);
      }
      case NodeKind::Quotient: {
        const Expr& da = run(a[0]);
        const Expr& db = run(a[1]);
        return da / a[1] - a[0] * db * pow(a[1], -2);
      }
      case NodeKind::Negation:
        return -run(a[0]);
      case NodeKind::Power: {
        const Expr& db = run(a[0]);
        if (db.is_constant(0.0)) return Expr(0.0);
        int k = e.exponent();
        return Expr(static_cast<double>(k)) * pow(a[0], k - 1) * db;
      }
      case NodeKind::Sin:
        return chain(a[0], cos(a[0]));
      case NodeKind::Cos:
        return chain(a[0], -sin(a[0]));
      case NodeKind::Exp:
        return chain(a[0], e);
      case NodeKind::Log:
        return chain(a[0], pow(a[0], -1));
      case NodeKind::Sqrt:
        return chain(a[0], Expr(0.5) * pow(e, -1));
    }
    return Expr(0.0);
  }

  Expr chain(const Expr& inner, const Expr& outer_derivative) {
    const Expr& d = run(inner);
    if (d.is_constant(0.0)) return Expr(0.0);
    return outer_derivative * d;
  }

  int var_;
  std::unordered_map<const Node*, std::pair<Expr, Expr>> memo_;
};

class Simplifier {
public:
  const Expr& run(const Expr& e) {
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second.second;
    Expr s = compute(e);
    auto [it, inserted] = memo_.emplace(e.node(), std::make_pair(e, std::move(s)));
    return it->second.second;
  }

private:
  Expr compute(const Expr& e) {
    std::vector<Expr> a;
    a.reserve(e.args().size());
    for (const Expr& c : e.args()) a.push_back(run(c));
    switch (e.kind()) {
      case NodeKind::Constant:
      case NodeKind::Variable:
        return e;
      case NodeKind::Sum:
        return make_sum(a);
      case NodeKind::Product:
        return make_product(a);
      case NodeKind::Quotient:
        return a[0] / a[1];
      case NodeKind::Negation:
        return -a[0];
      case NodeKind::Power:
        return make_power(a[0], e.exponent());
      default:
        return make_function(e.kind(), a[0]);
    }
  }

  std::unordered_map<const Node*, std::pair<Expr, Expr>> memo_;
};

class Evaluator {
public:
  explicit Evaluator(std::span<const double> point) : point_(point) {}

  double run(const Expr& e) {
    if (e.is_constant()) return e.value();
    if (e.kind() == NodeKind::Variable) return point_[static_cast<std::size_t>(e.index())];
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
    double v = compute(e);
    memo_.emplace(e.node(), v);
    return v;
  }

private:
  double compute(const Expr& e) {
    const auto& a = e.args();
    switch (e.kind()) {
      case NodeKind::Sum: {
        double s = 0.0;
        for (const Expr& t : a) s += run(t);
        return s;
      }
      case NodeKind::Product: {
        double p = 1.0;
        for (const Expr& t : a) p *= run(t);
        return p;
      }
      case NodeKind::Quotient:
        return run(a[0]) / run(a[1]);
      case NodeKind::Negation:
        return -run(a[0]);
      case NodeKind::Power:
        return int_pow(run(a[0]), e.exponent());
      default:
        return apply_function(e.kind(), run(a[0]));
    }
  }

  std::span<const double> point_;
  std::unordered_map<const Node*, double> memo_;
};

class Expander {
public:
  const Expr& run(const Expr& e) {
    if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second.second;
    Expr s = compute(e);
    auto [it, inserted] = memo_.emplace(e.node(), std::make_pair(e, std::move(s)));
    return it->second.second;
  }

private:
  static std::vector<Expr> terms_of(const Expr& e) {
    if (e.kind() == NodeKind::Sum) return e.args();
    return {e};
  }

  static Expr multiply(const Expr& a, const Expr& b) {
    std::vector<Expr> out;
    for (const Expr& x : terms_of(a)) {
      for (const Expr& y : terms_of(b)) out.push_back(x * y);
    }
    return make_sum(out);
  }

  Expr compute(const Expr& e) {
    switch (e.kind()) {
      case NodeKind::Constant:
      case NodeKind::Variable:
        return e;
      case NodeKind::Sum: {
        std::vector<Expr> a;
        for (const Expr& c : e.args()) a.push_back(run(c));
        return make_sum(a);
      }
      case NodeKind::Product: {
        Expr acc(1.0);
        for (const Expr& c : e.args()) acc = multiply(acc, run(c));
        return acc;
      }
      case NodeKind::Quotient:
        return multiply(run(e.args()[0]), make_power(run(e.args()[1]), -1));
      case NodeKind::Negation:
        return multiply(Expr(-1.0), run(e.args()[0]));
      case NodeKind::Power: {
        Expr b = run(e.args()[0]);
        int k = e.exponent();
        if (k <= 1 || b.kind() != NodeKind::Sum) return make_power(b, k);
        Expr acc = b;
        for (int i = 1; i < k; ++i) acc = multiply(acc, b);
        return acc;
      }
      default:
        return make_function(e.kind(), run(e.args()[0]));
    }
  }

  std::unordered_map<const Node*, std::pair<Expr, Expr>> memo_;
};

void collect_nodes(const Expr& e, std::unordered_map<const Node*, int>& seen, int& max_var) {
  if (!seen.emplace(e.node(), 0).second) return;
  if (e.kind() == NodeKind::Variable) max_var = std::max(max_var, e.index());
  for (const Expr& a : e.args()) collect_nodes(a, seen, max_var);
}

int precedence(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant: return e.value() < 0.0 ? 1 : 5;
    case NodeKind::Variable: return 5;
    case NodeKind::Sum: return 1;
    case NodeKind::Product:
    case NodeKind::Quotient: return 2;
    case NodeKind::Negation: return 1;
    case NodeKind::Power: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, std::span<const std::string> names, std::string& out);

void print_wrapped(const Expr& e, int min_prec, std::span<const std::string> names, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, names, out);
    out += ')';
  } else {
    print(e, names, out);
  }
}

const char* function_name(NodeKind k) {
  switch (k) {
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
    case NodeKind::Sqrt: return "sqrt";
    default: return "?";
  }
}

void print(const Expr& e, std::span<const std::string> names, std::string& out) {
  const auto& a = e.args();
  switch (e.kind()) {
    case NodeKind::Constant:
      out += format_number(e.value());
      return;
    case NodeKind::Variable: {
      auto i = static_cast<std::size_t>(e.index());
      out += i < names.size() ? names[i] : "v" + std::to_string(i);
      return;
    }
    case NodeKind::Sum:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i > 0) out += " + ";
        print_wrapped(a[i], 2, names, out);
      }
      return;
    case NodeKind::Product:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i > 0) out += "*";
        print_wrapped(a[i], 3, names, out);
      }
      return;
    case NodeKind::Quotient:
      print_wrapped(a[0], 2, names, out);
      out += "/";
      print_wrapped(a[1], 3, names, out);
      return;
    case NodeKind::Negation:
      out += "-";
      print_wrapped(a[0], 2, names, out);
      return;
    case NodeKind::Power:
      print_wrapped(a[0], 5, names, out);
      out += "^" + std::to_string(e.exponent());
      return;
    default:
      out += function_name(e.kind());
      out += "(";
      print(a[0], names, out);
      out += ")";
      return;
  }
}

}  // namespace

Expr diff(const Expr& e, int var) {
  Differentiator d(var);
  return d.run(e);
}

Expr simplify(const Expr& e) {
  Simplifier s;
  return s.run(e);
}

Expr expand(const Expr& e) {
  Expander x;
  return x.run(e);
}

double eval(const Expr& e, std::span<const double> point) {
  Evaluator ev(point);
  return ev.run(e);
}

std::size_t node_count(const Expr& e) {
  std::unordered_map<const Node*, int> seen;
  int max_var = -1;
  collect_nodes(e, seen, max_var);
  return seen.size();
}

int max_variable(const Expr& e) {
  std::unordered_map<const Node*, int> seen;
  int max_var = -1;
  collect_nodes(e, seen, max_var);
  return max_var;
}

std::string to_string(const Expr& e, std::span<const std::string> names) {
  std::string out;
  print(e, names, out);
  return out;
}

std::vector<std::string> chart_names(int n) {
  std::vector<std::string> v;
  for (int i = 1; i <= n; ++i) v.push_back("x" + std::to_string(i));
  return v;
}

std::vector<std::string> phase_names(int n) {
  std::vector<std::string> v = chart_names(n);
  for (int i = 1; i <= n; ++i) v.push_back("p" + std::to_string(i));
  return v;
}

}  // namespace geoflow
