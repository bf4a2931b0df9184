#include "geoflow/flag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace geoflow {

namespace {

Expr pairing(const VectorField& v, int n) {
  std::vector<Expr> terms;
  for (int j = 0; j < n; ++j) terms.push_back(Expr::variable(n + j) * v[static_cast<std::size_t>(j)]);
  return sum(terms);
}

// Truncated product of power series (index = power).
std::vector<double> series_mul(const std::vector<double>& a, const std::vector<double>& b, int order) {
  std::vector<double> r(static_cast<std::size_t>(order + 1), 0.0);
  for (int i = 0; i <= order; ++i) {
    if (a[static_cast<std::size_t>(i)] == 0.0) continue;
    for (int j = 0; i + j <= order; ++j) r[static_cast<std::size_t>(i + j)] += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)];
  }
  return r;
}

// Powers t^0..t^order of a series without constant term.
std::vector<std::vector<double>> series_powers(const std::vector<double>& t, int order) {
  std::vector<std::vector<double>> p;
  std::vector<double> one(static_cast<std::size_t>(order + 1), 0.0);
  one[0] = 1.0;
  p.push_back(one);
  for (int k = 1; k <= order; ++k) p.push_back(series_mul(p.back(), t, order));
  return p;
}

// Inverse of sigma(t) = sum_{k>=1} s[k] t^k up to the given order.
std::vector<double> revert(const std::vector<double>& s, int order) {
  std::vector<double> b(static_cast<std::size_t>(order + 1), 0.0);
  if (order >= 1) b[1] = 1.0 / s[1];
  for (int m = 2; m <= order; ++m) {
    auto pw = series_powers(b, m);
    double c = 0.0;
    for (int k = 1; k <= m; ++k) c += s[static_cast<std::size_t>(k)] * pw[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
    b[static_cast<std::size_t>(m)] = -c / s[1];
  }
  return b;
}

double factorial_d(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

FlagContext::FlagContext(ControlSystem sys, int max_order) : dyn_(std::move(sys)) {
  const int n = dyn_.n();
  const ControlSystem& s = dyn_.system();
  max_order_ = max_order < 0 ? n + 2 : std::max(max_order, 1);
  std::vector<Expr> u;
  for (const VectorField& x : s.frame) u.push_back(expand(pairing(x, n)));
  std::vector<Expr> x;
  for (int j = 0; j < n; ++j) x.push_back(Expr::variable(j));
  std::vector<Expr> outputs;
  for (int k = 0; k <= max_order_; ++k) {
    if (k > 0) {
      for (Expr& e : u) e = expand(poisson_bracket(dyn_.H(), e, n));
      for (Expr& e : x) e = expand(poisson_bracket(dyn_.H(), e, n));
    }
    for (const Expr& e : u) {
      outputs.push_back(e);
      tower_nodes_ += node_count(e);
    }
    for (const Expr& e : x) {
      outputs.push_back(e);
      tower_nodes_ += node_count(e);
    }
  }
  towers_ = Program(outputs);
  space_ = std::make_shared<const JetSpace>(n, std::max(n - 1, 1));
}

FlagContext::Derivatives FlagContext::derivatives(const PhasePoint& z) const {
  const int n = dyn_.n();
  const int k = dyn_.system().k;
  std::vector<double> y(static_cast<std::size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = z.x(i);
    y[static_cast<std::size_t>(n + i)] = z.p(i);
  }
  std::vector<double> out = towers_(y);
  Derivatives d{Eigen::MatrixXd(k, max_order_ + 1), Eigen::MatrixXd(n, max_order_ + 1)};
  std::size_t at = 0;
  for (int o = 0; o <= max_order_; ++o) {
    for (int i = 0; i < k; ++i) d.u(i, o) = out[at++];
    for (int j = 0; j < n; ++j) d.x(j, o) = out[at++];
  }
  return d;
}

Extension extension_at(const FlagContext& ctx, const PhasePoint& z, const FlagOptions& opts) {
  const int n = ctx.n();
  const int k = ctx.system().k;
  const int order = opts.order < 0 ? n : opts.order;
  if (order > ctx.max_order()) throw std::invalid_argument("extension order exceeds the compiled towers");
  FlagContext::Derivatives d = ctx.derivatives(z);
  Eigen::VectorXd xdot = d.x.col(1);
  if (!(xdot.norm() > 1e-12 * (1.0 + z.p.norm()))) throw ZeroTangent();
  Extension ext;
  ext.point = z.x;
  ext.w = opts.w ? *opts.w : xdot;
  if (ext.w.size() != n) throw std::invalid_argument("w has the wrong dimension");
  const int K = std::max(order, 1);
  std::vector<double> s(static_cast<std::size_t>(K + 1), 0.0);
  for (int m = 1; m <= K; ++m) s[static_cast<std::size_t>(m)] = ext.w.dot(d.x.col(std::min(m, ctx.max_order()))) / factorial_d(m);
  if (!(std::fabs(s[1]) > 1e-12 * ext.w.norm() * xdot.norm())) throw std::invalid_argument("w is orthogonal to the tangent vector");
  std::vector<double> t(static_cast<std::size_t>(K + 1), 0.0);
  if (opts.first_order_tau) {
    t[1] = 1.0 / s[1];
  } else {
    t = revert(s, K);
  }
  auto tp = series_powers(t, order);
  ext.coeffs.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
  for (int i = 0; i < k; ++i) {
    for (int o = 0; o <= order; ++o) {
      double c = d.u(i, o) / factorial_d(o);
      for (int m = 0; m <= order; ++m) ext.coeffs[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] += c * tp[static_cast<std::size_t>(o)][static_cast<std::size_t>(m)];
    }
  }
  return ext;
}

VectorField extension_field(const FlagContext& ctx, const Extension& ext) {
  const ControlSystem& sys = ctx.system();
  const int n = sys.n;
  std::vector<Expr> terms;
  for (int l = 0; l < n; ++l) {
    if (ext.w(l) != 0.0) terms.push_back(Expr(ext.w(l)) * (Expr::variable(l) - Expr(ext.point(l))));
  }
  Expr sigma = sum(terms);
  VectorField t = sys.drift.empty() ? zero_field(n) : sys.drift;
  for (int i = 0; i < sys.k; ++i) {
    std::vector<Expr> poly;
    const auto& c = ext.coeffs[static_cast<std::size_t>(i)];
    for (std::size_t m = 0; m < c.size(); ++m) {
      if (c[m] != 0.0) poly.push_back(Expr(c[m]) * pow(sigma, static_cast<int>(m)));
    }
    Expr ui = sum(poly);
    for (int j = 0; j < n; ++j) t[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(j)] + ui * sys.frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  for (Expr& e : t) e = simplify(e);
  return t;
}

VectorField admissible_extension(const FlagContext& ctx, const PhasePoint& lambda0, double t_star, int order) {
  FlowOptions fo;
  fo.jacobian = false;
  PhasePoint z = t_star == 0.0 ? lambda0 : flow(ctx.dynamics(), lambda0, t_star, fo).state;
  FlagOptions opts;
  opts.order = order;
  return extension_field(ctx, extension_at(ctx, z, opts));
}

JetField extension_jet(const FlagContext& ctx, const Extension& ext) {
  const ControlSystem& sys = ctx.system();
  const auto& space = ctx.jet_space();
  const int n = sys.n;
  Jet sigma(space);
  for (int l = 0; l < n; ++l) sigma += Jet::coordinate(space, l, 0.0) * ext.w(l);
  JetField t;
  if (sys.has_drift()) {
    t = eval_jet(sys.drift, space, ext.point);
  } else {
    t.assign(static_cast<std::size_t>(n), Jet(space));
  }
  for (int i = 0; i < sys.k; ++i) {
    Jet ui = compose(sigma, ext.coeffs[static_cast<std::size_t>(i)]);
    JetField xi = eval_jet(sys.frame[static_cast<std::size_t>(i)], space, ext.point);
    for (int j = 0; j < n; ++j) t[static_cast<std::size_t>(j)] += ui * xi[static_cast<std::size_t>(j)];
  }
  return t;
}

namespace {

// Lazily produces L_T^j X_a at the extension point.
class ImageSource {
public:
  ImageSource(const FlagContext& ctx, const Extension& ext) : ctx_(ctx), t_(extension_jet(ctx, ext)) {
    for (const VectorField& x : ctx.system().frame) cur_.push_back(eval_jet(x, ctx.jet_space(), ext.point));
  }

  Eigen::MatrixXd next() {
    const int n = ctx_.n();
    const int k = ctx_.system().k;
    if (level_ > ctx_.jet_space()->order()) throw std::logic_error("bracket depth exceeds the jet order");
    if (level_ > 0) {
      for (JetField& v : cur_) v = bracket(t_, v);
    }
    ++level_;
    Eigen::MatrixXd m(n, k);
    for (int a = 0; a < k; ++a) m.col(a) = values(cur_[static_cast<std::size_t>(a)]);
    return m;
  }

private:
  const FlagContext& ctx_;
  JetField t_;
  std::vector<JetField> cur_;
  int level_ = 0;
};

struct Accumulated {
  int rank = 0;
  Eigen::MatrixXd basis;
};

Accumulated accumulate(const std::vector<Eigen::MatrixXd>& images, int levels, double tol) {
  const Eigen::Index n = images.front().rows();
  double scale = 1.0;
  for (int j = 0; j < levels; ++j) scale = std::max(scale, images[static_cast<std::size_t>(j)].colwise().norm().maxCoeff());
  std::vector<Eigen::VectorXd> cols;
  for (int j = 0; j < levels; ++j) {
    const Eigen::MatrixXd& im = images[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < im.cols(); ++a) {
      double nr = im.col(a).norm();
      if (nr > 1e-12 * scale) cols.push_back(im.col(a) / nr);
    }
  }
  Accumulated acc;
  if (cols.empty()) {
    acc.basis = Eigen::MatrixXd(n, 0);
    return acc;
  }
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = cols[c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++acc.rank;
  }
  acc.basis = svd.matrixU().leftCols(acc.rank);
  return acc;
}

GeodesicFlag build_flag(const Eigen::VectorXd& point, const std::function<Eigen::MatrixXd()>& next, int max_levels,
                        double rank_tol) {
  const int n = static_cast<int>(point.size());
  GeodesicFlag f;
  f.point = point;
  int stalls = 0;
  while (static_cast<int>(f.growth.size()) < max_levels) {
    f.images.push_back(next());
    const int level = static_cast<int>(f.images.size());
    Accumulated acc = accumulate(f.images, level, rank_tol);
    int prev = f.growth.empty() ? 0 : f.growth.back();
    f.growth.push_back(acc.rank);
    f.bases.push_back(acc.basis);
    if (acc.rank == n) {
      f.ample = true;
      break;
    }
    stalls = acc.rank > prev ? 0 : stalls + 1;
    if (stalls >= 2) break;
  }
  const int levels = static_cast<int>(f.images.size());
  const double tols[3] = {rank_tol / 10, rank_tol, rank_tol * 10};
  for (int t = 0; t < 3; ++t) {
    for (int l = 1; l <= levels; ++l) f.growth_by_tolerance[static_cast<std::size_t>(t)].push_back(accumulate(f.images, l, tols[t]).rank);
  }
  f.ill_conditioned = f.growth_by_tolerance[0] != f.growth || f.growth_by_tolerance[2] != f.growth;
  if (f.ill_conditioned) f.diagnostics.push_back("ill-conditioned flag: growth changes across tolerance decades");
  int prev = 0;
  for (int g : f.growth) {
    f.increments.push_back(g - prev);
    prev = g;
  }
  f.steps = levels;
  f.geodesic_dimension = geodesic_dimension(f.growth);
  f.homogeneous_weight = homogeneous_weight(f.growth);
  if (!f.images.empty() && f.growth.front() != f.images.front().cols()) {
    f.diagnostics.push_back("frame dependent at the point");
  }
  if (f.ample) {
    for (std::size_t i = 1; i < f.increments.size(); ++i) {
      if (f.increments[i] > f.increments[i - 1]) {
        f.diagnostics.push_back("increments not non-increasing");
        break;
      }
    }
  }
  for (std::size_t i = 0; i + 1 < f.bases.size(); ++i) {
    const Eigen::MatrixXd& b = f.bases[i];
    const Eigen::MatrixXd& c = f.bases[i + 1];
    if (b.cols() == 0) continue;
    if ((b - c * (c.transpose() * b)).norm() > 1e-8) {
      f.diagnostics.push_back("flag not nested at level " + std::to_string(i + 1));
    }
  }
  return f;
}

}  // namespace

std::vector<Eigen::MatrixXd> bracket_images(const FlagContext& ctx, const Extension& ext, int levels) {
  ImageSource src(ctx, ext);
  std::vector<Eigen::MatrixXd> out;
  for (int j = 0; j < levels; ++j) out.push_back(src.next());
  return out;
}

int geodesic_dimension(const std::vector<int>& growth) {
  int prev = 0, total = 0;
  for (std::size_t i = 0; i < growth.size(); ++i) {
    total += static_cast<int>(2 * i + 1) * (growth[i] - prev);
    prev = growth[i];
  }
  return total;
}

int homogeneous_weight(const std::vector<int>& growth) {
  int prev = 0, total = 0;
  for (std::size_t i = 0; i < growth.size(); ++i) {
    total += static_cast<int>(i + 1) * (growth[i] - prev);
    prev = growth[i];
  }
  return total;
}

GeodesicFlag flag_from_images(const Eigen::VectorXd& point, std::vector<Eigen::MatrixXd> images, double rank_tol) {
  std::size_t at = 0;
  const int levels = static_cast<int>(images.size());
  return build_flag(point, [&] { return images[at++]; }, levels, rank_tol);
}

GeodesicFlag flag_at_state(const FlagContext& ctx, const PhasePoint& z, const FlagOptions& opts) {
  Extension ext = extension_at(ctx, z, opts);
  ImageSource src(ctx, ext);
  return build_flag(z.x, [&] { return src.next(); }, ctx.n(), opts.rank_tol);
}

GeodesicFlag flag_at(const FlagContext& ctx, const PhasePoint& lambda0, double t_star, const FlagOptions& opts) {
  if (t_star == 0.0) return flag_at_state(ctx, lambda0, opts);
  FlowOptions fo;
  fo.jacobian = false;
  return flag_at_state(ctx, flow(ctx.dynamics(), lambda0, t_star, fo).state, opts);
}

Equiregularity equiregular_on(const FlagContext& ctx, const PhasePoint& lambda0, double window, int samples,
                              const FlagOptions& opts) {
  Equiregularity r;
  samples = std::max(samples, 1);
  for (int s = 0; s < samples; ++s) r.times.push_back(samples == 1 ? 0.0 : window * s / (samples - 1));
  FlowOptions fo;
  fo.jacobian = false;
  for (const FlowSample& f : flow_samples(ctx.dynamics(), lambda0, r.times, fo)) {
    r.growth.push_back(flag_at_state(ctx, f.state, opts).growth);
  }
  r.equiregular = std::all_of(r.growth.begin(), r.growth.end(), [&](const auto& g) { return g == r.growth.front(); });
  return r;
}

YoungDiagram young_diagram(const GeodesicFlag& flag) {
  if (!flag.ample) throw NotAmple("flag is not ample");
  YoungDiagram y;
  y.columns = flag.increments;
  const int top = *std::max_element(y.columns.begin(), y.columns.end());
  for (int a = 1; a <= top; ++a) {
    y.rows.push_back(static_cast<int>(std::count_if(y.columns.begin(), y.columns.end(), [&](int d) { return d >= a; })));
  }
  return y;
}

Rational leading_constant(const YoungDiagram& y) { return leading_constant_exact(y.rows); }

}  // namespace geoflow
