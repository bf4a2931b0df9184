#include "geoflow/rho.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace geoflow {

namespace {

FlowOptions position_only(const RhoOptions& opts) {
  FlowOptions fo;
  fo.tol = opts.flow_tol;
  fo.jacobian = false;
  return fo;
}

// Orthonormal basis (rank columns) of the span of the given columns.
Eigen::MatrixXd span_basis(const std::vector<Eigen::MatrixXd>& blocks, std::size_t count, int rank) {
  const Eigen::Index n = blocks.front().rows();
  double scale = 1.0;
  for (std::size_t b = 0; b < count; ++b) scale = std::max(scale, blocks[b].colwise().norm().maxCoeff());
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t b = 0; b < count; ++b) {
    for (Eigen::Index a = 0; a < blocks[b].cols(); ++a) {
      double nr = blocks[b].col(a).norm();
      if (nr > 1e-12 * scale) cols.push_back(blocks[b].col(a) / nr);
    }
  }
  if (static_cast<int>(cols.size()) < rank) throw RankDeficiency("flag level spanned by too few vectors");
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = cols[c];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(rank);
}

struct Base {
  std::vector<int> growth;
  std::vector<int> complement;
};

Base base_data(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts) {
  GeodesicFlag f = flag_at_state(ctx, lambda0, opts.flag);
  if (!f.ample) throw NotAmple("covector is not ample");
  return {f.growth, opts.complement ? *opts.complement : default_complement(ctx.system(), lambda0.x)};
}

}  // namespace

std::vector<int> default_complement(const ControlSystem& sys, const Eigen::VectorXd& x0) {
  return greedy_complement(frame_matrix(sys, x0));
}

SymbolGram symbol_gram(const FlagContext& ctx, const PhasePoint& z, const std::vector<int>& complement,
                       const std::vector<int>& growth, const FlagOptions& opts) {
  GeodesicFlag f = flag_at_state(ctx, z, opts);
  if (f.growth != growth) throw RankDeficiency("growth vector changed along the geodesic");
  AuxFrame aux = aux_frame_at(ctx.system(), z.x, complement);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(aux.Y);
  std::vector<Eigen::MatrixXd> c;
  for (const Eigen::MatrixXd& im : f.images) c.push_back(lu.solve(im));
  SymbolGram g;
  g.growth = growth;
  for (std::size_t i = 0; i < growth.size(); ++i) {
    const int prev = i == 0 ? 0 : growth[i - 1];
    const int d = growth[i] - prev;
    Eigen::MatrixXd a = c[i];
    if (i > 0) {
      Eigen::MatrixXd q = span_basis(c, i, prev);
      a -= q * (q.transpose() * a);
    }
    Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
    if (s.size() < d) throw RankDeficiency("symbol map has too small a rank");
    double det = 1.0;
    for (int j = 0; j < d; ++j) det *= s(j) * s(j);
    if (!(det > 0.0) || !std::isfinite(det)) throw RankDeficiency("degenerate Gram operator");
    g.dets.push_back(det);
    g.margins.push_back(s(d - 1) / std::max(c[i].norm(), 1e-300));
    g.log_volume += 0.5 * std::log(det);
  }
  return g;
}

SymbolGram gram_dets(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts) {
  Base b = base_data(ctx, lambda0, opts);
  PhasePoint z = t == 0.0 ? lambda0 : flow(ctx.dynamics(), lambda0, t, position_only(opts)).state;
  return symbol_gram(ctx, z, b.complement, b.growth, opts.flag);
}

double frame_volume(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts) {
  return std::exp(gram_dets(ctx, lambda0, 0.0, opts).log_volume);
}

std::vector<double> g_rel(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                          const RhoOptions& opts) {
  Base b = base_data(ctx, lambda0, opts);
  double g0 = symbol_gram(ctx, lambda0, b.complement, b.growth, opts.flag).log_volume;
  std::vector<double> out;
  for (const FlowSample& s : flow_samples(ctx.dynamics(), lambda0, times, position_only(opts))) {
    out.push_back(symbol_gram(ctx, s.state, b.complement, b.growth, opts.flag).log_volume - g0);
  }
  return out;
}

double g_rel(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts) {
  double ts[1] = {t};
  return g_rel(ctx, lambda0, ts, opts)[0];
}

double rho(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts) {
  const double h = opts.h;
  Base b = base_data(ctx, lambda0, opts);
  std::vector<double> ts{-h, -h / 2, h / 2, h};
  std::vector<double> g;
  for (const FlowSample& s : flow_samples(ctx.dynamics(), lambda0, ts, position_only(opts))) {
    g.push_back(symbol_gram(ctx, s.state, b.complement, b.growth, opts.flag).log_volume);
  }
  const double d1 = (g[3] - g[0]) / (2 * h);
  const double d2 = (g[2] - g[1]) / h;
  const double r = (4 * d2 - d1) / 3;
  if (!std::isfinite(r)) throw std::runtime_error("non-finite difference quotient");
  return r;
}

double rho_along(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts) {
  double ts[1] = {t};
  return rho_along(ctx, lambda0, ts, opts)[0];
}

std::vector<double> rho_along(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                              const RhoOptions& opts) {
  RhoOptions local = opts;
  local.complement.reset();
  std::vector<double> out;
  for (const FlowSample& s : flow_samples(ctx.dynamics(), lambda0, times, position_only(opts))) {
    out.push_back(rho(ctx, s.state, local));
  }
  return out;
}

FlowRho rho_flow(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts,
                 const FlowRhoOptions& fit) {
  Base b = base_data(ctx, lambda0, opts);
  FlowRho out;
  out.geodesic_dimension = geodesic_dimension(b.growth);
  const double fv = std::exp(symbol_gram(ctx, lambda0, b.complement, b.growth, opts.flag).log_volume);
  std::vector<double> ts;
  for (int i = 0; i < fit.samples; ++i) {
    ts.push_back(fit.t_min * std::pow(fit.t_max / fit.t_min, static_cast<double>(i) / (fit.samples - 1)));
  }
  FlowOptions fo;
  fo.tol = opts.flow_tol;
  auto samples = flow_samples(ctx.dynamics(), lambda0, ts, fo);
  Eigen::MatrixXd a(fit.samples, fit.degree + 1);
  Eigen::VectorXd y(fit.samples);
  for (int i = 0; i < fit.samples; ++i) {
    const double t = ts[static_cast<std::size_t>(i)];
    const double r = volume_ratio(ctx.dynamics(), lambda0, samples[static_cast<std::size_t>(i)], fv);
    y(i) = std::log(r) - out.geodesic_dimension * std::log(t);
    for (int d = 0; d <= fit.degree; ++d) a(i, d) = std::pow(t / fit.t_max, d);
  }
  Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
  out.log_c = coef(0);
  out.rho = coef(1) / fit.t_max;
  out.residual = std::sqrt((a * coef - y).squaredNorm() / fit.samples);
  out.residual_ok = out.residual <= fit.residual_limit;
  return out;
}

double symbol_margin(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts) {
  SymbolGram g = gram_dets(ctx, lambda0, 0.0, opts);
  return *std::min_element(g.margins.begin(), g.margins.end());
}

CovectorSample sample_covectors(const FlagContext& ctx, int count, const CovectorSampling& opts) {
  const int n = ctx.n();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  CovectorSample out;
  PhasePoint z{opts.x0 ? *opts.x0 : Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int attempt = 0; static_cast<int>(out.covectors.size()) < count; ++attempt) {
    if (attempt >= opts.max_attempts) throw std::runtime_error("covector sampling exhausted its attempts");
    for (int i = 0; i < n; ++i) z.p(i) = normal(rng);
    const double speed = ctx.dynamics().controls(z).norm();
    bool keep = speed > 1e-3;
    if (keep) {
      z.p /= speed;
      try {
        keep = symbol_margin(ctx, z) >= opts.min_margin;
      } catch (const std::exception&) {
        keep = false;
      }
    }
    if (keep) {
      out.covectors.push_back(z);
    } else {
      ++out.rejected;
    }
  }
  return out;
}

ScalingReport scaling_checks(const FlagContext& ctx, const PhasePoint& lambda0, double c,
                             std::span<const double> times, const RhoOptions& opts, double rho_tol, double g_tol) {
  const ControlSystem& sys = ctx.system();
  if (sys.has_drift() || !sys.potential.is_constant(0.0)) {
    throw std::invalid_argument("scaling laws need zero drift and zero potential");
  }
  PhasePoint scaled{lambda0.x, c * lambda0.p};
  ScalingReport r;
  r.c = c;
  r.rho = rho(ctx, lambda0, opts);
  r.rho_scaled = rho(ctx, scaled, opts);
  r.rho_error = std::fabs(r.rho_scaled - c * r.rho) / std::max(std::fabs(c * r.rho), 1.0);
  std::vector<double> stretched;
  for (double t : times) stretched.push_back(c * t);
  RhoOptions fixed = opts;
  if (!fixed.complement) fixed.complement = default_complement(sys, lambda0.x);
  auto lhs = g_rel(ctx, scaled, times, fixed);
  auto rhs = g_rel(ctx, lambda0, stretched, fixed);
  for (std::size_t i = 0; i < lhs.size(); ++i) r.g_error = std::max(r.g_error, std::fabs(lhs[i] - rhs[i]));
  r.rho_pass = r.rho_error <= rho_tol;
  r.g_pass = r.g_error <= g_tol;
  return r;
}

DivergenceReport riemannian_divergence_check(const FlagContext& ctx, const PhasePoint& lambda0,
                                             const RhoOptions& opts, double tol) {
  const ControlSystem& sys = ctx.system();
  const int n = sys.n;
  if (sys.k != n) throw std::invalid_argument("divergence check needs a Riemannian structure (k = n)");
  VectorField t = admissible_extension(ctx, lambda0, 0.0, opts.flag.order < 0 ? n : opts.flag.order);
  std::vector<double> x(lambda0.x.data(), lambda0.x.data() + n);
  Eigen::VectorXd tv(n);
  double div = 0.0;
  for (int i = 0; i < n; ++i) {
    tv(i) = eval(t[static_cast<std::size_t>(i)], x);
    div += eval(diff(t[static_cast<std::size_t>(i)], i), x);
  }
  const double m = eval(sys.density, x);
  Eigen::MatrixXd f = frame_matrix(sys, lambda0.x);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(f);
  Eigen::VectorXd grad_m(n), grad_det(n);
  for (int i = 0; i < n; ++i) {
    grad_m(i) = eval(diff(sys.density, i), x) / m;
    Eigen::MatrixXd df(n, n);
    for (int a = 0; a < n; ++a) {
      for (int j = 0; j < n; ++j) df(j, a) = eval(diff(sys.frame[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)], i), x);
    }
    grad_det(i) = lu.solve(df).trace();
  }
  DivergenceReport r;
  r.div_mu = div + tv.dot(grad_m);
  r.div_g = div - tv.dot(grad_det);
  r.difference = r.div_mu - r.div_g;
  r.rho = rho(ctx, lambda0, opts);
  r.pass = std::fabs(r.difference - r.rho) <= tol;
  return r;
}

ContactOracle::ContactOracle(const ControlSystem& sys, int reeb_coordinate) : sys_(&sys), c_(reeb_coordinate) {
  if (sys.n != sys.k + 1) throw std::invalid_argument("contact oracle needs corank one");
  for (int i = 0; i < sys.k; ++i) {
    brackets_.emplace_back();
    for (int j = 0; j < sys.k; ++j) {
      brackets_.back().push_back(lie_bracket(sys.frame[static_cast<std::size_t>(i)], sys.frame[static_cast<std::size_t>(j)]));
    }
  }
}

Eigen::MatrixXd ContactOracle::J(const Eigen::VectorXd& x) const {
  const int n = sys_->n;
  const int k = sys_->k;
  Eigen::MatrixXd m(n, n);
  m.topRows(k) = frame_matrix(*sys_, x).transpose();
  m.row(k) = Eigen::RowVectorXd::Unit(n, c_);
  Eigen::VectorXd omega = m.partialPivLu().solve(Eigen::VectorXd::Unit(n, k));
  Eigen::MatrixXd j(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      j(a, b) = -omega.dot(evaluate(brackets_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], x));
    }
  }
  return j;
}

double ContactOracle::log_norm(const PhasePoint& z) const {
  Eigen::VectorXd u = frame_matrix(*sys_, z.x).transpose() * z.p;
  return std::log((J(z.x) * u).norm());
}

std::vector<ContactSample> contact_oracle(const FlagContext& ctx, const PhasePoint& lambda0,
                                          std::span<const double> times, const RhoOptions& opts) {
  RhoOptions fixed = opts;
  if (!fixed.complement) fixed.complement = default_complement(ctx.system(), lambda0.x);
  ContactOracle oracle(ctx.system(), fixed.complement->front());
  auto g = g_rel(ctx, lambda0, times, fixed);
  const double base = oracle.log_norm(lambda0);
  std::vector<ContactSample> out;
  std::size_t i = 0;
  for (const FlowSample& s : flow_samples(ctx.dynamics(), lambda0, times, position_only(opts))) {
    out.push_back({s.t, g[i], oracle.log_norm(s.state) - base});
    ++i;
  }
  return out;
}

}  // namespace geoflow
