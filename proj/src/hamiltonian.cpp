#include "geoflow/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geoflow {

namespace {

Expr pairing(const VectorField& v, int n) {
  std::vector<Expr> terms;
  for (int i = 0; i < n; ++i) {
    const Expr& c = v[static_cast<std::size_t>(i)];
    if (!c.is_constant(0.0)) terms.push_back(Expr::variable(n + i) * c);
  }
  return sum(terms);
}

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

Expr hamiltonian(const ControlSystem& sys) {
  std::vector<Expr> terms;
  for (const VectorField& x : sys.frame) terms.push_back(Expr(0.5) * pow(pairing(x, sys.n), 2));
  terms.push_back(pairing(sys.drift, sys.n));
  terms.push_back(Expr(0.5) * sys.potential);
  return sum(terms);
}

Expr poisson_bracket(const Expr& f, const Expr& g, int n) {
  std::vector<Expr> terms;
  for (int j = 0; j < n; ++j) {
    Expr fp = diff(f, n + j);
    Expr gx = diff(g, j);
    if (!fp.is_constant(0.0) && !gx.is_constant(0.0)) terms.push_back(fp * gx);
    Expr fx = diff(f, j);
    Expr gp = diff(g, n + j);
    if (!fx.is_constant(0.0) && !gp.is_constant(0.0)) terms.push_back(-(fx * gp));
  }
  return sum(terms);
}

Dynamics::Dynamics(ControlSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  const int n = sys_.n;
  h_ = hamiltonian(sys_);
  std::vector<Expr> f;
  for (int i = 0; i < n; ++i) f.push_back(simplify(diff(h_, n + i)));
  for (int i = 0; i < n; ++i) f.push_back(simplify(-diff(h_, i)));
  std::vector<Expr> jac;
  for (const Expr& fi : f) {
    for (int j = 0; j < 2 * n; ++j) jac.push_back(simplify(diff(fi, j)));
  }
  std::vector<Expr> u;
  for (const VectorField& x : sys_.frame) u.push_back(pairing(x, n));
  field_ = Program(f);
  jacobian_ = Program(jac);
  controls_ = Program(u);
  std::vector<Expr> e{h_};
  energy_ = Program(e);
}

namespace {

std::vector<double> pack(const PhasePoint& z) {
  std::vector<double> y(static_cast<std::size_t>(z.x.size() + z.p.size()));
  std::copy(z.x.data(), z.x.data() + z.x.size(), y.begin());
  std::copy(z.p.data(), z.p.data() + z.p.size(), y.begin() + z.x.size());
  return y;
}

}  // namespace

double Dynamics::energy(const PhasePoint& z) const { return energy_(as_span(pack(z)))[0]; }

Eigen::VectorXd Dynamics::controls(const PhasePoint& z) const {
  auto u = controls_(as_span(pack(z)));
  return Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}

Eigen::VectorXd Dynamics::vector_field(const PhasePoint& z) const {
  auto v = field_(as_span(pack(z)));
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void Dynamics::rhs(const double* y, double* dy, std::size_t cols, std::vector<double>& work) const {
  const std::size_t m = 2 * static_cast<std::size_t>(sys_.n);
  std::span<const double> in(y, m);
  field_.run(in, std::span<double>(dy, m), work);
  if (cols == 0) return;
  thread_local std::vector<double> a;
  a.resize(m * m);
  jacobian_.run(in, a, work);
  const double* delta = y + m;
  double* ddelta = dy + m;
  for (std::size_t c = 0; c < cols; ++c) {
    const double* col = delta + c * m;
    double* out = ddelta + c * m;
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = a.data() + i * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += row[j] * col[j];
      out[i] = s;
    }
  }
}

std::vector<FlowSample> flow_samples(const Dynamics& dyn, const PhasePoint& start, std::span<const double> times,
                                     const FlowOptions& opts) {
  const int n = dyn.n();
  const std::size_t m = 2 * static_cast<std::size_t>(n);
  const std::size_t cols = opts.full_variational ? m : (opts.jacobian ? static_cast<std::size_t>(n) : 0);
  const std::size_t first = opts.full_variational ? 0 : static_cast<std::size_t>(n);
  const std::size_t dim = m + m * cols;
  std::vector<double> y0 = pack(start);
  y0.resize(dim, 0.0);
  for (std::size_t c = 0; c < cols; ++c) y0[m + c * m + first + c] = 1.0;
  StepControl ctl;
  ctl.rtol = opts.tol;
  ctl.atol.assign(dim, opts.jacobian_atol);
  std::fill(ctl.atol.begin(), ctl.atol.begin() + static_cast<std::ptrdiff_t>(m), opts.tol);
  if (cols == static_cast<std::size_t>(n)) {
    // An entry of J_v only matters through det J_v, which moves by err_ij (J_v^-1)_ji.
    // Entries that vanish identically carry pure roundoff and get the same floor.
    ctl.after_step = [n, m, &opts](std::span<const double> y, std::vector<double>& atol) {
      Eigen::MatrixXd jv(n, n);
      for (int c = 0; c < n; ++c) {
        for (int i = 0; i < n; ++i) jv(i, c) = y[m + static_cast<std::size_t>(c) * m + static_cast<std::size_t>(i)];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jv);
      if (!lu.isInvertible()) return;
      Eigen::MatrixXd inv = lu.inverse();
      if (!inv.allFinite()) return;
      for (int c = 0; c < n; ++c) {
        for (int i = 0; i < n; ++i) {
          const double w = std::fabs(inv(c, i));
          atol[m + static_cast<std::size_t>(c) * m + static_cast<std::size_t>(i)] =
              w > 0.0 ? std::max(opts.jacobian_atol, opts.tol / (n * w)) : opts.jacobian_atol;
        }
      }
    };
  }
  const double h0 = dyn.energy(start);

  std::vector<FlowSample> out(times.size());
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  auto record = [&](std::size_t slot, double t, std::span<const double> y) {
    FlowSample& s = out[slot];
    s.t = t;
    s.state.x = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    s.state.p = Eigen::Map<const Eigen::VectorXd>(y.data() + n, n);
    if (cols > 0) {
      Eigen::Map<const Eigen::MatrixXd> delta(y.data() + m, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(cols));
      s.Jv = delta.block(0, static_cast<Eigen::Index>(cols) - n, n, n);
      if (opts.full_variational) s.Phi = delta;
    }
    s.u = dyn.controls(s.state);
    s.energy = dyn.energy(s.state);
    s.energy_drift = std::fabs(s.energy - h0);
  };

  // forward through the non-negative times, then backward through the negative ones
  for (int direction : {1, -1}) {
    std::vector<double> work;
    Dopri5 solver([&](double, const double* y, double* dy) { dyn.rhs(y, dy, cols, work); }, dim, ctl);
    solver.reset(0.0, y0);
    if (direction > 0) {
      for (std::size_t idx : order) {
        if (times[idx] < 0.0) continue;
        solver.integrate_to(times[idx]);
        record(idx, times[idx], solver.y());
      }
    } else {
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (times[*it] >= 0.0) continue;
        solver.integrate_to(times[*it]);
        record(*it, times[*it], solver.y());
      }
    }
  }
  return out;
}

FlowSample flow(const Dynamics& dyn, const PhasePoint& start, double t, const FlowOptions& opts) {
  std::vector<double> ts{t};
  return flow_samples(dyn, start, ts, opts).front();
}

Eigen::MatrixXd vertical_jacobian(const Dynamics& dyn, const PhasePoint& start, double t, const FlowOptions& opts) {
  FlowOptions o = opts;
  o.jacobian = true;
  return flow(dyn, start, t, o).Jv;
}

double pulled_back_density(const Dynamics& dyn, const PhasePoint& start, const FlowSample& s) {
  const ControlSystem& sys = dyn.system();
  return density_at(sys, start.x) * density_at(sys, s.state.x) * abs_det(s.Jv);
}

double volume_ratio(const Dynamics& dyn, const PhasePoint& start, const FlowSample& s, double frame_volume) {
  return pulled_back_density(dyn, start, s) / (frame_volume * frame_volume);
}

}  // namespace geoflow
