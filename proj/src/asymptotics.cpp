#include "geoflow/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::vector<double> geometric_grid(double a, double b, int count) {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i) ts.push_back(a * std::pow(b / a, count == 1 ? 0.0 : double(i) / (count - 1)));
  return ts;
}

std::vector<double> log_ratios(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> ts,
                               const RhoOptions& opts) {
  const double fv = frame_volume(ctx, lambda0, opts);
  FlowOptions fo;
  fo.tol = opts.flow_tol;
  std::vector<double> out;
  for (const FlowSample& s : flow_samples(ctx.dynamics(), lambda0, ts, fo)) {
    out.push_back(std::log(volume_ratio(ctx.dynamics(), lambda0, s, fv)));
  }
  return out;
}

}  // namespace

std::vector<double> integrated_rho(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                                   int intervals, const RhoOptions& opts, int threads) {
  if (intervals < 2 || intervals % 2 != 0) throw std::invalid_argument("Simpson needs an even interval count");
  std::map<double, double> nodes;
  nodes[0.0] = 0.0;
  for (double t : times) {
    for (int k = 1; k <= intervals; ++k) nodes[t * k / intervals] = 0.0;
  }
  std::vector<double> ss;
  for (const auto& [s, v] : nodes) ss.push_back(s);

  if (threads <= 0) threads = default_threads();
  const int chunks = std::max(1, std::min<int>(threads, static_cast<int>(ss.size())));
  std::vector<std::vector<double>> values(static_cast<std::size_t>(chunks));
  const std::size_t per = (ss.size() + chunks - 1) / chunks;
  parallel_for(chunks, threads, [&](int c) {
    const std::size_t a = std::min(ss.size(), per * static_cast<std::size_t>(c));
    const std::size_t b = std::min(ss.size(), a + per);
    if (a < b) values[static_cast<std::size_t>(c)] = rho_along(ctx, lambda0, std::span(ss).subspan(a, b - a), opts);
  });
  std::size_t i = 0;
  for (const std::vector<double>& chunk : values) {
    for (double v : chunk) nodes[ss[i++]] = v;
  }

  std::vector<double> out;
  for (double t : times) {
    const double h = t / intervals;
    double sum = nodes[0.0] + nodes[t];
    for (int k = 1; k < intervals; ++k) sum += (k % 2 ? 4.0 : 2.0) * nodes[t * k / intervals];
    out.push_back(sum * h / 3.0);
  }
  return out;
}

namespace {

ExpansionFit fit_window(const FlagContext& ctx, const PhasePoint& lambda0, const ExpansionOptions& opts) {
  GeodesicFlag flag = flag_at_state(ctx, lambda0, opts.rho.flag);
  if (!flag.ample) throw NotAmple("covector is not ample");
  ExpansionFit fit;
  fit.geodesic_dimension = flag.geodesic_dimension;
  fit.t_min = opts.t_min;
  fit.t_max = opts.t_max;
  fit.samples = opts.samples;
  fit.times = geometric_grid(opts.t_min, opts.t_max, opts.samples);
  std::vector<double> logr = log_ratios(ctx, lambda0, fit.times, opts.rho);
  fit.integral_rho = integrated_rho(ctx, lambda0, fit.times, opts.simpson_intervals, opts.rho, opts.threads);

  const int m = opts.samples;
  Eigen::MatrixXd a(m, 3);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double t = fit.times[k];
    fit.r.push_back(std::exp(logr[k]));
    fit.h.push_back(logr[k] - fit.geodesic_dimension * std::log(t) - fit.integral_rho[k]);
    const double s = t / opts.t_max;
    a(i, 0) = 1.0;
    a(i, 1) = s * s;
    a(i, 2) = s * s * s;
    y(i) = fit.h[k];
  }
  Eigen::Vector3d coef = a.colPivHouseholderQr().solve(y);
  fit.log_c = coef(0);
  fit.c = std::exp(coef(0));
  const double c2 = coef(1) / (opts.t_max * opts.t_max);
  fit.c3 = coef(2) / (opts.t_max * opts.t_max * opts.t_max);
  fit.tr_r = -6.0 * c2;
  Eigen::VectorXd model = a * coef;
  fit.model.assign(model.data(), model.data() + m);
  fit.residual = (model - y).norm();
  fit.residual_ok = fit.residual <= opts.residual_per_sample * m;
  return fit;
}

std::string residual_profile(const ExpansionFit& fit) {
  std::string out = "fit residual " + std::to_string(fit.residual) + " on [" + std::to_string(fit.t_min) + ", " +
                    std::to_string(fit.t_max) + "] exceeds the limit; profile:";
  const std::size_t m = fit.h.size();
  for (std::size_t i = 0; i < m; i += std::max<std::size_t>(1, m / 6)) {
    out += " t=" + std::to_string(fit.times[i]) + ":" + std::to_string(fit.h[i] - fit.model[i]);
  }
  return out;
}

}  // namespace

ExpansionFit fit_expansion(const FlagContext& ctx, const PhasePoint& lambda0, const ExpansionOptions& opts) {
  ExpansionOptions local = opts;
  ExpansionFit fit = fit_window(ctx, lambda0, local);
  std::vector<std::string> notes;
  while (!fit.residual_ok && fit.refinements < opts.refinements) {
    notes.push_back(residual_profile(fit));
    local.t_min /= 2;
    local.t_max /= 2;
    const int done = fit.refinements + 1;
    fit = fit_window(ctx, lambda0, local);
    fit.refinements = done;
  }
  if (fit.refinements > 0) {
    notes.push_back("window shrunk " + std::to_string(fit.refinements) + " time(s) to [" + std::to_string(fit.t_min) +
                    ", " + std::to_string(fit.t_max) + "]");
  }
  if (!fit.residual_ok) notes.push_back(residual_profile(fit));
  fit.diagnostics = notes;

  if (opts.window_check) {
    ExpansionOptions half = local;
    half.t_max = local.t_max / 2;
    ExpansionFit h = fit_window(ctx, lambda0, half);
    fit.tr_r_half_window = h.tr_r;
    fit.window_ok = std::fabs(h.tr_r - fit.tr_r) <= opts.window_tol;
    if (!fit.window_ok) {
      fit.diagnostics.push_back("tr R moved by " + std::to_string(std::fabs(h.tr_r - fit.tr_r)) +
                                " when the window upper end was halved");
    }
  }
  return fit;
}

double exponent_probe(const FlagContext& ctx, const PhasePoint& lambda0, double t_min, double t_max, int samples,
                      const RhoOptions& opts) {
  std::vector<double> ts = geometric_grid(t_min, t_max, samples);
  std::vector<double> logr = log_ratios(ctx, lambda0, ts, opts);
  Eigen::MatrixXd a(samples, 2);
  Eigen::VectorXd y(samples);
  for (int i = 0; i < samples; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(ts[static_cast<std::size_t>(i)]);
    y(i) = logr[static_cast<std::size_t>(i)];
  }
  return a.colPivHouseholderQr().solve(y)(1);
}

std::optional<double> ricci_oracle(std::string_view builtin_name, const FlagContext& ctx, const PhasePoint& lambda0) {
  const ControlSystem& sys = ctx.system();
  if (sys.has_drift() || !sys.potential.is_constant(0.0)) return std::nullopt;
  std::string_view base = builtin_name.substr(0, builtin_name.find(':'));
  if (base == "euclidean") return 0.0;
  if (base == "sphere2") return ctx.dynamics().controls(lambda0).squaredNorm();
  return std::nullopt;
}

}  // namespace geoflow
