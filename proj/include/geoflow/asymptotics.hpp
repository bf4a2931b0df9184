#pragma once

// Fits of the volume expansion r(t) = C t^N e^{int rho} (1 - tr R t^2 / 6 + ...).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoflow/rho.hpp"

namespace geoflow {

struct ExpansionOptions {
  double t_min = 1e-2;
  double t_max = 2e-1;
  int samples = 24;
  int simpson_intervals = 8;      // per sample time, even
  double residual_per_sample = 1e-6;
  bool window_check = true;       // refit with t_max / 2
  int refinements = 4;            // halvings of the whole window while the residual is too large
  double window_tol = 2e-2;
  int threads = 1;                // 0: default_threads()
  RhoOptions rho;
};

struct ExpansionFit {
  int geodesic_dimension = 0;
  std::vector<double> times;
  std::vector<double> r;
  std::vector<double> integral_rho;
  std::vector<double> h;      // log r - N log t - int rho
  std::vector<double> model;  // log C + c2 t^2 + c3 t^3
  double log_c = 0.0;
  double c = 0.0;
  double tr_r = 0.0;
  double c3 = 0.0;
  double residual = 0.0;  // Euclidean norm of h - model
  double t_min = 0.0;
  double t_max = 0.0;
  int samples = 0;
  int refinements = 0;  // halvings applied to the requested window
  std::optional<double> tr_r_half_window;
  bool residual_ok = true;
  bool window_ok = true;
  std::vector<std::string> diagnostics;
};

ExpansionFit fit_expansion(const FlagContext& ctx, const PhasePoint& lambda0, const ExpansionOptions& opts = {});

// Composite Simpson integral of rho(lambda(s)) over [0, t] for each t.
std::vector<double> integrated_rho(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                                   int intervals = 8, const RhoOptions& opts = {}, int threads = 1);

// Least-squares slope of log r against log t over [t_min, t_max].
double exponent_probe(const FlagContext& ctx, const PhasePoint& lambda0, double t_min = 1e-3, double t_max = 1e-2,
                      int samples = 12, const RhoOptions& opts = {});

// Closed-form tr R for builtins that have one: 0 for euclidean, Ric(v, v) = |v|^2
// for sphere2 (any psi). std::nullopt otherwise.
std::optional<double> ricci_oracle(std::string_view builtin_name, const FlagContext& ctx, const PhasePoint& lambda0);

}  // namespace geoflow
