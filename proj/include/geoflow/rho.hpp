#pragma once

// Volume of the canonical parallelotope along a geodesic, g(t) = log |mu(P_t)|,
// and the invariant rho = g'(0), with the oracles used to cross-check it.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoflow/flag.hpp"

namespace geoflow {

class RankDeficiency : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RhoOptions {
  FlagOptions flag;
  std::optional<std::vector<int>> complement;  // default: greedy at the base point
  double h = 1e-3;                             // finite-difference step for g'
  double flow_tol = 1e-12;
};

struct SymbolGram {
  std::vector<int> growth;
  std::vector<double> dets;     // det M_i, complement-dependent individually
  std::vector<double> margins;  // smallest kept singular value of each projected image over its raw norm
  double log_volume = 0.0;      // 1/2 sum log det M_i
};

std::vector<int> default_complement(const ControlSystem& sys, const Eigen::VectorXd& x0);

// At the state z itself; the growth must match `growth` (else RankDeficiency).
SymbolGram symbol_gram(const FlagContext& ctx, const PhasePoint& z, const std::vector<int>& complement,
                       const std::vector<int>& growth, const FlagOptions& opts = {});

SymbolGram gram_dets(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts = {});

// |mu(P_0)|
double frame_volume(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts = {});

// g(t) - g(0) at each requested time.
std::vector<double> g_rel(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                          const RhoOptions& opts = {});
double g_rel(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts = {});

// Central difference of g at 0 with one Richardson level (steps h, h/2).
double rho(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts = {});

// rho at the flowed covector lambda(t).
double rho_along(const FlagContext& ctx, const PhasePoint& lambda0, double t, const RhoOptions& opts = {});
std::vector<double> rho_along(const FlagContext& ctx, const PhasePoint& lambda0, std::span<const double> times,
                              const RhoOptions& opts = {});

struct FlowRhoOptions {
  double t_min = 1e-3;
  double t_max = 1e-1;
  int samples = 40;
  int degree = 6;
  double residual_limit = 1e-8;
};

struct FlowRho {
  double rho = 0.0;
  double log_c = 0.0;
  double residual = 0.0;  // rms
  int geodesic_dimension = 0;
  bool residual_ok = true;
};

// Linear coefficient of a polynomial fit to log r(t) - N log t.
FlowRho rho_flow(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts = {},
                 const FlowRhoOptions& fit = {});

// Smallest entry of SymbolGram::margins at lambda0. Near the non-ample set it
// tends to 0 and rho grows without bound.
double symbol_margin(const FlagContext& ctx, const PhasePoint& lambda0, const RhoOptions& opts = {});

struct CovectorSampling {
  std::uint64_t seed = 1;
  std::optional<Eigen::VectorXd> x0;  // default: origin
  double min_margin = 0.1;
  int max_attempts = 10000;
};

struct CovectorSample {
  std::vector<PhasePoint> covectors;
  int rejected = 0;
};

// Gaussian p at x0 rescaled to |u| = 1, kept when ample with
// symbol_margin >= min_margin.
CovectorSample sample_covectors(const FlagContext& ctx, int count, const CovectorSampling& opts = {});

struct ScalingReport {
  double c = 1.0;
  double rho = 0.0;
  double rho_scaled = 0.0;
  double rho_error = 0.0;  // |rho(c l) - c rho(l)| / max(|c rho(l)|, 1)
  double g_error = 0.0;    // max over times of |g_cl(t) - g_l(ct)| (relative form)
  bool rho_pass = false;
  bool g_pass = false;
};

// Requires zero drift and zero potential.
ScalingReport scaling_checks(const FlagContext& ctx, const PhasePoint& lambda0, double c,
                             std::span<const double> times, const RhoOptions& opts = {}, double rho_tol = 1e-6,
                             double g_tol = 1e-5);

struct DivergenceReport {
  double div_mu = 0.0;
  double div_g = 0.0;
  double difference = 0.0;
  double rho = 0.0;
  bool pass = false;
};

// k = n only: div_mu T - div_vol_g T at x0 against rho.
DivergenceReport riemannian_divergence_check(const FlagContext& ctx, const PhasePoint& lambda0,
                                             const RhoOptions& opts = {}, double tol = 1e-5);

// Contact structures (n = k + 1): omega annihilates the distribution with
// omega(d_c) = 1 and J_ij = -omega([X_i, X_j]).
class ContactOracle {
public:
  ContactOracle(const ControlSystem& sys, int reeb_coordinate);
  Eigen::MatrixXd J(const Eigen::VectorXd& x) const;
  // log |J u| with u_i = <p, X_i(x)>
  double log_norm(const PhasePoint& z) const;

private:
  const ControlSystem* sys_;
  int c_;
  std::vector<std::vector<VectorField>> brackets_;
};

struct ContactSample {
  double t = 0.0;
  double g = 0.0;       // g(t) - g(0)
  double oracle = 0.0;  // log(|J gamma'(t)| / |J gamma'(0)|)
};

std::vector<ContactSample> contact_oracle(const FlagContext& ctx, const PhasePoint& lambda0,
                                          std::span<const double> times, const RhoOptions& opts = {});

}  // namespace geoflow
