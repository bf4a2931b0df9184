#pragma once

// H = 1/2 sum <p,X_i>^2 + <p,X0> + 1/2 Q on the cotangent bundle of the chart,
// its flow, and the variational equations for the vertical Jacobian.

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "geoflow/geometry.hpp"
#include "geoflow/integrator.hpp"
#include "geoflow/program.hpp"

namespace geoflow {

struct PhasePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd p;
};

struct FlowSample {
  double t = 0.0;
  PhasePoint state;
  Eigen::MatrixXd Jv;  // dx(t)/dp(0); empty when not requested
  Eigen::MatrixXd Phi; // d(x,p)(t)/d(x,p)(0), only with full_variational
  Eigen::VectorXd u;   // u_i = <p, X_i(x)>
  double energy = 0.0;
  double energy_drift = 0.0;  // |H(t) - H(0)|
};

struct FlowOptions {
  double tol = 1e-12;
  // Absolute floor for the variational components. Entries of J_v scale like
  // t^(2w-1) for weight-w directions, so anything coarser destroys det J_v
  // at small t.
  double jacobian_atol = 1e-30;
  bool jacobian = true;
  bool full_variational = false;
};

// Phase-space expression over x1..xn (indices 0..n-1), p1..pn (n..2n-1).
Expr hamiltonian(const ControlSystem& sys);

// {F, G} = sum dF/dp_j dG/dx_j - dF/dx_j dG/dp_j, so d/dt G(lambda(t)) = {H, G}.
Expr poisson_bracket(const Expr& f, const Expr& g, int n);

// Compiled Hamiltonian vector field, its Jacobian, and the controls.
class Dynamics {
public:
  explicit Dynamics(ControlSystem sys);

  const ControlSystem& system() const { return sys_; }
  int n() const { return sys_.n; }
  const Expr& H() const { return h_; }

  double energy(const PhasePoint& z) const;
  Eigen::VectorXd controls(const PhasePoint& z) const;
  // (dx/dt, dp/dt)
  Eigen::VectorXd vector_field(const PhasePoint& z) const;

  // y = (x, p, delta) with delta a column-major 2n x cols block.
  void rhs(const double* y, double* dy, std::size_t cols, std::vector<double>& work) const;

private:
  ControlSystem sys_;
  Expr h_;
  Program field_;     // 2n outputs
  Program jacobian_;  // (2n)^2 outputs, row-major
  Program controls_;  // k outputs
  Program energy_;
};

// Samples at the requested times (any order, either sign); the integration
// runs outward from 0 through the sorted times. Throws IntegrationError.
std::vector<FlowSample> flow_samples(const Dynamics& dyn, const PhasePoint& start, std::span<const double> times,
                                     const FlowOptions& opts = {});

FlowSample flow(const Dynamics& dyn, const PhasePoint& start, double t, const FlowOptions& opts = {});

Eigen::MatrixXd vertical_jacobian(const Dynamics& dyn, const PhasePoint& start, double t,
                                  const FlowOptions& opts = {});

// m(x0) m(gamma(t)) |det J_v(t)|: coefficient of the pulled-back volume
// against dp, times m(x0).
double pulled_back_density(const Dynamics& dyn, const PhasePoint& start, const FlowSample& s);

// pulled_back_density / frame_volume^2, where frame_volume = |mu(P_0)| is the
// volume of the flag parallelotope at the start (see rho.hpp). Equals
// m(gamma(t)) |det J_v| / m(x0) whenever |mu(P_0)| = m(x0).
double volume_ratio(const Dynamics& dyn, const PhasePoint& start, const FlowSample& s, double frame_volume);

}  // namespace geoflow
