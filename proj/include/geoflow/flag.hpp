#pragma once

// Geodesic flag along a normal extremal: admissible extension of the tangent
// vector, iterated Lie derivatives of the frame along it, growth vector,
// Young diagram and the constants derived from them.

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoflow/exact.hpp"
#include "geoflow/hamiltonian.hpp"
#include "geoflow/jet.hpp"

namespace geoflow {

class ZeroTangent : public std::runtime_error {
public:
  ZeroTangent() : std::runtime_error("zero tangent vector") {}
};

class NotAmple : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FlagOptions {
  int order = -1;          // Taylor order of the controls; -1 means n
  double rank_tol = 1e-9;  // relative singular-value threshold
  bool first_order_tau = false;
  std::optional<Eigen::VectorXd> w;  // time-function direction; default gamma'(t*)
};

// Per-system state shared by every flag evaluation: the compiled Hamiltonian
// flow and the towers ad_H^k of the controls and coordinates.
class FlagContext {
public:
  explicit FlagContext(ControlSystem sys, int max_order = -1);

  const ControlSystem& system() const { return dyn_.system(); }
  const Dynamics& dynamics() const { return dyn_; }
  int n() const { return dyn_.n(); }
  int max_order() const { return max_order_; }
  const std::shared_ptr<const JetSpace>& jet_space() const { return space_; }

  // Column k holds d^k/dt^k along the flow at z, k = 0..max_order.
  struct Derivatives {
    Eigen::MatrixXd u;  // k rows
    Eigen::MatrixXd x;  // n rows
  };
  Derivatives derivatives(const PhasePoint& z) const;

  // Total node count of the compiled towers.
  std::size_t tower_size() const { return tower_nodes_; }

private:
  Dynamics dyn_;
  int max_order_;
  Program towers_;
  std::size_t tower_nodes_ = 0;
  std::shared_ptr<const JetSpace> space_;
};

// T(x) = X0 + sum_i u_i(sigma) X_i with sigma = <w, x - point>; coeffs[i][m]
// is the sigma^m coefficient of u_i.
struct Extension {
  Eigen::VectorXd point;
  Eigen::VectorXd w;
  std::vector<std::vector<double>> coeffs;
};

Extension extension_at(const FlagContext& ctx, const PhasePoint& z, const FlagOptions& opts = {});

VectorField extension_field(const FlagContext& ctx, const Extension& ext);

// Flows lambda0 to t* and returns the symbolic extension there.
VectorField admissible_extension(const FlagContext& ctx, const PhasePoint& lambda0, double t_star, int order);

JetField extension_jet(const FlagContext& ctx, const Extension& ext);

// images[j] is n x k with columns L_T^j X_a at the extension point.
std::vector<Eigen::MatrixXd> bracket_images(const FlagContext& ctx, const Extension& ext, int levels);

int geodesic_dimension(const std::vector<int>& growth);
int homogeneous_weight(const std::vector<int>& growth);

struct GeodesicFlag {
  Eigen::VectorXd point;
  std::vector<Eigen::MatrixXd> bases;   // orthonormal, n x k_i
  std::vector<Eigen::MatrixXd> images;  // L_T^(i-1) X_a, i = 1..levels
  std::vector<int> growth;
  std::vector<int> increments;
  int steps = 0;
  bool ample = false;
  int geodesic_dimension = 0;
  int homogeneous_weight = 0;
  std::array<std::vector<int>, 3> growth_by_tolerance;  // rank_tol / 10, rank_tol, rank_tol * 10
  bool ill_conditioned = false;
  std::vector<std::string> diagnostics;
};

// Rank accumulation over precomputed images.
GeodesicFlag flag_from_images(const Eigen::VectorXd& point, std::vector<Eigen::MatrixXd> images, double rank_tol);

GeodesicFlag flag_at_state(const FlagContext& ctx, const PhasePoint& z, const FlagOptions& opts = {});
GeodesicFlag flag_at(const FlagContext& ctx, const PhasePoint& lambda0, double t_star, const FlagOptions& opts = {});

struct Equiregularity {
  bool equiregular = false;
  std::vector<double> times;
  std::vector<std::vector<int>> growth;
};

Equiregularity equiregular_on(const FlagContext& ctx, const PhasePoint& lambda0, double window, int samples = 5,
                              const FlagOptions& opts = {});

struct YoungDiagram {
  std::vector<int> rows;     // n_1 >= n_2 >= ...
  std::vector<int> columns;  // d_1, d_2, ...
};

// Throws NotAmple.
YoungDiagram young_diagram(const GeodesicFlag& flag);
Rational leading_constant(const YoungDiagram& y);

}  // namespace geoflow
