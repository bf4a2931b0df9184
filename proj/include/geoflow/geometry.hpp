#pragma once

// Affine control systems in a single chart: drift, orthonormal frame,
// potential and a volume density, plus the symbolic and pointwise geometry
// built on top of them.

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoflow/expr.hpp"

namespace geoflow {

// n components over the chart variables x1..xn (indices 0..n-1).
using VectorField = std::vector<Expr>;

struct ControlSystem {
  int n = 0;
  int k = 0;
  VectorField drift;               // X0
  std::vector<VectorField> frame;  // X1..Xk
  Expr potential;                  // Q
  Expr density;                    // m, with mu = m dx1...dxn
  std::string name;

  bool has_drift() const;
  // Throws std::invalid_argument on inconsistent sizes or stray variables.
  void validate() const;
};

ControlSystem make_system(std::string name, std::vector<VectorField> frame, Expr density,
                          VectorField drift = {}, Expr potential = Expr(0.0));

VectorField zero_field(int n);
VectorField coordinate_field(int n, int i);

// V(f) = sum_i V^i df/dx_i
Expr lie_derivative(const VectorField& v, const Expr& f);

// [V,W]^j = V(W^j) - W(V^j)
VectorField lie_bracket(const VectorField& v, const VectorField& w);

Eigen::VectorXd evaluate(const VectorField& v, const Eigen::VectorXd& x);

// n x k matrix whose columns are the frame values at x.
Eigen::MatrixXd frame_matrix(const ControlSystem& sys, const Eigen::VectorXd& x);

double density_at(const ControlSystem& sys, const Eigen::VectorXd& x);

// m(x) |det[v1 ... vn]|
double volume_of(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::MatrixXd& vectors);

// Smallest singular value over largest; frames below ~1e-10 are treated as
// dependent.
double frame_conditioning(const Eigen::MatrixXd& frame);

class DegenerateFrame : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Greedy choice of n-k coordinate directions completing the frame: at each
// step the direction with the largest component orthogonal to the current
// span. Throws DegenerateFrame if the frame itself is dependent.
std::vector<int> greedy_complement(const Eigen::MatrixXd& frame);

struct AuxFrame {
  Eigen::MatrixXd Y;            // columns Y1..Yn
  std::vector<int> complement;  // coordinate indices used for Y_{k+1}..Y_n
  double scale = 1.0;           // factor applied to Y_n
};

// Y1..Yk = frame at x, then the chosen coordinate directions, with Y_n scaled
// so that m(x) |det Y| = 1.
AuxFrame aux_frame_at(const ControlSystem& sys, const Eigen::VectorXd& x, const std::vector<int>& complement);

// |det| of a square matrix after power-of-two row and column equilibration.
double abs_det(const Eigen::MatrixXd& a);

}  // namespace geoflow
