#include "geoflow/geometry.hpp"

#include <cmath>

namespace geoflow {

bool ControlSystem::has_drift() const {
  for (const Expr& c : drift) {
    if (!c.is_constant(0.0)) return true;
  }
  return false;
}

void ControlSystem::validate() const {
  if (n < 1) throw std::invalid_argument("dimension must be positive");
  if (k < 1 || k > n) throw std::invalid_argument("rank must satisfy 1 <= k <= n");
  if (static_cast<int>(frame.size()) != k) throw std::invalid_argument("frame has " + std::to_string(frame.size()) + " fields, rank is " + std::to_string(k));
  if (static_cast<int>(drift.size()) != n) throw std::invalid_argument("drift must have n components");
  auto check = [&](const Expr& e, const std::string& what) {
    if (max_variable(e) >= n) throw std::invalid_argument(what + " references a variable outside x1..x" + std::to_string(n));
  };
  for (std::size_t a = 0; a < frame.size(); ++a) {
    if (static_cast<int>(frame[a].size()) != n) {
      throw std::invalid_argument("frame field " + std::to_string(a + 1) + " must have n components");
    }
    for (const Expr& c : frame[a]) check(c, "frame");
  }
  for (const Expr& c : drift) check(c, "drift");
  check(potential, "potential");
  check(density, "density");
}

ControlSystem make_system(std::string name, std::vector<VectorField> frame, Expr density, VectorField drift,
                          Expr potential) {
  ControlSystem sys;
  sys.name = std::move(name);
  sys.k = static_cast<int>(frame.size());
  sys.n = frame.empty() ? 0 : static_cast<int>(frame.front().size());
  sys.frame = std::move(frame);
  sys.drift = drift.empty() ? zero_field(sys.n) : std::move(drift);
  sys.density = std::move(density);
  sys.potential = std::move(potential);
  sys.validate();
  return sys;
}

VectorField zero_field(int n) { return VectorField(static_cast<std::size_t>(n), Expr(0.0)); }

VectorField coordinate_field(int n, int i) {
  VectorField v = zero_field(n);
  v[static_cast<std::size_t>(i)] = Expr(1.0);
  return v;
}

Expr lie_derivative(const VectorField& v, const Expr& f) {
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].is_constant(0.0)) continue;
    Expr d = diff(f, static_cast<int>(i));
    if (!d.is_constant(0.0)) terms.push_back(v[i] * d);
  }
  return expand(sum(terms));
}

VectorField lie_bracket(const VectorField& v, const VectorField& w) {
  VectorField out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = expand(lie_derivative(v, w[j]) - lie_derivative(w, v[j]));
  return out;
}

Eigen::VectorXd evaluate(const VectorField& v, const Eigen::VectorXd& x) {
  std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = eval(v[i], pt);
  return out;
}

Eigen::MatrixXd frame_matrix(const ControlSystem& sys, const Eigen::VectorXd& x) {
  Eigen::MatrixXd f(sys.n, sys.k);
  for (int a = 0; a < sys.k; ++a) f.col(a) = evaluate(sys.frame[static_cast<std::size_t>(a)], x);
  return f;
}

double density_at(const ControlSystem& sys, const Eigen::VectorXd& x) {
  return eval(sys.density, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double abs_det(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 1.0;
  Eigen::MatrixXd b = a;
  int shift = 0;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    double m = b.row(i).cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    int e = 0;
    std::frexp(m, &e);
    b.row(i) *= std::ldexp(1.0, -e);
    shift += e;
  }
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    double m = b.col(j).cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    int e = 0;
    std::frexp(m, &e);
    b.col(j) *= std::ldexp(1.0, -e);
    shift += e;
  }
  return std::ldexp(std::fabs(b.partialPivLu().determinant()), shift);
}

double volume_of(const ControlSystem& sys, const Eigen::VectorXd& x, const Eigen::MatrixXd& vectors) {
  return density_at(sys, x) * abs_det(vectors);
}

double frame_conditioning(const Eigen::MatrixXd& frame) {
  if (frame.cols() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(frame);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

std::vector<int> greedy_complement(const Eigen::MatrixXd& frame) {
  const auto n = frame.rows();
  if (frame_conditioning(frame) < 1e-10) throw DegenerateFrame("frame fields are linearly dependent at this point");
  Eigen::MatrixXd q = frame.householderQr().householderQ() * Eigen::MatrixXd::Identity(n, frame.cols());
  std::vector<int> chosen;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  while (q.cols() < n) {
    int best = -1;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
      double r = (e - q * (q.transpose() * e)).norm();
      if (r > best_norm + 1e-12) {
        best_norm = r;
        best = static_cast<int>(i);
      }
    }
    if (best < 0 || best_norm < 1e-10) throw DegenerateFrame("no coordinate direction completes the frame");
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(best);
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, best);
    Eigen::VectorXd r = e - q * (q.transpose() * e);
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = r / r.norm();
  }
  return chosen;
}

AuxFrame aux_frame_at(const ControlSystem& sys, const Eigen::VectorXd& x, const std::vector<int>& complement) {
  if (static_cast<int>(complement.size()) != sys.n - sys.k) {
    throw std::invalid_argument("complement must list n - k coordinate directions");
  }
  AuxFrame aux;
  aux.complement = complement;
  aux.Y.resize(sys.n, sys.n);
  aux.Y.leftCols(sys.k) = frame_matrix(sys, x);
  for (std::size_t j = 0; j < complement.size(); ++j) {
    aux.Y.col(sys.k + static_cast<Eigen::Index>(j)) = Eigen::VectorXd::Unit(sys.n, complement[j]);
  }
  double vol = volume_of(sys, x, aux.Y);
  if (!(vol > 0.0) || frame_conditioning(aux.Y) < 1e-12) {
    throw DegenerateFrame("auxiliary frame is degenerate; choose another complement");
  }
  aux.scale = 1.0 / vol;
  aux.Y.col(sys.n - 1) *= aux.scale;
  return aux;
}

}  // namespace geoflow
