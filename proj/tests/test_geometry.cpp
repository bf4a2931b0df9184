#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "geoflow/catalog.hpp"
#include "geoflow/geometry.hpp"

using namespace geoflow;

namespace {

Expr random_cubic(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::uniform_int_distribution<int> var(0, n - 1);
  std::vector<Expr> terms{Expr(c(rng))};
  for (int t = 0; t < 6; ++t) {
    int deg = std::uniform_int_distribution<int>(1, 3)(rng);
    Expr m(c(rng));
    for (int d = 0; d < deg; ++d) m = m * Expr::variable(var(rng));
    terms.push_back(m);
  }
  return sum(terms);
}

VectorField random_field(std::mt19937& rng, int n) {
  VectorField v;
  for (int i = 0; i < n; ++i) v.push_back(random_cubic(rng, n));
  return v;
}

Eigen::VectorXd random_point(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

VectorField add(const VectorField& a, const VectorField& b, double s = 1.0) {
  VectorField out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] + Expr(s) * b[i]);
  return out;
}

}  // namespace

TEST_CASE("bracket examples") {
  VectorField d1 = coordinate_field(2, 0);
  VectorField d2 = coordinate_field(2, 1);
  for (const Expr& c : lie_bracket(d1, d2)) CHECK(c.is_constant(0.0));

  ControlSystem h = builtin("heisenberg3");
  VectorField b = lie_bracket(h.frame[0], h.frame[1]);
  // hand computation: X1(x1/2) - X2(-x2/2) = 1/2 + 1/2
  CHECK(b[0].is_constant(0.0));
  CHECK(b[1].is_constant(0.0));
  CHECK(b[2].is_constant(1.0));

  std::mt19937 rng(1);
  VectorField v = random_field(rng, 3);
  for (const Expr& c : lie_bracket(v, v)) CHECK(c.is_constant(0.0));
}

TEST_CASE("bracket is bilinear, antisymmetric and satisfies Jacobi") {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3;
    VectorField u = random_field(rng, n);
    VectorField v = random_field(rng, n);
    VectorField w = random_field(rng, n);
    double a = std::uniform_real_distribution<double>(-2, 2)(rng);
    VectorField uv = lie_bracket(u, v);
    VectorField vu = lie_bracket(v, u);
    VectorField lin = lie_bracket(add(u, w, a), v);
    VectorField lin_ref = add(uv, lie_bracket(w, v), a);
    VectorField j1 = lie_bracket(u, lie_bracket(v, w));
    VectorField j2 = lie_bracket(v, lie_bracket(w, u));
    VectorField j3 = lie_bracket(w, lie_bracket(u, v));
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd x = random_point(rng, n);
      Eigen::VectorXd e1 = evaluate(uv, x) + evaluate(vu, x);
      Eigen::VectorXd e2 = evaluate(lin, x) - evaluate(lin_ref, x);
      Eigen::VectorXd e3 = evaluate(j1, x) + evaluate(j2, x) + evaluate(j3, x);
      double scale = 1.0 + evaluate(j1, x).norm();
      CHECK(e1.norm() <= 1e-9);
      CHECK(e2.norm() <= 1e-9 * (1.0 + evaluate(lin, x).norm()));
      CHECK(e3.norm() <= 1e-9 * scale);
    }
  }
}

TEST_CASE("bracket matches finite differences of the fields") {
  std::mt19937 rng(3);
  const int n = 3;
  VectorField v = random_field(rng, n);
  VectorField w = random_field(rng, n);
  VectorField b = lie_bracket(v, w);
  Eigen::VectorXd x = random_point(rng, n);
  const double h = 1e-6;
  auto dir = [&](const VectorField& f, const Eigen::VectorXd& d) {
    return Eigen::VectorXd((evaluate(f, x + h * d) - evaluate(f, x - h * d)) / (2 * h));
  };
  Eigen::VectorXd fd = dir(w, evaluate(v, x)) - dir(v, evaluate(w, x));
  CHECK((fd - evaluate(b, x)).norm() <= 1e-6 * (1.0 + fd.norm()));
}

TEST_CASE("aux frame examples") {
  ControlSystem e2 = builtin("euclidean:2");
  AuxFrame a = aux_frame_at(e2, Eigen::Vector2d(0.3, -0.1), {});
  CHECK((a.Y - Eigen::Matrix2d::Identity()).norm() == 0.0);

  ControlSystem h = builtin("heisenberg3");
  Eigen::VectorXd o = Eigen::VectorXd::Zero(3);
  CHECK(greedy_complement(frame_matrix(h, o)) == std::vector<int>{2});
  AuxFrame ah = aux_frame_at(h, o, {2});
  CHECK((ah.Y.col(2) - Eigen::Vector3d(0, 0, 1)).norm() == 0.0);
  CHECK(ah.scale == 1.0);

  ControlSystem w = builtin("euclidean:2:psi=x1");
  CHECK(aux_frame_at(w, Eigen::Vector2d(0, 0), {}).scale == doctest::Approx(1.0).epsilon(1e-15));
  AuxFrame aw = aux_frame_at(w, Eigen::Vector2d(1, 0), {});
  CHECK(aw.scale == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(aw.Y(0, 0) == 1.0);
}

TEST_CASE("aux frame has unit volume") {
  std::mt19937 rng(4);
  for (const char* name : {"sphere2", "heisenberg3", "heisenberg5:1,2", "engel", "heisenberg3:psi=x1*x2 + x3"}) {
    ControlSystem sys = builtin(name);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd x = random_point(rng, sys.n);
      auto comp = greedy_complement(frame_matrix(sys, x));
      AuxFrame a = aux_frame_at(sys, x, comp);
      CHECK(std::fabs(volume_of(sys, x, a.Y) - 1.0) <= 1e-10);
      CHECK((a.Y.leftCols(sys.k) - frame_matrix(sys, x)).norm() == 0.0);
    }
  }
}

TEST_CASE("degenerate completion is reported") {
  ControlSystem h = builtin("heisenberg3");
  CHECK_THROWS_AS(aux_frame_at(h, Eigen::VectorXd::Zero(3), {0}), DegenerateFrame);
  Eigen::MatrixXd dep(3, 2);
  dep << 1, 2, 0, 0, 1, 2;
  CHECK_THROWS_AS(greedy_complement(dep), DegenerateFrame);
}

TEST_CASE("volume_of examples") {
  ControlSystem e3 = builtin("euclidean:3");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  CHECK(volume_of(e3, x, Eigen::MatrixXd::Identity(3, 3)) == 1.0);
  CHECK(volume_of(e3, x, 0.5 * Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(0.125).epsilon(1e-15));
  Eigen::MatrixXd rep(3, 3);
  rep << 1, 1, 0, 2, 2, 0, 3, 3, 1;
  CHECK(volume_of(e3, x, rep) == 0.0);
}

TEST_CASE("abs_det survives graded scaling") {
  Eigen::MatrixXd core(3, 3);
  core << 2, 1, 0.5, 1, 3, 1, 0.25, 1, 4;
  double ref = std::fabs(core.determinant());
  Eigen::Vector3d r(1e-3, 1e-8, 1e-15);
  Eigen::Vector3d c(1, 1e-6, 1e-12);
  Eigen::MatrixXd graded = r.asDiagonal() * core * c.asDiagonal();
  CHECK(abs_det(graded) == doctest::Approx(ref * 1e-26 * 1e-18).epsilon(1e-13));
}

TEST_CASE("structure json round trip and errors") {
  ControlSystem e = builtin("engel");
  ControlSystem back = structure_from_json(structure_to_json(e));
  CHECK(back.n == 4);
  CHECK(back.k == 2);
  std::mt19937 rng(5);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd x = random_point(rng, 4);
    CHECK((frame_matrix(back, x) - frame_matrix(e, x)).norm() == 0.0);
  }
  CHECK_THROWS_AS(builtin("nope"), std::invalid_argument);
  CHECK_THROWS_AS(builtin("heisenberg5:1"), std::invalid_argument);
  CHECK_THROWS_AS(builtin("euclidean:x"), std::invalid_argument);
  CHECK_THROWS_AS(structure_from_json(nlohmann::json{{"dim", 2}, {"frame", {{"1", "x3"}}}}), std::invalid_argument);
  CHECK_THROWS_AS(structure_from_json(nlohmann::json{{"dim", 2}, {"rank", 2}, {"frame", {{"1", "0"}}}}),
                  std::invalid_argument);
}
