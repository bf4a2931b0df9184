#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "geoflow/catalog.hpp"
#include "geoflow/hamiltonian.hpp"

using namespace geoflow;

namespace {

PhasePoint point(std::vector<double> x, std::vector<double> p) {
  return {Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
          Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()))};
}

PhasePoint random_start(const Dynamics& dyn, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = dyn.n();
  PhasePoint z{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) z.x(i) = 0.3 * u(rng);
  do {
    for (int i = 0; i < n; ++i) z.p(i) = u(rng);
  } while (dyn.energy(z) < 0.05);
  z.p /= std::sqrt(2.0 * dyn.energy(z));
  return z;
}

const char* kBuiltins[] = {"euclidean:2", "euclidean:3", "euclidean:2:psi=x1 - 2*x2", "sphere2", "heisenberg3",
                           "heisenberg5:1,2", "engel"};

}  // namespace

TEST_CASE("hamiltonian examples") {
  Dynamics e(builtin("euclidean:3"));
  CHECK(e.energy(point({0.1, 2, 3}, {1, 2, 2})) == doctest::Approx(4.5).epsilon(1e-15));

  Dynamics h(builtin("heisenberg3"));
  CHECK(h.energy(point({0, 0, 0}, {1, 0, 0})) == doctest::Approx(0.5).epsilon(1e-15));

  ControlSystem q = builtin("euclidean:2");
  override_potential(q, "3");
  Dynamics dq(q);
  CHECK(dq.energy(point({0.4, -1}, {1, 1})) == doctest::Approx(1.0 + 1.5).epsilon(1e-15));

  ControlSystem d = builtin("euclidean:2");
  override_drift(d, {"x2", "0"});
  Dynamics dd(d);
  CHECK(dd.energy(point({0, 2}, {1, 0})) == doctest::Approx(0.5 + 2.0).epsilon(1e-15));
}

TEST_CASE("poisson bracket gives time derivatives") {
  Dynamics h(builtin("heisenberg3"));
  // d/dt x3 = {H, x3} = p-derivative of H in the 3rd slot
  Expr x3 = Expr::variable(2);
  Expr dx3 = poisson_bracket(h.H(), x3, 3);
  PhasePoint z = point({0.2, -0.1, 0.3}, {0.5, 0.7, 1.1});
  Eigen::VectorXd v = h.vector_field(z);
  std::vector<double> y{0.2, -0.1, 0.3, 0.5, 0.7, 1.1};
  CHECK(eval(dx3, y) == doctest::Approx(v(2)).epsilon(1e-14));
  CHECK(poisson_bracket(h.H(), h.H(), 3).is_constant(0.0));
}

TEST_CASE("euclidean flow is a straight line with J_v = t I") {
  Dynamics e(builtin("euclidean:3"));
  PhasePoint z = point({1, 2, 3}, {0.3, -0.4, 0.5});
  for (double t : {-0.7, 0.0, 0.25, 1.0}) {
    FlowSample s = flow(e, z, t);
    CHECK((s.state.x - (z.x + t * z.p)).norm() <= 1e-14);
    CHECK((s.state.p - z.p).norm() == 0.0);
    CHECK((s.Jv - t * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-14);
  }
}

TEST_CASE("heisenberg geodesic with p3 = 0 is a horizontal line") {
  Dynamics h(builtin("heisenberg3"));
  PhasePoint z = point({0, 0, 0}, {1, 0, 0});
  for (double t : {0.5, 1.0, 2.0}) {
    FlowSample s = flow(h, z, t);
    CHECK(std::fabs(s.state.x(2)) <= 1e-14);
    CHECK(std::fabs(s.state.x(0) - t) <= 1e-13);
    CHECK(std::fabs(s.state.x(1)) <= 1e-14);
  }
}

TEST_CASE("J_v vanishes at t = 0") {
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    std::mt19937 rng(1);
    CHECK(vertical_jacobian(d, random_start(d, rng), 0.0).norm() == 0.0);
  }
}

TEST_CASE("sphere2 vertical Jacobian has the stereographic closed form") {
  // Geodesic from the origin along x1: x1 = tan(t/2); radial and angular
  // variations give dx1/dp1 = (t/4) sec^2(t/2), dx2/dp2 = tan(t/2)/2.
  Dynamics s(builtin("sphere2"));
  PhasePoint z = point({0, 0}, {2, 0});
  CHECK(s.energy(z) == doctest::Approx(0.5).epsilon(1e-15));
  for (double t = 0.01; t <= 0.5 + 1e-12; t += 0.049) {
    FlowSample f = flow(s, z, t);
    double c = std::cos(t / 2);
    double expected = t * std::tan(t / 2) / (8 * c * c);
    CHECK(std::fabs(std::fabs(f.Jv.determinant()) - expected) <= 1e-8 * expected);
    CHECK(std::fabs(pulled_back_density(s, z, f) - t * std::sin(t)) <= 1e-8 * t * std::sin(t));
  }
}

TEST_CASE("energy is conserved") {
  std::mt19937 rng(2);
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    for (int k = 0; k < 5; ++k) {
      PhasePoint z = random_start(d, rng);
      std::vector<double> ts{-0.5, -0.1, 0.1, 0.3, 0.5};
      for (const FlowSample& s : flow_samples(d, z, ts)) {
        INFO(name);
        CHECK(s.energy_drift <= 1e-9 * (1.0 + std::fabs(d.energy(z))));
      }
    }
  }
}

TEST_CASE("flow composes for either sign") {
  std::mt19937 rng(3);
  const double tol = 1e-12;
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    PhasePoint z = random_start(d, rng);
    for (auto [a, b] : {std::pair{0.2, 0.3}, {-0.25, 0.4}, {0.3, -0.45}, {-0.1, -0.2}}) {
      FlowSample first = flow(d, z, a);
      FlowSample second = flow(d, first.state, b);
      FlowSample direct = flow(d, z, a + b);
      INFO(name, " ", a, " ", b);
      CHECK((second.state.x - direct.state.x).norm() <= 10 * tol * (1 + direct.state.x.norm()));
      CHECK((second.state.p - direct.state.p).norm() <= 10 * tol * (1 + direct.state.p.norm()));
    }
  }
}

TEST_CASE("J_v matches finite differences of the exponential map") {
  std::mt19937 rng(4);
  const double h = 1e-6;
  FlowOptions no_jac;
  no_jac.jacobian = false;
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    PhasePoint z = random_start(d, rng);
    const double t = 0.4;
    Eigen::MatrixXd jv = vertical_jacobian(d, z, t);
    Eigen::MatrixXd fd(d.n(), d.n());
    for (int j = 0; j < d.n(); ++j) {
      PhasePoint lo = z;
      PhasePoint hi = z;
      lo.p(j) -= h;
      hi.p(j) += h;
      fd.col(j) = (flow(d, hi, t, no_jac).state.x - flow(d, lo, t, no_jac).state.x) / (2 * h);
    }
    INFO(name);
    CHECK((jv - fd).norm() <= 1e-6 * jv.norm());
  }
}

TEST_CASE("J_v obeys the chain rule through a re-based flow") {
  std::mt19937 rng(5);
  FlowOptions full;
  full.full_variational = true;
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    PhasePoint z = random_start(d, rng);
    const int n = d.n();
    FlowSample a = flow(d, z, 0.2, full);
    FlowSample b = flow(d, a.state, 0.25, full);
    FlowSample direct = flow(d, z, 0.45, full);
    Eigen::MatrixXd composed = b.Phi * a.Phi;
    Eigen::MatrixXd jv = composed.block(0, n, n, n);
    INFO(name);
    CHECK((jv - direct.Jv).norm() <= 1e-7 * (1.0 + direct.Jv.norm()));
  }
}

TEST_CASE("pulled-back density is positive on short windows") {
  std::mt19937 rng(6);
  for (const char* name : kBuiltins) {
    Dynamics d(builtin(name));
    PhasePoint z = random_start(d, rng);
    z.x.setZero();
    std::vector<double> ts{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    for (const FlowSample& s : flow_samples(d, z, ts)) CHECK(pulled_back_density(d, z, s) > 0.0);
  }
}

TEST_CASE("integration failure reports the last valid time") {
  ControlSystem blow = builtin("euclidean:1");
  override_drift(blow, {"x1^2"});
  Dynamics d(blow);
  PhasePoint z = point({1}, {0});
  try {
    flow(d, z, 2.0);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.last_t() > 0.9);
    CHECK(e.last_t() < 1.0);
  }
}
