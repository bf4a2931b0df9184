#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geoflow/asymptotics.hpp"
#include "geoflow/catalog.hpp"
#include "geoflow/exact.hpp"

using namespace geoflow;

namespace {

PhasePoint point(std::vector<double> x, std::vector<double> p) {
  return {Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
          Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()))};
}

double exact_constant(const FlagContext& ctx, const PhasePoint& z) {
  return leading_constant(young_diagram(flag_at_state(ctx, z, {}))).get_d();
}

}  // namespace

TEST_CASE("euclidean expansion") {
  for (int n : {2, 3}) {
    FlagContext e(builtin("euclidean:" + std::to_string(n)));
    PhasePoint z = point(std::vector<double>(static_cast<std::size_t>(n), 0.2),
                         n == 2 ? std::vector<double>{0.6, 0.8} : std::vector<double>{0.48, 0.6, 0.64});
    ExpansionFit f = fit_expansion(e, z);
    CHECK(f.geodesic_dimension == n);
    CHECK(f.c == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(f.tr_r / 6) <= 1e-6);
    for (std::size_t i = 0; i < f.times.size(); ++i) {
      CHECK(std::fabs(f.r[i] / std::pow(f.times[i], n) - 1) <= 1e-8);
      CHECK(std::fabs(f.integral_rho[i]) <= 1e-10);
    }
    CHECK(f.residual_ok);
    CHECK(f.window_ok);
    CHECK(f.diagnostics.empty());
  }
}

TEST_CASE("sphere2 expansion against t sin t") {
  FlagContext s(builtin("sphere2"));
  // u = p / 2 at the origin, so p = (2, 0) is a unit covector
  PhasePoint z = point({0, 0}, {2, 0});
  ExpansionFit f = fit_expansion(s, z);
  for (std::size_t i = 0; i < f.times.size(); ++i) {
    const double t = f.times[i];
    if (t <= 0.5) CHECK(std::fabs(f.r[i] - t * std::sin(t)) <= 1e-6 * t * std::sin(t));
  }
  CHECK(std::fabs(f.c - 1) <= 1e-4);
  CHECK(std::fabs(f.tr_r - 1) <= 1e-2);
  CHECK(f.window_ok);
  REQUIRE(ricci_oracle("sphere2", s, z));
  CHECK(*ricci_oracle("sphere2", s, z) == doctest::Approx(1.0));

  // off the origin with a non-unit speed: tr R scales with |v|^2
  PhasePoint w = point({0.3, -0.4}, {1.1, 0.7});
  const double speed2 = s.dynamics().controls(w).squaredNorm();
  ExpansionFit g = fit_expansion(s, w);
  CHECK(std::fabs(g.tr_r - speed2) <= 1e-2 * speed2);
  CHECK(*ricci_oracle("sphere2", s, w) == doctest::Approx(speed2));
}

TEST_CASE("weighted expansions absorb the density") {
  FlagContext w(builtin("euclidean:2:psi=0.7*x1 - 1.3*x2"));
  PhasePoint z = point({0.1, 0.2}, {0.6, 0.8});
  const double av = 0.7 * 0.6 - 1.3 * 0.8;
  ExpansionFit f = fit_expansion(w, z);
  for (std::size_t i = 0; i < f.times.size(); ++i) {
    CHECK(std::fabs(f.integral_rho[i] - av * f.times[i]) <= 1e-9);
    CHECK(std::fabs(f.h[i] - f.h[0]) <= 1e-8);
  }
  CHECK(f.c == doctest::Approx(1.0).epsilon(1e-10));

  // int_0^t rho(lambda(s)) ds = psi(gamma(t)) - psi(gamma(0)) for weighted Riemannian structures
  FlagContext s(builtin("sphere2:psi=x1 + x2^2"));
  PhasePoint y = point({0.2, 0.1}, {1.0, -0.6});
  std::vector<double> ts{0.05, 0.13, 0.2};
  std::vector<double> integral = integrated_rho(s, y, ts);
  auto psi = [](const Eigen::VectorXd& x) { return x(0) + x(1) * x(1); };
  std::vector<FlowSample> path = flow_samples(s.dynamics(), y, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(std::fabs(integral[i] - (psi(path[i].state.x) - psi(y.x))) <= 1e-8);
  }
  ExpansionFit g = fit_expansion(s, y);
  ExpansionFit plain = fit_expansion(FlagContext(builtin("sphere2")), y);
  CHECK(g.c == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::fabs(g.tr_r - plain.tr_r) <= 1e-3);
}

TEST_CASE("heisenberg and engel constants") {
  FlagContext h(builtin("heisenberg3"));
  for (const PhasePoint& z : {point({0, 0, 0}, {1, 0, 1}), point({0.2, -0.1, 0.3}, {0.3, 0.9, -2.0})}) {
    ExpansionFit f = fit_expansion(h, z);
    CHECK(f.geodesic_dimension == 5);
    CHECK(std::fabs(f.c - 1.0 / 12) <= 1e-3);
    CHECK(f.residual_ok);
  }
  FlagContext e(builtin("engel"));
  PhasePoint z = point({0, 0, 0, 0}, {0.8, 0.6, 0.3, -0.2});
  ExpansionFit f = fit_expansion(e, z);
  CHECK(f.geodesic_dimension == 10);
  CHECK(std::fabs(f.c * 8640 - 1) <= 1e-3);
  CHECK(f.window_ok == (f.diagnostics.empty() || !f.residual_ok));
}

TEST_CASE("exponent probe") {
  FlagContext e(builtin("euclidean:3"));
  CHECK(std::fabs(exponent_probe(e, point({0, 0, 0}, {0, 0.6, 0.8})) - 3) <= 0.01);
  FlagContext h(builtin("heisenberg3"));
  CHECK(std::fabs(exponent_probe(h, point({0, 0, 0}, {1, 0, 1})) - 5) <= 0.05);
  FlagContext g(builtin("engel"));
  CHECK(std::fabs(exponent_probe(g, point({0, 0, 0, 0}, {0.8, 0.6, 0.3, -0.2})) - 10) <= 0.1);
}

TEST_CASE("ricci oracle") {
  FlagContext e(builtin("euclidean:3"));
  PhasePoint z = point({0, 0, 0}, {1, 0, 0});
  REQUIRE(ricci_oracle("euclidean:3", e, z));
  CHECK(*ricci_oracle("euclidean:3", e, z) == 0.0);
  FlagContext h(builtin("heisenberg3"));
  CHECK_FALSE(ricci_oracle("heisenberg3", h, z));
  ControlSystem drifted = builtin("euclidean:3");
  drifted.drift = {Expr(1.0), Expr(0.0), Expr(0.0)};
  CHECK_FALSE(ricci_oracle("euclidean:3", FlagContext(drifted), z));
}

TEST_CASE("binding: fitted C against the Young constant") {
  for (const char* name : {"euclidean:2", "euclidean:3:psi=x1*x2", "sphere2", "heisenberg3",
                           "heisenberg3:psi=x1*x2 + x3", "heisenberg5:1,2", "engel"}) {
    FlagContext ctx(builtin(name));
    CovectorSampling opts;
    opts.seed = 11;
    for (const PhasePoint& z : sample_covectors(ctx, 2, opts).covectors) {
      ExpansionOptions eo;
      eo.window_check = false;
      ExpansionFit f = fit_expansion(ctx, z, eo);
      INFO(std::string(name));
      CHECK(std::fabs(f.c / exact_constant(ctx, z) - 1) <= 1e-3);
      CHECK(f.residual <= 1e-6 * f.samples);
    }
  }
}

TEST_CASE("parallel sampling matches serial") {
  FlagContext h(builtin("heisenberg3:psi=x1*x2 + x3"));
  PhasePoint z = point({0.1, 0, 0}, {0.7, -0.2, 1.5});
  ExpansionOptions serial;
  serial.window_check = false;
  ExpansionOptions pooled = serial;
  pooled.threads = 4;
  ExpansionFit a = fit_expansion(h, z, serial);
  ExpansionFit b = fit_expansion(h, z, pooled);
  for (std::size_t i = 0; i < a.h.size(); ++i) CHECK(std::fabs(a.integral_rho[i] - b.integral_rho[i]) <= 1e-10);
  CHECK(a.c == doctest::Approx(b.c).epsilon(1e-9));
}

TEST_CASE("expansion errors") {
  FlagContext h(builtin("heisenberg3"));
  CHECK_THROWS_AS(fit_expansion(h, point({0, 0, 0}, {0, 0, 1})), ZeroTangent);
  CHECK_THROWS_AS(integrated_rho(h, point({0, 0, 0}, {1, 0, 1}), std::vector<double>{0.1}, 3), std::invalid_argument);
}

TEST_CASE("window refinement on a fast engel geodesic") {
  FlagContext e(builtin("engel"));
  CovectorSampling so;
  so.seed = 11;
  PhasePoint z = sample_covectors(e, 4, so).covectors[3];
  ExpansionOptions fixed;
  fixed.refinements = 0;
  fixed.window_check = false;
  ExpansionFit coarse = fit_expansion(e, z, fixed);
  CHECK_FALSE(coarse.residual_ok);
  REQUIRE_FALSE(coarse.diagnostics.empty());
  CHECK(coarse.diagnostics.front().find("profile") != std::string::npos);

  ExpansionOptions narrow = fixed;
  narrow.t_min /= 2;
  narrow.t_max /= 2;
  // the remainder is truncation, not noise: halving the window cuts it by t^4 or more
  CHECK(fit_expansion(e, z, narrow).residual * 16 <= coarse.residual);

  ExpansionFit f = fit_expansion(e, z);
  CHECK(f.refinements >= 1);
  CHECK(f.residual_ok);
  CHECK(f.t_max == doctest::Approx(0.2 / (1 << f.refinements)));
  CHECK(std::fabs(f.c * 8640 - 1) <= 1e-4);
}
