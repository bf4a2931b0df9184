#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "geoflow/catalog.hpp"
#include "geoflow/flag.hpp"

using namespace geoflow;

namespace {

PhasePoint point(std::vector<double> x, std::vector<double> p) {
  return {Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
          Eigen::Map<Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()))};
}

PhasePoint random_covector(const Dynamics& dyn, std::mt19937& rng) {
  std::normal_distribution<double> g;
  const int n = dyn.n();
  PhasePoint z{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  do {
    for (int i = 0; i < n; ++i) z.p(i) = g(rng);
  } while (dyn.energy(z) < 0.05);
  z.p /= std::sqrt(2.0 * dyn.energy(z));
  return z;
}

double fact(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// d^e f / e! by repeated symbolic differentiation.
double taylor_coefficient(const Expr& f, const std::vector<int>& e, const Eigen::VectorXd& at) {
  Expr d = f;
  double norm = 1.0;
  for (std::size_t v = 0; v < e.size(); ++v) {
    for (int r = 0; r < e[v]; ++r) d = diff(d, static_cast<int>(v));
    norm *= fact(e[v]);
  }
  std::vector<double> pt(at.data(), at.data() + at.size());
  return eval(d, pt) / norm;
}

const char* kBuiltins[] = {"euclidean:2", "euclidean:3", "sphere2", "heisenberg3", "heisenberg5:1,2", "engel"};

double subspace_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::max((a - b * (b.transpose() * a)).norm(), (b - a * (a.transpose() * b)).norm());
}

}  // namespace

TEST_CASE("jets reproduce symbolic Taylor coefficients") {
  auto names = chart_names(3);
  Expr f = parse("sin(x1*x2)/(1+x1^2) + exp(x2)*sqrt(2+x1)*log(3+x3) - x3^-2 + cos(x1 - x3)^3", names);
  auto space = std::make_shared<const JetSpace>(3, 4);
  Eigen::Vector3d at(0.3, -0.7, 1.1);
  Jet j = eval_jet(f, space, at);
  for (std::size_t m = 0; m < space->size(); ++m) {
    double ref = taylor_coefficient(f, space->exponents(m), at);
    INFO(m);
    CHECK(j[m] == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("jet brackets agree with symbolic brackets of the extension") {
  std::mt19937 rng(11);
  for (const char* name : {"sphere2", "heisenberg3", "heisenberg5:1,2", "engel"}) {
    FlagContext ctx(builtin(name));
    PhasePoint z = random_covector(ctx.dynamics(), rng);
    z.x = Eigen::VectorXd::Constant(ctx.n(), 0.1);
    FlagOptions opts;
    opts.order = 2;
    Extension ext = extension_at(ctx, z, opts);
    VectorField t = extension_field(ctx, ext);
    const int levels = std::min(ctx.n(), 3);
    auto images = bracket_images(ctx, ext, levels);
    for (int a = 0; a < ctx.system().k; ++a) {
      VectorField v = ctx.system().frame[static_cast<std::size_t>(a)];
      for (int j = 0; j < levels; ++j) {
        Eigen::VectorXd sym = evaluate(v, z.x);
        INFO(name, " a=", a, " j=", j);
        CHECK((images[static_cast<std::size_t>(j)].col(a) - sym).norm() <= 1e-10 * (1.0 + sym.norm()));
        v = lie_bracket(t, v);
      }
    }
  }
}

TEST_CASE("extension reproduces the tangent along the curve") {
  std::mt19937 rng(12);
  for (const char* name : {"sphere2", "heisenberg3", "engel"}) {
    FlagContext ctx(builtin(name));
    PhasePoint z = random_covector(ctx.dynamics(), rng);
    FlagOptions opts;
    opts.order = ctx.max_order();
    VectorField t = extension_field(ctx, extension_at(ctx, z, opts));
    FlowOptions fo;
    fo.jacobian = false;
    for (double s : {0.01, 0.02, 0.04}) {
      FlowSample f = flow(ctx.dynamics(), z, s, fo);
      Eigen::VectorXd xdot = ctx.dynamics().vector_field(f.state).head(ctx.n());
      INFO(name, " ", s);
      CHECK((evaluate(t, f.state.x) - xdot).norm() <= 50 * std::pow(s, opts.order + 1));
    }
  }
}

TEST_CASE("Poisson Taylor coefficients match the integrated controls") {
  std::mt19937 rng(13);
  const double h = 1e-2;
  for (const char* name : kBuiltins) {
    FlagContext ctx(builtin(name));
    PhasePoint z = random_covector(ctx.dynamics(), rng);
    z.x = Eigen::VectorXd::Constant(ctx.n(), 0.05);
    auto d = ctx.derivatives(z);
    std::vector<double> ts{-2 * h, -h, 0.0, h, 2 * h};
    FlowOptions fo;
    fo.jacobian = false;
    fo.tol = 1e-13;
    auto s = flow_samples(ctx.dynamics(), z, ts, fo);
    for (int i = 0; i < ctx.system().k; ++i) {
      double u[5];
      for (int q = 0; q < 5; ++q) u[q] = s[static_cast<std::size_t>(q)].u(i);
      double d1 = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h);
      double d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h);
      INFO(name, " i=", i);
      CHECK(u[2] == doctest::Approx(d.u(i, 0)).epsilon(1e-14).scale(1.0));
      CHECK(std::fabs(d1 - d.u(i, 1)) <= 1e-6);
      CHECK(std::fabs(d2 - d.u(i, 2)) <= 1e-6 * (1 + std::fabs(d.u(i, 2))) + 1e-6);
      // full Taylor polynomial against the flow
      for (int q : {0, 4}) {
        double t = ts[static_cast<std::size_t>(q)];
        double poly = 0.0;
        for (int o = 0; o <= ctx.max_order(); ++o) poly += d.u(i, o) * std::pow(t, o) / fact(o);
        CHECK(std::fabs(poly - u[q]) <= 1e-10);
      }
    }
  }
}

TEST_CASE("flag examples") {
  for (int n : {2, 3, 4}) {
    FlagContext ctx(builtin("euclidean:" + std::to_string(n)));
    std::vector<double> p(static_cast<std::size_t>(n), 0.0);
    p[0] = 1.0;
    GeodesicFlag f = flag_at(ctx, point(std::vector<double>(static_cast<std::size_t>(n), 0.0), p), 0.0);
    CHECK(f.ample);
    CHECK(f.growth == std::vector<int>{n});
    CHECK(f.geodesic_dimension == n);
    CHECK(f.homogeneous_weight == n);
    CHECK(leading_constant(young_diagram(f)) == 1);
  }

  FlagContext h(builtin("heisenberg3"));
  for (auto p : {std::vector<double>{1, 0, 1}, {0.3, -0.8, 5}, {1, 0, 0}}) {
    GeodesicFlag f = flag_at(h, point({0, 0, 0}, p), 0.0);
    CHECK(f.ample);
    CHECK(f.growth == std::vector<int>{2, 3});
    CHECK(f.increments == std::vector<int>{2, 1});
    CHECK(f.geodesic_dimension == 5);
    CHECK(f.homogeneous_weight == 4);
    YoungDiagram y = young_diagram(f);
    CHECK(y.rows == std::vector<int>{2, 1});
    CHECK(leading_constant(y) == Rational(1, 12));
  }
  CHECK_THROWS_AS(flag_at(h, point({0, 0, 0}, {0, 0, 1}), 0.0), ZeroTangent);

  FlagContext e(builtin("engel"));
  GeodesicFlag f = flag_at(e, point({0, 0, 0, 0}, {0.6, 0.8, 0.3, -0.2}), 0.0);
  CHECK(f.growth == std::vector<int>{2, 3, 4});
  CHECK(f.increments == std::vector<int>{2, 1, 1});
  CHECK(f.geodesic_dimension == 10);
  YoungDiagram y = young_diagram(f);
  CHECK(y.rows == std::vector<int>{3, 1});
  CHECK(leading_constant(y) == Rational(1, 8640));

  FlagContext s(builtin("sphere2"));
  GeodesicFlag fs = flag_at(s, point({0, 0}, {2, 0}), 0.3);
  CHECK(fs.growth == std::vector<int>{2});

  FlagContext h5(builtin("heisenberg5:1,2"));
  GeodesicFlag f5 = flag_at(h5, point({0, 0, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5, 1}), 0.0);
  CHECK(f5.growth == std::vector<int>{4, 5});
  CHECK(f5.geodesic_dimension == 7);
}

TEST_CASE("euclidean flag does not depend on the control order") {
  FlagContext ctx(builtin("euclidean:3"));
  PhasePoint z = point({0.1, 0.2, 0.3}, {0.6, 0, 0.8});
  FlagOptions o0;
  o0.order = 0;
  FlagOptions on;
  on.order = 3;
  GeodesicFlag a = flag_at(ctx, z, 0.0, o0);
  GeodesicFlag b = flag_at(ctx, z, 0.0, on);
  CHECK(a.growth == b.growth);
  CHECK(subspace_gap(a.bases.back(), b.bases.back()) <= 1e-12);
}

TEST_CASE("flag is stable under the extension order and the time function") {
  std::mt19937 rng(14);
  for (const char* name : kBuiltins) {
    FlagContext ctx(builtin(name));
    for (int r = 0; r < 20; ++r) {
      PhasePoint z = random_covector(ctx.dynamics(), rng);
      FlagOptions m;
      FlagOptions m2;
      m2.order = ctx.n() + 2;
      GeodesicFlag a = flag_at(ctx, z, 0.0, m);
      GeodesicFlag b = flag_at(ctx, z, 0.0, m2);
      INFO(name, " ", r);
      CHECK(a.growth == b.growth);

      Extension ext = extension_at(ctx, z);
      Eigen::VectorXd w = 2.5 * ext.w;
      w(0) += 0.3;
      FlagOptions alt;
      alt.w = w;
      GeodesicFlag c = flag_at(ctx, z, 0.0, alt);
      FlagOptions lin;
      lin.first_order_tau = true;
      GeodesicFlag d = flag_at(ctx, z, 0.0, lin);
      CHECK(a.growth == c.growth);
      CHECK(a.growth == d.growth);
      for (std::size_t i = 0; i < a.bases.size(); ++i) {
        CHECK(subspace_gap(a.bases[i], c.bases[i]) <= 1e-7);
        CHECK(subspace_gap(a.bases[i], d.bases[i]) <= 1e-7);
      }
    }
  }
}

TEST_CASE("flag invariants on random covectors") {
  std::mt19937 rng(15);
  for (const char* name : kBuiltins) {
    FlagContext ctx(builtin(name));
    for (int r = 0; r < 10; ++r) {
      PhasePoint z = random_covector(ctx.dynamics(), rng);
      GeodesicFlag f = flag_at(ctx, z, 0.2);
      INFO(name, " ", r);
      CHECK(f.ample);
      CHECK(f.diagnostics.empty());
      CHECK(!f.ill_conditioned);
      CHECK(f.growth.front() == ctx.system().k);
      CHECK(f.geodesic_dimension == geodesic_dimension(f.growth));
      CHECK(f.homogeneous_weight == homogeneous_weight(f.growth));
      for (std::size_t i = 0; i + 1 < f.bases.size(); ++i) {
        const Eigen::MatrixXd& b = f.bases[i];
        const Eigen::MatrixXd& c = f.bases[i + 1];
        CHECK((b - c * (c.transpose() * b)).norm() <= 1e-8);
      }
      YoungDiagram y = young_diagram(f);
      int total = 0;
      for (int row : y.rows) total += row;
      CHECK(total == ctx.n());
    }
  }
}

TEST_CASE("equiregularity along sampled windows") {
  FlagContext h(builtin("heisenberg3"));
  Equiregularity e = equiregular_on(h, point({0, 0, 0}, {0.6, 0.8, 2}), 1.0);
  CHECK(e.equiregular);
  CHECK(e.times.size() == 5);
  for (const auto& g : e.growth) CHECK(g == std::vector<int>{2, 3});

  FlagContext eu(builtin("euclidean:2"));
  Equiregularity ee = equiregular_on(eu, point({0, 0}, {1, 0}), 1.0);
  CHECK(ee.equiregular);
  CHECK(ee.growth.front() == std::vector<int>{2});

  // X1 = d1, X2 = d2 + x1^2 d3, crossing x1 = 0 at t = 0.1
  ControlSystem martinet = make_system("martinet", {{Expr(1.0), Expr(0.0), Expr(0.0)},
                                                    {Expr(0.0), Expr(1.0), pow(Expr::variable(0), 2)}},
                                       Expr(1.0));
  FlagContext m(martinet);
  Equiregularity em = equiregular_on(m, point({-0.1, 0, 0}, {1, 0.2, 0}), 0.2);
  CHECK_FALSE(em.equiregular);
  CHECK(em.growth[0] == std::vector<int>{2, 3});
  CHECK(em.growth[2] == std::vector<int>{2, 2, 3});
  GeodesicFlag at_crossing = flag_at(m, point({-0.1, 0, 0}, {1, 0.2, 0}), 0.1);
  CHECK(at_crossing.ample);
  CHECK(!at_crossing.diagnostics.empty());
}

TEST_CASE("young diagram of a non-ample flag is rejected") {
  GeodesicFlag f;
  f.growth = {2, 2, 2};
  f.increments = {2, 0, 0};
  CHECK_THROWS_AS(young_diagram(f), NotAmple);
  CHECK(geodesic_dimension({2, 3, 4}) == 10);
  CHECK(homogeneous_weight({2, 3}) == 4);
}
