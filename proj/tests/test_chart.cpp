#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "densgrad/chart.hpp"

using namespace densgrad;

namespace {

Vec basis(int m, int i) {
  Vec e(std::size_t(m), 0.0);
  e[std::size_t(i)] = 1.0;
  return e;
}

// max abs deviation between analytic first derivatives and central FD of x,
// and between analytic second derivatives and central FD of e
std::pair<double, double> jet_fd_dev(const Chart& chart, const Vec& xi, double h) {
  ChartJet j0 = chart.jet(xi);
  const int m = j0.m(), n = j0.n();
  double dev_e = 0.0, dev_a = 0.0;
  for (int i = 0; i < m; ++i) {
    Vec xp = axpy(h, basis(m, i), xi), xm = axpy(-h, basis(m, i), xi);
    ChartJet jp = chart.jet(xp), jm = chart.jet(xm);
    for (int r = 0; r < n; ++r) {
      const double fd_e = (jp.x[std::size_t(r)] - jm.x[std::size_t(r)]) / (2.0 * h);
      dev_e = std::max(dev_e, std::abs(fd_e - j0.e[std::size_t(i)][std::size_t(r)]));
    }
    for (int k = 0; k < m; ++k)
      for (int r = 0; r < n; ++r) {
        const double fd_a =
            (jp.e[std::size_t(k)][std::size_t(r)] - jm.e[std::size_t(k)][std::size_t(r)]) / (2.0 * h);
        dev_a = std::max(dev_a, std::abs(fd_a - j0.a(i, k)[std::size_t(r)]));
      }
  }
  return {dev_e, dev_a};
}

}  // namespace

TEST_CASE("affine chart jets") {
  AffineChart c(1.0, 3.5);
  ChartJet j = c.jet({0.4});
  CHECK(j.x[0] == Catch::Approx(2.0).epsilon(1e-15));
  CHECK(j.e[0][0] == 2.5);
  CHECK(j.a(0, 0)[0] == 0.0);
}

TEST_CASE("circle chart tangent is orthogonal to its derivative") {
  CircleChart c(1.7);
  for (double xi : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    ChartJet j = c.jet({xi});
    CHECK(std::abs(dot(j.e[0], j.a(0, 0))) <= 1e-12 * dot(j.e[0], j.e[0]));
  }
}

TEST_CASE("paraboloid chart second derivatives") {
  ParaboloidChart c;
  ChartJet j = c.jet({0.3, -0.2});
  CHECK(j.a(0, 0) == Vec{0.0, 0.0, 2.0});
  CHECK(j.a(0, 1) == Vec{0.0, 0.0, 0.0});
  CHECK(j.a(1, 1) == Vec{0.0, 0.0, 2.0});
  CHECK(&j.a(0, 1) == &j.a(1, 0));  // symmetric entry stored once
}

TEST_CASE("analytic jets match finite differences") {
  std::vector<std::pair<std::shared_ptr<Chart>, Vec>> cases;
  cases.push_back({std::make_shared<CircleChart>(1.0), Vec{0.37}});
  cases.push_back({std::make_shared<ExpChart>(), Vec{0.5}});
  cases.push_back({std::make_shared<HelixChart>(1.2, 0.8), Vec{0.61}});
  cases.push_back({std::make_shared<ParaboloidChart>(), Vec{0.3, -0.2}});
  cases.push_back(
      {std::make_shared<PolynomialChart>(std::vector<Vec>{
           {0.1, 1.0, -0.4, 0.2, 0.05, -0.3}, {0.7, -0.5, 0.3, 0.0, 0.1, 0.2}, {0.0, 0.9, 0.1, -0.2, 0.0, 0.4}}),
       Vec{0.45}});
  for (const auto& [chart, xi] : cases) {
    auto [dev_e, dev_a] = jet_fd_dev(*chart, xi, 1e-5);
    CHECK(dev_e <= 1e-8);
    // truncation h^2/6 |x''''| reaches ~3e-8 on the unit-rate loops
    CHECK(dev_a <= 1e-7);
  }
}

TEST_CASE("out-of-domain evaluation is an error, not extrapolation") {
  ExpChart c;
  CHECK_THROWS_AS(c.jet({1.2}), OutOfDomain);
  CHECK_THROWS_AS(c.jet({-0.1}), OutOfDomain);
  ParaboloidChart p;
  CHECK_THROWS_AS(p.jet({0.0, 1.5}), OutOfDomain);
}

TEST_CASE("linear reparameterization rescales jets by the chain rule") {
  auto base = std::make_shared<ExpChart>();
  ReparamChart r(base, {2.0}, {0.1});  // xi -> 2 xi + 0.1
  Vec xi{0.2};
  ChartJet jr = r.jet(xi);
  ChartJet jb = base->jet({0.5});
  CHECK(jr.x[0] == jb.x[0]);
  CHECK(jr.e[0][0] == Catch::Approx(2.0 * jb.e[0][0]).epsilon(1e-15));
  CHECK(jr.a(0, 0)[0] == Catch::Approx(4.0 * jb.a(0, 0)[0]).epsilon(1e-15));
}

TEST_CASE("surface jet at t=0 reproduces the initial line data") {
  auto lor = lorenz63();
  for (double c : {-2.5, 0.0, 4.0}) {
    ChartJet j = jet_ode_surface(lor, c, 0.0, 0.002);
    CHECK(j.x == lorenz_line_point(c));
    CHECK(j.e[0] == lorenz_line_tangent());
    CHECK(j.a(0, 0) == Vec{0.0, 0.0, 0.0});
    Vec fx = lor.f(j.x);
    CHECK(j.e[1] == fx);  // d/dt x = f exactly
  }
  CHECK_THROWS_AS(jet_ode_surface(lor, 0.0, 0.0031, 0.002), OutOfDomain);
}

TEST_CASE("surface c-derivative matches trajectory-pair differences") {
  auto lor = lorenz63();
  const double c = -2.5, t = 0.2, dt = 0.002, dc = 1e-4;
  ChartJet j = jet_ode_surface(lor, c, t, dt);
  Vec xp = lorenz_line_point(c + dc), xm = lorenz_line_point(c - dc);
  for (long k = 0; k < std::lround(t / dt); ++k) {
    xp = rk2_step(lor, xp, dt);
    xm = rk2_step(lor, xm, dt);
  }
  Vec fd(3), d(3);
  for (std::size_t i = 0; i < 3; ++i) {
    fd[i] = (xp[i] - xm[i]) / (2.0 * dc);
    d[i] = fd[i] - j.e[0][i];
  }
  CHECK(norm(d) / norm(j.e[0]) <= 1e-5);
}

TEST_CASE("surface mixed derivative is consistent with FD of the c-tangent in t") {
  auto lor = lorenz63();
  const double c = 1.3, dt = 0.002;
  OdeSurfaceColumn col(lor, c, 120, dt);
  const ChartJet& j = col.at(100);
  Vec fd(3), dev(3);
  for (std::size_t i = 0; i < 3; ++i)
    fd[i] = (col.at(101).e[0][i] - col.at(99).e[0][i]) / (2.0 * dt);
  for (std::size_t i = 0; i < 3; ++i) dev[i] = fd[i] - j.a(0, 1)[i];
  // agreement is O(dt^2): both sides differentiate the same surface
  CHECK(norm(dev) / norm(j.a(0, 1)) <= 1e-4);
}

TEST_CASE("cached surface column equals per-call evaluation") {
  auto lor = lorenz63();
  OdeSurfaceColumn col(lor, 0.7, 50, 0.002);
  ChartJet direct = jet_ode_surface(lor, 0.7, 50 * 0.002, 0.002);
  CHECK(col.at(50).x == direct.x);
  CHECK(col.at(50).e[0] == direct.e[0]);
  CHECK(col.at(50).e[1] == direct.e[1]);
  CHECK(col.at(50).a(0, 0) == direct.a(0, 0));
  CHECK(col.at(50).a(0, 1) == direct.a(0, 1));
  CHECK(col.at(50).a(1, 1) == direct.a(1, 1));
}

TEST_CASE("van der pol half-period curve") {
  auto vdp = vanderpol();
  VdpScenario sc;

  CHECK_THROWS_AS(VdpHalfCurve::build(vdp, sc.a, 1), GridMismatch);

  VdpHalfCurve c = VdpHalfCurve::build(vdp, sc.a, 2001);
  CHECK(c.u[0] == -sc.a);
  CHECK(c.du[0] == 0.0);
  CHECK(std::abs(c.u[2000] - sc.a) < 1e-3);  // other turning point
  CHECK(std::abs(c.du[2000]) < 1e-2);
  CHECK(std::abs(c.t_half - 3.815) < 0.01);
  for (long i = 1; i + 1 < c.n_samples; ++i) {
    CHECK(c.du[std::size_t(i)] > 0.0);               // u rises monotonically
    CHECK(c.u[std::size_t(i)] > c.u[std::size_t(i - 1)]);
  }
  ChartJet j = c.line_jet(1000);
  CHECK(j.e[0][0] == c.t_half * c.du[1000]);
  CHECK(j.a(0, 0)[0] == c.t_half * c.t_half * c.ddu[1000]);
}

TEST_CASE("van der pol loop chart closes and has even node count") {
  auto vdp = vanderpol();
  VdpScenario sc;
  VdpLoopCurve loop = VdpLoopCurve::build(vdp, sc.a, sc.dt);
  CHECK(loop.n_samples % 2 == 0);
  CHECK(loop.closure_gap() <= 1e-2);
  CHECK(std::abs(loop.period - 2.0 * 3.815) < 0.02);

  // jet identities: x' = T f(x), x'' = T^2 Df f
  ChartJet j = loop.jet(vdp, 1234);
  Vec fx = vdp.f(loop.state[1234]);
  CHECK(j.e[0][0] == loop.period * fx[0]);
  CHECK(j.e[0][1] == loop.period * fx[1]);
}
