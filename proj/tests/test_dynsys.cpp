#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "densgrad/dynsys.hpp"

using namespace densgrad;

namespace {

// central finite difference of f along direction v
Vec fd_dir(const DynSystem& sys, const Vec& x, const Vec& v, double h) {
  Vec xp = axpy(h, v, x), xm = axpy(-h, v, x);
  Vec fp = sys.f(xp), fm = sys.f(xm);
  Vec r(fp.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = (fp[i] - fm[i]) / (2.0 * h);
  return r;
}

double rel_dev(const Vec& got, const Vec& want) {
  Vec d(got.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = got[i] - want[i];
  return norm(d) / norm(want);
}

DynSystem linear_system(const MatNM& a) {
  DynSystem s;
  s.n = a.n;
  s.name = "linear";
  s.f = [a](const Vec& x) { return matvec(a, x); };
  s.jac = [a](const Vec&) { return a; };
  s.hess_bilinear = [n = a.n](const Vec&, const Vec&, const Vec&) { return Vec(n, 0.0); };
  return s;
}

}  // namespace

TEST_CASE("vector field point values") {
  auto vdp = vanderpol();
  Vec f = vdp.f({0.0, 1.0});
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 2.0);

  auto lor = lorenz63();
  Vec f0 = lor.f({0.0, 0.0, 0.0});
  CHECK(f0 == Vec{0.0, 0.0, 0.0});

  MatNM j = lor.jac({0.0, 0.0, 0.0});
  CHECK(j(0, 0) == -10.0);
  CHECK(j(0, 1) == 10.0);
  CHECK(j(0, 2) == 0.0);
  CHECK(j(1, 0) == 28.0);
  CHECK(j(1, 1) == -1.0);
  CHECK(j(1, 2) == 0.0);
  CHECK(j(2, 0) == 0.0);
  CHECK(j(2, 1) == 0.0);
  CHECK(j(2, 2) == Catch::Approx(-8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("jacobians match finite differences of f") {
  std::mt19937_64 rng(11u);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& sys : {vanderpol(), lorenz63()}) {
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(std::size_t(sys.n));
      for (double& c : x) c = (sys.name == "lorenz63") ? 10.0 * u(rng) : u(rng);
      MatNM j = sys.jac(x);
      for (int dir = 0; dir < sys.n; ++dir) {
        Vec e(std::size_t(sys.n), 0.0);
        e[std::size_t(dir)] = 1.0;
        Vec fd = fd_dir(sys, x, e, 1e-6);
        for (int i = 0; i < sys.n; ++i)
          CHECK(j(i, dir) == Catch::Approx(fd[std::size_t(i)]).margin(1e-5).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("hessian bilinear form is symmetric and matches FD of the jacobian") {
  std::mt19937_64 rng(13u);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& sys : {vanderpol(), lorenz63()}) {
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(std::size_t(sys.n)), v(std::size_t(sys.n)), w(std::size_t(sys.n));
      for (double& c : x) c = u(rng);
      for (double& c : v) c = u(rng);
      for (double& c : w) c = u(rng);
      Vec hvw = sys.hess_bilinear(x, v, w);
      Vec hwv = sys.hess_bilinear(x, w, v);
      for (std::size_t i = 0; i < hvw.size(); ++i)
        CHECK(hvw[i] == Catch::Approx(hwv[i]).margin(1e-13));

      // d/dh [jac(x+hw) v] at h=0 equals hess_bilinear(x, v, w)
      const double h = 1e-6;
      Vec jp = matvec(sys.jac(axpy(h, w, x)), v);
      Vec jm = matvec(sys.jac(axpy(-h, w, x)), v);
      for (std::size_t i = 0; i < hvw.size(); ++i)
        CHECK(hvw[i] == Catch::Approx((jp[i] - jm[i]) / (2.0 * h)).margin(2e-4));
    }
  }
}

TEST_CASE("rk2_step basics") {
  DynSystem zero;
  zero.n = 2;
  zero.name = "zero";
  zero.f = [](const Vec&) { return Vec{0.0, 0.0}; };
  Vec x{1.5, -0.5};
  CHECK(rk2_step(zero, x, 0.1) == x);

  // scalar linear field: one step is the degree-2 Taylor truncation
  MatNM lam(1, 1);
  lam(0, 0) = -0.7;
  auto lin = linear_system(lam);
  const double dt = 0.05;
  Vec y = rk2_step(lin, {2.0}, dt);
  const double expected = 2.0 * (1.0 - 0.7 * dt + 0.7 * 0.7 * dt * dt / 2.0);
  CHECK(y[0] == Catch::Approx(expected).epsilon(1e-15));
}

TEST_CASE("rk2 global order is 2 on the Van der Pol half period") {
  auto vdp = vanderpol();
  const double a = 2.0199, t_end = 3.0;
  auto integrate = [&](double dt) {
    Vec x{-a, 0.0};
    long n = std::lround(t_end / dt);
    for (long k = 0; k < n; ++k) x = rk2_step(vdp, x, dt);
    return x;
  };
  Vec ref = integrate(1e-5);
  Vec c1 = integrate(8e-4);
  Vec c2 = integrate(4e-4);
  const double e1 = std::hypot(c1[0] - ref[0], c1[1] - ref[1]);
  const double e2 = std::hypot(c2[0] - ref[0], c2[1] - ref[1]);
  const double order = std::log2(e1 / e2);
  CHECK(order == Catch::Approx(2.0).margin(0.1));
}

TEST_CASE("tangent step: exact discrete linearization") {
  auto vdp = vanderpol();
  Vec v0{0.0, 0.0};
  CHECK(rk2_tangent_step(vdp, {0.3, -1.2}, v0, 1e-3) == v0);

  MatNM a(2, 2);
  a(0, 0) = 0.2;
  a(0, 1) = -1.0;
  a(1, 0) = 0.9;
  a(1, 1) = -0.3;
  auto lin = linear_system(a);
  const double dt = 0.01;
  Vec v{1.0, 2.0};
  Vec got = rk2_tangent_step(lin, {5.0, -5.0}, v, dt);
  // v (I + dt A + dt^2 A^2 / 2)
  MatNM a2 = matmul(a, a);
  Vec want = v;
  want = axpy(dt, matvec(a, v), want);
  want = axpy(0.5 * dt * dt, matvec(a2, v), want);
  CHECK(got[0] == Catch::Approx(want[0]).epsilon(1e-15));
  CHECK(got[1] == Catch::Approx(want[1]).epsilon(1e-15));
}

TEST_CASE("tangent step equals derivative of rk2_step at order >= 1.9") {
  auto lor = lorenz63();
  Vec x{2.0, -3.0, 21.0}, v{0.4, 1.0, -0.2};
  const double dt = 0.002;
  Vec tan = rk2_tangent_step(lor, x, v, dt);
  auto fd_err = [&](double h) {
    Vec p = rk2_step(lor, axpy(h, v, x), dt);
    Vec m = rk2_step(lor, axpy(-h, v, x), dt);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      worst = std::max(worst, std::abs((p[i] - m[i]) / (2.0 * h) - tan[i]));
    return worst;
  };
  const double e1 = fd_err(1e-3), e2 = fd_err(5e-4);
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("lorenz tangent solution matches trajectory-pair differences") {
  auto lor = lorenz63();
  const double dt = 0.002, delta = 1e-5;
  Vec x{1.0, 1.0, 28.0}, v{1.0, 1.0, 0.0};
  Vec xp = axpy(delta, v, x), xm = axpy(-delta, v, x);
  for (long k = 0; k < 200; ++k) {  // t = 0.4
    v = rk2_tangent_step(lor, x, v, dt);
    x = rk2_step(lor, x, dt);
    xp = rk2_step(lor, xp, dt);
    xm = rk2_step(lor, xm, dt);
  }
  Vec fd(3);
  for (int i = 0; i < 3; ++i) fd[std::size_t(i)] = (xp[std::size_t(i)] - xm[std::size_t(i)]) / (2.0 * delta);
  CHECK(rel_dev(v, fd) <= 1e-4);
}

TEST_CASE("second tangent step basics") {
  auto lor = lorenz63();
  Vec z{0.0, 0.0, 0.0};
  CHECK(rk2_second_tangent_step(lor, {1.0, 2.0, 3.0}, z, z, 0.01) == z);

  MatNM a(2, 2);
  a(0, 0) = -0.5;
  a(1, 1) = 0.25;
  auto lin = linear_system(a);
  Vec w = rk2_second_tangent_step(lin, {1.0, 1.0}, {1.0, -1.0}, {0.0, 0.0}, 0.01);
  CHECK(w == Vec{0.0, 0.0});  // no curvature forcing for linear fields
}

TEST_CASE("second tangent matches second differences over the initial line") {
  auto lor = lorenz63();
  const double dt = 0.002, dc = 1e-3, c0 = 0.8;
  auto start = [](double c) { return Vec{c, c, 28.0}; };
  Vec x = start(c0), xp = start(c0 + dc), xm = start(c0 - dc);
  Vec v{1.0, 1.0, 0.0}, w{0.0, 0.0, 0.0};
  for (long k = 0; k < 100; ++k) {  // t = 0.2
    Vec wn = rk2_second_tangent_step(lor, x, v, w, dt);
    Vec vn = rk2_tangent_step(lor, x, v, dt);
    x = rk2_step(lor, x, dt);
    xp = rk2_step(lor, xp, dt);
    xm = rk2_step(lor, xm, dt);
    v = vn;
    w = wn;
  }
  Vec fd(3);
  for (std::size_t i = 0; i < 3; ++i) fd[i] = (xp[i] - 2.0 * x[i] + xm[i]) / (dc * dc);
  CHECK(rel_dev(w, fd) <= 1e-3);
}

TEST_CASE("hess bilinear of the step equals mixed differences of tangent steps") {
  auto lor = lorenz63();
  Vec x{-3.0, 4.5, 19.0}, v{1.0, 0.5, -0.3}, w{-0.2, 1.0, 0.8};
  const double dt = 0.002, h = 1e-5;
  Vec got = rk2_hess_bilinear(lor, x, v, w, dt);
  Vec tp = rk2_tangent_step(lor, axpy(h, w, x), v, dt);
  Vec tm = rk2_tangent_step(lor, axpy(-h, w, x), v, dt);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(got[i] == Catch::Approx((tp[i] - tm[i]) / (2.0 * h)).margin(1e-8));
}

TEST_CASE("van der pol period detection and closure") {
  auto vdp = vanderpol();
  VdpScenario sc;
  auto det = vdp_detect_period(vdp, sc.a, sc.dt);

  CHECK(std::abs(det.t_half - sc.t_half_nominal) < 0.02);  // detection window sanity
  CHECK(det.t_full > det.t_half);
  CHECK(std::abs(det.t_full - 2.0 * det.t_half) < 1e-3);

  // closure after the detected period: integrate round(t_full/dt) steps
  Vec x{-sc.a, 0.0};
  long n = std::lround(det.t_full / sc.dt);
  for (long k = 0; k < n; ++k) x = rk2_step(vdp, x, sc.dt);
  CHECK(std::hypot(x[0] + sc.a, x[1]) <= 1e-2);
}

TEST_CASE("fd wrapper reproduces analytic jacobian and hessian form") {
  auto exact = lorenz63();
  auto fd = fd_system(3, "lorenz-fd", exact.f);
  Vec x{-2.5, 3.1, 21.0}, v{0.7, -1.2, 0.4}, w{2.0, 0.3, -0.9};

  MatNM ja = exact.jac(x), jf = fd.jac(x);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(jf(r, c) == Catch::Approx(ja(r, c)).margin(1e-6));

  Vec ha = exact.hess_bilinear(x, v, w), hf = fd.hess_bilinear(x, v, w);
  for (std::size_t i = 0; i < 3; ++i) CHECK(hf[i] == Catch::Approx(ha[i]).margin(1e-5));

  // zero direction is a valid (zero) bilinear argument
  Vec hz = fd.hess_bilinear(x, Vec{0.0, 0.0, 0.0}, w);
  for (std::size_t i = 0; i < 3; ++i) CHECK(hz[i] == 0.0);
}
