// Smooth charts x(xi) carrying exact second-order parametric jets, either
// closed-form (test oracles, also runnable from the CLI) or generated by
// integrating a vector field.
#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include "densgrad/dynsys.hpp"
#include "densgrad/errors.hpp"
#include "densgrad/smallmat.hpp"

namespace densgrad {

// Point value plus first and second parameter derivatives. The second
// derivatives are symmetric and stored once, as the upper triangle.
struct ChartJet {
  Vec x;
  std::vector<Vec> e;        // e[i] = d x / d xi_i
  std::vector<Vec> a_upper;  // a_ij for i <= j, laid out row by row

  static ChartJet make(int m, int n) {
    ChartJet j;
    j.x.assign(std::size_t(n), 0.0);
    j.e.assign(std::size_t(m), Vec(std::size_t(n), 0.0));
    j.a_upper.assign(std::size_t(m) * (m + 1) / 2, Vec(std::size_t(n), 0.0));
    return j;
  }
  int m() const { return int(e.size()); }
  int n() const { return int(x.size()); }

  std::size_t a_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int m_ = m();
    return std::size_t(i) * m_ - std::size_t(i) * (i - 1) / 2 + std::size_t(j - i);
  }
  const Vec& a(int i, int j) const { return a_upper[a_index(i, j)]; }
  Vec& a(int i, int j) { return a_upper[a_index(i, j)]; }
};

struct ChartDomain {
  Vec lo, hi;
  bool contains(const Vec& xi) const {
    for (std::size_t i = 0; i < xi.size(); ++i)
      if (xi[i] < lo[i] || xi[i] > hi[i]) return false;
    return true;
  }
};

struct Chart {
  ChartDomain domain;
  virtual ~Chart() = default;
  ChartJet jet(const Vec& xi) const {
    if (xi.size() != domain.lo.size() || !domain.contains(xi))
      throw OutOfDomain("chart: parameter outside the declared box");
    return jet_impl(xi);
  }

 protected:
  virtual ChartJet jet_impl(const Vec& xi) const = 0;
};

// x = a + (b - a) xi on [0, 1]
struct AffineChart : Chart {
  double a, b;
  AffineChart(double a_, double b_) : a(a_), b(b_) { domain = {{0.0}, {1.0}}; }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    ChartJet j = ChartJet::make(1, 1);
    j.x[0] = a + (b - a) * xi[0];
    j.e[0][0] = b - a;
    return j;
  }
};

// x = r (cos 2 pi xi, sin 2 pi xi) on [0, 1]
struct CircleChart : Chart {
  double r;
  explicit CircleChart(double r_) : r(r_) { domain = {{0.0}, {1.0}}; }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    constexpr double tau = 2.0 * std::numbers::pi;
    const double c = std::cos(tau * xi[0]), s = std::sin(tau * xi[0]);
    ChartJet j = ChartJet::make(1, 2);
    j.x = {r * c, r * s};
    j.e[0] = {-r * tau * s, r * tau * c};
    j.a(0, 0) = {-r * tau * tau * c, -r * tau * tau * s};
    return j;
  }
};

// x = exp(xi) on [0, 1]; implied density 1/x on [1, e], gradient -1/x
struct ExpChart : Chart {
  ExpChart() { domain = {{0.0}, {1.0}}; }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    const double v = std::exp(xi[0]);
    ChartJet j = ChartJet::make(1, 1);
    j.x = {v};
    j.e[0] = {v};
    j.a(0, 0) = {v};
    return j;
  }
};

// x = (xi1, xi2, xi1^2 + xi2^2) on [-1, 1]^2
struct ParaboloidChart : Chart {
  ParaboloidChart() { domain = {{-1.0, -1.0}, {1.0, 1.0}}; }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    ChartJet j = ChartJet::make(2, 3);
    j.x = {xi[0], xi[1], xi[0] * xi[0] + xi[1] * xi[1]};
    j.e[0] = {1.0, 0.0, 2.0 * xi[0]};
    j.e[1] = {0.0, 1.0, 2.0 * xi[1]};
    j.a(0, 0) = {0.0, 0.0, 2.0};
    j.a(0, 1) = {0.0, 0.0, 0.0};
    j.a(1, 1) = {0.0, 0.0, 2.0};
    return j;
  }
};

// x_i = scale_i * xi_i, embedded in R^3 with zero padding; m = scale count
struct FlatChart : Chart {
  Vec scale;
  explicit FlatChart(Vec s) : scale(std::move(s)) {
    domain.lo.assign(scale.size(), 0.0);
    domain.hi.assign(scale.size(), 1.0);
  }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    const int m = int(scale.size());
    ChartJet j = ChartJet::make(m, 3);
    for (int i = 0; i < m; ++i) {
      j.x[std::size_t(i)] = scale[std::size_t(i)] * xi[std::size_t(i)];
      j.e[std::size_t(i)][std::size_t(i)] = scale[std::size_t(i)];
    }
    return j;
  }
};

// x = (r cos 2 pi xi, r sin 2 pi xi, pitch * xi): constant-speed space curve
struct HelixChart : Chart {
  double r, pitch;
  HelixChart(double r_, double pitch_) : r(r_), pitch(pitch_) { domain = {{0.0}, {1.0}}; }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    constexpr double tau = 2.0 * std::numbers::pi;
    const double c = std::cos(tau * xi[0]), s = std::sin(tau * xi[0]);
    ChartJet j = ChartJet::make(1, 3);
    j.x = {r * c, r * s, pitch * xi[0]};
    j.e[0] = {-r * tau * s, r * tau * c, pitch};
    j.a(0, 0) = {-r * tau * tau * c, -r * tau * tau * s, 0.0};
    return j;
  }
};

// One-parameter polynomial curve into R^3, coefficient row per component.
struct PolynomialChart : Chart {
  std::vector<Vec> coeff;  // coeff[comp][power]
  explicit PolynomialChart(std::vector<Vec> c) : coeff(std::move(c)) {
    domain = {{0.0}, {1.0}};
  }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    const double t = xi[0];
    ChartJet j = ChartJet::make(1, int(coeff.size()));
    for (std::size_t comp = 0; comp < coeff.size(); ++comp) {
      const Vec& c = coeff[comp];
      double p0 = 0.0, p1 = 0.0, p2 = 0.0;  // value, first, second derivative
      for (std::size_t k = c.size(); k-- > 0;) {
        p2 = p2 * t + 2.0 * p1;
        p1 = p1 * t + p0;
        p0 = p0 * t + c[k];
      }
      j.x[comp] = p0;
      j.e[0][comp] = p1;
      j.a(0, 0)[comp] = p2;
    }
    return j;
  }
};

// Wraps a chart under xi_i -> alpha_i xi_i + beta_i (alpha_i > 0); jets are
// rescaled by the chain rule. Used to check that g is unchanged by linear
// reparameterization.
struct ReparamChart : Chart {
  std::shared_ptr<const Chart> base;
  Vec alpha, beta;
  ReparamChart(std::shared_ptr<const Chart> b, Vec al, Vec be)
      : base(std::move(b)), alpha(std::move(al)), beta(std::move(be)) {
    domain.lo.resize(alpha.size());
    domain.hi.resize(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      domain.lo[i] = (base->domain.lo[i] - beta[i]) / alpha[i];
      domain.hi[i] = (base->domain.hi[i] - beta[i]) / alpha[i];
    }
  }

 protected:
  ChartJet jet_impl(const Vec& xi) const override {
    Vec mapped(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) mapped[i] = alpha[i] * xi[i] + beta[i];
    // guard rounding at the box edge
    for (std::size_t i = 0; i < mapped.size(); ++i) {
      mapped[i] = std::min(std::max(mapped[i], base->domain.lo[i]), base->domain.hi[i]);
    }
    ChartJet j = base->jet(mapped);
    const int m = j.m();
    for (int i = 0; i < m; ++i) {
      j.e[std::size_t(i)] = scaled(j.e[std::size_t(i)], alpha[std::size_t(i)]);
      for (int k = i; k < m; ++k)
        j.a(i, k) = scaled(j.a(i, k), alpha[std::size_t(i)] * alpha[std::size_t(k)]);
    }
    return j;
  }
};

// ---------------------------------------------------------------------------
// ODE-generated surface chart xi = (c, t): start on the line x0(c), flow for
// time t. The c-derivatives are exact derivatives of the discrete flow
// (tangent integration); the t-derivatives come from the vector field at the
// current point: d/dt x = f, d2/dt2 x = Df f, d/dc d/dt x = Df dx/dc.
// ---------------------------------------------------------------------------

inline Vec lorenz_line_point(double c) { return {c, c, 28.0}; }
inline Vec lorenz_line_tangent() { return {1.0, 1.0, 0.0}; }

inline ChartJet assemble_surface_jet(const DynSystem& sys, const Vec& x, const Vec& v,
                                     const Vec& w) {
  ChartJet j = ChartJet::make(2, sys.n);
  MatNM df = sys.jac(x);
  Vec fx = sys.f(x);
  j.x = x;
  j.e[0] = v;
  j.e[1] = fx;
  j.a(0, 0) = w;
  j.a(0, 1) = matvec(df, v);
  j.a(1, 1) = matvec(df, fx);
  return j;
}

// Jet of the Lorenz-style surface chart at (c, t), t a multiple of dt.
inline ChartJet jet_ode_surface(const DynSystem& sys, double c, double t, double dt) {
  const long k = std::lround(t / dt);
  if (k < 0 || std::abs(double(k) * dt - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw OutOfDomain("jet_ode_surface: t is not a step multiple");
  Vec x = lorenz_line_point(c);
  Vec v = lorenz_line_tangent();
  Vec w(3, 0.0);
  for (long s = 0; s < k; ++s) {
    Vec wn = rk2_second_tangent_step(sys, x, v, w, dt);
    Vec vn = rk2_tangent_step(sys, x, v, dt);
    x = rk2_step(sys, x, dt);
    v = vn;
    w = wn;
  }
  return assemble_surface_jet(sys, x, v, w);
}

// Caches one c-column of the surface: jets at t = 0, dt, ..., kmax*dt.
struct OdeSurfaceColumn {
  std::vector<ChartJet> jets;

  OdeSurfaceColumn(const DynSystem& sys, double c, long kmax, double dt) {
    jets.reserve(std::size_t(kmax) + 1);
    Vec x = lorenz_line_point(c);
    Vec v = lorenz_line_tangent();
    Vec w(3, 0.0);
    for (long k = 0; k <= kmax; ++k) {
      jets.push_back(assemble_surface_jet(sys, x, v, w));
      if (k == kmax) break;
      Vec wn = rk2_second_tangent_step(sys, x, v, w, dt);
      Vec vn = rk2_tangent_step(sys, x, v, dt);
      x = rk2_step(sys, x, dt);
      v = vn;
      w = wn;
    }
  }
  const ChartJet& at(long k) const { return jets[std::size_t(k)]; }
};

// ---------------------------------------------------------------------------
// Van der Pol trajectory charts. Both are cached at their sample nodes and
// exact with respect to the discrete integrator.
// ---------------------------------------------------------------------------

// Half-period line chart x(xi) = u(xi * T_half), m = n = 1. Nodes are
// equispaced in xi; the trajectory is re-integrated with the node spacing as
// time step, so node i sits exactly at t = i * T_half / (n_samples - 1).
struct VdpHalfCurve {
  double a = 0.0;
  double t_half = 0.0;
  long n_samples = 0;
  std::vector<double> t, u, du, ddu;

  static VdpHalfCurve build(const DynSystem& sys, double a, long n_samples,
                            double detect_dt = 1e-4) {
    if (n_samples < 2) throw GridMismatch("VdpHalfCurve: need at least 2 samples");
    VdpHalfCurve c;
    c.a = a;
    c.t_half = vdp_detect_period(sys, a, detect_dt).t_half;
    c.n_samples = n_samples;
    const double dtb = c.t_half / double(n_samples - 1);
    c.t.reserve(std::size_t(n_samples));
    c.u.reserve(std::size_t(n_samples));
    c.du.reserve(std::size_t(n_samples));
    c.ddu.reserve(std::size_t(n_samples));
    Vec x{-a, 0.0};
    for (long i = 0; i < n_samples; ++i) {
      c.t.push_back(double(i) * dtb);
      c.u.push_back(x[0]);
      c.du.push_back(x[1]);
      c.ddu.push_back(sys.f(x)[1]);
      if (i + 1 < n_samples) x = rk2_step(sys, x, dtb);
    }
    return c;
  }

  ChartJet line_jet(long i) const {
    ChartJet j = ChartJet::make(1, 1);
    j.x = {u[std::size_t(i)]};
    j.e[0] = {t_half * du[std::size_t(i)]};
    j.a(0, 0) = {t_half * t_half * ddu[std::size_t(i)]};
    return j;
  }
};

// Full-period loop chart x(xi) = (u, du/dt)(xi * T), m = 1, n = 2. The node
// count is rounded to even so that xi and xi + 1/2 are both on the grid.
// Jets use the phase-space identities x' = T f(x), x'' = T^2 Df(x) f(x).
struct VdpLoopCurve {
  double a = 0.0;
  double period = 0.0;
  long n_samples = 0;  // nodes at xi_i = i / n_samples, i = 0 .. n_samples-1
  std::vector<Vec> state;

  static VdpLoopCurve build(const DynSystem& sys, double a, double dt = 1e-4) {
    VdpLoopCurve c;
    c.a = a;
    c.period = vdp_detect_period(sys, a, dt).t_full;
    long n = std::lround(c.period / dt);
    if (n % 2 == 1) ++n;
    c.n_samples = n;
    const double dtl = c.period / double(n);
    c.state.reserve(std::size_t(n));
    Vec x{-a, 0.0};
    for (long i = 0; i < n; ++i) {
      c.state.push_back(x);
      x = rk2_step(sys, x, dtl);
    }
    c.closure_gap_ = std::hypot(x[0] + a, x[1]);
    return c;
  }

  ChartJet jet(const DynSystem& sys, long i) const {
    const Vec& x = state[std::size_t(i)];
    Vec fx = sys.f(x);
    ChartJet j = ChartJet::make(1, 2);
    j.x = x;
    j.e[0] = scaled(fx, period);
    j.a(0, 0) = scaled(matvec(sys.jac(x), fx), period * period);
    return j;
  }

  double xi(long i) const { return double(i) / double(n_samples); }
  double closure_gap() const { return closure_gap_; }

 private:
  double closure_gap_ = 0.0;
};

}  // namespace densgrad
