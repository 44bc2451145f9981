// Built-in vector fields (Van der Pol, Lorenz '63) with hand-derived
// Jacobians and Hessian bilinear forms, the midpoint Runge-Kutta step, and
// its exact first/second derivatives with respect to the initial state.
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "densgrad/errors.hpp"
#include "densgrad/smallmat.hpp"

namespace densgrad {

struct DynSystem {
  int n = 0;
  std::string name;
  std::function<Vec(const Vec&)> f;
  std::function<MatNM(const Vec&)> jac;
  // components sum_{k,l} (d2 f_i / dx_k dx_l) v_k w_l
  std::function<Vec(const Vec&, const Vec&, const Vec&)> hess_bilinear;
};

// d2u/dt2 = 2 (1 - u^2) du/dt - u, written as first-order in (u, du/dt).
inline DynSystem vanderpol() {
  DynSystem s;
  s.n = 2;
  s.name = "vanderpol";
  s.f = [](const Vec& x) -> Vec {
    return {x[1], 2.0 * (1.0 - x[0] * x[0]) * x[1] - x[0]};
  };
  s.jac = [](const Vec& x) -> MatNM {
    MatNM j(2, 2);
    j(0, 0) = 0.0;
    j(0, 1) = 1.0;
    j(1, 0) = -4.0 * x[0] * x[1] - 1.0;
    j(1, 1) = 2.0 * (1.0 - x[0] * x[0]);
    return j;
  };
  s.hess_bilinear = [](const Vec& x, const Vec& v, const Vec& w) -> Vec {
    const double c = -4.0 * x[1] * v[0] * w[0] - 4.0 * x[0] * (v[0] * w[1] + v[1] * w[0]);
    return {0.0, c};
  };
  return s;
}

// Classic Lorenz '63 convection model, sigma=10, r=28, b=8/3.
inline DynSystem lorenz63() {
  constexpr double sigma = 10.0, r = 28.0, b = 8.0 / 3.0;
  DynSystem s;
  s.n = 3;
  s.name = "lorenz63";
  s.f = [](const Vec& x) -> Vec {
    return {sigma * (x[1] - x[0]), x[0] * (r - x[2]) - x[1], x[0] * x[1] - b * x[2]};
  };
  s.jac = [](const Vec& x) -> MatNM {
    MatNM j(3, 3);
    j(0, 0) = -sigma;
    j(0, 1) = sigma;
    j(1, 0) = r - x[2];
    j(1, 1) = -1.0;
    j(1, 2) = -x[0];
    j(2, 0) = x[1];
    j(2, 1) = x[0];
    j(2, 2) = -b;
    return j;
  };
  s.hess_bilinear = [](const Vec&, const Vec& v, const Vec& w) -> Vec {
    return {0.0, -(v[0] * w[2] + v[2] * w[0]), v[0] * w[1] + v[1] * w[0]};
  };
  return s;
}

// Wraps a bare vector field with central-difference Jacobian and Hessian
// forms. Meant for trying out third-party systems; accuracy is O(h^2), so
// the built-ins keep their hand-derived expressions. The default h is tuned
// for the second-difference stencil, whose roundoff floor scales as
// eps * |f| / h^2.
inline DynSystem fd_system(int n, std::string name, std::function<Vec(const Vec&)> f,
                           double h = 1e-4) {
  DynSystem s;
  s.n = n;
  s.name = std::move(name);
  s.f = f;
  s.jac = [f, n, h](const Vec& x) -> MatNM {
    MatNM j(n, n);
    Vec xp = x, xm = x;
    for (int c = 0; c < n; ++c) {
      xp[std::size_t(c)] = x[std::size_t(c)] + h;
      xm[std::size_t(c)] = x[std::size_t(c)] - h;
      Vec fp = f(xp), fm = f(xm);
      for (int r = 0; r < n; ++r)
        j(r, c) = (fp[std::size_t(r)] - fm[std::size_t(r)]) / (2.0 * h);
      xp[std::size_t(c)] = x[std::size_t(c)];
      xm[std::size_t(c)] = x[std::size_t(c)];
    }
    return j;
  };
  s.hess_bilinear = [f, n, h](const Vec& x, const Vec& v, const Vec& w) -> Vec {
    // Mixed second difference along the two directions. Scaling each
    // direction to unit length keeps the stencil width h regardless of the
    // magnitudes of v and w.
    double nv = norm(v), nw = norm(w);
    Vec out(std::size_t(n), 0.0);
    if (nv == 0.0 || nw == 0.0) return out;
    Vec pp = x, pm = x, mp = x, mm = x;
    for (int r = 0; r < n; ++r) {
      std::size_t k = std::size_t(r);
      double dv = h * v[k] / nv, dw = h * w[k] / nw;
      pp[k] = x[k] + dv + dw;
      pm[k] = x[k] + dv - dw;
      mp[k] = x[k] - dv + dw;
      mm[k] = x[k] - dv - dw;
    }
    Vec fpp = f(pp), fpm = f(pm), fmp = f(mp), fmm = f(mm);
    double scale = nv * nw / (4.0 * h * h);
    for (int r = 0; r < n; ++r) {
      std::size_t k = std::size_t(r);
      out[k] = (fpp[k] - fpm[k] - fmp[k] + fmm[k]) * scale;
    }
    return out;
  };
  return s;
}

inline void require_finite(const Vec& x, const char* where) {
  for (double v : x)
    if (!std::isfinite(v)) throw NonFinite(std::string(where) + ": non-finite state");
}

// Midpoint rule: x + dt * f(x + dt/2 * f(x)).
inline Vec rk2_step(const DynSystem& sys, const Vec& x, double dt) {
  Vec mid = axpy(0.5 * dt, sys.f(x), x);
  Vec out = axpy(dt, sys.f(mid), x);
  require_finite(out, "rk2_step");
  return out;
}

// Exact derivative of rk2_step with respect to the initial state, applied
// to v. Differentiating the discrete step (rather than discretizing the
// continuous variational equation) keeps chart jets and pushforward
// recursions bit-compatible.
inline Vec rk2_tangent_step(const DynSystem& sys, const Vec& x, const Vec& v, double dt) {
  Vec mid = axpy(0.5 * dt, sys.f(x), x);
  Vec vmid = axpy(0.5 * dt, matvec(sys.jac(x), v), v);
  Vec out = axpy(dt, matvec(sys.jac(mid), vmid), v);
  require_finite(out, "rk2_tangent_step");
  return out;
}

// Exact second derivative of rk2_step as a bilinear form in (v, w).
inline Vec rk2_hess_bilinear(const DynSystem& sys, const Vec& x, const Vec& v, const Vec& w,
                             double dt) {
  Vec mid = axpy(0.5 * dt, sys.f(x), x);
  Vec vmid = axpy(0.5 * dt, matvec(sys.jac(x), v), v);
  Vec wmid = axpy(0.5 * dt, matvec(sys.jac(x), w), w);
  Vec out = axpy(0.5 * dt, matvec(sys.jac(mid), sys.hess_bilinear(x, v, w)),
                 sys.hess_bilinear(mid, vmid, wmid));
  out = scaled(out, dt);
  require_finite(out, "rk2_hess_bilinear");
  return out;
}

// Step of the second-order tangent state w tracking d2x/dc2 of the discrete
// flow, with v the matching first-order tangent: the curvature forcing uses
// (v, v), not (w, w).
inline Vec rk2_second_tangent_step(const DynSystem& sys, const Vec& x, const Vec& v, const Vec& w,
                                   double dt) {
  Vec bil = rk2_hess_bilinear(sys, x, v, v, dt);
  Vec lin = rk2_tangent_step(sys, x, w, dt);
  for (std::size_t i = 0; i < bil.size(); ++i) bil[i] += lin[i];
  return bil;
}

struct PeriodDetection {
  double t_half = 0.0;   // first du/dt downward zero crossing
  double t_full = 0.0;   // following upward zero crossing (one period)
  long steps_half = 0;   // full steps taken before the half crossing
  long steps_full = 0;
};

// Integrates the Van der Pol oscillator from (-a, 0) and locates the du/dt
// zero crossings by linear interpolation between steps. The printed
// half-period near 3.819 is only a seed; the detected value is what counts.
inline PeriodDetection vdp_detect_period(const DynSystem& sys, double a, double dt) {
  PeriodDetection out;
  Vec x{-a, 0.0};
  const long max_steps = long(20.0 / dt);
  bool half_found = false;
  for (long k = 0; k < max_steps; ++k) {
    Vec xn = rk2_step(sys, x, dt);
    if (!half_found && k > 100 && x[1] > 0.0 && xn[1] <= 0.0) {
      out.t_half = double(k) * dt + dt * x[1] / (x[1] - xn[1]);
      out.steps_half = k;
      half_found = true;
    } else if (half_found && x[1] < 0.0 && xn[1] >= 0.0) {
      out.t_full = double(k) * dt + dt * x[1] / (x[1] - xn[1]);
      out.steps_full = k;
      return out;
    }
    x = xn;
  }
  throw NonFinite("vdp_detect_period: no zero crossing found");
}

struct VdpScenario {
  double a = 2.0199;   // starting amplitude; trajectory stays near the limit cycle
  double dt = 1e-4;
  double t_half_nominal = 3.819;  // seed only, refined by detection
};

}  // namespace densgrad
