#pragma once

#include <functional>
#include <vector>

#include "densgrad/chart.hpp"
#include "densgrad/density.hpp"
#include "densgrad/dynsys.hpp"
#include "densgrad/errors.hpp"
#include "densgrad/smallmat.hpp"

namespace densgrad {

// One step of a diffeomorphism with its exact first and second derivatives
// in directional form. jac_vec must be the derivative of map itself, not an
// FD approximation of it, so repeated pushes stay on the same float path as
// a chart built from the same flow.
struct DiscreteMap {
  int n = 0;
  std::function<Vec(const Vec&)> map;
  std::function<Vec(const Vec&, const Vec&)> jac_vec;
  std::function<Vec(const Vec&, const Vec&, const Vec&)> hess_bilinear;

  MatNM jac(const Vec& x) const {
    MatNM out(n, n);
    for (int j = 0; j < n; ++j) {
      Vec ej(std::size_t(n), 0.0);
      ej[std::size_t(j)] = 1.0;
      out.set_col(j, jac_vec(x, ej));
    }
    return out;
  }
};

inline DiscreteMap identity_map(int n) {
  DiscreteMap m;
  m.n = n;
  m.map = [](const Vec& x) { return x; };
  m.jac_vec = [](const Vec&, const Vec& v) { return v; };
  m.hess_bilinear = [n](const Vec&, const Vec&, const Vec&) { return Vec(std::size_t(n), 0.0); };
  return m;
}

inline DiscreteMap linear_map(const MatNM& a) {
  DiscreteMap m;
  m.n = a.n;
  m.map = [a](const Vec& x) { return matvec(a, x); };
  m.jac_vec = [a](const Vec&, const Vec& v) { return matvec(a, v); };
  m.hess_bilinear = [n = a.n](const Vec&, const Vec&, const Vec&) {
    return Vec(std::size_t(n), 0.0);
  };
  return m;
}

inline DiscreteMap from_rk2(const DynSystem& sys, double dt) {
  DiscreteMap m;
  m.n = sys.n;
  m.map = [sys, dt](const Vec& x) { return rk2_step(sys, x, dt); };
  m.jac_vec = [sys, dt](const Vec& x, const Vec& v) { return rk2_tangent_step(sys, x, v, dt); };
  m.hess_bilinear = [sys, dt](const Vec& x, const Vec& v, const Vec& w) {
    return rk2_hess_bilinear(sys, x, v, w, dt);
  };
  return m;
}

struct JetState {
  long k = 0;
  ChartJet jet;
};

// e_i -> Dphi e_i and a_ij -> D2phi(e_i, e_j) + Dphi a_ij with every
// derivative taken at the pre-step point. The a update runs before e and x
// and adds the bilinear term first, mirroring the ODE surface march, so for
// maps built by from_rk2 the floats agree bit for bit.
inline JetState push_jet(const DiscreteMap& phi, const JetState& s) {
  const int m = s.jet.m(), n = s.jet.n();
  JetState out;
  out.k = s.k + 1;
  out.jet = ChartJet::make(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      Vec bil = phi.hess_bilinear(s.jet.x, s.jet.e[std::size_t(i)], s.jet.e[std::size_t(j)]);
      Vec lin = phi.jac_vec(s.jet.x, s.jet.a(i, j));
      for (std::size_t r = 0; r < bil.size(); ++r) bil[r] += lin[r];
      out.jet.a(i, j) = bil;
    }
  for (int i = 0; i < m; ++i) out.jet.e[std::size_t(i)] = phi.jac_vec(s.jet.x, s.jet.e[std::size_t(i)]);
  out.jet.x = phi.map(s.jet.x);
  require_finite(out.jet.x, "push_jet");
  return out;
}

// Same QR route as the density module; for m=1 this reduces to
// g = -(q . a)/|e|^2, which density_curve evaluates directly.
inline Vec g_from_jet(const ChartJet& jet) { return density_general(jet).g; }

// c_j = j*step for j in [-half, half]; negation is exact, so the grid is
// bit-symmetric about 0 and downstream symmetry checks see exact zeros
inline Vec symmetric_grid(int half, double step) {
  Vec c;
  c.reserve(std::size_t(2 * half + 1));
  for (int j = -half; j <= half; ++j) c.push_back(j * step);
  return c;
}

// uniformly sampled straight line through the fixed points, tangent (1,1,0)
inline std::vector<ChartJet> lorenz_initial_line(const Vec& cgrid) {
  std::vector<ChartJet> jets;
  jets.reserve(cgrid.size());
  for (double c : cgrid) {
    ChartJet j = ChartJet::make(1, 3);
    j.x = lorenz_line_point(c);
    j.e[0] = lorenz_line_tangent();
    j.a(0, 0) = {0.0, 0.0, 0.0};
    jets.push_back(std::move(j));
  }
  return jets;
}

// g and rho per sample for k = 0..steps under repeated pushforward.
// rho is the 1D chart density 1/|e|; g uses the m=1 closed form.
struct CurveEvolution {
  long steps = 0;
  std::vector<std::vector<double>> g;    // [k][sample]
  std::vector<std::vector<double>> rho;  // [k][sample]
};

inline CurveEvolution evolve_curve(const DiscreteMap& phi, const std::vector<ChartJet>& initial,
                                   long steps) {
  if (initial.empty()) throw EmptySample("evolve_curve: no initial jets");
  CurveEvolution out;
  out.steps = steps;
  out.g.assign(std::size_t(steps) + 1, std::vector<double>(initial.size()));
  out.rho.assign(std::size_t(steps) + 1, std::vector<double>(initial.size()));
  for (std::size_t s = 0; s < initial.size(); ++s) {
    JetState js{0, initial[s]};
    for (long k = 0; k <= steps; ++k) {
      DensityEval ev = density_curve(js.jet);
      out.g[std::size_t(k)][s] = ev.g[0];
      out.rho[std::size_t(k)][s] = ev.rho;
      if (k < steps) js = push_jet(phi, js);
    }
  }
  return out;
}

}  // namespace densgrad
