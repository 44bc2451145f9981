// Density rho and density gradient g implied by a chart jet. Three routes:
// the 1D line form, the space-curve form, and the general QR route; all
// agree where their domains overlap.
#pragma once

#include <cmath>

#include "densgrad/chart.hpp"
#include "densgrad/errors.hpp"
#include "densgrad/smallmat.hpp"

namespace densgrad {

struct DensityEval {
  double rho = 0.0;
  Vec g;           // directional derivative of log rho along each unit e_i
  double det_r = 0.0;
};

constexpr double kZeroTangentTol = 1e-14;

// m = n = 1: rho = 1/|x'|, g = -x'' / x'^2.
inline DensityEval density_line(const ChartJet& jet) {
  const double xp = jet.e[0][0];
  if (std::abs(xp) < kZeroTangentTol) throw ZeroTangent("density_line: vanishing slope");
  const double xpp = jet.a(0, 0)[0];
  DensityEval ev;
  ev.det_r = std::abs(xp);
  ev.rho = 1.0 / ev.det_r;
  ev.g = {-xpp / (xp * xp)};
  return ev;
}

// m = 1, any n: rho = 1/||x'||, g = -(x' . x'') / ||x'||^3.
inline DensityEval density_curve(const ChartJet& jet) {
  const Vec& xp = jet.e[0];
  const Vec& xpp = jet.a(0, 0);
  const double speed = norm(xp);
  if (speed < kZeroTangentTol) throw ZeroTangent("density_curve: vanishing tangent");
  DensityEval ev;
  ev.det_r = speed;
  ev.rho = 1.0 / speed;
  ev.g = {-dot(xp, xpp) / (speed * speed * speed)};
  return ev;
}

// General m <= n route: thin QR of [e_1 ... e_m], rho = 1/prod(diag R),
// g_i = -(1/||e_i||) * sum_j q_j . (A_i y_j) where A_i = [a_i1 ... a_im]
// and y_j solves R y_j = delta_j. The m back substitutions replace any
// explicit inverse of R.
inline DensityEval density_general(const ChartJet& jet) {
  const int m = jet.m(), n = jet.n();
  MatNM grad = MatNM::from_cols(jet.e);
  QRPair qr = thin_qr(grad);

  double detr = 1.0;
  for (int k = 0; k < m; ++k) detr *= qr.r(k, k);

  std::vector<Vec> y;
  y.resize(std::size_t(m));
  for (int j = 0; j < m; ++j) {
    Vec rhs(std::size_t(m), 0.0);
    rhs[std::size_t(j)] = 1.0;
    y[std::size_t(j)] = back_substitute(qr.r, rhs);
  }

  DensityEval ev;
  ev.det_r = detr;
  ev.rho = 1.0 / detr;
  ev.g.assign(std::size_t(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const double speed = norm(jet.e[std::size_t(i)]);
    if (speed < kZeroTangentTol) throw ZeroTangent("density_general: vanishing tangent");
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      // q_j . (A_i y_j) with A_i columns a(i, k)
      double qa = 0.0;
      for (int k = 0; k < m; ++k) {
        const double yk = y[std::size_t(j)][std::size_t(k)];
        if (yk == 0.0) continue;
        const Vec& aik = jet.a(i, k);
        double col = 0.0;
        for (int row = 0; row < n; ++row) col += qr.q(row, j) * aik[std::size_t(row)];
        qa += col * yk;
      }
      acc += qa;
    }
    ev.g[std::size_t(i)] = -acc / speed;
  }
  return ev;
}

// Derivative of log rho at unit speed along the direction mapped from the
// parameter-space vector d: sum_i d_i g_i ||e_i|| / ||sum_i d_i e_i||.
inline double directional_log_density_derivative(const DensityEval& ev, const ChartJet& jet,
                                                 const Vec& d) {
  Vec mapped(std::size_t(jet.n()), 0.0);
  double num = 0.0;
  for (int i = 0; i < jet.m(); ++i) {
    mapped = axpy(d[std::size_t(i)], jet.e[std::size_t(i)], mapped);
    num += d[std::size_t(i)] * ev.g[std::size_t(i)] * norm(jet.e[std::size_t(i)]);
  }
  const double speed = norm(mapped);
  if (speed < kZeroTangentTol)
    throw ZeroTangent("directional_log_density_derivative: direction maps to zero");
  return num / speed;
}

}  // namespace densgrad
