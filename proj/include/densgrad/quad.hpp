#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "densgrad/chart.hpp"
#include "densgrad/dynsys.hpp"
#include "densgrad/errors.hpp"
#include "densgrad/smallmat.hpp"

namespace densgrad {

// f(x) = ((x-a)(x+a) sin(K x^2))^2, a double root at both endpoints, so f
// and f' vanish there and integration by parts carries no boundary term
struct OscillatoryF {
  double a = 2.0199;
  double k = 10.0;
};

inline double f_value(const OscillatoryF& p, double x) {
  const double poly = (x - p.a) * (x + p.a);
  const double s = std::sin(p.k * x * x);
  const double root = poly * s;
  return root * root;
}

inline double f_deriv(const OscillatoryF& p, double x) {
  const double poly = x * x - p.a * p.a;
  const double s = std::sin(p.k * x * x);
  const double c = std::cos(p.k * x * x);
  return 4.0 * x * poly * s * s + 4.0 * p.k * x * poly * poly * s * c;
}

// sum f(lo) + ... + f(hi-1) with pairwise splitting; the fixed association
// order keeps results identical run to run
template <class Fn>
double pairwise_sum_fn(Fn&& f, long lo, long hi) {
  if (hi - lo <= 32) {
    double s = 0.0;
    for (long i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const long mid = lo + (hi - lo) / 2;
  return pairwise_sum_fn(f, lo, mid) + pairwise_sum_fn(f, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum_fn([&](long i) { return v[std::size_t(i)]; }, 0, long(v.size()));
}

inline double mc_estimate(const std::vector<double>& h) {
  if (h.empty()) throw EmptySample("mc_estimate: no samples");
  return pairwise_sum(h) / double(h.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw TooFewSamples("sample_variance: need at least 2 values");
  const double mean = mc_estimate(v);
  const double ss = pairwise_sum_fn(
      [&](long i) {
        const double d = v[std::size_t(i)] - mean;
        return d * d;
      },
      0, long(v.size()));
  return ss / double(v.size() - 1);
}

// composite trapezoid over a uniform grid passed in explicitly
inline double trapezoid(const std::vector<double>& values, const std::vector<double>& grid) {
  if (values.size() != grid.size() || grid.size() < 2)
    throw GridMismatch("trapezoid: values and grid sizes disagree");
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) throw GridMismatch("trapezoid: grid not increasing");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = grid[i] - grid[i - 1];
    if (std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw GridMismatch("trapezoid: grid not uniform");
  }
  const long n = long(values.size());
  const double interior = pairwise_sum_fn([&](long i) { return values[std::size_t(i)]; }, 1, n - 1);
  return h * (interior + 0.5 * (values[0] + values[std::size_t(n - 1)]));
}

// streaming variant for grids too large to materialize
template <class Fn>
double trapezoid_fn(Fn&& f, double lo, double hi, long n) {
  if (n < 2 || !(hi > lo)) throw GridMismatch("trapezoid_fn: bad grid");
  const double h = (hi - lo) / double(n - 1);
  const double interior =
      pairwise_sum_fn([&](long i) { return f(lo + h * double(i)); }, 1, n - 1);
  return h * (interior + 0.5 * (f(lo) + f(hi)));
}

// equispaced-in-xi samples along the half-period trajectory; endpoint
// samples carry NaN rho and g (the turning points have du/dt = 0) and are
// flagged instead of extrapolated
struct SampledCurve {
  Vec xi, x, t, rho, g, arclen;
  std::vector<char> endpoint;
  double t_half = 0.0;
  long n = 0;
};

inline SampledCurve build_sample_curve(const DynSystem& sys, double a, long n,
                                       double detect_dt = 1e-4) {
  VdpHalfCurve curve = VdpHalfCurve::build(sys, a, n, detect_dt);
  SampledCurve out;
  out.n = n;
  out.t_half = curve.t_half;
  out.xi.resize(std::size_t(n));
  out.x = curve.u;
  out.t = curve.t;
  out.rho.assign(std::size_t(n), std::numeric_limits<double>::quiet_NaN());
  out.g.assign(std::size_t(n), std::numeric_limits<double>::quiet_NaN());
  out.arclen.resize(std::size_t(n));
  out.endpoint.assign(std::size_t(n), 0);
  out.endpoint[0] = out.endpoint[std::size_t(n - 1)] = 1;
  out.arclen[0] = 0.0;
  for (long i = 1; i < n; ++i)
    out.arclen[std::size_t(i)] =
        out.arclen[std::size_t(i - 1)] + std::abs(curve.u[std::size_t(i)] - curve.u[std::size_t(i - 1)]);
  for (long i = 0; i < n; ++i) out.xi[std::size_t(i)] = double(i) / double(n - 1);
  for (long i = 1; i + 1 < n; ++i) {
    const double du = curve.du[std::size_t(i)], ddu = curve.ddu[std::size_t(i)];
    if (!(du > 0.0)) throw ZeroTangent("build_sample_curve: interior du/dt not positive");
    out.rho[std::size_t(i)] = 1.0 / (curve.t_half * du);
    out.g[std::size_t(i)] = -ddu / (du * du);
  }
  return out;
}

// piecewise-linear, clamped outside the breakpoint range
struct Interp1D {
  Vec xs, ys;

  Interp1D() = default;
  Interp1D(Vec x, Vec y) : xs(std::move(x)), ys(std::move(y)) {
    if (xs.size() != ys.size() || xs.size() < 2)
      throw GridMismatch("Interp1D: need matching breakpoints and values");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw GridMismatch("Interp1D: breakpoints not increasing");
    for (double v : ys)
      if (!std::isfinite(v)) throw NonFinite("Interp1D: non-finite value");
  }

  double operator()(double x) const {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = std::size_t(it - xs.begin()), lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
  }
};

// the three maps the experiment reuses for every N: time to position along
// the half period, and position to density / gradient from interior samples
struct CurveInterpolants {
  Interp1D t_to_x, x_to_rho, x_to_g;
  double t_half = 0.0;
};

inline CurveInterpolants make_interpolants(const SampledCurve& sc) {
  if (sc.n < 4) throw TooFewSamples("make_interpolants: curve too short");
  CurveInterpolants out;
  out.t_half = sc.t_half;
  out.t_to_x = Interp1D(sc.t, sc.x);
  Vec xs(sc.x.begin() + 1, sc.x.end() - 1);
  Vec rhos(sc.rho.begin() + 1, sc.rho.end() - 1);
  Vec gs(sc.g.begin() + 1, sc.g.end() - 1);
  out.x_to_rho = Interp1D(xs, rhos);
  out.x_to_g = Interp1D(std::move(xs), std::move(gs));
  return out;
}

// reference for the convergence study: trapezoid of f' * rho on a grid far
// denser than any estimator uses, plus a half-resolution rerun so the study
// knows how much of the reference to trust
struct ReferenceIntegral {
  double value = 0.0;
  double self_dev = 0.0;  // |ref(n) - ref(n/2)| / |ref(n)|
};

inline ReferenceIntegral reference_integral(const OscillatoryF& p, const CurveInterpolants& in,
                                            long n) {
  auto integrand = [&](double x) { return f_deriv(p, x) * in.x_to_rho(x); };
  ReferenceIntegral out;
  out.value = trapezoid_fn(integrand, -p.a, p.a, n);
  const double half = trapezoid_fn(integrand, -p.a, p.a, n / 2);
  out.self_dev = std::abs(out.value - half) / std::abs(out.value);
  return out;
}

struct ConvergenceRow {
  long n = 0;
  double est_mc = 0.0, est_mcg = 0.0, est_trap = 0.0;
  double err_mc = 0.0, err_mcg = 0.0, err_trap = 0.0;
};

struct ConvergenceStudy {
  double reference = 0.0;
  double ref_self_dev = 0.0;
  std::vector<ConvergenceRow> rows;
};

// seed == 0: the deterministic equispaced-xi sampling; seed > 0: uniform xi
// from a seeded PRNG. Both MC estimators share each sample; endpoint samples
// contribute zero to the g-weighted sum (their exact contribution, since f
// vanishes there) while the divisor stays N.
inline ConvergenceStudy convergence_study(const OscillatoryF& p, const CurveInterpolants& in,
                                          const std::vector<long>& ns,
                                          const ReferenceIntegral& ref, std::uint64_t seed) {
  ConvergenceStudy out;
  out.reference = ref.value;
  out.ref_self_dev = ref.self_dev;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (long n : ns) {
    if (n < 2) throw TooFewSamples("convergence_study: n < 2");
    ConvergenceRow row;
    row.n = n;
    std::vector<double> h_mc(std::size_t(n), 0.0), h_mcg(std::size_t(n), 0.0);
    for (long i = 0; i < n; ++i) {
      const double xi = seed == 0 ? double(i) / double(n - 1) : unif(rng);
      const double x = in.t_to_x(xi * in.t_half);
      h_mc[std::size_t(i)] = f_deriv(p, x);
      const bool at_end = seed == 0 && (i == 0 || i == n - 1);
      h_mcg[std::size_t(i)] = at_end ? 0.0 : -f_value(p, x) * in.x_to_g(x);
    }
    row.est_mc = mc_estimate(h_mc);
    row.est_mcg = mc_estimate(h_mcg);
    row.est_trap =
        trapezoid_fn([&](double x) { return f_deriv(p, x) * in.x_to_rho(x); }, -p.a, p.a, n);
    row.err_mc = std::abs(row.est_mc - ref.value) / std::abs(ref.value);
    row.err_mcg = std::abs(row.est_mcg - ref.value) / std::abs(ref.value);
    row.err_trap = std::abs(row.est_trap - ref.value) / std::abs(ref.value);
    out.rows.push_back(row);
  }
  return out;
}

// the two MC estimators integrate the same I but from very different sample
// distributions; the spread between their sample variances is the point of
// the g-weighted rewrite
struct VarianceDiag {
  double var_mc = 0.0, var_mcg = 0.0, ratio = 0.0;
};

inline VarianceDiag variance_diagnostic(const OscillatoryF& p, const CurveInterpolants& in, long n,
                                        std::uint64_t seed) {
  if (n < 2) throw TooFewSamples("variance_diagnostic: n < 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> h_mc(std::size_t(n), 0.0), h_mcg(std::size_t(n), 0.0);
  for (long i = 0; i < n; ++i) {
    const double xi = seed == 0 ? double(i) / double(n - 1) : unif(rng);
    const double x = in.t_to_x(xi * in.t_half);
    h_mc[std::size_t(i)] = f_deriv(p, x);
    const bool at_end = seed == 0 && (i == 0 || i == n - 1);
    h_mcg[std::size_t(i)] = at_end ? 0.0 : -f_value(p, x) * in.x_to_g(x);
  }
  VarianceDiag out;
  out.var_mc = sample_variance(h_mc);
  out.var_mcg = sample_variance(h_mcg);
  out.ratio = out.var_mc / out.var_mcg;
  return out;
}

inline std::vector<long> default_study_counts() {
  return {100,   178,   316,   562,    1000,   1780,   3160,   5620,
          10000, 17800, 31600, 56200, 100000, 178000, 316000, 500000};
}

// OLS slope of log10(err) vs log10(n) over n in [n_lo, n_hi], skipping rows
// whose error has underflowed the reference accuracy
inline double fit_loglog_slope(const std::vector<ConvergenceRow>& rows,
                               const std::vector<double>& errs, double n_lo, double n_hi,
                               double floor_err) {
  if (rows.size() != errs.size()) throw GridMismatch("fit_loglog_slope: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double n = double(rows[i].n);
    if (n < n_lo || n > n_hi) continue;
    if (!(errs[i] > floor_err)) continue;
    xs.push_back(std::log10(n));
    ys.push_back(std::log10(errs[i]));
  }
  if (xs.size() < 2) throw TooFewSamples("fit_loglog_slope: fewer than 2 usable points");
  const double mx = mc_estimate(xs), my = mc_estimate(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

// least-squares slope of log(rank) vs log(|value|) over the top decile.
// A shallow tail (slope > -1) flags a function that is not integrable
// against the sampling density.
inline double tail_slope(const std::vector<double>& values) {
  if (values.size() < 1000) throw TooFewSamples("tail_slope: need at least 1000 samples");
  std::vector<double> mag;
  mag.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v) && v != 0.0) mag.push_back(std::abs(v));
  if (mag.size() < 1000) throw TooFewSamples("tail_slope: need at least 1000 nonzero samples");
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  const std::size_t dec = mag.size() / 10;
  double mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < dec; ++r) {
    mx += std::log(mag[r]);
    my += std::log(double(r + 1));
  }
  mx /= double(dec);
  my /= double(dec);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t r = 0; r < dec; ++r) {
    const double dx = std::log(mag[r]) - mx, dy = std::log(double(r + 1)) - my;
    sxx += dx * dx;
    sxy += dx * dy;
  }
  // all top-decile magnitudes equal means an abrupt (extremely steep) tail
  if (sxx < 1e-30) return -std::numeric_limits<double>::infinity();
  return sxy / sxx;
}

inline bool tail_flags_integrable(double slope) { return slope <= -1.0; }

}  // namespace densgrad
