// Experiment driver. Each subcommand reproduces one study as plot-ready
// tables plus a sidecar holding the fully resolved configuration; rerunning
// with the same flags produces byte-identical files.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "densgrad/chart.hpp"
#include "densgrad/density.hpp"
#include "densgrad/dynsys.hpp"
#include "densgrad/io.hpp"
#include "densgrad/pushforward.hpp"
#include "densgrad/quad.hpp"

namespace {

using namespace densgrad;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Opts {
  std::string out = "out";
  std::string format = "csv";
  std::uint64_t seed = 0;
  long n = 0;
  double k = 0.0;
  double dt = 0.0;
  long grid = 401;
  long steps = 200;
};

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

// --- vdp-line --------------------------------------------------------------
// Half-period inverse-CDF chart of the Van der Pol u coordinate: one row per
// sample, endpoints flagged undefined (the tangent du/dt vanishes there).
void cmd_vdp_line(const Opts& o) {
  const double a = 2.0199;
  const long n = o.n > 0 ? o.n : 38151;  // node spacing ~1e-4 in t
  const double detect_dt = o.dt > 0.0 ? o.dt : 1e-4;
  if (n < 2) throw GridMismatch("vdp-line: --n must be >= 2");

  auto sys = vanderpol();
  SampledCurve sc = build_sample_curve(sys, a, n, detect_dt);

  std::vector<double> undef(std::size_t(n), 0.0);
  for (long i = 0; i < n; ++i) undef[std::size_t(i)] = sc.endpoint[std::size_t(i)] ? 1.0 : 0.0;

  Table t;
  t.add("xi", sc.xi);
  t.add("x", sc.x);
  t.add("rho", sc.rho);
  t.add("g", sc.g);
  t.add("undefined", undef, true);

  Json cfg;
  cfg["command"] = "vdp-line";
  cfg["a"] = a;
  cfg["n"] = n;
  cfg["detect_dt"] = detect_dt;
  cfg["t_half"] = sc.t_half;
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  ensure_out_dir(o.out);
  write_table(t, o.out, "vdp_line", o.format, cfg);
  std::printf("vdp-line: n=%ld t_half=%.6f -> %s/vdp_line.%s\n", n, sc.t_half, o.out.c_str(),
              o.format.c_str());
}

// --- vdp-loop --------------------------------------------------------------
// Full periodic orbit in the (u, du/dt) plane. g_direct uses the curve
// formula; g_fd differences log rho over xi with periodic neighbors and is
// left undefined on the two rows whose stencil straddles the closure seam.
void cmd_vdp_loop(const Opts& o) {
  const double a = 2.0199;
  const double dt = o.dt > 0.0 ? o.dt : 1e-4;

  auto sys = vanderpol();
  VdpLoopCurve loop = VdpLoopCurve::build(sys, a, dt);
  const long n = loop.n_samples;
  const double dxi = 1.0 / double(n);

  std::vector<double> xi(std::size_t(n), 0.0), arclen(std::size_t(n), 0.0), rho(std::size_t(n), 0.0),
      gd(std::size_t(n), 0.0), gfd(std::size_t(n), 0.0), enorm(std::size_t(n), 0.0);
  for (long i = 0; i < n; ++i) {
    ChartJet j = loop.jet(sys, i);
    DensityEval ev = density_curve(j);
    xi[std::size_t(i)] = loop.xi(i);
    rho[std::size_t(i)] = ev.rho;
    gd[std::size_t(i)] = ev.g[0];
    enorm[std::size_t(i)] = norm(j.e[0]);
  }
  arclen[0] = 0.0;
  for (long i = 1; i < n; ++i) {
    const Vec& p = loop.state[std::size_t(i - 1)];
    const Vec& q = loop.state[std::size_t(i)];
    arclen[std::size_t(i)] =
        arclen[std::size_t(i - 1)] + std::hypot(q[0] - p[0], q[1] - p[1]);
  }
  for (long i = 0; i < n; ++i) {
    if (i == 0 || i == n - 1) {
      gfd[std::size_t(i)] = kNan;  // stencil crosses the closure gap
      continue;
    }
    const double lp = std::log(rho[std::size_t(i + 1)]);
    const double lm = std::log(rho[std::size_t(i - 1)]);
    gfd[std::size_t(i)] = (lp - lm) / (2.0 * dxi) / enorm[std::size_t(i)];
  }

  Table t;
  t.add("xi", xi);
  t.add("arclen", arclen);
  t.add("rho", rho);
  t.add("g_direct", gd);
  t.add("g_fd", gfd);

  Json cfg;
  cfg["command"] = "vdp-loop";
  cfg["a"] = a;
  cfg["dt"] = dt;
  cfg["period"] = loop.period;
  cfg["n_samples"] = n;
  cfg["closure_gap"] = loop.closure_gap();
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  ensure_out_dir(o.out);
  write_table(t, o.out, "vdp_loop", o.format, cfg);
  std::printf("vdp-loop: n=%ld period=%.6f closure=%.3e -> %s/vdp_loop.%s\n", n, loop.period,
              loop.closure_gap(), o.out.c_str(), o.format.c_str());
}

// --- mc-convergence --------------------------------------------------------
std::string k_suffix(double k) {
  double r = std::round(k);
  if (r == k && std::abs(k) < 1e15) return format_integer(k);
  return format_double(k);
}

void run_one_k(const Opts& o, double kval, long n_base, Json& summary) {
  OscillatoryF p;
  p.k = kval;
  auto sys = vanderpol();
  SampledCurve sc = build_sample_curve(sys, p.a, n_base);
  CurveInterpolants in = make_interpolants(sc);
  ReferenceIntegral ref = reference_integral(p, in, 10000000);
  std::vector<long> counts = default_study_counts();
  ConvergenceStudy st = convergence_study(p, in, counts, ref, o.seed);
  VarianceDiag vd = variance_diagnostic(p, in, 100000, o.seed);

  const std::size_t m = st.rows.size();
  std::vector<double> ns(m), e1(m), e2(m), e3(m);
  for (std::size_t i = 0; i < m; ++i) {
    ns[i] = double(st.rows[i].n);
    e1[i] = st.rows[i].err_mc;
    e2[i] = st.rows[i].err_mcg;
    e3[i] = st.rows[i].err_trap;
  }
  Table t;
  t.add("N", ns, true);
  t.add("err_mc_direct", e1);
  t.add("err_mc_g", e2);
  t.add("err_trap", e3);

  const double n_lo = 100.0, n_hi = 500000.0;
  Json ksum;
  ksum["k"] = kval;
  ksum["reference"] = ref.value;
  ksum["ref_self_dev"] = ref.self_dev;
  ksum["fit_window"] = {n_lo, n_hi};
  ksum["slope_mc_direct"] = fit_loglog_slope(st.rows, e1, n_lo, n_hi, ref.self_dev);
  ksum["slope_mc_g"] = fit_loglog_slope(st.rows, e2, n_lo, n_hi, ref.self_dev);
  ksum["slope_trap"] = fit_loglog_slope(st.rows, e3, n_lo, n_hi, ref.self_dev);
  ksum["variance_n"] = 100000;
  ksum["var_mc_direct"] = vd.var_mc;
  ksum["var_mc_g"] = vd.var_mcg;
  ksum["variance_ratio"] = vd.ratio;
  const std::string key = "k" + k_suffix(kval);
  summary[key] = ksum;

  Json cfg;
  cfg["command"] = "mc-convergence";
  cfg["k"] = kval;
  cfg["a"] = p.a;
  cfg["n_base"] = n_base;
  cfg["seed"] = o.seed;
  cfg["reference_n"] = 10000000;
  cfg["counts"] = counts;
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  write_table(t, o.out, "mc_convergence_" + key, o.format, cfg);
  std::printf(
      "mc-convergence k=%s: ref=%.9e slopes mc=%.3f mcg=%.3f trap=%.3f var_ratio=%.3e\n",
      k_suffix(kval).c_str(), ref.value, ksum["slope_mc_direct"].get<double>(),
      ksum["slope_mc_g"].get<double>(), ksum["slope_trap"].get<double>(), vd.ratio);
}

void cmd_mc_convergence(const Opts& o) {
  const long n_base = o.n > 0 ? o.n : 100000;
  if (n_base < 4) throw TooFewSamples("mc-convergence: --n must be >= 4");
  if (o.k < 0.0) throw GridMismatch("mc-convergence: --k must be positive");
  std::vector<double> ks;
  if (o.k > 0.0)
    ks = {o.k};
  else
    ks = {10.0, 100000.0};

  ensure_out_dir(o.out);
  Json summary;
  summary["command"] = "mc-convergence";
  for (double kval : ks) run_one_k(o, kval, n_base, summary);
  write_json_file(summary, o.out + "/mc_convergence_summary.json");
  std::printf("mc-convergence: summary -> %s/mc_convergence_summary.json\n", o.out.c_str());
}

// --- lorenz-surface ---------------------------------------------------------
// Marches the initial line {(c, c, 28)} under the Lorenz flow and evaluates
// the surface density on the (c, t) chart. The full grid is kept in memory
// so the FD comparison columns of the extracts can difference log rho in
// either chart coordinate.
struct SurfaceGrid {
  Vec cgrid;
  long kmax = 0;
  double dt = 0.0;
  // flattened [j * (kmax+1) + k]
  std::vector<double> x1, x2, x3, rho, gc, gt, nec, net;

  std::size_t idx(long j, long k) const { return std::size_t(j) * std::size_t(kmax + 1) + std::size_t(k); }

  static SurfaceGrid build(const DynSystem& sys, const Vec& cgrid, long kmax, double dt) {
    SurfaceGrid s;
    s.cgrid = cgrid;
    s.kmax = kmax;
    s.dt = dt;
    const std::size_t total = cgrid.size() * std::size_t(kmax + 1);
    s.x1.resize(total);
    s.x2.resize(total);
    s.x3.resize(total);
    s.rho.resize(total);
    s.gc.resize(total);
    s.gt.resize(total);
    s.nec.resize(total);
    s.net.resize(total);
    for (std::size_t j = 0; j < cgrid.size(); ++j) {
      OdeSurfaceColumn col(sys, cgrid[j], kmax, dt);
      for (long k = 0; k <= kmax; ++k) {
        const ChartJet& jet = col.at(k);
        DensityEval ev = density_general(jet);
        std::size_t i = s.idx(long(j), k);
        s.x1[i] = jet.x[0];
        s.x2[i] = jet.x[1];
        s.x3[i] = jet.x[2];
        s.rho[i] = ev.rho;
        s.gc[i] = ev.g[0];
        s.gt[i] = ev.g[1];
        s.nec[i] = norm(jet.e[0]);
        s.net[i] = norm(jet.e[1]);
      }
    }
    return s;
  }

  double gc_fd(long j, long k) const {
    if (j == 0 || j + 1 == long(cgrid.size())) return kNan;
    const double dc = cgrid[1] - cgrid[0];
    const double lp = std::log(rho[idx(j + 1, k)]), lm = std::log(rho[idx(j - 1, k)]);
    return (lp - lm) / (2.0 * dc) / nec[idx(j, k)];
  }

  double gt_fd(long j, long k) const {
    if (k == 0 || k == kmax) return kNan;
    const double lp = std::log(rho[idx(j, k + 1)]), lm = std::log(rho[idx(j, k - 1)]);
    return (lp - lm) / (2.0 * dt) / net[idx(j, k)];
  }
};

Vec make_cgrid(long grid) {
  if (grid < 3 || grid % 2 == 0)
    throw GridMismatch("--grid must be an odd count >= 3 (c spans [-5, 5] symmetrically)");
  const long half = (grid - 1) / 2;
  return symmetric_grid(int(half), 5.0 / double(half));
}

void cmd_lorenz_surface(const Opts& o) {
  const double dt = o.dt > 0.0 ? o.dt : 0.002;
  const long kmax = o.steps > 0 ? o.steps : 200;
  Vec cgrid = make_cgrid(o.grid);
  const long nj = long(cgrid.size());

  auto sys = lorenz63();
  SurfaceGrid s = SurfaceGrid::build(sys, cgrid, kmax, dt);

  const std::size_t total = cgrid.size() * std::size_t(kmax + 1);
  std::vector<double> cc(total), tt(total);
  for (long j = 0; j < nj; ++j)
    for (long k = 0; k <= kmax; ++k) {
      cc[s.idx(j, k)] = cgrid[std::size_t(j)];
      tt[s.idx(j, k)] = double(k) * dt;
    }
  Table grid_t;
  grid_t.add("c", cc);
  grid_t.add("t", tt);
  grid_t.add("x1", s.x1);
  grid_t.add("x2", s.x2);
  grid_t.add("x3", s.x3);
  grid_t.add("rho", s.rho);
  grid_t.add("g_c", s.gc);
  grid_t.add("g_t", s.gt);

  // line extract across c at fixed t (nearest grid time to 0.2)
  long k_ext = std::lround(0.2 / dt);
  if (k_ext > kmax) k_ext = kmax;
  if (k_ext < 0) k_ext = 0;
  Table ext_t;
  {
    std::vector<double> c(std::size_t(nj), 0.0), tv(std::size_t(nj), 0.0), r(std::size_t(nj), 0.0),
        g1(std::size_t(nj), 0.0), g2(std::size_t(nj), 0.0), f1(std::size_t(nj), 0.0), f2(std::size_t(nj), 0.0);
    for (long j = 0; j < nj; ++j) {
      std::size_t i = s.idx(j, k_ext);
      c[std::size_t(j)] = cgrid[std::size_t(j)];
      tv[std::size_t(j)] = double(k_ext) * dt;
      r[std::size_t(j)] = s.rho[i];
      g1[std::size_t(j)] = s.gc[i];
      g2[std::size_t(j)] = s.gt[i];
      f1[std::size_t(j)] = s.gc_fd(j, k_ext);
      f2[std::size_t(j)] = s.gt_fd(j, k_ext);
    }
    ext_t.add("c", c).add("t", tv).add("rho", r).add("g_c", g1).add("g_t", g2);
    ext_t.add("g_c_fd", f1).add("g_t_fd", f2);
  }

  // line extract across t at fixed c (nearest grid value to -2.5)
  long j_ext = 0;
  for (long j = 1; j < nj; ++j)
    if (std::abs(cgrid[std::size_t(j)] + 2.5) < std::abs(cgrid[std::size_t(j_ext)] + 2.5))
      j_ext = j;
  Table ext_c;
  {
    const long nk = kmax + 1;
    std::vector<double> tv(std::size_t(nk), 0.0), c(std::size_t(nk), 0.0), r(std::size_t(nk), 0.0),
        g1(std::size_t(nk), 0.0), g2(std::size_t(nk), 0.0), f1(std::size_t(nk), 0.0), f2(std::size_t(nk), 0.0);
    for (long k = 0; k <= kmax; ++k) {
      std::size_t i = s.idx(j_ext, k);
      tv[std::size_t(k)] = double(k) * dt;
      c[std::size_t(k)] = cgrid[std::size_t(j_ext)];
      r[std::size_t(k)] = s.rho[i];
      g1[std::size_t(k)] = s.gc[i];
      g2[std::size_t(k)] = s.gt[i];
      f1[std::size_t(k)] = s.gc_fd(j_ext, k);
      f2[std::size_t(k)] = s.gt_fd(j_ext, k);
    }
    ext_c.add("t", tv).add("c", c).add("rho", r).add("g_c", g1).add("g_t", g2);
    ext_c.add("g_c_fd", f1).add("g_t_fd", f2);
  }

  Json cfg;
  cfg["command"] = "lorenz-surface";
  cfg["dt"] = dt;
  cfg["steps"] = kmax;
  cfg["grid"] = o.grid;
  cfg["c_min"] = cgrid.front();
  cfg["c_max"] = cgrid.back();
  cfg["extract_t"] = double(k_ext) * dt;
  cfg["extract_c"] = cgrid[std::size_t(j_ext)];
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  ensure_out_dir(o.out);
  write_table(grid_t, o.out, "lorenz_surface", o.format, cfg);
  write_table(ext_t, o.out, "lorenz_extract_t", o.format, cfg);
  write_table(ext_c, o.out, "lorenz_extract_c", o.format, cfg);
  std::printf("lorenz-surface: %ld x %ld grid, extracts at t=%.3f and c=%.3f -> %s\n", nj,
              kmax + 1, double(k_ext) * dt, cgrid[std::size_t(j_ext)], o.out.c_str());
}

// --- lorenz-recursion -------------------------------------------------------
// Pushes the initial-line jets forward step by step and reports the curve
// density gradient at the requested depths, with an FD check differencing
// log rho over c. For these 1-D jets rho = 1/|e|, so dividing the xi
// derivative by |e| is the same as multiplying by rho.
void cmd_lorenz_recursion(const Opts& o) {
  const double dt = o.dt > 0.0 ? o.dt : 0.002;
  const long kmax = o.steps > 0 ? o.steps : 200;
  Vec cgrid = make_cgrid(o.grid);
  const long nj = long(cgrid.size());
  const double dc = cgrid[1] - cgrid[0];

  auto sys = lorenz63();
  DiscreteMap phi = from_rk2(sys, dt);
  CurveEvolution ev = evolve_curve(phi, lorenz_initial_line(cgrid), kmax);

  std::vector<long> ks;
  for (long k : {kmax / 4, kmax / 2, kmax})
    if (k >= 1 && (ks.empty() || ks.back() != k)) ks.push_back(k);

  std::vector<double> kcol, ccol, gcol, fcol;
  for (long k : ks) {
    const auto& g = ev.g[std::size_t(k)];
    const auto& rho = ev.rho[std::size_t(k)];
    for (long j = 0; j < nj; ++j) {
      kcol.push_back(double(k));
      ccol.push_back(cgrid[std::size_t(j)]);
      gcol.push_back(g[std::size_t(j)]);
      if (j == 0 || j == nj - 1) {
        fcol.push_back(kNan);
      } else {
        const double lp = std::log(rho[std::size_t(j + 1)]);
        const double lm = std::log(rho[std::size_t(j - 1)]);
        fcol.push_back((lp - lm) / (2.0 * dc) * rho[std::size_t(j)]);
      }
    }
  }

  Table t;
  t.add("k", kcol, true);
  t.add("c", ccol);
  t.add("g_recursive", gcol);
  t.add("g_fd", fcol);

  Json cfg;
  cfg["command"] = "lorenz-recursion";
  cfg["dt"] = dt;
  cfg["steps"] = kmax;
  cfg["grid"] = o.grid;
  cfg["k_values"] = ks;
  cfg["c_min"] = cgrid.front();
  cfg["c_max"] = cgrid.back();
  cfg["format"] = o.format;
  cfg["out"] = o.out;
  ensure_out_dir(o.out);
  write_table(t, o.out, "lorenz_recursion", o.format, cfg);
  std::printf("lorenz-recursion: k = {");
  for (std::size_t i = 0; i < ks.size(); ++i) std::printf("%s%ld", i ? ", " : "", ks[i]);
  std::printf("} over %ld c values -> %s/lorenz_recursion.%s\n", nj, o.out.c_str(),
              o.format.c_str());
}

// --- selftest ----------------------------------------------------------------
struct CheckRow {
  std::string name;
  double measure = 0.0;
  double tol = 0.0;
  bool pass = false;
};

void check(std::vector<CheckRow>& rows, const std::string& name, double measure, double tol) {
  rows.push_back({name, measure, tol, measure <= tol});
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

int cmd_selftest() {
  std::vector<CheckRow> rows;

  {
    AffineChart c(1.0, 3.5);
    DensityEval ev = density_line(c.jet({0.25}));
    check(rows, "affine chart rho = 1/(b-a)", std::abs(ev.rho - 1.0 / 2.5), 0.0);
    check(rows, "affine chart g = 0", std::abs(ev.g[0]), 0.0);
  }
  {
    CircleChart c(1.7);
    DensityEval ev = density_curve(c.jet({0.3}));
    check(rows, "circle chart rho = 1/(2 pi r)", rel(ev.rho, 1.0 / (2.0 * M_PI * 1.7)), 1e-14);
    check(rows, "circle chart g = 0", std::abs(ev.g[0]), 1e-12);
  }
  {
    FlatChart unit({1.0, 1.0});
    DensityEval ev = density_general(unit.jet({0.4, 0.7}));
    check(rows, "flat patch rho = 1", std::abs(ev.rho - 1.0), 0.0);
    check(rows, "flat patch g = (0,0)", std::hypot(ev.g[0], ev.g[1]), 0.0);
    FlatChart scaled({2.0, 3.0});
    DensityEval es = density_general(scaled.jet({0.4, 0.7}));
    check(rows, "scaled flat rho = 1/6", rel(es.rho, 1.0 / 6.0), 1e-14);
  }
  {
    // m = 1 reduction: the general QR path and the closed curve formula
    ExpChart c;
    ChartJet j = c.jet({0.8});
    DensityEval g1 = density_general(j), g2 = density_curve(j);
    double dev = std::max(rel(g1.rho, g2.rho), std::abs(g1.g[0] - g2.g[0]));
    check(rows, "general vs curve formula (m=1)", dev, 1e-12);
  }
  {
    // reparameterization: densities transform by the Jacobian factor, g is
    // invariant at matching points
    auto base = std::make_shared<ParaboloidChart>();
    Vec alpha{2.0, 0.5}, beta{0.1, 0.2};
    ReparamChart re(base, alpha, beta);
    Vec xi{0.15, 0.3};
    Vec mapped{alpha[0] * xi[0] + beta[0], alpha[1] * xi[1] + beta[1]};
    DensityEval eb = density_general(base->jet(mapped));
    DensityEval er = density_general(re.jet(xi));
    double dev = rel(er.rho, eb.rho / (alpha[0] * alpha[1]));
    for (int i = 0; i < 2; ++i) dev = std::max(dev, std::abs(er.g[std::size_t(i)] - eb.g[std::size_t(i)]));
    check(rows, "linear reparameterization invariance", dev, 1e-10);
  }
  {
    // FD oracle on a curved patch: g along e_0 vs centered difference of
    // log rho along xi_0 divided by |e_0|
    ParaboloidChart c;
    Vec xi{0.3, -0.2};
    const double h = 1e-4;
    ChartJet j = c.jet(xi);
    DensityEval ev = density_general(j);
    Vec xp = xi, xm = xi;
    xp[0] += h;
    xm[0] -= h;
    double lp = std::log(density_general(c.jet(xp)).rho);
    double lm = std::log(density_general(c.jet(xm)).rho);
    double fd = (lp - lm) / (2.0 * h) / norm(j.e[0]);
    check(rows, "density gradient vs FD of log rho", std::abs(ev.g[0] - fd), 1e-6);
  }
  {
    // one pushforward step agrees with the directly assembled surface jet
    auto sys = lorenz63();
    const double dt = 0.002;
    JetState st{0, lorenz_initial_line({-2.5}).front()};
    JetState pushed = push_jet(from_rk2(sys, dt), st);
    ChartJet direct = jet_ode_surface(sys, -2.5, dt, dt);
    double dev = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      dev = std::max(dev, std::abs(pushed.jet.x[i] - direct.x[i]));
      dev = std::max(dev, std::abs(pushed.jet.e[0][i] - direct.e[0][i]));
      dev = std::max(dev, std::abs(pushed.jet.a(0, 0)[i] - direct.a(0, 0)[i]));
    }
    check(rows, "pushforward step matches surface march", dev, 0.0);
  }
  {
    // trapezoid integrates a linear function exactly
    auto lin = [](double x) { return 3.0 * x + 1.0; };
    double got = trapezoid_fn(lin, -1.0, 2.0, 300);
    check(rows, "trapezoid linear exactness", rel(got, 7.5), 1e-12);
  }

  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    std::printf("%-42s %s  (measure %.3e, tol %.3e)\n", r.name.c_str(),
                r.pass ? "ok  " : "FAIL", r.measure, r.tol);
  }
  std::printf("selftest: %zu checks, %s\n", rows.size(), all ? "all passed" : "FAILURES");
  return all ? 0 : 1;
}

int dispatch(const std::string& sub, const Opts& o) {
  if (sub == "vdp-line") {
    cmd_vdp_line(o);
  } else if (sub == "vdp-loop") {
    cmd_vdp_loop(o);
  } else if (sub == "mc-convergence") {
    cmd_mc_convergence(o);
  } else if (sub == "lorenz-surface") {
    cmd_lorenz_surface(o);
  } else if (sub == "lorenz-recursion") {
    cmd_lorenz_recursion(o);
  } else if (sub == "selftest") {
    return cmd_selftest();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density and density-gradient experiments on chart-parameterized manifolds"};
  app.require_subcommand(1);

  Opts o;
  auto add_common = [&](CLI::App* sub, bool with_seed = false) {
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    if (with_seed)
      sub->add_option("--seed", o.seed,
                      "0 = deterministic equispaced sampling, > 0 seeds the PRNG")
          ->capture_default_str();
  };

  auto* line = app.add_subcommand("vdp-line", "half-period chart of the slow coordinate");
  add_common(line);
  line->add_option("--n", o.n, "sample count (default 38151)");
  line->add_option("--dt", o.dt, "period detection time step (default 1e-4)")
      ->check(CLI::PositiveNumber);

  auto* loop = app.add_subcommand("vdp-loop", "full periodic orbit, direct vs FD gradient");
  add_common(loop);
  loop->add_option("--dt", o.dt, "integrator time step (default 1e-4)")
      ->check(CLI::PositiveNumber);

  auto* mc = app.add_subcommand("mc-convergence",
                                "integration-by-parts Monte Carlo convergence study");
  add_common(mc, true);
  mc->add_option("--n", o.n, "base curve sample count (default 100000)");
  mc->add_option("--k", o.k, "oscillation constant (default runs both 10 and 100000)");

  auto* surf = app.add_subcommand("lorenz-surface", "surface density over the (c, t) chart");
  add_common(surf);
  surf->add_option("--dt", o.dt, "time step (default 0.002)")->check(CLI::PositiveNumber);
  surf->add_option("--grid", o.grid, "c sample count, odd (default 401)");
  surf->add_option("--steps", o.steps, "time steps (default 200)")->check(CLI::PositiveNumber);

  auto* rec = app.add_subcommand("lorenz-recursion", "recursive jet pushforward vs FD");
  add_common(rec);
  rec->add_option("--dt", o.dt, "time step (default 0.002)")->check(CLI::PositiveNumber);
  rec->add_option("--grid", o.grid, "c sample count, odd (default 401)");
  rec->add_option("--steps", o.steps, "deepest k; rows at k/4, k/2, k (default 200)")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("selftest", "run the invariant checks and print a pass/fail table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return dispatch(sub, o);
  } catch (const NonFinite& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 1;
  } catch (const RankDeficient& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 1;
  } catch (const SingularR& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 1;
  } catch (const ZeroTangent& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    // remaining domain errors (grid shape, sample counts, IO) are config problems
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
}
