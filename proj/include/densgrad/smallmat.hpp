// Dense linear algebra for tall thin matrices: thin QR, back substitution,
// metric tensor. Sizes here are tiny (m <= a few), so clarity wins over
// blocking or pivoting.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "densgrad/errors.hpp"

namespace densgrad {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec axpy(double alpha, const Vec& x, const Vec& y) {
  Vec r(y);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * x[i];
  return r;
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec r(x);
  for (double& v : r) v *= alpha;
  return r;
}

// Column-major n x m matrix, n >= m in all QR uses.
struct MatNM {
  int n = 0, m = 0;
  std::vector<double> data;  // data[i + j*n]

  MatNM() = default;
  MatNM(int rows, int cols) : n(rows), m(cols), data(std::size_t(rows) * cols, 0.0) {}

  double& operator()(int i, int j) { return data[std::size_t(i) + std::size_t(j) * n]; }
  double operator()(int i, int j) const { return data[std::size_t(i) + std::size_t(j) * n]; }

  Vec col(int j) const {
    Vec c(n);
    for (int i = 0; i < n; ++i) c[i] = (*this)(i, j);
    return c;
  }
  void set_col(int j, const Vec& c) {
    for (int i = 0; i < n; ++i) (*this)(i, j) = c[i];
  }

  static MatNM from_cols(const std::vector<Vec>& cols) {
    MatNM a(int(cols.empty() ? 0 : cols[0].size()), int(cols.size()));
    for (int j = 0; j < a.m; ++j) a.set_col(j, cols[j]);
    return a;
  }
  static MatNM identity(int n) {
    MatNM a(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }
};

inline Vec matvec(const MatNM& a, const Vec& v) {
  Vec r(a.n, 0.0);
  for (int j = 0; j < a.m; ++j)
    for (int i = 0; i < a.n; ++i) r[i] += a(i, j) * v[j];
  return r;
}

inline MatNM matmul(const MatNM& a, const MatNM& b) {
  MatNM r(a.n, b.m);
  for (int j = 0; j < b.m; ++j)
    for (int k = 0; k < a.m; ++k) {
      const double bkj = b(k, j);
      for (int i = 0; i < a.n; ++i) r(i, j) += a(i, k) * bkj;
    }
  return r;
}

struct QRPair {
  MatNM q;  // n x m, orthonormal columns
  MatNM r;  // m x m, upper triangular, positive diagonal
};

// Householder thin QR with the diagonal of R forced positive, so that
// det R = prod(R_kk) > 0 and no absolute value is needed downstream.
// Throws RankDeficient when a diagonal entry falls below 1e-13 of the
// corresponding input column norm (a collapsed tangent direction).
inline QRPair thin_qr(const MatNM& a) {
  const int n = a.n, m = a.m;
  if (n < m) throw RankDeficient("thin_qr: fewer rows than columns");

  std::vector<double> colnorm(m);
  for (int j = 0; j < m; ++j) colnorm[j] = norm(a.col(j));

  MatNM work = a;                        // reduced in place to R
  std::vector<std::vector<double>> hh;   // Householder vectors
  hh.reserve(m);

  for (int k = 0; k < m; ++k) {
    double s = 0.0;
    for (int i = k; i < n; ++i) s += work(i, k) * work(i, k);
    const double alpha = std::sqrt(s);

    std::vector<double> v(std::size_t(n - k), 0.0);
    const double pivot = work(k, k);
    const double sign = (pivot >= 0.0) ? 1.0 : -1.0;
    v[0] = pivot + sign * alpha;
    for (int i = k + 1; i < n; ++i) v[std::size_t(i - k)] = work(i, k);
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;

    if (vnorm2 > 0.0) {
      for (int j = k; j < m; ++j) {
        double proj = 0.0;
        for (int i = k; i < n; ++i) proj += v[std::size_t(i - k)] * work(i, j);
        const double f = 2.0 * proj / vnorm2;
        for (int i = k; i < n; ++i) work(i, j) -= f * v[std::size_t(i - k)];
      }
    }
    hh.push_back(std::move(v));
  }

  MatNM r(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) r(i, j) = work(i, j);

  // Q = H_1 ... H_m applied to the first m columns of the identity.
  MatNM q(n, m);
  for (int j = 0; j < m; ++j) q(j, j) = 1.0;
  for (int k = m - 1; k >= 0; --k) {
    const std::vector<double>& v = hh[std::size_t(k)];
    double vnorm2 = 0.0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 == 0.0) continue;
    for (int j = 0; j < m; ++j) {
      double proj = 0.0;
      for (int i = k; i < n; ++i) proj += v[std::size_t(i - k)] * q(i, j);
      const double f = 2.0 * proj / vnorm2;
      for (int i = k; i < n; ++i) q(i, j) -= f * v[std::size_t(i - k)];
    }
  }

  for (int k = 0; k < m; ++k) {
    if (!(std::abs(r(k, k)) > 1e-13 * colnorm[k]) || colnorm[k] == 0.0)
      throw RankDeficient("thin_qr: column " + std::to_string(k) +
                          " is linearly dependent or zero");
    if (r(k, k) < 0.0) {
      for (int j = k; j < m; ++j) r(k, j) = -r(k, j);
      for (int i = 0; i < n; ++i) q(i, k) = -q(i, k);
    }
  }
  return {q, r};
}

// Solves R y = b for upper-triangular R.
inline Vec back_substitute(const MatNM& r, const Vec& b) {
  const int m = r.m;
  Vec y(b);
  for (int i = m - 1; i >= 0; --i) {
    if (r(i, i) == 0.0) throw SingularR("back_substitute: zero diagonal at " + std::to_string(i));
    for (int j = i + 1; j < m; ++j) y[std::size_t(i)] -= r(i, j) * y[std::size_t(j)];
    y[std::size_t(i)] /= r(i, i);
  }
  return y;
}

// C = A^T A, the inner-product (metric) matrix of the columns.
inline MatNM metric_tensor(const MatNM& a) {
  MatNM c(a.m, a.m);
  for (int i = 0; i < a.m; ++i)
    for (int j = i; j < a.m; ++j) {
      double s = 0.0;
      for (int k = 0; k < a.n; ++k) s += a(k, i) * a(k, j);
      c(i, j) = s;
      c(j, i) = s;
    }
  return c;
}

}  // namespace densgrad
