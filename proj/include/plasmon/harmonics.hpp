#pragma once

// Complex orthonormal spherical harmonics (Condon-Shortley phase), product
// sphere quadrature, and the solid-harmonic derivative matrices.
//
// Within a degree n the harmonics are stacked m = n, n-1, ..., -n.  A row
// vector a of length 2n+1 paired with that stack represents a Y_n-combination,
// and matrices act on the right: d/dx_j [a r^n Y_n] = a * lower(n, j) r^{n-1} Y_{n-1}.

#include <Eigen/Dense>
#include <algorithm>
#include <utility>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "plasmon/errors.hpp"

namespace plasmon {

using cd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr cd kI{0.0, 1.0};

struct HarmonicIndex {
  int n = 0;
  int m = 0;
};

inline int order_index(int n, int m) { return n - m; }
inline int order_of(int n, int idx) { return n - idx; }
inline int stack_size(int n) { return 2 * n + 1; }

// Normalized associated Legendre values including the Condon-Shortley phase,
// P[l][m] for 0 <= m <= l <= L, so that Y_l^m = P[l][m] e^{i m phi}.
inline std::vector<std::vector<double>> normalized_legendre(int L, double x) {
  std::vector<std::vector<double>> p(L + 1);
  for (int l = 0; l <= L; ++l) p[l].assign(l + 1, 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  p[0][0] = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= L; ++m)
    p[m][m] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[m - 1][m - 1];
  for (int m = 0; m < L; ++m) p[m + 1][m] = std::sqrt(2.0 * m + 3.0) * x * p[m][m];
  for (int m = 0; m <= L; ++m) {
    for (int l = m + 2; l <= L; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
    }
  }
  return p;
}

inline void check_unit(const Vec3& d) {
  if (std::abs(d.norm() - 1.0) > 1e-12)
    fail(ErrorKind::invalid_argument, "direction must have unit norm");
}

// All stacked vectors Y_0 .. Y_L at a unit direction.
inline std::vector<CVec> eval_Y_all(int L, const Vec3& d) {
  const auto p = normalized_legendre(L, std::clamp(d.z(), -1.0, 1.0));
  const double s = std::hypot(d.x(), d.y());
  const cd e = s > 0 ? cd(d.x() / s, d.y() / s) : cd(1.0, 0.0);
  std::vector<cd> ep(L + 1);
  ep[0] = 1.0;
  for (int m = 1; m <= L; ++m) ep[m] = ep[m - 1] * e;
  std::vector<CVec> out(L + 1);
  for (int l = 0; l <= L; ++l) {
    out[l].resize(2 * l + 1);
    for (int m = 0; m <= l; ++m) {
      const cd y = p[l][m] * ep[m];
      out[l][order_index(l, m)] = y;
      if (m > 0) out[l][order_index(l, -m)] = ((m % 2) ? -1.0 : 1.0) * std::conj(y);
    }
  }
  return out;
}

inline CVec eval_Y_vector(int n, const Vec3& d) { return eval_Y_all(n, d)[n]; }

inline cd eval_Y(const HarmonicIndex& idx, const Vec3& d) {
  if (idx.n < 0 || std::abs(idx.m) > idx.n)
    fail(ErrorKind::invalid_index, "harmonic order out of range");
  check_unit(d);
  return eval_Y_vector(idx.n, d)[order_index(idx.n, idx.m)];
}

// conj(a . Y_n) = sigma(a) . Y_n
inline CMat sigma_conjugate(const CMat& G) {
  const int n = (int(G.cols()) - 1) / 2;
  CMat out(G.rows(), G.cols());
  for (int m = -n; m <= n; ++m) {
    const double sgn = (std::abs(m) % 2) ? -1.0 : 1.0;
    out.col(order_index(n, -m)) = sgn * G.col(order_index(n, m)).conjugate();
  }
  return out;
}

// ---------------------------------------------------------------- quadrature

struct GaussRule {
  std::vector<double> x, w;
};

namespace detail {
// Returns (P_n(z), P_{n-1}(z)).
inline std::pair<double, double> legendre_pair(int n, double z) {
  double p0 = 1.0, p1 = z;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}
}  // namespace detail

inline GaussRule gauss_legendre(int n) {
  if (n < 1) fail(ErrorKind::invalid_argument, "Gauss rule needs at least one node");
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, pm] = detail::legendre_pair(n, z);
      const double dz = p / (n * (z * p - pm) / (z * z - 1.0));
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const auto [p, pm] = detail::legendre_pair(n, z);
    const double dp = n * (z * p - pm) / (z * z - 1.0);
    g.x[i] = z;
    g.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

struct SphereQuadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  int exactness = 0;
  std::size_t size() const { return nodes.size(); }
};

inline SphereQuadrature build_quadrature(int exactness) {
  if (exactness < 2) fail(ErrorKind::invalid_argument, "quadrature exactness must be >= 2");
  const int nt = exactness / 2 + 1;
  const int np = exactness + 1;
  const GaussRule g = gauss_legendre(nt);
  SphereQuadrature q;
  q.exactness = exactness;
  for (int i = 0; i < nt; ++i) {
    const double ct = g.x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int k = 0; k < np; ++k) {
      const double ph = 2.0 * kPi * k / np;
      q.nodes.emplace_back(st * std::cos(ph), st * std::sin(ph), ct);
      q.weights.push_back(g.w[i] * 2.0 * kPi / np);
    }
  }
  return q;
}

// Project samples f(node) (rows components) onto Y_l, l = 0..L.
// Returns per-degree coefficient matrices rows x (2l+1).
inline std::vector<CMat> project(const SphereQuadrature& q, const std::vector<CVec>& samples,
                                 int L) {
  const int rows = samples.empty() ? 0 : int(samples[0].size());
  std::vector<CMat> out(L + 1);
  for (int l = 0; l <= L; ++l) out[l] = CMat::Zero(rows, 2 * l + 1);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const auto Y = eval_Y_all(L, q.nodes[k]);
    for (int l = 0; l <= L; ++l)
      out[l] += q.weights[k] * samples[k] * Y[l].conjugate().transpose();
  }
  return out;
}

// ------------------------------------------------------- derivative matrices

namespace detail {
inline CMat combine_xyz(const CMat& dp, const CMat& dm, const CMat& dz, int j) {
  if (j == 0) return 0.5 * (dp + dm);
  if (j == 1) return cd(0.0, -0.5) * (dp - dm);
  return dz;
}
}  // namespace detail

// d/dx_j [r^n Y_n] = lower(n, j) r^{n-1} Y_{n-1};  (2n+1) x (2n-1).
inline CMat lower_matrix(int n, int j) {
  if (n < 0 || j < 0 || j > 2) fail(ErrorKind::range, "lower_matrix index out of range");
  const int rows = 2 * n + 1, cols = std::max(0, 2 * n - 1);
  CMat dp = CMat::Zero(rows, cols), dm = dp, dz = dp;
  if (n == 0) return dz;
  const double f = (2.0 * n + 1.0) / (2.0 * n - 1.0);
  for (int m = -n; m <= n; ++m) {
    const int r = order_index(n, m);
    if (std::abs(m) <= n - 1) dz(r, order_index(n - 1, m)) = std::sqrt(f * (n - m) * (n + m));
    if (std::abs(m + 1) <= n - 1)
      dp(r, order_index(n - 1, m + 1)) = std::sqrt(f * (n - m) * (n - m - 1));
    if (std::abs(m - 1) <= n - 1)
      dm(r, order_index(n - 1, m - 1)) = -std::sqrt(f * (n + m) * (n + m - 1));
  }
  return detail::combine_xyz(dp, dm, dz, j);
}

// d/dx_j [r^{-n-1} Y_n] = raise(n, j) r^{-n-2} Y_{n+1};  (2n+1) x (2n+3).
inline CMat raise_matrix(int n, int j) {
  if (n < 0 || j < 0 || j > 2) fail(ErrorKind::range, "raise_matrix index out of range");
  const int rows = 2 * n + 1, cols = 2 * n + 3;
  CMat dp = CMat::Zero(rows, cols), dm = dp, dz = dp;
  const double f = (2.0 * n + 1.0) / (2.0 * n + 3.0);
  for (int m = -n; m <= n; ++m) {
    const int r = order_index(n, m);
    dz(r, order_index(n + 1, m)) = -std::sqrt(f * (n + 1 - m) * (n + 1 + m));
    dp(r, order_index(n + 1, m + 1)) = std::sqrt(f * (n + m + 1) * (n + m + 2));
    dm(r, order_index(n + 1, m - 1)) = -std::sqrt(f * (n - m + 1) * (n - m + 2));
  }
  return detail::combine_xyz(dp, dm, dz, j);
}

struct DerivativeTable {
  int n_max = 0;
  // lower[n][j] for 1 <= n <= n_max, raise[n][j] for 0 <= n <= n_max.
  std::vector<std::array<CMat, 3>> lower, raise;

  const CMat& lo(int n, int j) const {
    if (n < 1 || n > n_max) fail(ErrorKind::range, "degree outside derivative table");
    return lower[n][j];
  }
  const CMat& hi(int n, int j) const {
    if (n < 0 || n > n_max) fail(ErrorKind::range, "degree outside derivative table");
    return raise[n][j];
  }
};

inline DerivativeTable build_derivative_tables(int n_max) {
  if (n_max < 1) fail(ErrorKind::invalid_argument, "n_max must be >= 1");
  DerivativeTable t;
  t.n_max = n_max;
  t.lower.resize(n_max + 1);
  t.raise.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n)
    for (int j = 0; j < 3; ++j) {
      t.lower[n][j] = lower_matrix(n, j);
      t.raise[n][j] = raise_matrix(n, j);
    }
  return t;
}

// x_hat_j Y_l = xhat_down(l,j) Y_{l-1} + xhat_up(l,j) Y_{l+1}
inline CMat xhat_down(int l, int j) { return lower_matrix(l, j) / (2.0 * l + 1.0); }
inline CMat xhat_up(int l, int j) { return -raise_matrix(l, j) / (2.0 * l + 1.0); }

struct SMatrixSet {
  int n = 0;
  CMat s3, s4, s5, s6;
};

inline SMatrixSet build_s_matrices(int n, const DerivativeTable& t) {
  if (n < 2 || n > t.n_max - 1) fail(ErrorKind::range, "s-matrix degree outside table range");
  SMatrixSet s;
  s.n = n;
  s.s3 = CMat::Zero(2 * n + 3, 2 * n - 1);
  s.s4 = CMat::Zero(2 * n - 1, 2 * n - 1);
  s.s5 = CMat::Zero(2 * n - 1, 2 * n + 3);
  s.s6 = CMat::Zero(2 * n + 3, 2 * n + 3);
  for (int j = 0; j < 3; ++j) {
    s.s3 += t.lo(n + 1, j) * t.lo(n, j);
    s.s4 += t.hi(n - 1, j) * t.lo(n, j);
    s.s5 += t.hi(n - 1, j) * t.hi(n, j);
    s.s6 += t.lo(n + 1, j) * t.hi(n, j);
  }
  return s;
}

// Real-valued orthonormal basis of the order space of degree n, expressed as
// stacked coefficient vectors: cos-type, sin-type for m > 0 and m = 0.
inline std::vector<CVec> real_harmonic_basis(int n) {
  std::vector<CVec> out;
  const double r2 = std::sqrt(0.5);
  {
    CVec a = CVec::Zero(2 * n + 1);
    a[order_index(n, 0)] = 1.0;
    out.push_back(a);
  }
  for (int m = 1; m <= n; ++m) {
    const double sgn = (m % 2) ? -1.0 : 1.0;
    CVec c = CVec::Zero(2 * n + 1), s = CVec::Zero(2 * n + 1);
    c[order_index(n, m)] = r2;
    c[order_index(n, -m)] = sgn * r2;
    s[order_index(n, m)] = cd(0.0, r2);
    s[order_index(n, -m)] = cd(0.0, -sgn * r2);
    out.push_back(c);
    out.push_back(s);
  }
  return out;
}

}  // namespace plasmon
