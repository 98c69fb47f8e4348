#pragma once

// Plasmon constants, the matching matrix H(c) and its kernels, and perfect
// plasmon waves on a shell of radius R.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <random>

#include "plasmon/lame_core.hpp"

namespace plasmon {

struct PlasmonConstants {
  int n = 0;
  double zeta1 = 0, zeta2 = 0, zeta3 = 0;
  double operator[](int family) const {
    if (family == 1) return zeta1;
    if (family == 2) return zeta2;
    if (family == 3) return zeta3;
    fail(ErrorKind::invalid_argument, "family must be 1, 2 or 3", family);
  }
};

// zeta2 here is the root of det H; see README for the relation to the
// printed closed form.
inline PlasmonConstants plasmon_constants(const LameParams& p, int n) {
  if (n < 2) fail(ErrorKind::unsupported_degree, "plasmon constants need n >= 2", n);
  p.validate();
  const double lam = p.lambda, mu = p.mu;
  PlasmonConstants z;
  z.n = n;
  z.zeta1 = -double(n + 2) / (n - 1);
  z.zeta2 = -(2.0 * n + 2) * ((n - 1) * lam + (3.0 * n - 2) * mu) /
            ((2.0 * n * n + 1) * lam + (2.0 + 2.0 * n * (n - 1)) * mu);
  z.zeta3 = -((2.0 * n * n + 4 * n + 3) * lam + (2.0 * n * n + 6 * n + 6) * mu) /
            (2.0 * n * ((n + 2) * lam + (3.0 * n + 5) * mu));
  return z;
}

inline int family_multiplicity(int n, int family) {
  if (family == 1) return 2 * n + 1;
  if (family == 2) return 2 * n - 1;
  if (family == 3) return 2 * n + 3;
  fail(ErrorKind::invalid_argument, "family must be 1, 2 or 3", family);
}

// ------------------------------------------------------------ vec(G) maps

// Column-major flattening, index = column * 3 + row.
inline CVec vec_of(const CMat& G) { return Eigen::Map<const CVec>(G.data(), G.size()); }
inline CMat mat_of(const CVec& v, int n) { return Eigen::Map<const CMat>(v.data(), 3, 2 * n + 1); }

inline cd frobenius(const CMat& A, const CMat& B) { return (A.array() * B.conjugate().array()).sum(); }

struct PlasmonEigenProblem {
  int n = 0;
  double c = 0;
  LameParams params;
  CMat A;  // interior Dirichlet-to-traction map on degree n (R = 1)
  CMat B;  // exterior Dirichlet-to-traction map on degree n (R = 1)
  CMat H;  // c A - B acting on vec(G)
  Eigen::VectorXd singular_values;  // descending
  CMat right_vectors;
  double norm() const { return singular_values.size() ? singular_values[0] : 0.0; }
};

namespace detail {
inline std::pair<CMat, CMat> dtn_maps(int n, const LameParams& p) {
  const int K = 3 * (2 * n + 1);
  CMat A(K, K), B(K, K);
  for (int k = 0; k < K; ++k) {
    CMat E = CMat::Zero(3, 2 * n + 1);
    E(k % 3, k / 3) = 1.0;
    A.col(k) = vec_of(analytic_traction(dirichlet_interior(E, 1.0, p), 1.0, p.lambda, p.mu).at(n));
    B.col(k) = vec_of(analytic_traction(dirichlet_exterior(E, 1.0, p), 1.0, p.lambda, p.mu).at(n));
  }
  return {A, B};
}
}  // namespace detail

inline PlasmonEigenProblem assemble_H(int n, const LameParams& p, double c) {
  if (n < 2) fail(ErrorKind::unsupported_degree, "H needs n >= 2", n);
  if (c == 0.0) fail(ErrorKind::invalid_multiplier, "shell multiplier must be nonzero");
  p.validate();
  PlasmonEigenProblem P;
  P.n = n;
  P.c = c;
  P.params = p;
  std::tie(P.A, P.B) = detail::dtn_maps(n, p);
  P.H = c * P.A - P.B;
  Eigen::JacobiSVD<CMat> svd(P.H, Eigen::ComputeFullV);
  P.singular_values = svd.singularValues();
  P.right_vectors = svd.matrixV();
  return P;
}

inline double sigma_min(const PlasmonEigenProblem& P) {
  return P.singular_values[P.singular_values.size() - 1];
}

// Distinct real generalized eigenvalues c of A g = c^{-1} ... i.e. det(cA - B) = 0.
inline std::vector<double> h_roots_eigen(int n, const LameParams& p) {
  const auto [A, B] = detail::dtn_maps(n, p);
  const CMat M = A.partialPivLu().solve(B);
  Eigen::ComplexEigenSolver<CMat> es(M, false);
  std::vector<double> v;
  for (int i = 0; i < es.eigenvalues().size(); ++i) v.push_back(es.eigenvalues()[i].real());
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || std::abs(x - out.back()) > 1e-7 * std::max(1.0, std::abs(x))) out.push_back(x);
  return out;
}

// Roots of det H(c) on c in [-hi, -lo] located as dips of the minimum
// singular value: log-spaced scan followed by golden-section refinement.
inline std::vector<double> h_roots_scan(int n, const LameParams& p, double lo = 0.01, double hi = 50.0,
                                        int points = 1200) {
  const auto [A, B] = detail::dtn_maps(n, p);
  const double scale = std::max(A.norm(), B.norm());
  auto f = [&](double c) {
    Eigen::JacobiSVD<CMat> svd(c * A - B);
    return svd.singularValues().tail(1)(0) / (scale * std::max(1.0, std::abs(c)));
  };
  std::vector<double> cs(points), fs(points);
  for (int i = 0; i < points; ++i) {
    cs[i] = -lo * std::pow(hi / lo, double(i) / (points - 1));
    fs[i] = f(cs[i]);
  }
  std::vector<double> roots;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 1; i + 1 < points; ++i) {
    if (!(fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1])) continue;
    double a = cs[i + 1], b = cs[i - 1];  // a < b (more negative first)
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-15 * std::abs(a)) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      }
    }
    const double c = 0.5 * (a + b);
    if (f(c) < 1e-6) roots.push_back(c);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// ------------------------------------------------------------ J sectors

// Basis of the J = n+1 (up) and J = n-1 (down) parts of degree-n
// coefficient space: G_j = a raise(n-1, j) and G_j = a lower(n+1, j).
inline CMat sector_basis(int n, int family) {
  const int K = 3 * (2 * n + 1);
  if (family == 2) {
    CMat S(K, 2 * n - 1);
    for (int k = 0; k < 2 * n - 1; ++k) {
      CMat a = CMat::Zero(1, 2 * n - 1);
      a(0, k) = 1.0;
      S.col(k) = vec_of(raise_rows(a));
    }
    return S;
  }
  if (family == 3) {
    CMat S(K, 2 * n + 3);
    for (int k = 0; k < 2 * n + 3; ++k) {
      CMat a = CMat::Zero(1, 2 * n + 3);
      a(0, k) = 1.0;
      S.col(k) = vec_of(lower_rows(a));
    }
    return S;
  }
  if (family == 1) {
    // toroidal: t1 = 0 and t3 = 0
    CMat T(4 * n + 2, K);
    for (int k = 0; k < K; ++k) {
      const CMat G = mat_of(CVec::Unit(K, k), n);
      T.block(0, k, 2 * n + 3, 1) = t1_row(G).transpose();
      T.block(2 * n + 3, k, 2 * n - 1, 1) = t3_row(G).transpose();
    }
    Eigen::JacobiSVD<CMat> svd(T, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(2 * n + 1);
  }
  fail(ErrorKind::invalid_argument, "family must be 1, 2 or 3", family);
}

// ------------------------------------------------------------ kernels

namespace detail {
// Real-field basis of degree-n coefficient space: e_i times real harmonics.
inline std::vector<CVec> real_coefficient_basis(int n) {
  std::vector<CVec> out;
  for (const auto& h : real_harmonic_basis(n))
    for (int i = 0; i < 3; ++i) {
      CMat G = CMat::Zero(3, 2 * n + 1);
      G.row(i) = h.transpose();
      out.push_back(vec_of(G));
    }
  return out;
}

inline CVec sigma_vec(const CVec& v, int n) { return vec_of(sigma_conjugate(mat_of(v, n))); }

// Deterministic orthonormal basis of span(N) made of real-field vectors.
inline std::vector<CMat> real_orthonormal_basis(const CMat& N, int n) {
  std::vector<CVec> cand;
  for (const auto& e : real_coefficient_basis(n)) cand.push_back(N * (N.adjoint() * e));
  std::vector<CVec> basis;
  const int d = int(N.cols());
  while (int(basis.size()) < d) {
    int best = -1;
    double bn = 0.0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const double nn = cand[i].norm();
      if (nn > bn * (1.0 + 1e-12)) {
        bn = nn;
        best = int(i);
      }
    }
    if (best < 0 || bn < 1e-10) fail(ErrorKind::invariant_violation, "real kernel basis construction stalled");
    CVec v = cand[best];
    v = 0.5 * (v + sigma_vec(v, n));
    for (const auto& b : basis) v -= b.dot(v) * b;
    v.normalize();
    basis.push_back(v);
    for (auto& c : cand) c -= v.dot(c) * v;
  }
  std::vector<CMat> out;
  for (const auto& b : basis) out.push_back(mat_of(b, n));
  return out;
}
}  // namespace detail

struct KernelCheck {
  double t1 = 0, t3 = 0;
};

inline KernelCheck t_norms(const CMat& G) { return {t1_row(G).norm(), t3_row(G).norm()}; }

inline bool satisfies_t_conditions(const CMat& G, int family, double tol = 1e-9) {
  const auto t = t_norms(G);
  const bool z1 = t.t1 <= tol, z3 = t.t3 <= tol;
  if (family == 1) return z1 && z3;
  if (family == 2) return z1 && !z3;
  if (family == 3) return !z1 && z3;
  return false;
}

// Orthonormal real-field basis of ker H.  family (1..3) additionally
// enforces the t-conditions; 0 skips that check.
inline std::vector<CMat> plasmon_kernel(const PlasmonEigenProblem& P, int family = 0) {
  const auto& s = P.singular_values;
  const int K = int(s.size());
  int d = 0;
  while (d < K && s[K - 1 - d] <= 1e-9 * P.norm()) ++d;
  if (d == 0) fail(ErrorKind::empty_kernel, "multiplier is not a plasmon constant", sigma_min(P));
  auto basis = detail::real_orthonormal_basis(P.right_vectors.rightCols(d), P.n);
  if (family != 0)
    for (const auto& G : basis)
      if (!satisfies_t_conditions(G, family))
        fail(ErrorKind::validation, "kernel vector violates the family t-conditions");
  return basis;
}

inline std::vector<CMat> plasmon_kernel_family(int n, int family, const LameParams& p) {
  return plasmon_kernel(assemble_H(n, p, plasmon_constants(p, n)[family]), family);
}

// ------------------------------------------------------------ waves

struct PerfectWave {
  int n = 0;
  int family = 0;
  int k = 0;
  CMat G;
  double R = 1.0;
  double c = 0.0;
  PiecewiseField field;  // branch 0: |x| <= R, branch 1: |x| >= R
};

// Interior trace G R^n, i.e. G r^n Y_n plus corrections inside and the
// matching decaying extension outside.
inline PerfectWave perfect_wave(const CMat& G, int family, double R, const LameParams& p, int k = 0) {
  const int n = degree_of(G);
  if (!satisfies_t_conditions(G, family)) fail(ErrorKind::validation, "kernel does not match the requested family");
  PerfectWave w;
  w.n = n;
  w.family = family;
  w.k = k;
  w.G = G;
  w.R = R;
  w.c = plasmon_constants(p, n)[family];
  const CMat B = std::pow(R, n) * G;
  w.field.branches.push_back({0.0, R, dirichlet_interior(B, R, p)});
  w.field.branches.push_back({R, kInf, dirichlet_exterior(B, R, p)});
  return w;
}

struct WaveReport {
  double lame_inside = 0, lame_outside = 0;
  double continuity = 0;
  double transmission = 0;
  double t1 = 0, t3 = 0;
};

inline WaveReport check_perfect_wave(const PerfectWave& w, const LameParams& p, const SphereQuadrature& q,
                                     std::uint64_t seed = 1) {
  WaveReport r;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> uin(0.2, 0.95), uout(1.05, 3.0);
  const auto& in = w.field.branches[0].u;
  const auto& out = w.field.branches[1].u;
  double scale = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
    const CVec a = in.eval(w.R * d), b = out.eval(w.R * d);
    r.continuity = std::max(r.continuity, (a - b).norm());
    scale = std::max(scale, a.norm());
  }
  r.continuity /= std::max(scale, 1e-300);
  for (int i = 0; i < 50; ++i) {
    const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
    r.lame_inside = std::max(r.lame_inside, lame_residual_fd(in, uin(rng) * w.R * d, p.lambda, p.mu));
    r.lame_outside = std::max(r.lame_outside, lame_residual_fd(out, uout(rng) * w.R * d, p.lambda, p.mu));
  }
  const int L = w.n + 4;
  const auto ti = numeric_traction(w.field.branches[0], w.R, p.lambda, p.mu, q, L);
  const auto to = numeric_traction(w.field.branches[1], w.R, p.lambda, p.mu, q, L);
  r.transmission = (w.c * ti - to).max_abs() / std::max(to.max_abs(), 1e-300);
  const auto t = t_norms(w.G);
  r.t1 = t.t1;
  r.t3 = t.t3;
  return r;
}

}  // namespace plasmon
