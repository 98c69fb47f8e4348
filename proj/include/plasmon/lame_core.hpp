#pragma once

// Solid-harmonic solutions of the isotropic Lame system
//   mu Lap u + (lambda + mu) grad div u = 0
// and their displacement / traction data on spheres.

#include "plasmon/mode_field.hpp"

namespace plasmon {

struct LameParams {
  double lambda = 1.0;
  double mu = 1.0;

  bool convex() const { return mu > 0.0 && 3.0 * lambda + 2.0 * mu > 0.0; }
  void validate() const {
    if (!std::isfinite(lambda) || !std::isfinite(mu) || !convex())
      fail(ErrorKind::validation, "Lame parameters violate strong convexity (mu > 0, 3 lambda + 2 mu > 0)");
  }
};

struct ModeConstants {
  int n = 0;
  double k = 0, M = 0, M_next = 0, E = 0, s1 = 0, s2 = 0, l = 0, m = 0;
};

namespace detail {
inline double checked_ratio(double num, double den) {
  if (!std::isfinite(den) || std::abs(den) < 1e-300)
    fail(ErrorKind::invariant_violation, "vanishing denominator in mode constant");
  return num / den;
}
// alpha in u = h + alpha r^2 grad(div h) for exterior degree n
inline double k_const(const LameParams& p, int n) {
  return detail::checked_ratio(p.lambda + p.mu, 2.0 * ((n + 2) * p.lambda + (3 * n + 5) * p.mu));
}
inline double M_const(const LameParams& p, int n) {
  return detail::checked_ratio(p.lambda + p.mu, 2.0 * ((n - 1) * p.lambda + (3 * n - 2) * p.mu));
}
}  // namespace detail

inline ModeConstants mode_constants(const LameParams& p, int n) {
  if (n < 1) fail(ErrorKind::unsupported_degree, "mode constants need n >= 1", n);
  p.validate();
  const double lam = p.lambda, mu = p.mu;
  ModeConstants c;
  c.n = n;
  c.k = detail::k_const(p, n);
  c.M = detail::M_const(p, n);
  c.M_next = detail::M_const(p, n + 2);
  c.E = detail::checked_ratio((n + 2) * lam - (n - 3) * mu, (2.0 * n + 1) * ((n - 1) * lam + (3 * n - 2) * mu));
  c.s1 = detail::checked_ratio(c.E, n - 1 + n * (2.0 * n + 1) * c.E);
  c.s2 = 1.0 / (2.0 * n * (2.0 * n + 1));
  c.l = (2 * lam / (lam + mu) + 2.0 * (-n - 2) / (2 * n + 3)) * c.k - 2.0 / ((2 * n + 3) * (2.0 * n + 1));
  const double k_nm2 = detail::k_const(p, n - 2);
  c.m = (-2 * lam / (lam + mu) - 4.0 * n * (n - 1) / (2 * n - 1)) * k_nm2 - 1.0 / (2 * n - 1);
  return c;
}

inline int degree_of(const CMat& G) {
  if (G.rows() != 3 || G.cols() % 2 == 0)
    fail(ErrorKind::invalid_argument, "coefficient matrix must be 3 x (2n+1)");
  return int(G.cols() - 1) / 2;
}

// t1 = sum_j G_j raise(n, j): row coefficients of div(G r^{-n-1} Y_n) on r^{-n-2} Y_{n+1}.
inline CMat t1_row(const CMat& G) {
  const int n = degree_of(G);
  CMat t = CMat::Zero(1, 2 * n + 3);
  for (int j = 0; j < 3; ++j) t += G.row(j) * raise_matrix(n, j);
  return t;
}

// t3 = sum_j G_j lower(n, j): row coefficients of div(G r^n Y_n) on r^{n-1} Y_{n-1}.
inline CMat t3_row(const CMat& G) {
  const int n = degree_of(G);
  if (n == 0) return CMat::Zero(1, 0);
  CMat t = CMat::Zero(1, 2 * n - 1);
  for (int j = 0; j < 3; ++j) t += G.row(j) * lower_matrix(n, j);
  return t;
}

// Rows t raise(d, j), j = 1..3, for a degree-d row vector t.
inline CMat raise_rows(const CMat& t) {
  const int d = int(t.cols() - 1) / 2;
  CMat T(3, 2 * d + 3);
  for (int j = 0; j < 3; ++j) T.row(j) = t * raise_matrix(d, j);
  return T;
}

inline CMat lower_rows(const CMat& t) {
  const int d = int(t.cols() - 1) / 2;
  CMat T = CMat::Zero(3, std::max(0, 2 * d - 1));
  if (d == 0) return T;
  for (int j = 0; j < 3; ++j) T.row(j) = t * lower_matrix(d, j);
  return T;
}

// G (r/rho)^{-n-1} Y_n + k_n T1 (r/rho)^{-n-1} Y_{n+2}
inline ModeField exterior_mode(const CMat& G, const LameParams& p, double rho = 1.0) {
  const int n = degree_of(G);
  ModeField u;
  u.add(n, -n - 1, rho, G);
  u.add(n + 2, -n - 1, rho, detail::k_const(p, n) * raise_rows(t1_row(G)));
  return u;
}

// G (r/rho)^n Y_n - M_n T3 (r/rho)^n Y_{n-2}
inline ModeField interior_mode(const CMat& G, const LameParams& p, double rho = 1.0) {
  const int n = degree_of(G);
  ModeField u;
  u.add(n, n, rho, G);
  if (n >= 2) u.add(n - 2, n, rho, -detail::M_const(p, n) * lower_rows(t3_row(G)));
  return u;
}

// Interior field in B_R whose trace on |x| = R is B Y_n.
inline ModeField dirichlet_interior(const CMat& B, double R, const LameParams& p) {
  const int n = degree_of(B);
  ModeField u = interior_mode(B, p, R);
  if (n >= 2) u.add(n - 2, n - 2, R, detail::M_const(p, n) * lower_rows(t3_row(B)));
  return u;
}

// Decaying field outside B_R whose trace on |x| = R is B Y_n.
inline ModeField dirichlet_exterior(const CMat& B, double R, const LameParams& p) {
  const int n = degree_of(B);
  ModeField u = exterior_mode(B, p, R);
  u.add(n + 2, -n - 3, R, -detail::k_const(p, n) * raise_rows(t1_row(B)));
  return u;
}

// boundary[n] holds the degree-n displacement coefficients on |x| = R.
inline std::vector<ModeField> interior_from_displacement(double R, const std::vector<CMat>& boundary,
                                                         const LameParams& p) {
  if (!(R > 0)) fail(ErrorKind::invalid_argument, "radius must be positive");
  std::vector<ModeField> out;
  for (std::size_t n = 0; n < boundary.size(); ++n) {
    if (boundary[n].size() == 0) {
      out.emplace_back();
      continue;
    }
    if (degree_of(boundary[n]) != int(n)) fail(ErrorKind::invalid_argument, "boundary degree mismatch");
    out.push_back(dirichlet_interior(boundary[n], R, p));
  }
  return out;
}

// Closed-form primed traction coefficients of exterior_mode(G) (rho = 1) on |x| = R.
inline SurfaceExpansion exterior_traction_coeffs(const CMat& G, double R, const LameParams& p) {
  const int n = degree_of(G);
  if (n < 1) fail(ErrorKind::unsupported_degree, "exterior traction needs n >= 1", n);
  const ModeConstants c = mode_constants(p, n);
  const ModeConstants c2 = mode_constants(p, n + 2);
  const CMat t1 = t1_row(G), t3 = t3_row(G);
  const CMat A = -(n + 2.0) * G + c.l * lower_rows(t1) + raise_rows(t3) / (2.0 * n + 1);
  const double f = p.mu / std::pow(R, n + 2);
  SurfaceExpansion s(3);
  s.add(n, f * A);
  s.add(n + 2, f * c2.m * raise_rows(t1));
  return s;
}

// Closed-form interior displacement trace for single-degree traction data A'
// on |x| = R (n >= 2).
inline CMat interior_trace_from_traction_closed_form(const CMat& Ap, double R, const LameParams& p) {
  const int n = degree_of(Ap);
  if (n < 2) fail(ErrorKind::unsupported_degree, "traction inversion needs n >= 2", n);
  const ModeConstants c = mode_constants(p, n);
  CMat out = Ap + c.s1 * raise_rows(t3_row(Ap)) + c.s2 * lower_rows(t1_row(Ap));
  return (R / ((n - 1) * p.mu)) * out;
}

// ------------------------------------------------------------- oracles

namespace detail {
// Five-point central derivative of a vector field along axis j.
template <class F>
CVec central_diff(const F& f, const Vec3& x, int j, double h) {
  Vec3 e = Vec3::Zero();
  e[j] = h;
  return (8.0 * (f(x + e) - f(x - e)) - (f(x + 2 * e) - f(x - 2 * e))) / (12.0 * h);
}
}  // namespace detail

// Jacobian J(i, j) = d u_i / d x_j by central differences, h = 1e-5 max(1, |x|).
template <class F>
Eigen::Matrix3cd fd_jacobian(const F& f, const Vec3& x) {
  const double h = 1e-5 * std::max(1.0, x.norm());
  Eigen::Matrix3cd J;
  for (int j = 0; j < 3; ++j) J.col(j) = detail::central_diff(f, x, j, h);
  return J;
}

inline Eigen::Vector3cd traction_from_jacobian(const Eigen::Matrix3cd& J, const Vec3& nu, cd lambda, cd mu) {
  const cd div = J.trace();
  const Eigen::Vector3cd n = nu.cast<cd>();
  return lambda * div * n + mu * (J + J.transpose()) * n;
}

// Traction on |x| = R by finite differences at quadrature nodes, projected
// on Y_0..Y_L.
template <class F>
SurfaceExpansion numeric_traction_of(const F& f, double R, cd lambda, cd mu, const SphereQuadrature& q, int L) {
  std::vector<CVec> samples;
  samples.reserve(q.size());
  for (const auto& d : q.nodes) samples.push_back(traction_from_jacobian(fd_jacobian(f, R * d), d, lambda, mu));
  const auto proj = project(q, samples, L);
  SurfaceExpansion s(3);
  for (int l = 0; l <= L; ++l) s.add(l, proj[l]);
  return s;
}

inline SurfaceExpansion numeric_traction(const ModeField& u, double R, cd lambda, cd mu, const SphereQuadrature& q,
                                         int L) {
  if (!(R > 0)) fail(ErrorKind::domain, "traction sphere must have positive radius");
  return numeric_traction_of([&](const Vec3& x) { return u.eval(x); }, R, lambda, mu, q, L);
}

inline SurfaceExpansion numeric_traction(const Branch& b, double R, cd lambda, cd mu, const SphereQuadrature& q,
                                         int L) {
  if (R < b.r_in || R > b.r_out) fail(ErrorKind::domain, "sphere lies outside the field's region", R);
  return numeric_traction(b.u, R, lambda, mu, q, L);
}

// Relative finite-difference Lame residual at x:
//   |L u| / ((|lambda| + 2|mu|) max(max|D^2 u|, |u| / |x|^2)).
template <class F>
double lame_residual_fd(const F& f, const Vec3& x, cd lambda, cd mu) {
  const double h = 1e-3 * std::max(1.0, x.norm());
  std::array<Eigen::Matrix3cd, 3> H;  // H[i](j, k) = d_j d_k u_i
  for (int j = 0; j < 3; ++j)
    for (int k = j; k < 3; ++k) {
      auto dk = [&](const Vec3& y) { return detail::central_diff(f, y, k, h); };
      const CVec d = detail::central_diff(dk, x, j, h);
      for (int i = 0; i < 3; ++i) H[i](j, k) = H[i](k, j) = d[i];
    }
  Eigen::Vector3cd lap, gdiv;
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) {
    lap[i] = H[i].trace();
    gdiv[i] = H[0](i, 0) + H[1](i, 1) + H[2](i, 2);
    scale = std::max(scale, H[i].cwiseAbs().maxCoeff());
  }
  scale = std::max(scale, f(x).norm() / x.squaredNorm());
  const Eigen::Vector3cd r = mu * lap + (lambda + mu) * gdiv;
  const double denom = (std::abs(lambda) + 2 * std::abs(mu)) * scale;
  return denom > 0 ? r.norm() / denom : r.norm();
}

inline double lame_residual_fd(const ModeField& u, const Vec3& x, cd lambda, cd mu) {
  return lame_residual_fd([&](const Vec3& y) { return u.eval(y); }, x, lambda, mu);
}

// --------------------------------------------------------- traction solve

// Interior fields in B_R with traction traction[n] Y_n on |x| = R, one field
// per degree.  Each degree is inverted in closed form; the Dirichlet
// extension of the resulting trace has single-degree traction.
inline std::vector<ModeField> interior_from_traction(double R, const std::vector<CMat>& traction,
                                                     const LameParams& p) {
  if (!(R > 0)) fail(ErrorKind::invalid_argument, "radius must be positive");
  p.validate();
  std::vector<ModeField> out(traction.size());
  for (std::size_t n = 0; n < traction.size(); ++n) {
    if (traction[n].size() == 0) continue;
    if (degree_of(traction[n]) != int(n)) fail(ErrorKind::invalid_argument, "traction degree mismatch");
    if (n < 2) {
      if (traction[n].cwiseAbs().maxCoeff() > 0)
        fail(ErrorKind::unsupported_degree, "traction data of degree below 2 is not supported", double(n));
      continue;
    }
    out[n] = dirichlet_interior(interior_trace_from_traction_closed_form(traction[n], R, p), R, p);
  }
  return out;
}

}  // namespace plasmon
