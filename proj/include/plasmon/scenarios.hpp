#pragma once

// Resonance schedule, primal and dual witness pairs, and delta sweeps.
//
// Primal pairs (v, w) satisfy  L_A v - L w = f  and bound E from above by
// I(v, w); dual pairs (v, psi) satisfy  L_A psi + delta L v = 0  and bound E
// from below by J(v, psi).  In radial geometry both constraints reduce to
// traction-jump conditions on the interfaces, so every witness here is a
// piecewise Lame field with exactly prescribed jumps.

#include <cmath>
#include <string>

#include "plasmon/energy.hpp"

namespace plasmon {

// -------------------------------------------------------------- schedule

struct ScheduledDegree {
  int n = 2;
  std::string warning;
};

// Smallest n with R^-n < delta, floored at 2.
inline ScheduledDegree schedule_n_delta(double R, double delta) {
  if (!(R > 1) || !std::isfinite(R)) fail(ErrorKind::invalid_argument, "schedule needs R > 1", R);
  if (!(delta > 0) || !std::isfinite(delta)) fail(ErrorKind::invalid_argument, "schedule needs delta > 0", delta);
  ScheduledDegree s;
  if (delta >= 1) {
    s.warning = "delta >= 1: schedule degenerate, using n = 2";
    return s;
  }
  int n = std::max(0, int(std::floor(std::log(1.0 / delta) / std::log(R))));
  while (!(std::pow(R, -n) < delta)) ++n;
  while (n > 0 && std::pow(R, -(n - 1)) < delta) --n;
  s.n = std::max(n, 2);
  return s;
}

// ----------------------------------------------------- radial matching

// Branch coefficients of the fixed-c primal field for a zeta_1 kernel with
// core B_1 and shell B_re: G r^n inside 1, e1 r^n + e2 r^-n-1 on (1, re),
// e3 r^n + e4 r^-n-1 on (re, q), e5 r^-n-1 outside; e6 mu G is its traction
// jump on |x| = q.
struct ECoefficients {
  double e1 = 0, e2 = 0, e3 = 0, e4 = 0, e5 = 0, e6 = 0;
};

inline ECoefficients e_coefficients(int n, double c, double r_e, double q) {
  if (n < 1) fail(ErrorKind::unsupported_degree, "degree must be >= 1", n);
  if (c == 0.0 || !std::isfinite(c)) fail(ErrorKind::invalid_multiplier, "multiplier must be finite and nonzero", c);
  if (!(r_e > 1) || !(q > r_e)) fail(ErrorKind::invalid_geometry, "need 1 < r_e < q");
  const double N = n, s = 2 * N + 1, Re = std::pow(r_e, 2 * n + 1);
  const double a = N - 1 + c * (N + 2);       // n - 1 + c (n + 2)
  const double b = N + 2 + c * (N - 1);       // n + 2 + c (n - 1)
  const double g = (c - 1) * (c - 1) * (N * N + N - 2);
  ECoefficients e;
  e.e1 = a / (c * s);
  e.e2 = (c - 1) * (N - 1) / (c * s);
  e.e3 = (-g + b * a * Re) / (c * s * s * Re);
  e.e4 = -(c - 1) * (N - 1) * a * (Re - 1) / (c * s * s);
  e.e5 = e.e4 + std::pow(q, 2 * n + 1) * (-g / Re + b * a) / (c * s * s);
  e.e6 = (g - b * a * Re) / (c * s * q) * std::pow(q, n) / Re;
  return e;
}

// True when e6 vanishes to rounding, i.e. tau = gamma / (mu e6) is undefined.
inline bool e6_degenerate(int n, double c, double r_e) {
  const double N = n, Re = std::pow(r_e, 2 * n + 1);
  const double ba = (N + 2 + c * (N - 1)) * (N - 1 + c * (N + 2)) * Re, g = (c - 1) * (c - 1) * (N * N + N - 2);
  return std::abs(g - ba) <= 1e-14 * (std::abs(g) + std::abs(ba));
}

// -------------------------------------------------------- field algebra

inline PiecewiseField zero_field() {
  PiecewiseField f;
  f.branches.push_back({0.0, kInf, ModeField(3)});
  return f;
}

// sum_i s_i f_i on the union of all branch breakpoints.
inline PiecewiseField combine(const std::vector<std::pair<cd, const PiecewiseField*>>& parts) {
  FieldList all;
  for (const auto& [s, f] : parts) all.push_back(*f);
  const FieldList none;
  const auto bp = detail::breakpoints(all, none);
  PiecewiseField out;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double a = bp[i], b = bp[i + 1], mid = std::isfinite(b) ? 0.5 * (a + b) : 2.0 * a + 1.0;
    ModeField u(3);
    for (const auto& [s, f] : parts)
      for (const auto& br : f->branches)
        if (mid > br.r_in && mid < br.r_out) u += s * br.u;
    out.branches.push_back({a, b, u.pruned()});
  }
  return out;
}

inline SurfaceExpansion traction_at(const PiecewiseField& f, double r, Side side, const LameParams& p) {
  return analytic_traction(f.branch_at(r, side).u, r, p.lambda, p.mu);
}

namespace detail {
// Real modulus factor just inside / outside radius r.
inline double A_side(const LayeredMedium& m, double r, Side side) {
  const bool in = side == Side::inner;
  if (m.core_radius && (in ? r <= *m.core_radius : r < *m.core_radius)) return 1.0;
  if (in ? r <= m.R : r < m.R) return m.c;
  return 1.0;
}

inline std::vector<double> medium_radii(const LayeredMedium& m) {
  std::vector<double> r;
  if (m.core_radius) r.push_back(*m.core_radius);
  r.push_back(m.R);
  return r;
}

// a_out T(f)_out - a_in T(f)_in on |x| = r.
inline SurfaceExpansion weighted_jump(const PiecewiseField& f, double r, double a_in, double a_out,
                                      const LameParams& p) {
  SurfaceExpansion j = a_out * traction_at(f, r, Side::outer, p);
  j += -a_in * traction_at(f, r, Side::inner, p);
  return j;
}
}  // namespace detail

// Field of the homogeneous base medium with displacement continuity and
// traction jumps jumps[i] on radii[i].
inline PiecewiseField homogeneous_response(const Sector& s, const std::vector<double>& radii,
                                           const std::vector<SurfaceExpansion>& jumps, const LameParams& p) {
  LayerSpec L;
  L.radii = radii;
  L.factors.assign(radii.size() + 1, 1.0);
  std::vector<CVec> j;
  for (const auto& e : jumps) j.push_back(sector_components(s, e));
  return solve_sector(s, L, j, p).field();
}

// ----------------------------------------------------------- constraints

struct ConstraintResidual {
  double continuity = 0;
  double balance = 0;
  double max() const { return std::max(continuity, balance); }
};

// Relative residual of  [A T x] + kappa [T y] = F  (F on |x| = q only) and of
// the continuity of x and y, over every breakpoint of the fields and medium.
inline ConstraintResidual constraint_residual(const PiecewiseField& x, const PiecewiseField& y, double kappa,
                                              const LayeredMedium& m, double q, const SurfaceExpansion& F) {
  const LameParams& p = m.base;
  std::vector<double> radii = detail::medium_radii(m);
  radii.push_back(q);
  for (const auto* f : {&x, &y})
    for (const auto& b : f->branches)
      for (double r : {b.r_in, b.r_out})
        if (r > 0 && std::isfinite(r)) radii.push_back(r);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  // scales are global over all radii, so a field that nearly vanishes on one
  // interface is not judged against itself
  double us[2] = {0, 0}, ts = F.max_abs();
  for (double r : radii) {
    int k = 0;
    for (const auto* f : {&x, &y}) {
      for (Side sd : {Side::inner, Side::outer}) us[k] = std::max(us[k], f->branch_at(r, sd).u.trace(r).max_abs());
      ++k;
    }
    for (Side sd : {Side::inner, Side::outer}) {
      ts = std::max(ts, std::abs(detail::A_side(m, r, sd)) * traction_at(x, r, sd, p).max_abs());
      ts = std::max(ts, std::abs(kappa) * traction_at(y, r, sd, p).max_abs());
    }
  }
  ConstraintResidual res;
  for (double r : radii) {
    int k = 0;
    for (const auto* f : {&x, &y}) {
      const auto ui = f->branch_at(r, Side::inner).u.trace(r), uo = f->branch_at(r, Side::outer).u.trace(r);
      if (us[k] > 0) res.continuity = std::max(res.continuity, (uo - ui).max_abs() / us[k]);
      ++k;
    }
    const double ai = detail::A_side(m, r, Side::inner), ao = detail::A_side(m, r, Side::outer);
    const auto txi = ai * traction_at(x, r, Side::inner, p), txo = ao * traction_at(x, r, Side::outer, p);
    const auto tyi = kappa * traction_at(y, r, Side::inner, p), tyo = kappa * traction_at(y, r, Side::outer, p);
    SurfaceExpansion want(3);
    if (r == q) want += F;
    if (ts > 0) res.balance = std::max(res.balance, (txo - txi + (tyo - tyi) - want).max_abs() / ts);
  }
  return res;
}

// ------------------------------------------------------------- sources

// Source with real amplitudes after removing one common phase:
// gamma_original = phase * gamma_real.  Witness fields are reported for
// `frame`: the original source when the phase is real (sign = +-1), the
// real form otherwise.
struct RealSource {
  SourceSpec src;
  cd phase = 1.0;
  double sign = 1.0;
  SourceSpec frame;
};

inline RealSource real_form(const SourceSpec& s) {
  RealSource r{s, 1.0, 1.0, s};
  double big = 0.0;
  for (const auto& m : s.modes)
    if (std::abs(m.gamma) > big) {
      big = std::abs(m.gamma);
      r.phase = m.gamma / big;
    }
  for (auto& m : r.src.modes) {
    const cd g = m.gamma / r.phase;
    if (std::abs(g.imag()) > 1e-12 * big)
      fail(ErrorKind::validation, "witnesses need source amplitudes sharing one complex phase");
    m.gamma = g.real();
  }
  if (r.phase.imag() == 0.0) r.sign = r.phase.real() < 0 ? -1.0 : 1.0;
  r.frame = r.src;
  for (auto& m : r.frame.modes) m.gamma *= r.sign;
  return r;
}

inline SurfaceExpansion mode_density(const SourceMode& m) {
  SurfaceExpansion F(3);
  F.add(m.n, m.gamma * kernel_basis(m.n, m.family)[m.k]);
  return F;
}

inline bool single_family(const SourceSpec& s, int family) {
  for (const auto& m : s.modes)
    if (m.family != family) return false;
  return true;
}

// ------------------------------------------------------------- witnesses

struct PrimalWitness {
  std::string kind;
  FieldList v, w;                // one entry per source mode
  std::vector<double> tau;       // per-mode amplitudes
  std::vector<ECoefficients> e;  // fixed-c matching coefficients, when used
  double I = 0;
  double residual = 0;           // max per-mode constraint residual

  std::array<FieldList*, 2> lists() { return {&v, &w}; }
};

struct DualWitness {
  std::string kind;
  FieldList v, psi;
  std::vector<double> tau;
  double J = 0;
  double residual = 0;

  std::array<FieldList*, 2> lists() { return {&v, &psi}; }
};

namespace detail {

// Fixed-c field for a zeta_1 kernel G (core B_1, shell radius r_e).
inline PiecewiseField e_field(const CMat& G, const ECoefficients& e, double r_e, double q) {
  const int n = degree_of(G);
  auto two = [&](double a, double b) {
    ModeField u;
    if (a != 0.0) u.add(n, n, 1.0, a * G);
    if (b != 0.0) u.add(n, -n - 1, 1.0, b * G);
    return u;
  };
  PiecewiseField f;
  f.branches.push_back({0.0, 1.0, two(1.0, 0.0)});
  f.branches.push_back({1.0, r_e, two(e.e1, e.e2)});
  f.branches.push_back({r_e, q, two(e.e3, e.e4)});
  f.branches.push_back({q, kInf, two(0.0, e.e5)});
  return f;
}

inline void check_unit_core(const LayeredMedium& m) {
  if (!m.core_radius || std::abs(*m.core_radius - 1.0) > 1e-12)
    fail(ErrorKind::invalid_geometry, "this witness needs the core B_1");
}

template <class W>
void orient(W& w, double sign) {
  if (sign == 1.0) return;
  for (auto& t : w.tau) t *= sign;
  for (auto* list : w.lists())
    for (auto& f : *list)
      for (auto& b : f.branches) b.u *= sign;
}

inline double primal_residual(const PrimalWitness& w, const LayeredMedium& m, const SourceSpec& src) {
  double r = 0.0;
  for (std::size_t i = 0; i < src.modes.size(); ++i)
    r = std::max(r, constraint_residual(w.v[i], w.w[i], -1.0, m, src.q, mode_density(src.modes[i])).max());
  return r;
}

inline double dual_residual(const DualWitness& w, const LayeredMedium& m, double q) {
  double r = 0.0;
  for (std::size_t i = 0; i < w.psi.size(); ++i)
    r = std::max(r, constraint_residual(w.psi[i], w.v[i], m.delta, m, q, SurfaceExpansion(3)).max());
  return r;
}

inline Eigen::MatrixXd gram(const FieldList& f, const LameParams& p) {
  const int k = int(f.size());
  Eigen::MatrixXd G(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) G(i, j) = G(j, i) = pairing_P({f[i]}, {f[j]}, p).real();
  return G;
}

// psi_hat for each mode and its compensator v_hat, [T v_hat] = -[A T psi_hat].
struct DualBasis {
  FieldList psi, v;
};

inline DualBasis dual_basis(const LayeredMedium& m, const SourceSpec& src, const std::vector<std::size_t>& modes,
                            bool compensate) {
  DualBasis b;
  for (std::size_t i : modes) {
    const auto& sm = src.modes[i];
    const CMat& G = kernel_basis(sm.n, sm.family)[sm.k];
    b.psi.push_back(perfect_wave(G, sm.family, m.R, m.base, sm.k).field);
    if (!compensate) {
      b.v.push_back(zero_field());
      continue;
    }
    const auto radii = medium_radii(m);
    std::vector<SurfaceExpansion> jumps;
    for (double r : radii)
      jumps.push_back(-1.0 * weighted_jump(b.psi.back(), r, A_side(m, r, Side::inner), A_side(m, r, Side::outer),
                                            m.base));
    b.v.push_back(homogeneous_response(make_sector(G, sm.family), radii, jumps, m.base));
  }
  return b;
}

// Maximize J over psi = sum x_i psi_hat_i, v = sum (x_i / delta) v_hat_i.
inline DualWitness optimize_dual(const std::string& kind, const LayeredMedium& m, const SourceSpec& src,
                                 const DualBasis& b, double sign) {
  const int k = int(b.psi.size());
  const double d = m.delta;
  Eigen::VectorXd c0(k);
  for (int i = 0; i < k; ++i) c0[i] = source_pairing(src, {b.psi[i]}).real();
  const Eigen::MatrixXd Q = gram(b.v, m.base) / d + d * gram(b.psi, m.base);
  const Eigen::VectorXd x = Q.ldlt().solve(c0);
  DualWitness w;
  w.kind = kind;
  for (int i = 0; i < k; ++i) {
    w.tau.push_back(x[i]);
    w.psi.push_back(scaled({b.psi[i]}, x[i])[0]);
    w.v.push_back(scaled({b.v[i]}, x[i] / d)[0]);
  }
  w.J = functional_J(w.v, w.psi, src, d, m.base);
  orient(w, sign);
  w.residual = dual_residual(w, m, src.q);
  return w;
}

}  // namespace detail

// v = sum tau_n v_hat_n with the fixed-c matching fields, w = 0.
inline PrimalWitness witness_fixed_c(const LayeredMedium& m, const SourceSpec& source) {
  m.validate();
  source.validate(m.R);
  detail::check_unit_core(m);
  if (!single_family(source, 1)) fail(ErrorKind::hypothesis_violation, "fixed-c witness needs a zeta_1-only source");
  const RealSource rs = real_form(source);
  const SourceSpec& src = rs.src;
  PrimalWitness w;
  w.kind = "fixed_c";
  for (const auto& sm : src.modes) {
    if (e6_degenerate(sm.n, m.c, m.R)) fail(ErrorKind::witness_degeneracy, "e6 vanishes for an active mode", sm.n);
    const auto e = e_coefficients(sm.n, m.c, m.R, src.q);
    const double tau = sm.gamma.real() / (m.base.mu * e.e6);
    w.e.push_back(e);
    w.tau.push_back(tau);
    w.v.push_back(scaled({detail::e_field(kernel_basis(sm.n, 1)[sm.k], e, m.R, src.q)}, tau)[0]);
    w.w.push_back(zero_field());
  }
  w.I = functional_I(w.v, w.w, m.delta, m.base);
  detail::orient(w, rs.sign);
  w.residual = detail::primal_residual(w, m, rs.frame);
  return w;
}

// Schedule witness for q > R^{3/2}: fixed-c fields at c = zeta_1(n_delta)
// for n != n_delta, and tau V_hat with the free-space profile at n_delta,
// whose interface defect is absorbed by w.
inline PrimalWitness witness_radial_nonresonant(const LayeredMedium& m, const SourceSpec& source, int n_delta) {
  m.validate();
  source.validate(m.R);
  detail::check_unit_core(m);
  if (!single_family(source, 1)) fail(ErrorKind::hypothesis_violation, "radial witness needs a zeta_1-only source");
  if (!(source.q > std::pow(m.R, 1.5))) fail(ErrorKind::hypothesis_violation, "radial witness needs q > R^{3/2}", source.q);
  const double zeta = plasmon_constants(m.base, n_delta).zeta1;
  if (std::abs(m.c - zeta) > 1e-12 * std::abs(zeta))
    fail(ErrorKind::hypothesis_violation, "radial witness needs c = zeta_1(n_delta)", m.c);
  const RealSource rs = real_form(source);
  const SourceSpec& src = rs.src;
  const double q = src.q;
  PrimalWitness w;
  w.kind = "radial_nonresonant";
  for (const auto& sm : src.modes) {
    const CMat& G = kernel_basis(sm.n, 1)[sm.k];
    if (sm.n != n_delta) {
      if (e6_degenerate(sm.n, m.c, m.R)) fail(ErrorKind::witness_degeneracy, "e6 vanishes for an active mode", sm.n);
      const auto e = e_coefficients(sm.n, m.c, m.R, q);
      const double tau = sm.gamma.real() / (m.base.mu * e.e6);
      w.e.push_back(e);
      w.tau.push_back(tau);
      w.v.push_back(scaled({detail::e_field(G, e, m.R, q)}, tau)[0]);
      w.w.push_back(zero_field());
      continue;
    }
    const int n = sm.n;
    const double tau = -sm.gamma.real() / (m.base.mu * (2 * n + 1) * std::pow(q, n - 1));
    // V_hat = G r^n inside q, G q^{2n+1} r^{-n-1} outside
    PiecewiseField V;
    ModeField in, out;
    in.add(n, n, q, std::pow(q, n) * G);
    out.add(n, -n - 1, q, std::pow(q, n) * G);
    V.branches.push_back({0.0, q, in});
    V.branches.push_back({q, kInf, out});
    const PiecewiseField v = scaled({V}, tau)[0];
    std::vector<double> radii = detail::medium_radii(m);
    radii.push_back(q);
    std::vector<SurfaceExpansion> jumps;
    for (double r : radii) {
      auto j = detail::weighted_jump(v, r, detail::A_side(m, r, Side::inner), detail::A_side(m, r, Side::outer), m.base);
      if (r == q) j += -1.0 * mode_density(sm);
      jumps.push_back(j);
    }
    w.e.push_back({});
    w.tau.push_back(tau);
    w.v.push_back(v);
    w.w.push_back(homogeneous_response(make_sector(G, 1), radii, jumps, m.base));
  }
  w.I = functional_I(w.v, w.w, m.delta, m.base);
  detail::orient(w, rs.sign);
  w.residual = detail::primal_residual(w, m, rs.frame);
  return w;
}

// General primal witness: v_i = x_i V_i with V_i the free-space response to
// the unit mode density, w_i = x_i (V_i + W_i) - gamma_i V_i where W_i
// absorbs the multiplier jumps of V_i; x minimizes I exactly.
inline PrimalWitness witness_compensated_primal(const LayeredMedium& m, const SourceSpec& source) {
  m.validate();
  source.validate(m.R);
  const RealSource rs = real_form(source);
  const SourceSpec& src = rs.src;
  const int k = int(src.modes.size());
  const auto radii = detail::medium_radii(m);
  FieldList V, U, Vg;
  for (const auto& sm : src.modes) {
    const CMat& G = kernel_basis(sm.n, sm.family)[sm.k];
    const Sector s = make_sector(G, sm.family);
    SurfaceExpansion unit(3);
    unit.add(sm.n, G);
    V.push_back(homogeneous_response(s, {src.q}, {unit}, m.base));
    std::vector<SurfaceExpansion> jumps;
    for (double r : radii)
      jumps.push_back(detail::weighted_jump(V.back(), r, detail::A_side(m, r, Side::inner) - 1.0,
                                            detail::A_side(m, r, Side::outer) - 1.0, m.base));
    const PiecewiseField W = homogeneous_response(s, radii, jumps, m.base);
    U.push_back(combine({{1.0, &V.back()}, {1.0, &W}}));
    Vg.push_back(scaled({V.back()}, sm.gamma.real())[0]);
  }
  const double d = m.delta;
  const Eigen::MatrixXd H = d * detail::gram(V, m.base) + detail::gram(U, m.base) / d;
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) rhs[i] = pairing_P({U[i]}, Vg, m.base).real() / d;
  const Eigen::VectorXd x = H.ldlt().solve(rhs);
  PrimalWitness w;
  w.kind = "compensated_primal";
  for (int i = 0; i < k; ++i) {
    w.tau.push_back(x[i]);
    w.v.push_back(scaled({V[i]}, x[i])[0]);
    w.w.push_back(combine({{x[i], &U[i]}, {-1.0, &Vg[i]}}));
  }
  w.I = functional_I(w.v, w.w, d, m.base);
  detail::orient(w, rs.sign);
  w.residual = detail::primal_residual(w, m, rs.frame);
  return w;
}

inline bool is_resonant_mode(const LayeredMedium& m, const SourceMode& sm) {
  const double z = plasmon_constants(m.base, sm.n)[sm.family];
  return sm.gamma != 0.0 && std::abs(m.c - z) <= 1e-12 * std::abs(z);
}

// No core, c = zeta_i(n0): psi = sum tau_k psi_hat over the resonant modes,
// v = 0; tau maximizes tau C0 - delta C1 tau^2.
inline DualWitness witness_nocore(const LayeredMedium& m, const SourceSpec& source) {
  m.validate();
  source.validate(m.R);
  if (m.core_radius) fail(ErrorKind::invalid_geometry, "no-core witness needs an empty core");
  if (!(m.delta > 0)) fail(ErrorKind::undefined_dissipation, "dual witness needs delta > 0", m.delta);
  const RealSource rs = real_form(source);
  const SourceSpec& src = rs.src;
  std::vector<std::size_t> hit;
  for (std::size_t i = 0; i < src.modes.size(); ++i)
    if (is_resonant_mode(m, src.modes[i])) hit.push_back(i);
  if (hit.empty()) fail(ErrorKind::invalid_witness, "no source mode with nonzero amplitude matches c");
  return detail::optimize_dual("nocore", m, src, detail::dual_basis(m, src, hit, false), rs.sign);
}

// Dual witness with compensator: psi = sum tau_k psi_hat_k over all modes
// and delta v solving the multiplier defect of psi exactly.
inline DualWitness witness_compensated_dual(const LayeredMedium& m, const SourceSpec& source) {
  m.validate();
  source.validate(m.R);
  if (!(m.delta > 0)) fail(ErrorKind::undefined_dissipation, "dual witness needs delta > 0", m.delta);
  const RealSource rs = real_form(source);
  const SourceSpec& src = rs.src;
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < src.modes.size(); ++i) all.push_back(i);
  return detail::optimize_dual("compensated_dual", m, src, detail::dual_basis(m, src, all, true), rs.sign);
}

// Core with c = zeta_i(n_delta) and R < q: the compensated dual witness
// built on the scheduled perfect waves.
inline DualWitness witness_core_resonant(const LayeredMedium& m, const SourceSpec& source, int family, int n_delta) {
  m.validate();
  if (!(source.q > m.R)) fail(ErrorKind::invalid_geometry, "core-resonant witness needs q > R", source.q);
  if (!m.core_radius) fail(ErrorKind::invalid_geometry, "core-resonant witness needs a core");
  if (!single_family(source, family)) fail(ErrorKind::hypothesis_violation, "source must be single-family");
  const double z = plasmon_constants(m.base, n_delta)[family];
  if (std::abs(m.c - z) > 1e-12 * std::abs(z))
    fail(ErrorKind::hypothesis_violation, "core-resonant witness needs c = zeta_i(n_delta)", m.c);
  auto w = witness_compensated_dual(m, source);
  w.kind = "core_resonant";
  return w;
}

// ------------------------------------------------------------ scenarios

struct CMode {
  enum class Type { fixed, schedule } type = Type::fixed;
  double value = -4.0;  // fixed multiplier
  int family = 1;       // schedule family
};

// n empty means "n_delta".
struct SourceTemplate {
  std::optional<int> n;
  int family = 1;
  int k = 0;
  cd gamma = 1.0;
};

struct Scenario {
  LameParams params;
  std::optional<double> core_radius;
  double R = 2.0;
  CMode c_mode;
  double q = 3.0;
  std::vector<SourceTemplate> source;

  bool scheduled() const {
    if (c_mode.type == CMode::Type::schedule) return true;
    for (const auto& s : source)
      if (!s.n) return true;
    return false;
  }

  void validate() const {
    params.validate();
    LayeredMedium m;
    m.core_radius = core_radius;
    m.R = R;
    m.c = c_mode.type == CMode::Type::fixed ? c_mode.value : -1.0;
    m.base = params;
    m.validate();
    if (c_mode.type == CMode::Type::schedule && (c_mode.family < 1 || c_mode.family > 3))
      fail(ErrorKind::validation, "schedule family must be 1, 2 or 3", c_mode.family);
    if (scheduled() && !(R > 1)) fail(ErrorKind::validation, "schedule needs R > 1", R);
    if (source.empty()) fail(ErrorKind::validation, "source needs at least one mode");
    SourceSpec s = source_at(2);
    s.validate(R);
  }

  SourceSpec source_at(int n_delta) const {
    SourceSpec s;
    s.q = q;
    for (const auto& t : source) s.modes.push_back({t.n.value_or(n_delta), t.family, t.k, t.gamma});
    return s;
  }

  LayeredMedium medium_at(double delta, int n_delta) const {
    LayeredMedium m;
    m.core_radius = core_radius;
    m.R = R;
    m.delta = delta;
    m.base = params;
    m.c = c_mode.type == CMode::Type::fixed ? c_mode.value : plasmon_constants(params, n_delta)[c_mode.family];
    return m;
  }
};

inline PrimalWitness upper_witness(const Scenario& sc, const LayeredMedium& m, const SourceSpec& src, int n_delta) {
  const bool unit_core = m.core_radius && std::abs(*m.core_radius - 1.0) <= 1e-12;
  const bool fam1 = single_family(src, 1);
  if (unit_core && fam1 && sc.c_mode.type == CMode::Type::fixed) return witness_fixed_c(m, src);
  if (unit_core && fam1 && sc.c_mode.type == CMode::Type::schedule && sc.c_mode.family == 1 &&
      src.q > std::pow(m.R, 1.5))
    return witness_radial_nonresonant(m, src, n_delta);
  return witness_compensated_primal(m, src);
}

inline DualWitness lower_witness(const Scenario& sc, const LayeredMedium& m, const SourceSpec& src, int n_delta) {
  if (!m.core_radius)
    for (const auto& sm : src.modes)
      if (is_resonant_mode(m, sm)) return witness_nocore(m, src);
  if (m.core_radius && sc.c_mode.type == CMode::Type::schedule && single_family(src, sc.c_mode.family) &&
      src.q > m.R && src.q < std::pow(m.R, 1.5))
    return witness_core_resonant(m, src, sc.c_mode.family, n_delta);
  return witness_compensated_dual(m, src);
}

// ----------------------------------------------------------------- sweep

enum class Verdict { resonant, non_resonant, inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::resonant: return "resonant";
    case Verdict::non_resonant: return "non-resonant";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

// Verdict conventions.  Resonant: E nondecreasing as delta decreases and
// fitted slope above `slope`.  Non-resonant: over the final `window_decades`
// decades, max E stays below `bounded_ratio` times E at the window start.
struct SweepThresholds {
  double slope = 0.5;
  double bounded_ratio = 10.0;
  double window_decades = 2.0;
  double monotone_tol = 1e-9;
  double sandwich_slack = 1e-9;
};

struct SweepRow {
  EnergyReport report;
  std::string upper_kind, lower_kind;
  double upper_residual = 0, lower_residual = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  Verdict verdict = Verdict::inconclusive;
  double growth_exponent = 0;
  SweepThresholds thresholds;
};

// Least-squares slope of log E against log(1 / delta) over rows with E > 0.
inline double growth_exponent(const std::vector<SweepRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const auto& r : rows) {
    if (!(r.report.E_delta > 0)) continue;
    const double x = -std::log(r.report.delta), y = std::log(r.report.E_delta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) return 0.0;
  const double den = k * sxx - sx * sx;
  return den > 0 ? (k * sxy - sx * sy) / den : 0.0;
}

inline Verdict classify(const std::vector<SweepRow>& rows, double slope, const SweepThresholds& t) {
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].report.E_delta < rows[i - 1].report.E_delta * (1 - t.monotone_tol)) monotone = false;
  if (monotone && slope > t.slope) return Verdict::resonant;
  const double cut = rows.back().report.delta * std::pow(10.0, t.window_decades) * (1 + 1e-12);
  double start = -1, peak = 0;
  for (const auto& r : rows)
    if (r.report.delta <= cut) {
      if (start < 0) start = r.report.E_delta;
      peak = std::max(peak, r.report.E_delta);
    }
  if (start == 0 && peak == 0) return Verdict::non_resonant;
  if (start > 0 && peak < t.bounded_ratio * start) return Verdict::non_resonant;
  return Verdict::inconclusive;
}

inline void validate_deltas(const std::vector<double>& d) {
  if (d.empty()) fail(ErrorKind::empty_result, "delta list is empty");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0) || !std::isfinite(d[i])) fail(ErrorKind::validation, "every delta must be positive", d[i]);
    if (i && !(d[i] < d[i - 1])) fail(ErrorKind::validation, "delta list must be strictly decreasing", d[i]);
  }
  if (std::log10(d.front() / d.back()) < 3 - 1e-9)
    fail(ErrorKind::validation, "delta list must span at least three decades");
}

inline SweepRow sweep_point(const Scenario& sc, double delta, bool witnesses = true) {
  SweepRow row;
  auto& rep = row.report;
  rep.delta = delta;
  const int n_delta = sc.scheduled() ? schedule_n_delta(sc.R, delta).n : 2;
  if (sc.scheduled()) rep.n_delta = n_delta;
  const LayeredMedium m = sc.medium_at(delta, n_delta);
  const SourceSpec src = sc.source_at(n_delta);
  rep.c_used = m.c;
  rep.E_delta = dissipation_E(solve(m, src, 1), m, src).E;
  if (witnesses) {
    const auto up = upper_witness(sc, m, src, n_delta);
    const auto lo = lower_witness(sc, m, src, n_delta);
    rep.I_upper = up.I;
    rep.J_lower = lo.J;
    row.upper_kind = up.kind;
    row.lower_kind = lo.kind;
    row.upper_residual = up.residual;
    row.lower_residual = lo.residual;
  }
  return row;
}

inline SweepResult sweep(const Scenario& sc, const std::vector<double>& deltas, const SweepThresholds& t = {},
                         bool witnesses = true, int threads = 0) {
  sc.validate();
  validate_deltas(deltas);
  SweepResult res;
  res.thresholds = t;
  res.rows = parallel_map<SweepRow>(
      deltas.size(), [&](std::size_t i) { return sweep_point(sc, deltas[i], witnesses); }, threads);
  res.growth_exponent = growth_exponent(res.rows);
  res.verdict = classify(res.rows, res.growth_exponent, t);
  return res;
}

// delta = 10^-(a + j / per_decade) from `from` down to `to`.
inline std::vector<double> log_grid(double from, double to, int per_decade) {
  if (!(from > to) || !(to > 0) || per_decade < 1) fail(ErrorKind::validation, "bad delta grid");
  const double a = std::log10(from), b = std::log10(to);
  const int steps = int(std::llround((a - b) * per_decade));
  std::vector<double> d;
  for (int j = 0; j <= steps; ++j) d.push_back(std::pow(10.0, a - double(j) / per_decade));
  return d;
}

}  // namespace plasmon
