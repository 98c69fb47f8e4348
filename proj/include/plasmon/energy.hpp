#pragma once

// Quadratic pairing P(u, v), dissipation E and the primal/dual functionals.
// Fields are lists of piecewise solid-harmonic expansions; P is evaluated
// exactly (Y orthonormality times closed-form radial power integrals).

#include <functional>
#include <optional>

#include "plasmon/transmission.hpp"

namespace plasmon {

using FieldList = std::vector<PiecewiseField>;

namespace detail {

inline std::vector<double> breakpoints(const FieldList& a, const FieldList& b) {
  std::vector<double> r{0.0, kInf};
  for (const auto* list : {&a, &b})
    for (const auto& f : *list)
      for (const auto& br : f.branches) {
        r.push_back(br.r_in);
        r.push_back(br.r_out);
      }
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

// Sum of all fields whose branch covers (a, b); empty if none does.
inline ModeField merged_on(const FieldList& f, double a, double b) {
  const double mid = std::isfinite(b) ? 0.5 * (a + b) : 2.0 * a + 1.0;
  ModeField u(3);
  for (const auto& pf : f)
    for (const auto& br : pf.branches)
      if (mid > br.r_in && mid < br.r_out) u += br.u;
  return u;
}

inline ModeField row_field(const ModeField& u, int r) {
  ModeField out(1);
  for (const auto& t : u.terms()) out.add(t.l, t.p, t.rho, t.C.row(r));
  return out;
}

// div u and the six strain components (00, 11, 22, 01, 02, 12).
struct Strain {
  ModeField div{1};
  std::array<ModeField, 6> eps{ModeField(1), ModeField(1), ModeField(1), ModeField(1), ModeField(1), ModeField(1)};
};

inline Strain strain_of(const ModeField& u) {
  std::array<ModeField, 3> D{u.derivative(0), u.derivative(1), u.derivative(2)};
  Strain s;
  for (int j = 0; j < 3; ++j) {
    s.eps[j] = row_field(D[j], j).pruned();
    s.div += s.eps[j];
  }
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int k = 0; k < 3; ++k) {
    const int i = pairs[k][0], j = pairs[k][1];
    s.eps[3 + k] = (0.5 * (row_field(D[j], i) + row_field(D[i], j))).pruned();
  }
  s.div = s.div.pruned();
  return s;
}

// int_a^b int_S2 x conj(y) r^2 dOmega dr for one-row fields.
inline cd radial_pair(const ModeField& x, const ModeField& y, double a, double b) {
  cd total = 0.0;
  for (const auto& t : x.terms())
    for (const auto& s : y.terms()) {
      if (t.l != s.l) continue;
      const cd ang = (t.C.array() * s.C.conjugate().array()).sum();
      if (ang == 0.0) continue;
      const int e = t.p + s.p + 2;  // integrand ~ r^e
      // (r/rt)^pt (r/rs)^ps r^3 has the same r-dependence as r^(e+1)
      auto F = [&](double r) { return std::pow(r / t.rho, t.p) * std::pow(r / s.rho, s.p) * r * r * r; };
      double v;
      if (e == -1) {
        if (a == 0.0 || !std::isfinite(b)) fail(ErrorKind::divergent_integral, "logarithmically divergent energy");
        v = F(b) * std::log(b / a);
      } else {
        double hi = 0.0, lo = 0.0;
        if (std::isfinite(b))
          hi = F(b) / (e + 1);
        else if (e + 1 >= 0)
          fail(ErrorKind::divergent_integral, "exterior field does not decay fast enough", double(e));
        if (a > 0.0)
          lo = F(a) / (e + 1);
        else if (e + 1 <= 0)
          fail(ErrorKind::divergent_integral, "field too singular at the origin", double(e));
        v = hi - lo;
      }
      total += ang * v;
    }
  return total;
}

inline cd strain_pair(const Strain& x, const Strain& y, double a, double b, const LameParams& p) {
  cd s = p.lambda * radial_pair(x.div, y.div, a, b);
  for (int k = 0; k < 6; ++k) s += 2.0 * p.mu * (k < 3 ? 1.0 : 2.0) * radial_pair(x.eps[k], y.eps[k], a, b);
  return s;
}

}  // namespace detail

// P(u, v) restricted to r_lo <= |x| < r_hi.
inline cd pairing_P(const FieldList& u, const FieldList& v, const LameParams& p, double r_lo = 0.0,
                    double r_hi = kInf) {
  const auto bp = detail::breakpoints(u, v);
  cd total = 0.0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double a = std::max(bp[i], r_lo), b = std::min(bp[i + 1], r_hi);
    if (!(b > a)) continue;
    const ModeField fu = detail::merged_on(u, a, b), fv = detail::merged_on(v, a, b);
    if (fu.empty() || fv.empty()) continue;
    total += detail::strain_pair(detail::strain_of(fu), detail::strain_of(fv), a, b, p);
  }
  return total;
}

inline double pairing_P(const FieldList& u, const LameParams& p) { return pairing_P(u, u, p).real(); }

// ------------------------------------------------- volumetric oracle

struct VolumetricP {
  double value = 0;       // quadrature over |x| < truncation
  double tail = 0;        // analytic estimate of the part beyond truncation
  double truncation = 0;
};

// P(u, u) by FD strain at Gauss-Legendre radial nodes times a sphere rule.
// Radial panels grow geometrically (ratio <= 1.25).  Beyond the truncation
// radius Rt the strain of the outermost branch decays like r^s, s its
// slowest exponent, so the radial density D(r) = int |strain|^2 r^2 dOmega
// behaves like D(Rt) (r/Rt)^{2s+2}; integrating gives the tail
// D(Rt) Rt / (-2s - 3).  Exact for a single multipole.
inline VolumetricP pairing_P_volumetric(const FieldList& u, const LameParams& p, double truncation,
                                        const SphereQuadrature& quad, int order = 10) {
  const FieldList none;
  auto bp = detail::breakpoints(u, none);
  const GaussRule gl = gauss_legendre(order);
  auto density = [&](const ModeField& f, double r) {
    double s = 0.0;
    for (std::size_t t = 0; t < quad.size(); ++t) {
      const Eigen::Matrix3cd J = fd_jacobian([&](const Vec3& y) { return f.eval(y); }, r * quad.nodes[t]);
      const Eigen::Matrix3cd e = 0.5 * (J + J.transpose());
      s += quad.weights[t] * (p.lambda * std::norm(J.trace()) + 2.0 * p.mu * e.squaredNorm());
    }
    return s * r * r;
  };
  VolumetricP out;
  out.truncation = truncation;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double a = bp[i], b = std::min(bp[i + 1], truncation);
    if (!(b > a)) continue;
    const ModeField f = detail::merged_on(u, a, bp[i + 1]);
    if (f.empty()) continue;
    std::vector<double> edges{a};
    double x = a > 0 ? a : std::min(b, 0.05 * b);
    if (a == 0.0) edges.push_back(x);
    while (x * 1.25 < b) edges.push_back(x *= 1.25);
    edges.push_back(b);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      const double lo = edges[k], hi = edges[k + 1];
      for (int g = 0; g < order; ++g) {
        const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[g];
        out.value += 0.5 * (hi - lo) * gl.w[g] * density(f, r);
      }
    }
    if (!std::isfinite(bp[i + 1]) && truncation > a) {
      int p_max = std::numeric_limits<int>::min();
      for (const auto& t : f.terms()) p_max = std::max(p_max, t.p - 1);  // strain exponent
      if (2 * p_max + 3 >= 0) fail(ErrorKind::divergent_integral, "exterior branch does not decay", double(p_max));
      out.tail = density(f, truncation) * truncation / double(-2 * p_max - 3);
    }
  }
  return out;
}

// ------------------------------------------------ source pairing

// int_{|x|=q} F . psi dS from expansion coefficients (bilinear, no conjugate).
inline cd source_pairing(const SourceSpec& src, const FieldList& psi) {
  SurfaceExpansion tr(3);
  for (const auto& f : psi) tr += f.branch_at(src.q).u.trace(src.q);
  cd s = 0.0;
  for (const auto& m : src.modes) {
    const CMat& G = kernel_basis(m.n, m.family)[m.k];
    s += m.gamma * frobenius(G, sigma_conjugate(tr.at(m.n)));
  }
  return src.q * src.q * s;
}

// Same pairing by surface quadrature on |x| = q.
inline cd source_pairing_quadrature(const SourceSpec& src, const FieldList& psi, const SphereQuadrature& quad) {
  const int L = src.max_degree();
  if (quad.exactness < 2 * L + 2) fail(ErrorKind::accuracy, "quadrature exactness below 2 n_max + 2", quad.exactness);
  const SurfaceExpansion F = src.density();
  cd s = 0.0;
  for (std::size_t t = 0; t < quad.size(); ++t) {
    const Vec3 x = src.q * quad.nodes[t];
    CVec v = CVec::Zero(3);
    for (const auto& f : psi) v += f.eval(x);
    s += quad.weights[t] * F.eval(quad.nodes[t]).cwiseProduct(v).sum();
  }
  return src.q * src.q * s;
}

// ----------------------------------------------------- dissipation

struct Dissipation {
  double E = 0;           // (delta / 2) P(u, u)
  double via_source = 0;  // -1/2 Im int f . conj(u)
  double via_imag = 0;    // Im (1/2) sum_k (A_k + i delta) P_k(u, u)
};

inline Dissipation dissipation_E(const std::vector<ModeSolution>& sols, const LayeredMedium& m,
                                 const SourceSpec& src) {
  if (!(m.delta > 0)) fail(ErrorKind::undefined_dissipation, "dissipation needs delta > 0", m.delta);
  const FieldList u = fields_of(sols);
  Dissipation d;
  d.E = 0.5 * m.delta * pairing_P(u, m.base);
  FieldList uc;
  for (const auto& f : u) {
    PiecewiseField c;
    for (const auto& b : f.branches) c.branches.push_back({b.r_in, b.r_out, b.u.conj()});
    uc.push_back(c);
  }
  d.via_source = -0.5 * source_pairing(src, uc).imag();
  const LayerSpec L = layers_of(m, src.q);
  cd z = 0.0;
  for (std::size_t k = 0; k < L.factors.size(); ++k) {
    const double a = k == 0 ? 0.0 : L.radii[k - 1], b = k < L.radii.size() ? L.radii[k] : kInf;
    z += L.factors[k] * pairing_P(u, u, m.base, a, b);
  }
  d.via_imag = 0.5 * z.imag();
  return d;
}

// ------------------------------------------------------ functionals

inline double functional_I(const FieldList& v, const FieldList& w, double delta, const LameParams& p) {
  if (!(delta > 0)) fail(ErrorKind::undefined_dissipation, "primal functional needs delta > 0", delta);
  return 0.5 * delta * pairing_P(v, p) + 0.5 / delta * pairing_P(w, p);
}

// With quad given, int f . psi is taken by surface quadrature; otherwise from
// expansion coefficients.
inline double functional_J(const FieldList& v, const FieldList& psi, const SourceSpec& src, double delta,
                           const LameParams& p, const SphereQuadrature* quad = nullptr) {
  if (!(delta > 0)) fail(ErrorKind::undefined_dissipation, "dual functional needs delta > 0", delta);
  const cd fpsi = quad ? source_pairing_quadrature(src, psi, *quad) : source_pairing(src, psi);
  return fpsi.real() - 0.5 * delta * pairing_P(v, p) - 0.5 * delta * pairing_P(psi, p);
}

// --------------------------------------------------- field helpers

inline FieldList map_fields(const FieldList& f, const std::function<ModeField(const ModeField&)>& op) {
  FieldList out;
  for (const auto& pf : f) {
    PiecewiseField g;
    for (const auto& b : pf.branches) g.branches.push_back({b.r_in, b.r_out, op(b.u)});
    out.push_back(g);
  }
  return out;
}

inline FieldList real_part(const FieldList& f) {
  return map_fields(f, [](const ModeField& u) { return u.real_part(); });
}
inline FieldList imag_part(const FieldList& f) {
  return map_fields(f, [](const ModeField& u) { return u.imag_part(); });
}
inline FieldList scaled(const FieldList& f, cd s) {
  return map_fields(f, [s](const ModeField& u) { return s * u; });
}

struct EnergyReport {
  double delta = 0;
  double E_delta = 0;
  std::optional<double> I_upper;
  std::optional<double> J_lower;
  std::optional<int> n_delta;
  double c_used = 0;

  bool sandwich_holds(double slack = 1e-9) const {
    const double tol = slack * std::max(1.0, std::abs(E_delta));
    if (I_upper && E_delta > *I_upper + tol) return false;
    if (J_lower && *J_lower > E_delta + tol) return false;
    return true;
  }
};

}  // namespace plasmon
