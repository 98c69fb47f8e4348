#pragma once

// Exact mode-matching solution of the lossy layered problem
//   div((A + i delta) C grad^s u) = F dS on |x| = q,
// with A = 1 in the core, c in the shell, 1 outside.  Each source mode lives
// in one rotation sector (degree n, family), so the layered problem reduces
// to a small dense system per mode.

#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <tuple>

#include "plasmon/parallel.hpp"
#include "plasmon/plasmon_waves.hpp"

namespace plasmon {

// ------------------------------------------------------------ kernels

// Orthonormal real-field kernel of H at zeta_family(n).  The kernel is the
// J-sector itself and does not depend on (lambda, mu), so it is cached by
// (n, family) only.
inline const std::vector<CMat>& kernel_basis(int n, int family) {
  if (n < 2) fail(ErrorKind::unsupported_degree, "kernel modes start at n = 2", n);
  if (family < 1 || family > 3) fail(ErrorKind::invalid_argument, "family must be 1, 2 or 3", family);
  static std::mutex m;
  static std::map<std::pair<int, int>, std::vector<CMat>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find({n, family});
  if (it == cache.end()) {
    const CMat S = sector_basis(n, family);
    const CMat Q = S.householderQr().householderQ() * CMat::Identity(S.rows(), S.cols());
    it = cache.emplace(std::make_pair(n, family), detail::real_orthonormal_basis(Q, n)).first;
  }
  return it->second;
}

// ------------------------------------------------------------ geometry

struct LayeredMedium {
  std::optional<double> core_radius;
  double R = 2.0;
  double c = -1.0;
  double delta = 0.0;
  LameParams base;

  void validate() const {
    base.validate();
    if (!(R > 0) || !std::isfinite(R)) fail(ErrorKind::validation, "shell radius must be positive", R);
    if (core_radius && !(*core_radius > 0 && *core_radius < R))
      fail(ErrorKind::invalid_geometry, "core radius must lie in (0, R)", *core_radius);
    if (!std::isfinite(c) || c == 0.0) fail(ErrorKind::invalid_multiplier, "shell multiplier must be finite and nonzero", c);
    if (!(delta >= 0) || !std::isfinite(delta)) fail(ErrorKind::validation, "loss must be nonnegative", delta);
  }

  // Real part A(r) of the modulus factor on the layer containing r.
  double A_at(double r) const {
    if (core_radius && r < *core_radius) return 1.0;
    return r < R ? c : 1.0;
  }
};

struct SourceMode {
  int n = 2;
  int family = 1;
  int k = 0;
  cd gamma = 1.0;
};

// F(q x) = sum gamma G^{n,family,k} Y_n(x) on the sphere |x| = q.
struct SourceSpec {
  double q = 3.0;
  std::vector<SourceMode> modes;
  double zero_mean_residual = 0.0;

  int max_degree() const {
    int m = 0;
    for (const auto& s : modes) m = std::max(m, s.n);
    return m;
  }

  void validate(double R) const {
    if (!(q > R) || !std::isfinite(q)) fail(ErrorKind::invalid_geometry, "source radius must exceed R", q);
    for (const auto& s : modes) {
      if (s.n < 2) fail(ErrorKind::unsupported_degree, "source modes need n >= 2", s.n);
      if (s.family < 1 || s.family > 3) fail(ErrorKind::validation, "source family must be 1, 2 or 3", s.family);
      if (s.k < 0 || s.k >= family_multiplicity(s.n, s.family))
        fail(ErrorKind::invalid_index, "source index k out of range", s.k);
      if (!std::isfinite(s.gamma.real()) || !std::isfinite(s.gamma.imag()))
        fail(ErrorKind::validation, "source amplitude must be finite");
    }
  }

  // Density coefficients by degree.
  SurfaceExpansion density() const {
    SurfaceExpansion F(3);
    for (const auto& s : modes) F.add(s.n, s.gamma * kernel_basis(s.n, s.family)[s.k]);
    return F;
  }
};

// Coefficients gamma_{n,i,k} = int F(q x) . conj(G Y_n) for n = 2..n_max.
// Degree-1 content is dropped (G^1 = 0); nonzero mean is rejected.
inline SourceSpec project_source(double q, const std::vector<CVec>& samples, const SphereQuadrature& quad, int n_max,
                                 double tol = 1e-12) {
  if (n_max < 2) fail(ErrorKind::invalid_argument, "n_max must be >= 2", n_max);
  if (quad.exactness < 2 * n_max) fail(ErrorKind::accuracy, "quadrature exactness below 2 n_max", quad.exactness);
  if (samples.size() != quad.size()) fail(ErrorKind::invalid_argument, "one sample per quadrature node required");
  const auto C = project(quad, samples, n_max);
  double power = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) power += quad.weights[i] * samples[i].squaredNorm();
  SourceSpec s;
  s.q = q;
  // int F dS / |S^2| from the degree-0 coefficient
  s.zero_mean_residual = C[0].norm() / std::sqrt(4 * kPi);
  if (s.zero_mean_residual > 1e-8 * std::max(1.0, std::sqrt(power)))
    fail(ErrorKind::zero_mean, "source density has nonzero mean", s.zero_mean_residual);
  for (int n = 2; n <= n_max; ++n)
    for (int f = 1; f <= 3; ++f) {
      const auto& G = kernel_basis(n, f);
      for (int k = 0; k < int(G.size()); ++k) {
        const cd g = frobenius(C[n], G[k]);
        if (std::abs(g) > tol) s.modes.push_back({n, f, k, g});
      }
    }
  return s;
}

// ------------------------------------------------------------ sectors

// Reference directions of one rotation sector: component 0 is G at degree n;
// spheroidal sectors add the companion degree n-2 (family 2) or n+2
// (family 3) that the Lame correction terms couple to.
struct Sector {
  int n = 2;
  int family = 1;
  std::vector<int> degree;
  std::vector<CMat> dir;

  int dim() const { return int(dir.size()); }
};

inline Sector make_sector(const CMat& G, int family) {
  Sector s;
  s.n = degree_of(G);
  s.family = family;
  s.degree.push_back(s.n);
  s.dir.push_back(G);
  if (family == 2) {
    s.degree.push_back(s.n - 2);
    s.dir.push_back(lower_rows(t3_row(G)));
  } else if (family == 3) {
    s.degree.push_back(s.n + 2);
    s.dir.push_back(raise_rows(t1_row(G)));
  }
  return s;
}

inline CVec sector_components(const Sector& s, const SurfaceExpansion& e) {
  CVec v(s.dim());
  for (int i = 0; i < s.dim(); ++i) v[i] = frobenius(e.at(s.degree[i]), s.dir[i]) / frobenius(s.dir[i], s.dir[i]);
  return v;
}

inline SurfaceExpansion sector_expansion(const Sector& s, const CVec& v) {
  SurfaceExpansion e(3);
  for (int i = 0; i < s.dim(); ++i) e.add(s.degree[i], v[i] * s.dir[i]);
  return e;
}

inline std::vector<ModeField> sector_interior(const Sector& s, const LameParams& p, double rho) {
  std::vector<ModeField> b;
  for (const auto& d : s.dir) b.push_back(interior_mode(d, p, rho));
  return b;
}

inline std::vector<ModeField> sector_exterior(const Sector& s, const LameParams& p, double rho) {
  std::vector<ModeField> b;
  for (const auto& d : s.dir) b.push_back(exterior_mode(d, p, rho));
  return b;
}

// Interfaces radii[0] < ... < radii[m-1]; factors[k] scales (lambda, mu) on
// layer k, i.e. between radii[k-1] and radii[k].
struct LayerSpec {
  std::vector<double> radii;
  std::vector<cd> factors;

  void validate() const {
    if (radii.empty() || factors.size() != radii.size() + 1)
      fail(ErrorKind::invalid_argument, "layer spec needs m radii and m + 1 factors");
    for (std::size_t i = 0; i < radii.size(); ++i)
      if (!(radii[i] > 0) || (i && !(radii[i] > radii[i - 1])))
        fail(ErrorKind::invalid_geometry, "interface radii must be positive and increasing");
    for (const auto& a : factors)
      if (a == cd(0.0)) fail(ErrorKind::invalid_multiplier, "layer factor must be nonzero");
  }
};

inline LayerSpec layers_of(const LayeredMedium& m, double q) {
  LayerSpec L;
  const cd loss(0.0, m.delta);
  if (m.core_radius) {
    L.radii.push_back(*m.core_radius);
    L.factors.push_back(1.0 + loss);
  }
  L.radii.push_back(m.R);
  L.factors.push_back(m.c + loss);
  L.radii.push_back(q);
  L.factors.push_back(1.0 + loss);
  L.factors.push_back(1.0 + loss);
  return L;
}

struct SectorSolution {
  Sector sector;
  LayerSpec layers;
  LameParams base;
  std::vector<CVec> interior_amp;  // per layer, empty on the outermost
  std::vector<CVec> exterior_amp;  // per layer, empty on the innermost
  double condition = 0.0;

  int layer_count() const { return int(layers.factors.size()); }
  double r_in(int k) const { return k == 0 ? 0.0 : layers.radii[k - 1]; }
  double r_out(int k) const { return k + 1 == layer_count() ? kInf : layers.radii[k]; }

  ModeField layer_field(int k) const {
    ModeField u;
    if (interior_amp[k].size()) {
      const auto b = sector_interior(sector, base, r_out(k));
      for (int i = 0; i < sector.dim(); ++i) u += interior_amp[k][i] * b[i];
    }
    if (exterior_amp[k].size()) {
      const auto b = sector_exterior(sector, base, r_in(k));
      for (int i = 0; i < sector.dim(); ++i) u += exterior_amp[k][i] * b[i];
    }
    return u.pruned();
  }

  PiecewiseField field() const {
    PiecewiseField f;
    for (int k = 0; k < layer_count(); ++k) f.branches.push_back({r_in(k), r_out(k), layer_field(k)});
    return f;
  }
};

// Dense interface system for one sector: unknowns are the layer amplitudes,
// rows are displacement continuity and the jump of the factor-weighted
// traction at every interface.
struct InterfaceSystem {
  CMat M;
  std::vector<int> int_offset, ext_offset;
};

inline InterfaceSystem interface_system(const Sector& s, const LayerSpec& L, const LameParams& p) {
  L.validate();
  const int m = int(L.radii.size()), d = s.dim(), layers = m + 1;
  InterfaceSystem sys;
  int N = 0;
  for (int k = 0; k < layers; ++k) {
    sys.int_offset.push_back(k < m ? N : -1);
    if (k < m) N += d;
    sys.ext_offset.push_back(k > 0 ? N : -1);
    if (k > 0) N += d;
  }
  sys.M = CMat::Zero(2 * d * m, N);
  for (int i = 0; i < m; ++i) {
    const double r = L.radii[i];
    // layer i (inside, sign -1) and layer i+1 (outside, sign +1)
    for (int side = 0; side < 2; ++side) {
      const int k = i + side;
      const double sgn = side ? 1.0 : -1.0;
      auto put = [&](const std::vector<ModeField>& basis, int off) {
        for (int b = 0; b < d; ++b) {
          const CVec u = sector_components(s, basis[b].trace(r));
          const CVec t = sector_components(s, analytic_traction(basis[b], r, p.lambda, p.mu));
          for (int e = 0; e < d; ++e) {
            sys.M(2 * d * i + e, off + b) += sgn * u[e];
            sys.M(2 * d * i + d + e, off + b) += sgn * L.factors[k] * t[e];
          }
        }
      };
      if (sys.int_offset[k] >= 0) put(sector_interior(s, p, L.radii[k]), sys.int_offset[k]);
      if (sys.ext_offset[k] >= 0) put(sector_exterior(s, p, L.radii[k - 1]), sys.ext_offset[k]);
    }
  }
  return sys;
}

inline Eigen::VectorXd row_scales(const CMat& M) {
  Eigen::VectorXd s(M.rows());
  for (int i = 0; i < M.rows(); ++i) {
    const double m = M.row(i).cwiseAbs().maxCoeff();
    s[i] = m > 0 ? 1.0 / m : 1.0;
  }
  return s;
}

// Singular values of the row-equilibrated interface matrix, descending.
inline Eigen::VectorXd interface_singular_values(const Sector& s, const LayerSpec& L, const LameParams& p) {
  const auto sys = interface_system(s, L, p);
  return Eigen::JacobiSVD<CMat>(row_scales(sys.M).asDiagonal() * sys.M).singularValues();
}

// jumps[i] = sector components of the weighted traction jump at radii[i].
inline SectorSolution solve_sector(const Sector& s, const LayerSpec& L, const std::vector<CVec>& jumps,
                                   const LameParams& p, double max_condition = 1e15) {
  const auto sys = interface_system(s, L, p);
  const int m = int(L.radii.size()), d = s.dim();
  if (int(jumps.size()) != m) fail(ErrorKind::invalid_argument, "one jump vector per interface required");
  CVec rhs = CVec::Zero(2 * d * m);
  for (int i = 0; i < m; ++i) {
    if (jumps[i].size() != d) fail(ErrorKind::invalid_argument, "jump vector has wrong sector dimension");
    rhs.segment(2 * d * i + d, d) = jumps[i];
  }
  const Eigen::VectorXd w = row_scales(sys.M);
  const CMat Ms = w.asDiagonal() * sys.M;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<CMat>(Ms).singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!std::isfinite(cond) || cond > max_condition)
    fail(ErrorKind::singular_system, "interface system is singular (near-resonant multiplier)", cond);
  const CVec x = Ms.partialPivLu().solve(w.asDiagonal() * rhs);
  SectorSolution sol;
  sol.sector = s;
  sol.layers = L;
  sol.base = p;
  sol.condition = cond;
  for (int k = 0; k <= m; ++k) {
    sol.interior_amp.push_back(sys.int_offset[k] >= 0 ? CVec(x.segment(sys.int_offset[k], d)) : CVec());
    sol.exterior_amp.push_back(sys.ext_offset[k] >= 0 ? CVec(x.segment(sys.ext_offset[k], d)) : CVec());
  }
  return sol;
}

// ------------------------------------------------------------ full problem

struct ModeSolution {
  SourceMode mode;
  SectorSolution sol;
  PiecewiseField field;
};

inline double max_condition_for(const LayeredMedium& m) { return m.delta > 0 ? 1e15 : 1e10; }

inline ModeSolution solve_mode(const LayeredMedium& medium, const SourceSpec& source, std::size_t index) {
  medium.validate();
  source.validate(medium.R);
  if (index >= source.modes.size()) fail(ErrorKind::invalid_index, "source mode index out of range", double(index));
  const auto& sm = source.modes[index];
  const Sector s = make_sector(kernel_basis(sm.n, sm.family)[sm.k], sm.family);
  const LayerSpec L = layers_of(medium, source.q);
  std::vector<CVec> jumps(L.radii.size(), CVec::Zero(s.dim()));
  jumps.back()[0] = sm.gamma;
  ModeSolution out;
  out.mode = sm;
  out.sol = solve_sector(s, L, jumps, medium.base, max_condition_for(medium));
  out.field = out.sol.field();
  return out;
}

inline std::vector<ModeSolution> solve(const LayeredMedium& medium, const SourceSpec& source, int threads = 0) {
  return parallel_map<ModeSolution>(
      source.modes.size(), [&](std::size_t i) { return solve_mode(medium, source, i); }, threads);
}

inline std::vector<PiecewiseField> fields_of(const std::vector<ModeSolution>& s) {
  std::vector<PiecewiseField> f;
  for (const auto& m : s) f.push_back(m.field);
  return f;
}

inline CVec eval_field(const std::vector<ModeSolution>& sols, const Vec3& x, Side side = Side::outer) {
  CVec v = CVec::Zero(3);
  for (const auto& s : sols) v += s.field.eval(x, side);
  return v;
}

// ------------------------------------------------------------ residuals

struct ResidualReport {
  double lame = 0;          // max relative FD Lame residual over all layers
  double continuity = 0;    // max relative displacement jump at interfaces
  double traction = 0;      // max relative weighted-traction mismatch
  double source_jump = 0;   // jump at q against the source density, relative
};

// Recompute every interface condition from the full surface expansions (not
// only the sector projections), plus FD Lame residuals inside each layer.
inline ResidualReport residual_check(const std::vector<ModeSolution>& sols, const SourceSpec& source,
                                     int lame_points = 20, std::uint64_t seed = 7) {
  ResidualReport rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u01(0.1, 0.9);
  for (const auto& ms : sols) {
    const auto& S = ms.sol;
    const auto& br = ms.field.branches;
    const auto& p = S.base;
    for (std::size_t i = 0; i < S.layers.radii.size(); ++i) {
      const double r = S.layers.radii[i];
      const auto ui = br[i].u.trace(r), uo = br[i + 1].u.trace(r);
      const double us = std::max({ui.max_abs(), uo.max_abs(), 1e-300});
      rep.continuity = std::max(rep.continuity, (uo - ui).max_abs() / us);
      const auto ti = S.layers.factors[i] * analytic_traction(br[i].u, r, p.lambda, p.mu);
      const auto to = S.layers.factors[i + 1] * analytic_traction(br[i + 1].u, r, p.lambda, p.mu);
      SurfaceExpansion want(3);
      if (r == source.q) want.add(ms.mode.n, ms.mode.gamma * S.sector.dir[0]);
      const double ts = std::max({ti.max_abs(), to.max_abs(), want.max_abs(), 1e-300});
      const double mis = (to - ti - want).max_abs() / ts;
      rep.traction = std::max(rep.traction, mis);
      if (r == source.q) rep.source_jump = std::max(rep.source_jump, mis);
    }
    for (int k = 0; k < S.layer_count(); ++k) {
      const double a = S.r_in(k), b = std::isfinite(S.r_out(k)) ? S.r_out(k) : 3.0 * a;
      for (int t = 0; t < lame_points; ++t) {
        const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
        const double r = a + (b - a) * u01(rng);
        rep.lame = std::max(rep.lame, lame_residual_fd(br[k].u, r * d, p.lambda, p.mu));
      }
    }
  }
  return rep;
}

}  // namespace plasmon
