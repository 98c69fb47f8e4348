#pragma once

// Galerkin approximation of the elastic Neumann-Poincare operator K* on a
// sphere, built from one-sided conormal traces of single-layer potentials.

#include "plasmon/plasmon_waves.hpp"

namespace plasmon {

inline double np_eigenvalue_map(double c) {
  if (c == 1.0) fail(ErrorKind::pole, "K* eigenvalue map has a pole at c = 1");
  return (c + 1.0) / (2.0 * (c - 1.0));
}

struct KelvinCoeffs {
  double alpha, beta;
};

inline KelvinCoeffs kelvin_coeffs(const LameParams& p) {
  return {0.5 * (1.0 / p.mu + 1.0 / (2.0 * p.mu + p.lambda)), 0.5 * (1.0 / p.mu - 1.0 / (2.0 * p.mu + p.lambda))};
}

inline Eigen::Matrix3d kelvin_matrix(const Vec3& x, const LameParams& p) {
  const double r = x.norm();
  if (!(r > 0)) fail(ErrorKind::singularity, "Kelvin matrix is singular at the origin");
  const auto [a, b] = kelvin_coeffs(p);
  return -(a / (4 * kPi)) * Eigen::Matrix3d::Identity() / r - (b / (4 * kPi)) * (x * x.transpose()) / (r * r * r);
}

// Traction kernel T_ij(z, nu) = lambda nu_i d_k Phi_kj + mu (d_k Phi_ij nu_k + d_i Phi_kj nu_k), z = x - y.
inline Eigen::Matrix3d kelvin_traction_kernel(const Vec3& z, const Vec3& nu, const LameParams& p) {
  const double r2 = z.squaredNorm(), r = std::sqrt(r2), r3 = r2 * r, r5 = r3 * r2;
  const auto [a, b] = kelvin_coeffs(p);
  const double ca = a / (4 * kPi), cb = b / (4 * kPi);
  // d_k Phi_ij = ca delta_ij z_k / r^3 - cb [(delta_ik z_j + delta_jk z_i) / r^3 - 3 z_i z_j z_k / r^5]
  auto dPhi = [&](int k, int i, int j) {
    double v = (i == j ? ca * z[k] / r3 : 0.0);
    v -= cb * (((i == k) ? z[j] : 0.0) / r3 + ((j == k) ? z[i] : 0.0) / r3 - 3.0 * z[i] * z[j] * z[k] / r5);
    return v;
  };
  Eigen::Matrix3d T;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double divj = 0, s1 = 0, s2 = 0;
      for (int k = 0; k < 3; ++k) {
        divj += dPhi(k, k, j);
        s1 += dPhi(k, i, j) * nu[k];
        s2 += dPhi(i, k, j) * nu[k];
      }
      T(i, j) = p.lambda * nu[i] * divj + p.mu * (s1 + s2);
    }
  return T;
}

struct NPEigen {
  double value = 0;
  double imag = 0;
  int degree = 0;
  int J = 0;
};

struct NPOptions {
  double eps = 1e-4;
  int azimuth_points = 32;
  int panel_order = 8;
};

namespace detail {
// Surface density basis: index list of (degree l, orthonormal sector columns).
struct DensityBasis {
  std::vector<int> degree, J;
  std::vector<CMat> C;
};

inline DensityBasis np_basis(int n_max) {
  DensityBasis b;
  for (int l = 1; l <= n_max; ++l)
    for (int family : {2, 1, 3}) {
      const int J = family == 1 ? l : (family == 2 ? l - 1 : l + 1);
      if (l == 1 && J == 1) continue;  // rigid rotations
      const CMat S = sector_basis(l, family);
      const CMat Q = S.householderQr().householderQ() * CMat::Identity(S.rows(), S.cols());
      for (int k = 0; k < Q.cols(); ++k) {
        b.degree.push_back(l);
        b.J.push_back(J);
        b.C.push_back(mat_of(Q.col(k), l));
      }
    }
  return b;
}

// Panel edges in the polar angle about the target: eps, 2 eps, 4 eps, ... pi.
inline std::vector<double> polar_edges(double eps) {
  std::vector<double> e{0.0, eps};
  while (e.back() * 2 < kPi) e.push_back(e.back() * 2);
  e.push_back(kPi);
  return e;
}
}  // namespace detail

// Eigenvalues of the Galerkin matrix of K* on vector densities of degree
// 1..n_max (degree 0 and rotations excluded), sorted ascending.
inline std::vector<NPEigen> np_galerkin_spectrum(double R, const LameParams& p, int n_max, const SphereQuadrature& q,
                                                 const NPOptions& opt = {}) {
  if (!(R > 0)) fail(ErrorKind::invalid_argument, "radius must be positive");
  if (n_max < 1) fail(ErrorKind::invalid_argument, "n_max must be >= 1");
  if (q.exactness < 2 * n_max + 4) fail(ErrorKind::accuracy, "quadrature exactness below 2 n_max + 4", q.exactness);
  p.validate();
  const auto basis = detail::np_basis(n_max);
  const int nb = int(basis.C.size());
  const int nh = (n_max + 1) * (n_max + 1);
  auto hidx = [](int l, int i) { return l * l + i; };

  const auto edges = detail::polar_edges(opt.eps);
  const GaussRule gl = gauss_legendre(opt.panel_order);

  CMat M = CMat::Zero(nb, nb);
  for (std::size_t t = 0; t < q.size(); ++t) {
    const Vec3 th = q.nodes[t];
    const Vec3 e1 = (std::abs(th.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(th).normalized();
    const Vec3 e2 = th.cross(e1);
    // W[i][j] row over harmonics, averaged over both sides
    std::array<std::array<CVec, 3>, 3> W;
    for (auto& r : W)
      for (auto& v : r) v = CVec::Zero(nh);
    for (double side : {1.0, -1.0}) {
      const Vec3 x = R * (1.0 + side * opt.eps) * th;
      for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double a = edges[e], b = edges[e + 1];
        for (int g = 0; g < opt.panel_order; ++g) {
          const double tp = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[g];
          const double wt = 0.5 * (b - a) * gl.w[g] * std::sin(tp) * (2 * kPi / opt.azimuth_points) * R * R * 0.5;
          for (int k = 0; k < opt.azimuth_points; ++k) {
            const double ph = 2 * kPi * k / opt.azimuth_points;
            const Vec3 y = std::cos(tp) * th + std::sin(tp) * (std::cos(ph) * e1 + std::sin(ph) * e2);
            const Eigen::Matrix3d K = kelvin_traction_kernel(x - R * y, th, p);
            const auto Y = eval_Y_all(n_max, y);
            for (int l = 0; l <= n_max; ++l)
              for (int m = 0; m < 2 * l + 1; ++m) {
                const cd yv = wt * Y[l][m];
                for (int i = 0; i < 3; ++i)
                  for (int j = 0; j < 3; ++j) W[i][j][hidx(l, m)] += K(i, j) * yv;
              }
          }
        }
      }
    }
    const auto Yt = eval_Y_all(n_max, th);
    for (int bcol = 0; bcol < nb; ++bcol) {
      const CMat& C = basis.C[bcol];
      const int l = basis.degree[bcol];
      Eigen::Vector3cd T = Eigen::Vector3cd::Zero();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int m = 0; m < 2 * l + 1; ++m) T[i] += W[i][j][hidx(l, m)] * C(j, m);
      for (int arow = 0; arow < nb; ++arow) {
        const CVec phi = basis.C[arow] * Yt[basis.degree[arow]];
        M(arow, bcol) += q.weights[t] * phi.dot(T);
      }
    }
  }

  Eigen::ComplexEigenSolver<CMat> es(M);
  std::vector<NPEigen> out;
  for (int i = 0; i < nb; ++i) {
    const CVec v = es.eigenvectors().col(i);
    std::map<std::pair<int, int>, double> weight;
    for (int b = 0; b < nb; ++b) weight[{basis.degree[b], basis.J[b]}] += std::norm(v[b]);
    auto best = std::max_element(weight.begin(), weight.end(),
                                 [](const auto& x, const auto& y) { return x.second < y.second; });
    out.push_back({es.eigenvalues()[i].real(), es.eigenvalues()[i].imag(), best->first.first, best->first.second});
  }
  std::sort(out.begin(), out.end(), [](const NPEigen& a, const NPEigen& b) {
    if (a.value != b.value) return a.value < b.value;
    return std::make_pair(a.degree, a.J) < std::make_pair(b.degree, b.J);
  });
  return out;
}

}  // namespace plasmon
