#pragma once

// Vector fields built from solid harmonics.  A Term {l, p, rho, C} is the
// field x -> (r/rho)^p C Y_l(x/r), with C a rows x (2l+1) coefficient matrix.
// Keeping the reference radius per term avoids raw r^n overflow at high degree.

#include <limits>
#include <map>
#include <vector>

#include "plasmon/harmonics.hpp"

namespace plasmon {

struct Term {
  int l = 0;
  int p = 0;
  double rho = 1.0;
  CMat C;
};

// Coefficients of a field restricted to a sphere: degree -> rows x (2l+1).
class SurfaceExpansion {
 public:
  explicit SurfaceExpansion(int rows = 3) : rows_(rows) {}

  int rows() const { return rows_; }
  const std::map<int, CMat>& degrees() const { return deg_; }

  void add(int l, const CMat& M) {
    auto it = deg_.find(l);
    if (it == deg_.end())
      deg_.emplace(l, M);
    else
      it->second += M;
  }

  CMat at(int l) const {
    auto it = deg_.find(l);
    if (it == deg_.end()) return CMat::Zero(rows_, 2 * l + 1);
    return it->second;
  }

  int max_degree() const { return deg_.empty() ? -1 : deg_.rbegin()->first; }

  SurfaceExpansion& operator+=(const SurfaceExpansion& o) {
    for (const auto& [l, M] : o.deg_) add(l, M);
    return *this;
  }
  SurfaceExpansion& operator*=(cd s) {
    for (auto& [l, M] : deg_) M *= s;
    return *this;
  }
  friend SurfaceExpansion operator+(SurfaceExpansion a, const SurfaceExpansion& b) { return a += b; }
  friend SurfaceExpansion operator-(SurfaceExpansion a, SurfaceExpansion b) {
    b *= -1.0;
    return a += b;
  }
  friend SurfaceExpansion operator*(cd s, SurfaceExpansion a) { return a *= s; }

  // Multiply by the unit normal component x_hat_j.
  SurfaceExpansion mul_xhat(int j) const {
    SurfaceExpansion out(rows_);
    for (const auto& [l, M] : deg_) {
      out.add(l + 1, M * xhat_up(l, j));
      if (l >= 1) out.add(l - 1, M * xhat_down(l, j));
    }
    return out;
  }

  // Row r of this expansion as a one-row expansion.
  SurfaceExpansion row(int r) const {
    SurfaceExpansion out(1);
    for (const auto& [l, M] : deg_) out.add(l, M.row(r));
    return out;
  }

  // Stack one-row expansions into a multi-row expansion.
  static SurfaceExpansion stack(const std::vector<SurfaceExpansion>& rows) {
    SurfaceExpansion out(int(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (const auto& [l, M] : rows[r].deg_) {
        CMat B = CMat::Zero(out.rows_, 2 * l + 1);
        B.row(r) = M.row(0);
        out.add(l, B);
      }
    return out;
  }

  CVec eval(const Vec3& d) const {
    CVec v = CVec::Zero(rows_);
    if (deg_.empty()) return v;
    const auto Y = eval_Y_all(max_degree(), d);
    for (const auto& [l, M] : deg_) v += M * Y[l];
    return v;
  }

  // sum_l tr(A_l B_l^H): the L2(S^2) pairing <f, g> = int f . conj(g).
  cd inner(const SurfaceExpansion& o) const {
    cd s = 0.0;
    for (const auto& [l, M] : deg_) {
      auto it = o.deg_.find(l);
      if (it != o.deg_.end()) s += (M.array() * it->second.conjugate().array()).sum();
    }
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [l, M] : deg_)
      if (M.size()) m = std::max(m, M.cwiseAbs().maxCoeff());
    return m;
  }

 private:
  int rows_;
  std::map<int, CMat> deg_;
};

class ModeField {
 public:
  explicit ModeField(int rows = 3) : rows_(rows) {}

  int rows() const { return rows_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add(Term t) {
    if (t.l < 0) return;
    if (t.C.rows() != rows_ || t.C.cols() != 2 * t.l + 1)
      fail(ErrorKind::invalid_argument, "term coefficient shape mismatch");
    for (auto& u : terms_)
      if (u.l == t.l && u.p == t.p && u.rho == t.rho) {
        u.C += t.C;
        return;
      }
    terms_.push_back(std::move(t));
  }
  void add(int l, int p, double rho, const CMat& C) { add(Term{l, p, rho, C}); }

  ModeField& operator+=(const ModeField& o) {
    if (o.rows_ != rows_) fail(ErrorKind::invalid_argument, "row mismatch in field sum");
    for (const auto& t : o.terms_) add(t);
    return *this;
  }
  ModeField& operator*=(cd s) {
    for (auto& t : terms_) t.C *= s;
    return *this;
  }
  friend ModeField operator+(ModeField a, const ModeField& b) { return a += b; }
  friend ModeField operator-(ModeField a, ModeField b) {
    b *= -1.0;
    return a += b;
  }
  friend ModeField operator*(cd s, ModeField a) { return a *= s; }

  int max_degree() const {
    int m = -1;
    for (const auto& t : terms_) m = std::max(m, t.l);
    return m;
  }

  CVec eval(const Vec3& x) const {
    CVec v = CVec::Zero(rows_);
    if (terms_.empty()) return v;
    const double r = x.norm();
    if (r == 0.0) {
      for (const auto& t : terms_) {
        if (t.p < 0) fail(ErrorKind::domain, "singular field evaluated at the origin");
        if (t.p == 0 && t.l == 0) v += t.C.col(0) / std::sqrt(4.0 * kPi);
      }
      return v;
    }
    const auto Y = eval_Y_all(max_degree(), x / r);
    for (const auto& t : terms_) v += std::pow(r / t.rho, t.p) * (t.C * Y[t.l]);
    return v;
  }

  // Partial derivative along x_j.
  ModeField derivative(int j) const {
    ModeField out(rows_);
    for (const auto& t : terms_) {
      const double k = double(t.p - t.l) / (2.0 * t.l + 1.0);
      if (t.l >= 1) {
        const double a = 1.0 + k;
        if (a != 0.0) out.add(t.l - 1, t.p - 1, t.rho, (a / t.rho) * (t.C * lower_matrix(t.l, j)));
      }
      if (k != 0.0) out.add(t.l + 1, t.p - 1, t.rho, (-k / t.rho) * (t.C * raise_matrix(t.l, j)));
    }
    return out;
  }

  // Divergence of a 3-row field, as a one-row field.
  ModeField divergence() const {
    if (rows_ != 3) fail(ErrorKind::invalid_argument, "divergence needs a vector field");
    ModeField out(1);
    for (int j = 0; j < 3; ++j) {
      const ModeField d = derivative(j);
      for (const auto& t : d.terms_) out.add(t.l, t.p, t.rho, t.C.row(j));
    }
    return out;
  }

  // Multiply by r^2.
  ModeField times_r2() const {
    ModeField out(rows_);
    for (const auto& t : terms_) out.add(t.l, t.p + 2, t.rho, t.rho * t.rho * t.C);
    return out;
  }

  // Gradient of a one-row field as a 3-row field.
  ModeField gradient() const {
    if (rows_ != 1) fail(ErrorKind::invalid_argument, "gradient needs a scalar field");
    ModeField out(3);
    for (int j = 0; j < 3; ++j) {
      const ModeField d = derivative(j);
      for (const auto& t : d.terms_) {
        CMat C = CMat::Zero(3, t.C.cols());
        C.row(j) = t.C.row(0);
        out.add(t.l, t.p, t.rho, C);
      }
    }
    return out;
  }

  SurfaceExpansion trace(double R) const {
    SurfaceExpansion s(rows_);
    for (const auto& t : terms_) s.add(t.l, std::pow(R / t.rho, t.p) * t.C);
    return s;
  }

  // Pointwise complex conjugate, still expressed in the Y basis.
  ModeField conj() const {
    ModeField out(rows_);
    for (const auto& t : terms_) out.add(t.l, t.p, t.rho, sigma_conjugate(t.C));
    return out;
  }
  ModeField real_part() const { return 0.5 * (*this + conj()); }
  ModeField imag_part() const { return cd(0.0, -0.5) * (*this - conj()); }

  ModeField pruned(double tol = 0.0) const {
    ModeField out(rows_);
    for (const auto& t : terms_)
      if (t.C.size() && t.C.cwiseAbs().maxCoeff() > tol) out.add(t);
    return out;
  }

 private:
  int rows_;
  std::vector<Term> terms_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Analytic traction lambda (div u) x_hat + mu (grad u + grad u^T) x_hat on |x| = R.
inline SurfaceExpansion analytic_traction(const ModeField& u, double R, cd lambda, cd mu) {
  if (u.rows() != 3) fail(ErrorKind::invalid_argument, "traction needs a vector field");
  std::array<SurfaceExpansion, 3> g{SurfaceExpansion(3), SurfaceExpansion(3), SurfaceExpansion(3)};
  for (int j = 0; j < 3; ++j) g[j] = u.derivative(j).trace(R);
  SurfaceExpansion div(1);
  for (int j = 0; j < 3; ++j) div += g[j].row(j);
  std::vector<SurfaceExpansion> rows;
  for (int i = 0; i < 3; ++i) {
    SurfaceExpansion ti = lambda * div.mul_xhat(i);
    for (int j = 0; j < 3; ++j) {
      ti += mu * g[j].row(i).mul_xhat(j);  // (grad u) x_hat, component i
      ti += mu * g[i].row(j).mul_xhat(j);  // (grad u)^T x_hat, component i
    }
    rows.push_back(ti);
  }
  return SurfaceExpansion::stack(rows);
}

// A field valid on r_in <= |x| < r_out.
struct Branch {
  double r_in = 0.0;
  double r_out = kInf;
  ModeField u;
};

enum class Side { inner, outer };

struct PiecewiseField {
  std::vector<Branch> branches;

  const Branch& branch_at(double r, Side side = Side::outer) const {
    for (const auto& b : branches) {
      const bool in = side == Side::outer ? (r >= b.r_in && r < b.r_out)
                                          : (r > b.r_in && r <= b.r_out);
      if (in) return b;
    }
    if (side == Side::inner && r == 0.0 && !branches.empty()) return branches.front();
    fail(ErrorKind::domain, "radius outside every branch", r);
  }

  CVec eval(const Vec3& x, Side side = Side::outer) const {
    return branch_at(x.norm(), side).u.eval(x);
  }
};

}  // namespace plasmon
