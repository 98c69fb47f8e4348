#include <gtest/gtest.h>

#include "plasmon/scenarios.hpp"

using namespace plasmon;

namespace {
const LameParams kP{1.0, 1.0};

LayeredMedium medium(std::optional<double> core, double R, double c, double delta, LameParams p = kP) {
  LayeredMedium m;
  m.core_radius = core;
  m.R = R;
  m.c = c;
  m.delta = delta;
  m.base = p;
  return m;
}

SourceSpec single(double q, int n, int family, int k = 0, cd gamma = 1.0) {
  SourceSpec s;
  s.q = q;
  s.modes.push_back({n, family, k, gamma});
  return s;
}

double exact_E(const LayeredMedium& m, const SourceSpec& s) { return dissipation_E(solve(m, s), m, s).E; }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int k = int(x.size());
  for (int i = 0; i < k; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

// e1..e5 from the four interface conditions and continuity at q by a direct
// 5x5 solve; e6 from the traction jump at q (units of mu).
ECoefficients e_by_solve(int n, double c, double re, double q) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
  const double N = n;
  A(0, 0) = 1, A(0, 1) = 1, b[0] = 1;
  A(1, 0) = c * (N - 1), A(1, 1) = -c * (N + 2), b[1] = N - 1;
  A(2, 0) = std::pow(re, N), A(2, 1) = std::pow(re, -N - 1), A(2, 2) = -std::pow(re, N), A(2, 3) = -std::pow(re, -N - 1);
  A(3, 0) = c * (N - 1) * std::pow(re, N - 1), A(3, 1) = -c * (N + 2) * std::pow(re, -N - 2);
  A(3, 2) = -(N - 1) * std::pow(re, N - 1), A(3, 3) = (N + 2) * std::pow(re, -N - 2);
  A(4, 2) = std::pow(q, N), A(4, 3) = std::pow(q, -N - 1), A(4, 4) = -std::pow(q, -N - 1);
  const Eigen::VectorXd e = A.lu().solve(b);
  ECoefficients out{e[0], e[1], e[2], e[3], e[4], 0.0};
  out.e6 = -(N + 2) * e[4] * std::pow(q, -N - 2) - ((N - 1) * e[2] * std::pow(q, N - 1) - (N + 2) * e[3] * std::pow(q, -N - 2));
  return out;
}
}  // namespace

// ------------------------------------------------------------- schedule

TEST(Schedule, Examples) {
  EXPECT_EQ(schedule_n_delta(2.0, 0.01).n, 7);
  EXPECT_EQ(schedule_n_delta(2.0, 0.4).n, 2);
  EXPECT_EQ(schedule_n_delta(2.0, 1e-12).n, 40);
  EXPECT_TRUE(schedule_n_delta(2.0, 0.01).warning.empty());
  const auto s = schedule_n_delta(2.0, 1.5);
  EXPECT_EQ(s.n, 2);
  EXPECT_FALSE(s.warning.empty());
  EXPECT_THROW(schedule_n_delta(1.0, 0.1), Error);
  EXPECT_THROW(schedule_n_delta(2.0, 0.0), Error);
}

TEST(Schedule, MatchesIntegerSearch) {
  for (double R : {1.1, 1.5, 2.0, 3.0})
    for (double d : {0.3, 1e-2, 1e-4, 3e-7, 1e-10}) {
      int n = 0;
      while (!(std::pow(R, -n) < d)) ++n;
      EXPECT_EQ(schedule_n_delta(R, d).n, std::max(n, 2)) << R << " " << d;
    }
  EXPECT_EQ(schedule_n_delta(1.5, 1e-4).n, 23);
}

TEST(Schedule, ScaledLossBracket) {
  for (double d : log_grid(1e-2, 1e-6, 4)) {
    const int n = schedule_n_delta(2.0, d).n;
    const double x = d * std::pow(2.0, n);
    EXPECT_GT(x, 1.0);
    EXPECT_LE(x, 2.0);
  }
}

// --------------------------------------------------------- e coefficients

TEST(ECoefficients, ClosedFormsMatchInterfaceSolve) {
  for (int n = 2; n <= 6; ++n)
    for (double c : {-4.0, -2.0, -1.0})
      for (double re : {1.5, 2.0}) {
        const double q = 3.0;
        const auto e = e_coefficients(n, c, re, q), o = e_by_solve(n, c, re, q);
        const double rn = std::pow(re, n), rm = std::pow(re, -n - 1);
        EXPECT_NEAR(e.e1 + e.e2, 1.0, 1e-12);
        EXPECT_NEAR(e.e3 * rn + e.e4 * rm, e.e1 * rn + e.e2 * rm, 1e-12 * std::abs(e.e1 * rn));
        EXPECT_NEAR(e.e5 * std::pow(q, -n - 1), e.e3 * std::pow(q, n) + e.e4 * std::pow(q, -n - 1),
                    1e-12 * std::abs(e.e3 * std::pow(q, n)));
        for (auto [a, b] : {std::pair{e.e1, o.e1}, {e.e2, o.e2}, {e.e3, o.e3}, {e.e4, o.e4}, {e.e5, o.e5}, {e.e6, o.e6}})
          EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(b))) << n << " " << c << " " << re;
      }
}

TEST(ECoefficients, TractionJumpMatchesNumericOracle) {
  const auto quad = build_quadrature(14);
  for (const LameParams& p : {LameParams{1, 1}, LameParams{2, 0.5}})
    for (int n : {2, 4}) {
      const double c = -2.0, re = 2.0, q = 3.0;
      const auto e = e_coefficients(n, c, re, q);
      const CMat G = plasmon_kernel_family(n, 1, p)[0];
      // same construction as the witness, summed directly
      auto branch = [&](double a, double b) {
        ModeField u;
        u.add(n, n, 1.0, a * G);
        u.add(n, -n - 1, 1.0, b * G);
        return u;
      };
      const auto ti = numeric_traction(branch(e.e3, e.e4), q, p.lambda, p.mu, quad, n + 1);
      const auto to = numeric_traction(branch(0.0, e.e5), q, p.lambda, p.mu, quad, n + 1);
      SurfaceExpansion want(3);
      want.add(n, e.e6 * p.mu * G);
      EXPECT_LT((to - ti - want).max_abs(), 1e-8 * want.max_abs());
    }
}

TEST(ECoefficients, DegenerateE6IsRejected) {
  // e6 = 0 where (c-1)^2 (n^2+n-2) = (n+2+c(n-1))(n-1+c(n+2)) r_e^{2n+1}; bisect in c
  const int n = 2;
  const double re = 2.0, Re = std::pow(re, 5);
  auto f = [&](double c) { return (c - 1) * (c - 1) * 4 - (4 + c) * (1 + 4 * c) * Re; };
  double lo = -0.3, hi = -0.2;
  ASSERT_LT(f(lo) * f(hi), 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
  }
  EXPECT_TRUE(e6_degenerate(n, lo, re));
  try {
    witness_fixed_c(medium(1.0, re, lo, 1e-2), single(3.0, 2, 1));
    FAIL() << "degenerate e6 accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::witness_degeneracy);
  }
}

// ------------------------------------------------------------ witnesses

TEST(WitnessFixedC, AdmissibleUpperBoundLinearInDelta) {
  SourceSpec src;
  src.q = 3.0;
  src.modes = {{2, 1, 0, 1.0}, {3, 1, 2, -0.4}};
  std::vector<double> ds, Is, Es;
  for (double d : log_grid(1e-2, 1e-5, 1)) {
    const auto m = medium(1.0, 2.0, -4.0, d);
    const auto w = witness_fixed_c(m, src);
    const double E = exact_E(m, src);
    EXPECT_LT(w.residual, 1e-8);
    EXPECT_GE(w.I, E * (1 - 1e-9));
    ASSERT_EQ(w.tau.size(), 2u);
    EXPECT_NEAR(w.tau[0], 1.0 / (kP.mu * w.e[0].e6), 1e-14 * std::abs(w.tau[0]));
    ds.push_back(d);
    Is.push_back(w.I);
    Es.push_back(E);
  }
  EXPECT_NEAR(loglog_slope(ds, Is), 1.0, 0.05);
  EXPECT_NEAR(loglog_slope(ds, Es), 1.0, 0.05);
}

TEST(WitnessFixedC, Preconditions) {
  try {
    witness_fixed_c(medium(1.0, 2.0, -4.0, 1e-2), single(3.0, 2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis_violation);
  }
  try {
    witness_fixed_c(medium(0.8, 2.0, -4.0, 1e-2), single(3.0, 2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_geometry);
  }
}

TEST(WitnessNocore, LowerBoundGrowsLikeInverseDelta) {
  for (int family : {1, 2, 3}) {
    const int n = 2;
    const double c = plasmon_constants(kP, n)[family];
    const auto src = single(3.0, n, family, 0, -0.7);
    std::vector<double> ds, Js;
    for (double d : {1e-2, 1e-3, 1e-4}) {
      const auto m = medium(std::nullopt, 2.0, c, d);
      const auto w = witness_nocore(m, src);
      EXPECT_LT(w.residual, 1e-8);
      EXPECT_LT(w.tau[0], 0.0);  // same sign as Re gamma
      EXPECT_LE(w.J, exact_E(m, src) * (1 + 1e-9));
      // J = C0^2 / (4 C1 delta), C1 = P(psi_hat) / 2
      const auto psi = perfect_wave(kernel_basis(n, family)[0], family, 2.0, kP).field;
      const double C0 = source_pairing(src, {psi}).real(), C1 = 0.5 * pairing_P({psi}, kP);
      EXPECT_NEAR(w.J, C0 * C0 / (4 * C1 * d), 1e-10 * w.J);
      EXPECT_NEAR(w.tau[0], C0 / (2 * C1 * d), 1e-10 * std::abs(w.tau[0]));
      // reported fields refer to the original source
      EXPECT_NEAR(functional_J(w.v, w.psi, src, d, kP), w.J, 1e-12 * w.J);
      ds.push_back(d);
      Js.push_back(w.J);
    }
    EXPECT_NEAR(loglog_slope(ds, Js), -1.0, 1e-9);
  }
}

TEST(WitnessNocore, SmallAmplitudeWithMatchingSignIsPositive) {
  const double c = plasmon_constants(kP, 3).zeta1;
  const auto m = medium(std::nullopt, 2.0, c, 1e-3);
  for (double g : {1.0, -2.0}) {
    const auto src = single(3.0, 3, 1, 1, g);
    const auto psi = perfect_wave(kernel_basis(3, 1)[1], 1, 2.0, kP).field;
    const double tau = 1e-3 * (g > 0 ? 1 : -1);
    EXPECT_GT(functional_J({zero_field()}, scaled({psi}, tau), src, m.delta, kP), 0.0);
  }
}

TEST(WitnessNocore, Preconditions) {
  try {
    witness_nocore(medium(std::nullopt, 2.0, -3.0, 1e-2), single(3.0, 2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_witness);
  }
  try {
    witness_nocore(medium(std::nullopt, 2.0, -4.0, 1e-2), single(3.0, 2, 1, 0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_witness);
  }
}

TEST(WitnessCoreResonant, GrowthFlipsAcrossCriticalRadius) {
  const double R = 2.0;
  auto J_at = [&](double q, double d) {
    const int n = schedule_n_delta(R, d).n;
    const auto m = medium(1.0, R, plasmon_constants(kP, n).zeta1, d);
    const auto src = single(q, n, 1);
    const auto w = witness_core_resonant(m, src, 1, n);
    EXPECT_LT(w.residual, 1e-8);
    EXPECT_LE(w.J, exact_E(m, src) * (1 + 1e-9));
    return w.J;
  };
  std::vector<double> inv, lo, hi;
  for (double d : log_grid(1e-2, 1e-8, 1)) {
    inv.push_back(1 / d);
    lo.push_back(J_at(std::pow(R, 1.2), d));
    hi.push_back(J_at(std::pow(R, 1.8), d));
  }
  EXPECT_GT(loglog_slope(inv, lo), 0.0);
  EXPECT_LT(loglog_slope(inv, hi), 0.0);
  EXPECT_LT(hi.back(), hi.front());
}

TEST(WitnessCoreResonant, Preconditions) {
  const auto m = medium(1.0, 2.0, plasmon_constants(kP, 7).zeta1, 1e-2);
  try {
    witness_core_resonant(m, single(1.5, 7, 1), 1, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_geometry);
  }
  try {
    witness_core_resonant(m, single(2.5, 7, 1), 1, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis_violation);
  }
}

TEST(WitnessRadialNonresonant, TauAndBoundedUpperBound) {
  const double R = 2.0, q = std::pow(R, 1.8);
  std::vector<double> Is, wterm;
  std::vector<int> ns;
  for (double d : log_grid(1e-2, 1e-5, 2)) {
    const int n = schedule_n_delta(R, d).n;
    const auto m = medium(1.0, R, plasmon_constants(kP, n).zeta1, d);
    SourceSpec src = single(q, n, 1, 0, 1.0);
    src.modes.push_back({3, 1, 1, 0.5});
    const auto w = witness_radial_nonresonant(m, src, n);
    EXPECT_LT(w.residual, 1e-8);
    EXPECT_GE(w.I, exact_E(m, src) * (1 - 1e-9));
    EXPECT_NEAR(w.tau[0], -1.0 / ((2 * n + 1) * std::pow(q, n - 1)), 1e-14 * std::abs(w.tau[0]));
    Is.push_back(w.I);
    if (ns.empty() || ns.back() != n) {
      ns.push_back(n);
      wterm.push_back(0.5 / d * pairing_P({w.w[0]}, kP));
    }
  }
  // bounded along the sweep (the bound itself decays as delta -> 0)
  EXPECT_LE(*std::max_element(Is.begin(), Is.end()), 3.0 * Is.front());
  for (std::size_t i = 1; i < wterm.size(); ++i) EXPECT_LT(wterm[i], wterm[i - 1]) << "n = " << ns[i];
}

TEST(WitnessRadialNonresonant, RequiresSourceBeyondCriticalRadius) {
  const int n = 7;
  const auto m = medium(1.0, 2.0, plasmon_constants(kP, n).zeta1, 1e-2);
  try {
    witness_radial_nonresonant(m, single(2.5, n, 1), n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::hypothesis_violation);
  }
}

TEST(CompensatedWitnesses, SandwichAcrossConfigurations) {
  struct Case {
    std::optional<double> core;
    double c;
    SourceSpec src;
    LameParams p;
  };
  SourceSpec mixed;
  mixed.q = 2.6;
  mixed.modes = {{2, 1, 0, 1.0}, {3, 2, 1, -0.3}, {2, 3, 2, 0.8}};
  const std::vector<Case> cases = {
      {1.0, -4.0, single(3.0, 2, 1), kP},
      {std::nullopt, plasmon_constants(kP, 2).zeta2, single(3.0, 2, 2), kP},
      {0.7, -1.5, mixed, kP},
      {1.2, plasmon_constants(LameParams{-0.5, 1}, 3).zeta3, single(2.4, 3, 3, 4, cd(0, 2)),
       LameParams{-0.5, 1}},
  };
  for (const auto& cs : cases)
    for (double d : {1e-2, 1e-4}) {
      const auto m = medium(cs.core, 2.0, cs.c, d, cs.p);
      const double E = exact_E(m, cs.src);
      const auto up = witness_compensated_primal(m, cs.src);
      const auto lo = witness_compensated_dual(m, cs.src);
      EXPECT_LT(up.residual, 1e-8);
      EXPECT_LT(lo.residual, 1e-8);
      EXPECT_GE(up.I, E * (1 - 1e-9));
      EXPECT_LE(lo.J, E * (1 + 1e-9));
      EXPECT_GT(lo.J, 0.0);
    }
}

TEST(CompensatedWitnesses, MixedPhaseSourceRejected) {
  SourceSpec s;
  s.q = 3.0;
  s.modes = {{2, 1, 0, 1.0}, {3, 1, 0, cd(0.0, 1.0)}};
  EXPECT_THROW(witness_compensated_dual(medium(1.0, 2.0, -4.0, 1e-2), s), Error);
}

// ---------------------------------------------------------------- sweep

namespace {
Scenario scenario(std::optional<double> core, CMode cm, double q, std::optional<int> n = 2) {
  Scenario s;
  s.params = kP;
  s.core_radius = core;
  s.R = 2.0;
  s.c_mode = cm;
  s.q = q;
  s.source = {{n, 1, 0, 1.0}};
  return s;
}
}  // namespace

TEST(Sweep, NoCoreResonance) {
  const auto r = sweep(scenario(std::nullopt, {CMode::Type::fixed, -4.0, 1}, 3.0), log_grid(1e-2, 1e-5, 1));
  EXPECT_EQ(r.verdict, Verdict::resonant);
  EXPECT_NEAR(r.growth_exponent, 1.0, 0.05);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.report.sandwich_holds(1e-9));
    EXPECT_EQ(row.lower_kind, "nocore");
  }
}

TEST(Sweep, FixedCoreNonResonance) {
  const auto r = sweep(scenario(1.0, {CMode::Type::fixed, -4.0, 1}, 3.0), log_grid(1e-2, 1e-5, 1));
  EXPECT_EQ(r.verdict, Verdict::non_resonant);
  EXPECT_NEAR(r.growth_exponent, -1.0, 0.05);
  for (const auto& row : r.rows) EXPECT_EQ(row.upper_kind, "fixed_c");
}

TEST(Sweep, ScheduledSourceBeyondCriticalRadius) {
  const auto r = sweep(scenario(1.0, {CMode::Type::schedule, 0.0, 1}, std::pow(2.0, 1.8), std::nullopt),
                       log_grid(1e-2, 1e-6, 2));
  EXPECT_EQ(r.verdict, Verdict::non_resonant);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.upper_kind, "radial_nonresonant");
    EXPECT_TRUE(row.report.n_delta.has_value());
    EXPECT_TRUE(row.report.sandwich_holds(1e-9));
  }
}

TEST(Sweep, SerialAndParallelAgreeBitwise) {
  const auto sc = scenario(1.0, {CMode::Type::schedule, 0.0, 1}, 2.3, std::nullopt);
  const auto a = sweep(sc, log_grid(1e-2, 1e-5, 2), {}, true, 1);
  const auto b = sweep(sc, log_grid(1e-2, 1e-5, 2), {}, true, 4);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].report.E_delta, b.rows[i].report.E_delta);
    EXPECT_EQ(*a.rows[i].report.I_upper, *b.rows[i].report.I_upper);
    EXPECT_EQ(*a.rows[i].report.J_lower, *b.rows[i].report.J_lower);
  }
  EXPECT_EQ(a.growth_exponent, b.growth_exponent);
}

TEST(Sweep, RejectsBadDeltaLists) {
  const auto sc = scenario(1.0, {CMode::Type::fixed, -4.0, 1}, 3.0);
  EXPECT_THROW(sweep(sc, {1e-2, 1e-3}), Error);
  EXPECT_THROW(sweep(sc, {1e-2, 1e-3, 1e-3, 1e-5}), Error);
  EXPECT_THROW(sweep(sc, {1e-2, 1e-4, 0.0}), Error);
  try {
    sweep(sc, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_result);
  }
}

TEST(Sweep, VerdictRules) {
  auto rows = [](std::initializer_list<double> E) {
    std::vector<SweepRow> r;
    double d = 1e-2;
    for (double e : E) {
      SweepRow s;
      s.report.delta = d;
      s.report.E_delta = e;
      r.push_back(s);
      d /= 10;
    }
    return r;
  };
  const SweepThresholds t;
  auto up = rows({1, 10, 100, 1000});
  EXPECT_EQ(classify(up, growth_exponent(up), t), Verdict::resonant);
  auto flat = rows({1, 0.5, 0.3, 0.2});
  EXPECT_EQ(classify(flat, growth_exponent(flat), t), Verdict::non_resonant);
  auto slow = rows({1, 1.5, 2.2, 30});
  EXPECT_EQ(classify(slow, growth_exponent(slow), t), Verdict::inconclusive);
}
