#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "pendrot/bounds.hpp"

using namespace pendrot;
namespace {
constexpr double kPi = std::numbers::pi;

// Closed-form infimum for two links: the smallest eigenvalue of
// [[a, c cos d], [c cos d, b]] is smallest at cos^2 d = 1.
double lambda_two_links(const PendulumParams& p) {
  const double a = p.alpha[0] * p.length[0] * p.length[0];
  const double b = p.alpha[1] * p.length[1] * p.length[1];
  const double c = p.alpha[1] * p.length[0] * p.length[1];
  return 0.5 * (a + b) - std::sqrt(0.25 * (a - b) * (a - b) + c * c);
}

TEST(Lambda, Examples) {
  EXPECT_NEAR(lambda_min(PendulumParams::make({1}, {1})).refined, 1.0, 1e-15);
  auto p = PendulumParams::make({1, 1}, {1, 1});
  auto est = lambda_min(p);
  EXPECT_NEAR(est.refined, (3 - std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_GE(est.grid, est.refined);
  auto q = PendulumParams::make({10, 1}, {0.1, 10});
  auto e2 = lambda_min(q, 720);
  EXPECT_NEAR(e2.refined, lambda_two_links(q), 1e-12);
  EXPECT_NEAR(e2.refined, 0.09998999099289542, 1e-12);
  EXPECT_NEAR(e2.conservative(), 0.999 * e2.refined, 1e-18);
  EXPECT_THROW(lambda_min(q, 4), InvalidParameter);
}

TEST(Lambda, RandomTwoLinkAgainstClosedForm) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = testutil::random_params(rng, 2);
    EXPECT_NEAR(lambda_min(p, 64).refined, lambda_two_links(p), 1e-10 * lambda_two_links(p));
  }
}

TEST(Lambda, ThreeLinksBelowRandomSamples) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0, kTwoPi);
  auto p = testutil::random_params(rng, 3);
  const double lam = lambda_min(p).refined;
  for (int s = 0; s < 2000; ++s)
    EXPECT_GE(min_kinetic_eigenvalue(p, Eigen::Vector3d(u(rng), u(rng), u(rng))), lam - 1e-12);
}

TEST(Lambda, ScaleCovariant) {
  std::mt19937_64 rng(107);
  for (int n = 2; n <= 3; ++n) {
    auto p = testutil::random_params(rng, n);
    std::vector<double> m(p.mass.data(), p.mass.data() + n), l(p.length.data(), p.length.data() + n);
    for (auto& x : m) x *= 3.0;
    auto scaled = PendulumParams::make(m, l, p.gravity);
    const double a = lambda_min(p, 32).grid, b = lambda_min(scaled, 32).grid;
    EXPECT_NEAR(b, 3.0 * a, 1e-13 * b);
  }
}

// Straight re-implementation of the gamma formulas for the random suites.
double gamma1_oracle(const std::vector<double>& m, const std::vector<double>& l, const std::vector<int>& v) {
  const std::size_t n = m.size();
  auto alpha = [&](std::size_t j) {
    double s = 0;
    for (std::size_t t = j; t < n; ++t) s += m[t];
    return s;
  };
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += alpha(i) * l[i] * l[i] * v[i] * v[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (v[i] == v[j]) s += 2 * alpha(j) * l[i] * l[j] * v[i] * v[j];
  return 2 * kPi * kPi * s;
}

TEST(Gamma1, Examples) {
  EXPECT_NEAR(gamma1(PendulumParams::make({1}, {1}), WindingVector::validate({1})), 2 * kPi * kPi, 1e-13);
  EXPECT_NEAR(gamma1(PendulumParams::make({10, 1}, {0.1, 10}), WindingVector::validate({1, 0})),
              2 * kPi * kPi * 11 * 0.01, 1e-13);
  EXPECT_NEAR(gamma1(PendulumParams::make({10, 1}, {0.1, 10}), WindingVector::validate({1, 0})), 2.171312968239659,
              1e-12);
  EXPECT_NEAR(gamma1(PendulumParams::make({1, 1}, {1, 1}), WindingVector::validate({1, 1})), 10 * kPi * kPi, 1e-12);
}

TEST(Gamma1, RandomDrawsMatchOracle) {
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<int> w(-2, 2);
  int done = 0;
  while (done < 200) {
    const int n = 1 + done % 4;
    std::vector<int> v(n);
    for (auto& x : v) x = w(rng);
    WindingVector wv;
    try {
      wv = WindingVector::validate(v);
    } catch (const InvalidParameter&) {
      continue;
    }
    auto p = testutil::random_params(rng, n);
    std::vector<double> m(p.mass.data(), p.mass.data() + n), l(p.length.data(), p.length.data() + n);
    const double o = gamma1_oracle(m, l, v);
    EXPECT_NEAR(gamma1(p, wv), o, 1e-12 * std::abs(o));
    ++done;
  }
}

TEST(Gamma2, Examples) {
  auto one = PendulumParams::make({1}, {1});
  EXPECT_NEAR(gamma2(one, 0.0, 1.0), 1 / (8 * kPi * kPi), 1e-16);
  auto p = PendulumParams::make({10, 1}, {0.1, 10});
  EXPECT_NEAR(gamma2(p, 0.0, 0.1), 12.818396245551257, 1e-11);
  const auto est = lambda_min(p, 720);
  EXPECT_NEAR(gamma2(p, 0.0, est.refined), 12.819679368170002, 1e-9);
  const double lam = est.conservative();
  EXPECT_NEAR(gamma2(p, 0.0, lam), 12.832511880050053, 1e-9);
  EXPECT_LT(gamma2(p, 0.05, lam), gamma2(p, 0.1, lam));
  EXPECT_THROW(gamma2(p, 0.0, 0.0), InvalidParameter);
}

TEST(Levels, BetaAndGammaSetExamples) {
  std::vector<double> b1{3.0};
  EXPECT_EQ(beta_level(b1, 1), -3.0);
  EXPECT_EQ(beta_level(b1, 2), 3.0);
  auto g1 = gamma_set(b1);
  EXPECT_EQ(g1.closed_form, std::vector<double>{3.0});
  EXPECT_TRUE(same_set(g1.closed_form, g1.direct));

  std::vector<double> b2{5.0, 2.0};
  auto g2 = gamma_set(b2);
  EXPECT_EQ(g2.closed_form, (std::vector<double>{2.0, 3.0}));
  EXPECT_TRUE(same_set(g2.closed_form, g2.direct));

  std::vector<double> b3{8.0, 2.0, 1.0};
  auto g3 = gamma_set(b3);
  EXPECT_EQ(g3.direct, (std::vector<double>{1.0, 5.0}));
  EXPECT_TRUE(same_set(g3.closed_form, g3.direct));
  EXPECT_EQ(gamma_gap(b3), 2.0);
  EXPECT_THROW(gamma_gap(std::vector<double>{}), HypothesisViolation);
  auto p = PendulumParams::make({1, 1}, {1, 1});
  EXPECT_THROW(gamma_gap(p, WindingVector::validate({2, 3})), HypothesisViolation);
}

TEST(Levels, GammaSetPropertyRandomDraws) {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int n0 = 1; n0 <= 6; ++n0)
    for (int draw = 0; draw < 200; ++draw) {
      std::vector<double> b(n0);
      for (auto& x : b) x = u(rng);
      auto g = gamma_set(b);
      ASSERT_TRUE(same_set(g.closed_form, g.direct, 1e-12));
      EXPECT_NEAR(gamma_gap(b), 2 * g.closed_form.front(), 1e-12 * (1 + std::abs(gamma_gap(b))));
      // direct brute force of beta(k) with an independent bit expansion
      for (int k = 1; k <= (1 << n0); ++k) {
        double s = 0;
        for (int i = 0; i < n0; ++i) s += (((k - 1) >> (n0 - 1 - i)) & 1) ? b[i] : -b[i];
        ASSERT_NEAR(beta_level(b, k), s, 1e-12);
      }
    }
}

TEST(Window, Examples) {
  auto w = period_window(2.0, 1.0, 4.0);
  EXPECT_FALSE(w.feasible);
  auto p = PendulumParams::make({10, 1}, {0.1, 10});
  auto v = WindingVector::validate({1, 0});
  const double lam = lambda_min(p, 720).conservative();
  const double g1 = gamma1(p, v), g2 = gamma2(p, 0.0, lam), gam = gamma_gap(p, v);
  EXPECT_NEAR(gam, 20.0, 1e-12);
  auto win = period_window(gam, g1, g2);
  EXPECT_TRUE(win.feasible);
  EXPECT_NEAR(std::sqrt(g1 * g2), 5.28, 0.01);
  EXPECT_NEAR(win.t1, 0.3294930172431321, 1e-12);
  EXPECT_NEAR(win.t2, 1.2484155236351842, 1e-9);
  const double mid = 0.5 * (win.t1 + win.t2);
  EXPECT_GT(window_slack(gam, g1, g2, mid), 0);
  EXPECT_TRUE(win.strict_feasible);
  EXPECT_NEAR(win.strict_t1, 0.342652331085406, 1e-9);
  EXPECT_NEAR(win.strict_t2, 1.200471032409799, 1e-9);
}

// At T1 the slack is -gamma2 T1^4 and at T2 it is -gamma1: both ends violate.
TEST(Window, InequalityFailsAtBothEnds) {
  auto w = period_window(20.0, 2.0, 12.0);
  ASSERT_TRUE(w.feasible);
  EXPECT_NEAR(window_slack(20.0, 2.0, 12.0, w.t1), -12.0 * std::pow(w.t1, 4), 1e-12);
  EXPECT_NEAR(window_slack(20.0, 2.0, 12.0, w.t2), -2.0, 1e-12);
  EXPECT_GE(w.window_violations, 2);
  EXPECT_EQ(window_violations(20.0, 2.0, 12.0, w.strict_t1 * (1 + 1e-9), w.strict_t2 * (1 - 1e-9), 33), 0);
  // feasible but not strictly feasible: the inequality fails everywhere
  auto thin = period_window(2.5, 1.0, 2.0);
  ASSERT_TRUE(thin.feasible);
  EXPECT_FALSE(thin.strict_feasible);
  EXPECT_EQ(thin.window_violations, 33);
}

TEST(Window, WidensWithGamma) {
  double prev_width = 0;
  for (double gam : {3.0, 4.0, 8.0, 20.0}) {
    auto w = period_window(gam, 1.0, 2.0);
    ASSERT_TRUE(w.feasible);
    EXPECT_GT(w.t2 - w.t1, prev_width);
    prev_width = w.t2 - w.t1;
  }
}

TEST(FMoment, Examples) {
  auto v = WindingVector::validate({1, 0, 0});
  const double t = 1.7, eps = 0.3;
  EXPECT_EQ(f_moment(Forcing::zero(t, 3), v), 0);
  EXPECT_NEAR(f_moment(Forcing::single_sine(t, 3, 0, eps), v), -eps * t, 1e-10 * eps * t);
  Forcing c(t, {{{1, eps, 0.0}}, {}, {}});
  EXPECT_NEAR(f_moment(c, v), 0.0, 1e-10 * eps * t);
  // independent of the mean: constant loops with two random means give the same forcing part
  auto p = PendulumParams::make({1, 1, 1}, {1, 1, 1});
  ActionFunctional af(p, Forcing::single_sine(t, 3, 0, eps), v, t, 4);
  const double a = af.value(af.constant_loop(Eigen::Vector3d(0.3, 4.0, 1.0))).forcing;
  const double b = af.value(af.constant_loop(Eigen::Vector3d(2.2, 0.1, 5.9))).forcing;
  EXPECT_NEAR(a, b, 1e-13);
}

TEST(LevelValues, FeasibleTwoLinkConfig) {
  auto p = PendulumParams::make({10, 1}, {0.1, 10});
  auto v = WindingVector::validate({1, 0});
  const double lam = lambda_min(p, 720).conservative();
  const double t = 0.6;
  auto lv = levels(p, v, t, Forcing::zero(t, 2), 0.0, lam);
  ASSERT_EQ(lv.a.size(), 1u);
  EXPECT_NEAR(lv.a[0] - lv.c1[0], lv.c2[0] - lv.a[0], 1e-12);
  // formula evaluation of C2(1) - C1(1)
  const double g1 = gamma1(p, v), g2 = gamma2(p, 0.0, lam);
  const double expect = t * (10.0 - -10.0) - g1 / t + 2 * kPi * kPi * lam / t - t * t * t * g2;
  EXPECT_NEAR(lv.c2[0] - lv.c1[0], expect, 1e-12);
  EXPECT_NEAR(lv.c2[0] - lv.c1[0], 8.89557179855375, 1e-10);
  EXPECT_NEAR(lv.c1[0], -2.381145052933902, 1e-10);
  EXPECT_NEAR(lv.c2[0], 6.514426745619848, 1e-10);
  EXPECT_LT(lv.a[0], lv.a_n);
  EXPECT_EQ(lv.band(lv.a[0] - 1), 1);
  EXPECT_EQ(lv.band(lv.a[0] + 1), 2);
}

TEST(LevelValues, GapsOnThreeLinkConfig) {
  auto res = parameter_search(3, WindingVector::validate({1, 0, 0}), 0.0, 1500);
  ASSERT_TRUE(res.found);
  auto v = WindingVector::validate({1, 0, 0});
  const double lam = lambda_min(res.params).conservative();
  const double gam = gamma_gap(res.params, v);
  auto win = period_window(gam, gamma1(res.params, v), gamma2(res.params, 0.0, lam));
  ASSERT_TRUE(win.feasible);
  // two zero-winding links: margin stays below 2, so only the exact sandwich window is usable
  EXPECT_FALSE(win.strict_feasible);
  auto lw = level_window(gam, gamma1(res.params, v) - 2 * kPi * kPi * lam, gamma2(res.params, 0.0, lam));
  ASSERT_TRUE(lw.nonempty);
  const double lo = std::max(win.t1, lw.lo), hi = std::min(win.t2, lw.hi);
  ASSERT_LT(lo, hi);
  for (double t : {lo + 1e-6 * (hi - lo), 0.5 * (lo + hi), hi - 1e-6 * (hi - lo)}) {
    auto lv = levels(res.params, v, t, Forcing::zero(t, 3), 0.0, lam);
    ASSERT_EQ(lv.a.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(lv.c1[k], lv.a[k]);
    for (std::size_t k = 0; k + 1 < 3; ++k) EXPECT_GE(lv.a[k + 1] - lv.a[k], t * gam * (1 - 1e-12));
    EXPECT_LT(lv.a[2], lv.a_n);
  }
}

TEST(LevelValues, RefusesInfeasible) {
  auto p = PendulumParams::make({1, 1}, {1, 1});
  auto v = WindingVector::validate({1, 0});
  const double lam = lambda_min(p).conservative();
  EXPECT_THROW(levels(p, v, 1.0, Forcing::zero(1.0, 2), 0.0, lam), HypothesisViolation);
  auto q = PendulumParams::make({10, 1}, {0.1, 10});
  EXPECT_THROW(levels(q, v, 5.0, Forcing::zero(5.0, 2), 0.0, lambda_min(q).conservative()), HypothesisViolation);
}

TEST(Report, InfeasibleEqualLinks) {
  auto p = PendulumParams::make({1, 1}, {1, 1});
  auto v = WindingVector::validate({1, 0});
  auto r = constants_report(p, v, Forcing::zero(1.0, 2), 1.0, 0.0);
  EXPECT_NEAR(r.lambda.refined, (3 - std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_NEAR(r.gamma, 2.0, 1e-15);
  EXPECT_FALSE(r.window.feasible);
  EXPECT_NEAR(r.window.margin, 0.7818, 1e-3);
  EXPECT_FALSE(r.levels.has_value());
  EXPECT_THROW(constants_report(p, WindingVector::validate({2, 3}), Forcing::zero(1.0, 2), 1.0, 0.0),
               HypothesisViolation);
}

TEST(Report, ForcedFeasibleConfig) {
  auto p = PendulumParams::make({10, 1}, {0.1, 10});
  auto v = WindingVector::validate({1, 0});
  auto f = Forcing::single_sine(0.6, 2, 0, 0.04);
  const double m0 = f.bound();
  ASSERT_LE(m0, 0.05);
  auto r = constants_report(p, v, f, 0.6, 0.05);
  EXPECT_TRUE(r.window.feasible);
  EXPECT_NEAR(r.gamma2, 12.973883787433277, 1e-9);
  EXPECT_NEAR(r.window.margin, 3.768198573562441, 1e-9);
  EXPECT_NEAR(r.window.t2, 1.2415951175743551, 1e-9);
  ASSERT_TRUE(r.levels.has_value());
  EXPECT_NEAR(r.levels->c2[0] - r.levels->c1[0], 8.865035466558973, 1e-9);
  EXPECT_NEAR(r.f_v, -0.04 * 0.6, 1e-12);
  EXPECT_LE(r.a0, r.a0_l2 + 1e-12);
}

// ---------------------------------------------------------------------------
// estimate oracles

struct OracleSetup {
  PendulumParams params;
  WindingVector v;
  Forcing f;
  double lam;
  double m0;
};

OracleSetup oracle_setup(std::mt19937_64& rng, int n, double t) {
  auto p = testutil::random_params(rng, n);
  auto v = testutil::first_link_rotating(n);
  Forcing f(t, std::vector<std::vector<Harmonic>>(n));
  std::vector<std::vector<Harmonic>> terms(n);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < n; ++i) terms[i] = {{1, u(rng), u(rng)}, {2, u(rng), u(rng)}};
  f = Forcing(t, terms);
  return {p, v, f, lambda_min(p).conservative(), f.bound()};
}

TEST(Oracles, ConstantLoopVqIsTight) {
  std::mt19937_64 rng(127);
  auto s = oracle_setup(rng, 2, 1.0);
  ActionFunctional af(s.params, s.f, s.v, 1.0, 8);
  auto checks = estimate_oracles(af, af.constant_loop(Eigen::Vector2d(0.4, 1.9)), s.lam, s.m0);
  for (const auto& c : checks) {
    EXPECT_TRUE(c.holds) << c.name;
    if (c.name == "Vq") {
      EXPECT_EQ(c.lhs, 0.0);
      EXPECT_EQ(c.rhs, 0.0);
    }
  }
  EXPECT_EQ(checks.size(), 7u);
}

TEST(Oracles, RandomLoopsAllHold) {
  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> amp(0.01, 3.0), per(0.3, 3.0);
  for (int n = 1; n <= 3; ++n)
    for (int setup = 0; setup < 5; ++setup) {
      const double t = per(rng);
      auto s = oracle_setup(rng, n, t);
      ActionFunctional af(s.params, s.f, s.v, t, 8);
      for (int trial = 0; trial < 70; ++trial)
        for (const auto& c : estimate_oracles(af, testutil::random_loop(rng, t, s.v, 8, amp(rng)), s.lam, s.m0))
          ASSERT_TRUE(c.holds) << c.name << " lhs=" << c.lhs << " rhs=" << c.rhs;
    }
}

TEST(Oracles, ActionAboveA0) {
  std::mt19937_64 rng(137);
  std::uniform_real_distribution<double> amp(0.0, 4.0);
  auto s = oracle_setup(rng, 2, 1.2);
  ActionFunctional af(s.params, s.f, s.v, 1.2, 6);
  const double a0 = a0_bound(s.params, s.v, 1.2, af.f_moment(), s.m0, s.lam);
  double worst = 1e300;
  for (int trial = 0; trial < 10000; ++trial)
    worst = std::min(worst, af.value(testutil::random_loop(rng, 1.2, s.v, 6, amp(rng))).total - a0);
  EXPECT_GE(worst, 0);
}

// ---------------------------------------------------------------------------
// parameter search

TEST(Search, TwoLinks) {
  auto res = parameter_search(2, WindingVector::validate({1, 0}), 0.0, 500);
  EXPECT_TRUE(res.found);
  EXPECT_GE(res.margin, 3.0);
  EXPECT_LE(res.evaluations, 500);
  // no single move gains 1%, so the starting configuration is returned
  EXPECT_EQ(res.params.mass, (Eigen::Vector2d(10, 1)));
  EXPECT_EQ(res.params.length, (Eigen::Vector2d(0.1, 10)));
}

TEST(Search, ThreeLinksWithForcingBound) {
  auto v = WindingVector::validate({1, 0, 0});
  auto res = parameter_search(3, v, 0.01, 2000);
  EXPECT_TRUE(res.found);
  EXPECT_GT(res.margin, 1.0);
  auto r = constants_report(res.params, v, Forcing::zero(1.0, 3), 1.0, 0.01);
  EXPECT_TRUE(r.window.feasible);
  for (int i = 0; i < 3; ++i) {
    EXPECT_GT(res.params.length[i], 1e-3);
    EXPECT_LT(res.params.length[i], 1e3);
  }
}

TEST(Search, RejectsOutOfRangeN0) {
  EXPECT_THROW(parameter_search(2, WindingVector::validate({2, 3}), 0.0, 10), HypothesisViolation);
  EXPECT_THROW(parameter_search(3, WindingVector::validate({1, 0}), 0.0, 10), InvalidParameter);
}

} // namespace
