#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "helpers.hpp"
#include "pendrot/solver.hpp"

using namespace pendrot;
namespace {
constexpr double kPi = std::numbers::pi;

RotationProblem single_link(double period = 1.0) {
  return {PendulumParams::make({1}, {1}), WindingVector::validate({1}), period, Forcing::zero(period, 1)};
}

RotationProblem two_link_window(bool forced) {
  const double t = 0.6;
  RotationProblem p{PendulumParams::make({10, 1}, {0.1, 10}), WindingVector::validate({1, 0}), t,
                    forced ? Forcing::single_sine(t, 2, 0, 0.04) : Forcing::zero(t, 2)};
  p.m0 = forced ? 0.05 : 0.0;
  return p;
}

TEST(SeedPlan, Counts) {
  EXPECT_EQ(seed_plan(single_link(), 4, 0, 1).size(), 4u);
  RotationProblem p{PendulumParams::make({1, 1}, {1, 1}), WindingVector::validate({1, 0}), 1.0,
                    Forcing::zero(1, 2), 8};
  EXPECT_EQ(seed_plan(p, 4, 2, 1).size(), 24u);
  EXPECT_EQ(seed_count(p.winding, 4, 2), 24u);
  EXPECT_THROW(seed_plan(p, 0, 1, 1), InvalidParameter);
  EXPECT_THROW(seed_plan(p, 4, -1, 1), InvalidParameter);
}

TEST(SeedPlan, StartsCarryTheWindingAndSmallOscillation) {
  RotationProblem p{PendulumParams::make({1, 1, 1}, {1, 1, 1}), WindingVector::validate({2, 0, 1}), 0.7,
                    Forcing::zero(0.7, 3), 8};
  const auto seeds = seed_plan(p, 4, 3, 9);
  int fixed = 0;
  for (const auto& s : seeds) {
    const Eigen::VectorXd gain = eval_loop(s.start, 0.7).q - eval_loop(s.start, 0.0).q;
    EXPECT_LT((gain - kTwoPi * p.winding.as_vector()).norm(), 1e-12);
    auto osc = s.start;
    osc.mean.setZero();
    EXPECT_LE(norms(osc).w12, 0.3 + 1e-12);
    if (s.reversal_fixed) ++fixed;
  }
  // means in {0, pi}: two choices on the still link, grid points 0 and 2 of 4 on each rotating link
  EXPECT_EQ(fixed, 2 * 2 * 2);
}

TEST(SeedPlan, Deterministic) {
  const auto p = two_link_window(true);
  const auto a = seed_plan(p, 8, 4, 42), b = seed_plan(p, 8, 4, 42), c = seed_plan(p, 8, 4, 43);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].start.pack(), b[i].start.pack());
    differs = differs || a[i].start.pack() != c[i].start.pack();
  }
  EXPECT_TRUE(differs);
}

TEST(Minimize, SingleLinkRotationAboveFloor) {
  const auto p = single_link();
  const auto af = p.functional();
  const auto r = minimize(af, af.constant_loop(Eigen::VectorXd::Zero(1)));
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.stop_reason, "converged");
  EXPECT_GE(r.action, 2 * kPi * kPi / 1.0 - 1.0);
  EXPECT_LE(r.grad_norm, 1e-8 * (1 + std::abs(r.action)));
  EXPECT_FALSE(r.under_resolved);
  const auto c = certify(p.params, p.forcing, r.loop, 0.0);
  EXPECT_TRUE(c.pass);
  EXPECT_LT(c.defect, 1e-6);
}

TEST(Minimize, RestartAtSolutionTakesNoSteps) {
  const auto p = two_link_window(true);
  const auto af = p.functional();
  const auto seeds = seed_plan(p, 2, 1, 3);
  const auto first = minimize(af, seeds[1].start);
  ASSERT_TRUE(first.converged);
  const auto again = minimize(af, first.loop);
  EXPECT_EQ(again.iterations, 0);
  EXPECT_EQ(again.loop.pack(), first.loop.pack());
  EXPECT_EQ(again.action, first.action);
}

TEST(Minimize, TraceNonIncreasing) {
  std::mt19937_64 rng(8);
  const auto p = two_link_window(true);
  const auto af = p.functional();
  for (int trial = 0; trial < 4; ++trial) {
    const auto start = testutil::random_loop(rng, p.period, p.winding, p.harmonics, 0.2);
    const auto r = minimize(af, start);
    ASSERT_GE(r.trace.size(), 2u);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      EXPECT_LE(r.trace[i], r.trace[i - 1] + 1e-13 * (1 + std::abs(r.trace[i - 1])));
    const double floor = a0_bound(p.params, p.winding, p.period, af.f_moment(), p.m0,
                                  lambda_min(p.params).conservative());
    for (double x : r.trace) EXPECT_GE(x, floor);
  }
}

TEST(Minimize, IterationCapReportsDivergence) {
  std::mt19937_64 rng(2);
  const auto p = two_link_window(true);
  const auto af = p.functional();
  MinimizeOptions o;
  o.max_iters = 3;
  const auto r = minimize(af, testutil::random_loop(rng, p.period, p.winding, p.harmonics, 0.3), o);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.stop_reason, "max_iters");
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(r.trace.size(), 4u);
}

TEST(Minimize, SymmetricModeKeepsFixedCoordinates) {
  const auto p = two_link_window(false);
  const auto af = p.functional();
  Eigen::VectorXd mean(2);
  mean << 0.0, kPi;
  MinimizeOptions o;
  o.reversal_symmetric = true;
  const auto r = minimize(af, af.constant_loop(mean), o);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(r.loop.mean, mean);
  EXPECT_EQ(r.loop.cos_coef.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(r.loop.sin_coef.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Minimize, SpectralTailFlag) {
  auto loop = LoopPath::constant(1.0, WindingVector::validate({1}), Eigen::VectorXd::Zero(1), 8);
  EXPECT_FALSE(spectral_tail_flag(loop));
  loop.sin_coef(0, 0) = 1;
  EXPECT_FALSE(spectral_tail_flag(loop));
  loop.sin_coef(0, 7) = 1e-5;
  EXPECT_TRUE(spectral_tail_flag(loop));
}

SolutionRecord record_of(const LoopPath& loop, double action, int seed) {
  SolutionRecord r;
  r.loop = loop;
  r.breakdown.total = action;
  r.seed_id = seed;
  return r;
}

TEST(Dedupe, MeanShiftByTwoPi) {
  std::mt19937_64 rng(4);
  const auto v = WindingVector::validate({1, 0});
  const auto a = testutil::random_loop(rng, 1.0, v, 6);
  auto b = a;
  b.mean[1] += kTwoPi;
  const auto reps = dedupe({record_of(b, 1.0, 1), record_of(a, 0.5, 0)}, false);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].seed_id, 0);
  EXPECT_EQ(reps[0].cluster_size, 2);
  EXPECT_TRUE(reps[0].orbit_representative);
}

TEST(Dedupe, TimeShiftOnlyUnderQuotient) {
  std::mt19937_64 rng(6);
  const auto v = WindingVector::validate({1, 0});
  const auto a = testutil::random_loop(rng, 1.0, v, 6);
  const auto b = time_shift(a, 1.0 / 3);
  EXPECT_EQ(dedupe({record_of(a, 0.0, 0), record_of(b, 0.0, 1)}, true).size(), 1u);
  EXPECT_EQ(dedupe({record_of(a, 0.0, 0), record_of(b, 0.0, 1)}, false).size(), 2u);
}

TEST(Dedupe, AscendingActionPicksRepresentatives) {
  std::mt19937_64 rng(7);
  const auto v = WindingVector::validate({1});
  std::vector<SolutionRecord> recs;
  const auto a = testutil::random_loop(rng, 1.0, v, 4), b = testutil::random_loop(rng, 1.0, v, 4);
  recs.push_back(record_of(a, 3.0, 0));
  recs.push_back(record_of(b, 2.0, 1));
  recs.push_back(record_of(a, 1.0, 2));
  const auto reps = dedupe(recs, false);
  ASSERT_EQ(reps.size(), 2u);
  EXPECT_EQ(reps[0].seed_id, 2);
  EXPECT_EQ(reps[0].cluster_size, 2);
  EXPECT_EQ(reps[1].seed_id, 1);
  for (std::size_t i = 0; i < reps.size(); ++i)
    for (std::size_t j = i + 1; j < reps.size(); ++j)
      EXPECT_GT(distance_mod_symmetries(reps[i].loop, reps[j].loop, false), dedup_tolerance(reps[i].loop, reps[j].loop));
}

TEST(Census, SingleLinkUnforced) {
  const auto rep = census(single_link());
  EXPECT_EQ(rep.category_bound, 1);
  EXPECT_TRUE(rep.s1_quotient);
  ASSERT_EQ(rep.solutions.size(), 1u);
  const auto& s = rep.solutions[0];
  EXPECT_TRUE(rep.meets_bound);
  EXPECT_TRUE(s.certification->pass);
  EXPECT_LT(s.certification->defect, 1e-5);
  EXPECT_LT(s.certification->sup_gap, 1e-4);
  EXPECT_EQ(s.near_zero, 1);
  EXPECT_TRUE(s.oracles_hold);
  EXPECT_GE(s.action(), rep.a0);
  EXPECT_GE(s.action(), 2 * kPi * kPi - 1);
  EXPECT_FALSE(rep.constants.has_value());
}

TEST(Census, WindowConfigUnforcedHasOneZeroModePerNondegenerateRecord) {
  SolverOptions o;
  o.density = 4;
  o.perturbations = 1;
  const auto rep = census(two_link_window(false), o);
  ASSERT_TRUE(rep.constants && rep.constants->levels);
  EXPECT_EQ(rep.level_bound, 2);
  EXPECT_GE(rep.certified, 2);
  EXPECT_TRUE(rep.every_band_hit);
  for (const auto& s : rep.solutions) {
    if (s.nondegenerate) {
      EXPECT_EQ(s.near_zero, 1);
    }
    EXPECT_TRUE(s.oracles_hold);
    EXPECT_LT(s.grad_norm, s.tolerance);
    if (s.certification->pass) {
      EXPECT_LT(s.certification->sup_gap, 1e-4);
    }
  }
}

TEST(Census, WindowConfigForcedFillsBothBands) {
  SolverOptions o;
  o.density = 4;
  o.perturbations = 1;
  const auto rep = census(two_link_window(true), o);
  EXPECT_EQ(rep.level_bound, 4);
  EXPECT_GE(rep.certified, 4);
  ASSERT_EQ(rep.bands.size(), 2u);
  EXPECT_GE(rep.bands[0].found, 1);
  EXPECT_GE(rep.bands[1].found, 1);
  EXPECT_TRUE(rep.meets_bound);
  std::set<int> seen;
  for (const auto& s : rep.solutions) {
    EXPECT_TRUE(seen.insert(s.seed_id).second);
    EXPECT_GE(s.action(), rep.a0);
  }
}

TEST(Census, ThreadCountDoesNotChangeResults) {
  SolverOptions o;
  o.density = 4;
  o.perturbations = 2;
  o.threads = 1;
  const auto a = census(two_link_window(true), o);
  o.threads = 3;
  const auto b = census(two_link_window(true), o);
  ASSERT_EQ(a.solutions.size(), b.solutions.size());
  for (std::size_t i = 0; i < a.solutions.size(); ++i) {
    EXPECT_EQ(a.solutions[i].action(), b.solutions[i].action());
    EXPECT_EQ(a.solutions[i].loop.pack(), b.solutions[i].loop.pack());
    EXPECT_EQ(a.solutions[i].seed_id, b.solutions[i].seed_id);
  }
}

} // namespace
