#pragma once

/**
 * @file solver.hpp
 * @brief Multistart search for critical points of the action, clustering
 *        of the results and a count report against the multiplicity bounds.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "pendrot/action.hpp"
#include "pendrot/bounds.hpp"
#include "pendrot/error.hpp"
#include "pendrot/loopspace.hpp"
#include "pendrot/model.hpp"
#include "pendrot/verify.hpp"

namespace pendrot {

struct RotationProblem {
  PendulumParams params;
  WindingVector winding;
  double period = 1;
  Forcing forcing;
  int harmonics = 32;
  int quad_points = 0;  ///< 0 selects 8K
  double m0 = -1;       ///< forcing bound; negative means use forcing.bound()

  double forcing_bound() const { return m0 >= 0 ? m0 : forcing.bound(); }
  ActionFunctional functional() const {
    return ActionFunctional(params, forcing, winding, period, harmonics, quad_points);
  }
};

struct SolverOptions {
  int density = 8;
  int perturbations = 4;
  std::uint64_t seed = 1;
  double tol_scale = 1e-8;
  int max_iters = 2000;
  int threads = 1;
  bool use_reversal = true;       ///< solve reversal-fixed starts inside the fixed subspace
  bool retry_on_shortfall = true; ///< rerun once at twice the density if under the bound
  int max_harmonics = 128;        ///< cap for doubling K when a flagged solution fails certification
  int certify_steps = 4096;
  int lambda_resolution = 0;
};

// ---------------------------------------------------------------------------
// seeds

struct Seed {
  int id = 0;
  LoopPath start;
  bool reversal_fixed = false; ///< every mean in {0, pi} and no oscillation
  std::string provenance;
};

inline std::size_t seed_count(const WindingVector& v, int density, int perturbations) {
  std::size_t c = std::size_t{1} << v.zero_count();
  for (int i = 0; i < v.size() - v.zero_count(); ++i) c *= static_cast<std::size_t>(density);
  return c * static_cast<std::size_t>(1 + perturbations);
}

/**
 * @brief Starting loops: means in {0, pi} on non-rotating links, a uniform grid
 *        on rotating links, each with zero oscillation and `perturbations`
 *        random oscillations of W^{1,2} norm at most 0.3.
 */
inline std::vector<Seed> seed_plan(const RotationProblem& problem, int density, int perturbations,
                                   std::uint64_t rng_seed) {
  if (density < 1) throw InvalidParameter("seed density must be positive");
  if (perturbations < 0) throw InvalidParameter("perturbation count must be non-negative");
  const int n = problem.params.size();
  const auto& v = problem.winding;
  if (v.size() != n) throw InvalidParameter("winding dimension differs from pendulum size");
  const int k = problem.harmonics;
  const double t = problem.period;
  const double w = kTwoPi / t;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.2, 1.0);

  std::vector<int> radix(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) radix[static_cast<std::size_t>(i)] = v[i] == 0 ? 2 : density;
  std::vector<int> digit(static_cast<std::size_t>(n), 0);

  std::vector<Seed> out;
  out.reserve(seed_count(v, density, perturbations));
  for (;;) {
    Eigen::VectorXd mean(n);
    bool fixed = true;
    std::string label = "mean=(";
    for (int i = 0; i < n; ++i) {
      const int d = digit[static_cast<std::size_t>(i)];
      mean[i] = v[i] == 0 ? std::numbers::pi * d : kTwoPi * d / density;
      const double r = reduce_angle(mean[i]);
      fixed = fixed && (r == 0.0 || r == std::numbers::pi);
      label += (i ? "," : "") + std::to_string(d) + "/" + std::to_string(radix[static_cast<std::size_t>(i)]);
    }
    label += ")";
    const LoopPath base = LoopPath::constant(t, v, mean, k);
    for (int r = 0; r <= perturbations; ++r) {
      Seed s;
      s.id = static_cast<int>(out.size());
      s.start = base;
      s.reversal_fixed = fixed && r == 0;
      s.provenance = label + (r == 0 ? "" : " pert=" + std::to_string(r));
      if (r > 0) {
        double w12 = 0;
        for (int i = 0; i < n; ++i)
          for (int h = 1; h <= k; ++h) {
            const double a = normal(rng) / (h * h), b = normal(rng) / (h * h);
            s.start.cos_coef(i, h - 1) = a;
            s.start.sin_coef(i, h - 1) = b;
            w12 += 0.5 * t * (1 + w * w * h * h) * (a * a + b * b);
          }
        const double scale = 0.3 * unit(rng) / std::sqrt(w12);
        s.start.cos_coef *= scale;
        s.start.sin_coef *= scale;
      }
      out.push_back(std::move(s));
    }
    int i = n - 1;
    while (i >= 0 && ++digit[static_cast<std::size_t>(i)] == radix[static_cast<std::size_t>(i)])
      digit[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// minimization

struct MinimizeOptions {
  double tol_scale = 1e-8;
  int max_iters = 2000;
  int memory = 12;
  bool reversal_symmetric = false; ///< freeze the mean and cosine coefficients
};

struct MinimizeResult {
  LoopPath loop;
  double action = 0;
  double grad_norm = 0; ///< full gradient, also in symmetric mode
  double tolerance = 0;
  int iterations = 0;
  bool converged = false;
  bool under_resolved = false;
  std::string stop_reason;
  std::vector<double> trace; ///< action at the start and after each accepted step
};

inline double convergence_tolerance(double tol_scale, double action) {
  return tol_scale * (1 + std::abs(action));
}

/// True when the top quartile of harmonics carries more than 1e-6 of the oscillation norm.
inline bool spectral_tail_flag(const LoopPath& loop) {
  const int k = loop.harmonics();
  const int first = k - k / 4 + 1;
  const double w = loop.omega();
  double tail = 0, all = 0;
  for (int h = 1; h <= k; ++h) {
    const double wt = 0.5 * loop.period * (1 + w * w * h * h);
    const double e = wt * (loop.cos_coef.col(h - 1).squaredNorm() + loop.sin_coef.col(h - 1).squaredNorm());
    all += e;
    if (h >= first) tail += e;
  }
  return all > 0 && std::sqrt(tail / all) > 1e-6;
}

/// Diagonal of an approximate Hessian, used as the L-BFGS preconditioner.
inline Eigen::VectorXd preconditioner(const ActionFunctional& af) {
  const auto lay = af.layout();
  const auto& p = af.params();
  const double t = af.period(), w = kTwoPi / t;
  Eigen::VectorXd d(lay.size());
  for (int i = 0; i < af.dim(); ++i) {
    const double aii = p.coupling(i, i), gb = p.weighted_beta(i);
    d[lay.mean(i)] = t * gb + 0.5 * t * aii * w * w;
    for (int h = 1; h <= af.harmonics(); ++h) {
      const double v = 0.5 * t * (aii * w * w * h * h + gb);
      d[lay.cosine(i, h)] = v;
      d[lay.sine(i, h)] = v;
    }
  }
  return d;
}

/**
 * @brief Limited-memory quasi-Newton descent with Armijo backtracking.
 *
 * A step that fails Armijo is still accepted when the action rises by at most
 * 1e-13 (1 + |L|) and the gradient shrinks; near convergence the action is
 * flat to roundoff and only the gradient carries information.
 */
inline MinimizeResult minimize(const ActionFunctional& af, const LoopPath& start, const MinimizeOptions& opt = {}) {
  const auto lay = af.layout();
  const int n = af.dim();
  const Eigen::VectorXd diag = preconditioner(af);
  auto project = [&](Eigen::VectorXd g) {
    if (opt.reversal_symmetric) {
      for (int i = 0; i < n; ++i) {
        g[lay.mean(i)] = 0;
        g.segment(lay.cosine(i, 1), af.harmonics()).setZero();
      }
    }
    return g;
  };

  Eigen::VectorXd x = start.pack();
  auto [f, g_full] = af.value_and_gradient(x);
  Eigen::VectorXd g = project(g_full);
  MinimizeResult r;
  r.trace.push_back(f);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;
  r.stop_reason = "max_iters";

  for (;;) {
    if (g.norm() <= convergence_tolerance(opt.tol_scale, f)) {
      r.stop_reason = "converged";
      break;
    }
    if (r.iterations >= opt.max_iters) break;

    // two-loop recursion with a scaled diagonal initial inverse
    Eigen::VectorXd q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t j = mem.size(); j-- > 0;) {
      const auto& [s, y] = mem[j];
      alpha[j] = s.dot(q) / y.dot(s);
      q -= alpha[j] * y;
    }
    Eigen::VectorXd p = q.cwiseQuotient(diag);
    if (!mem.empty()) {
      const auto& [s, y] = mem.back();
      p *= y.dot(s) / y.dot(y.cwiseQuotient(diag));
    }
    for (std::size_t j = 0; j < mem.size(); ++j) {
      const auto& [s, y] = mem[j];
      p += s * (alpha[j] - y.dot(p) / y.dot(s));
    }
    p = -p;
    if (!(g.dot(p) < 0)) {
      mem.clear();
      p = -g.cwiseQuotient(diag);
    }
    const double cap = p.cwiseAbs().maxCoeff();
    if (cap > 1) p /= cap;

    const double slope = g.dot(p);
    const double band = 1e-13 * (1 + std::abs(f));
    double step = 1;
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * p;
      auto [fv, gv] = af.value_and_gradient(x_new);
      gv = project(gv);
      if (std::isfinite(fv) &&
          (fv <= f + 1e-4 * step * slope || (fv <= f + band && gv.norm() < g.norm()))) {
        f_new = fv;
        g_new = std::move(gv);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      r.stop_reason = "stalled";
      break;
    }
    Eigen::VectorXd s = x_new - x, y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      mem.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    ++r.iterations;
    r.trace.push_back(f);
  }

  r.loop = start.with_coefficients(x);
  r.action = f;
  r.grad_norm = opt.reversal_symmetric ? af.value_and_gradient(x).second.norm() : g.norm();
  r.tolerance = convergence_tolerance(opt.tol_scale, f);
  r.converged = r.grad_norm <= r.tolerance;
  r.under_resolved = spectral_tail_flag(r.loop);
  return r;
}

// ---------------------------------------------------------------------------
// records and clustering

struct SolutionRecord {
  LoopPath loop;
  ActionBreakdown breakdown;
  double grad_norm = 0;
  double tolerance = 0;
  int iterations = 0;
  int morse_index = -1;
  int near_zero = -1;
  bool nondegenerate = false;
  double hessian_threshold = 0;
  std::vector<double> hessian_head; ///< lowest eigenvalues, ascending
  bool orbit_representative = false;
  int cluster_size = 1;
  int seed_id = -1;
  std::string provenance;
  bool symmetric_solve = false;
  bool under_resolved = false;
  int band = 0; ///< 0 when no levels are available
  bool oracles_hold = false;
  std::optional<Certification> certification;

  double action() const { return breakdown.total; }
};

/**
 * @brief Greedy clustering in ascending action order; the first record of a
 *        cluster is its representative.
 */
inline std::vector<SolutionRecord> dedupe(std::vector<SolutionRecord> records, bool quotient_time_shift) {
  std::stable_sort(records.begin(), records.end(), [](const SolutionRecord& a, const SolutionRecord& b) {
    if (a.action() != b.action()) return a.action() < b.action();
    return a.seed_id < b.seed_id;
  });
  std::vector<SolutionRecord> reps;
  for (auto& rec : records) {
    bool merged = false;
    for (auto& rep : reps)
      if (distance_mod_symmetries(rep.loop, rec.loop, quotient_time_shift) <= dedup_tolerance(rep.loop, rec.loop)) {
        ++rep.cluster_size;
        merged = true;
        break;
      }
    if (!merged) {
      rec.orbit_representative = true;
      rec.cluster_size = 1;
      reps.push_back(std::move(rec));
    }
  }
  return reps;
}

// ---------------------------------------------------------------------------
// census

struct BandCount {
  int band = 0;
  double lower = 0; ///< -inf for the first band
  double upper = 0;
  int expected = 0;
  int found = 0;
};

struct CensusReport {
  int starts = 0;
  int converged = 0;
  int failed = 0;
  int density_used = 0;
  int harmonics_used = 0;
  bool s1_quotient = false;
  std::optional<double> reversal_center;
  double lambda_used = 0;
  double m0 = 0;
  double a0 = 0;
  std::vector<SolutionRecord> solutions; ///< distinct, ascending action
  int certified = 0;
  int category_bound = 0;
  int nondegenerate_bound = 0;
  bool all_nondegenerate = false;
  std::optional<int> level_bound;
  std::optional<ConstantsReport> constants;
  std::vector<BandCount> bands;
  int applicable_bound = 0;
  bool meets_bound = false;
  bool every_band_hit = false;
  std::vector<std::string> notes;
};

namespace detail {

struct SeedOutcome {
  MinimizeResult result;
  bool symmetric = false;
};

inline SeedOutcome solve_seed(const ActionFunctional& af, const ActionFunctional* shifted_af, double t0,
                              const Seed& seed, const SolverOptions& opt) {
  MinimizeOptions mo;
  mo.tol_scale = opt.tol_scale;
  mo.max_iters = opt.max_iters;
  if (shifted_af && seed.reversal_fixed) {
    mo.reversal_symmetric = true;
    auto sym = minimize(*shifted_af, seed.start, mo);
    if (sym.stop_reason == "converged") {
      const LoopPath back = t0 == 0.0 ? sym.loop : time_shift(sym.loop, -t0);
      mo.reversal_symmetric = false;
      auto polished = minimize(af, back, mo);
      polished.iterations += sym.iterations;
      return {std::move(polished), true};
    }
    mo.reversal_symmetric = false;
  }
  return {minimize(af, seed.start, mo), false};
}

inline std::vector<SeedOutcome> run_seeds(const ActionFunctional& af, const ActionFunctional* shifted_af, double t0,
                                          const std::vector<Seed>& seeds, const SolverOptions& opt) {
  std::vector<SeedOutcome> out(seeds.size());
  const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = solve_seed(af, shifted_af, t0, seeds[i], opt);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();)
          out[i] = solve_seed(af, shifted_af, t0, seeds[i], opt);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

} // namespace detail

/// Hessian classification, certification, estimate checks and band of one record.
inline void classify(SolutionRecord& rec, const ActionFunctional& af, double m0, double lambda,
                     const std::optional<Levels>& levels, int certify_steps) {
  const bool s1 = af.forcing().is_zero();
  try {
    const auto h = af.hessian_fd(rec.loop, s1);
    rec.morse_index = h.morse_index;
    rec.near_zero = h.near_zero;
    rec.nondegenerate = h.nondegenerate;
    rec.hessian_threshold = h.threshold;
    const auto m = std::min<Eigen::Index>(8, h.eigenvalues.size());
    rec.hessian_head.assign(h.eigenvalues.data(), h.eigenvalues.data() + m);
  } catch (const InvalidParameter&) {
    rec.morse_index = -1;
  }
  rec.certification = certify(af.params(), af.forcing(), rec.loop, m0, certify_steps);
  rec.oracles_hold = true;
  for (const auto& c : estimate_oracles(af, rec.loop, lambda, m0)) rec.oracles_hold = rec.oracles_hold && c.holds;
  rec.band = levels ? levels->band(rec.action()) : 0;
}

namespace detail {

inline CensusReport census_once(const RotationProblem& problem, const SolverOptions& opt, int density,
                                const std::optional<ConstantsReport>& constants, double lambda) {
  const ActionFunctional af = problem.functional();
  CensusReport rep;
  rep.density_used = density;
  rep.harmonics_used = problem.harmonics;
  rep.s1_quotient = problem.forcing.is_zero();
  rep.m0 = problem.forcing_bound();
  rep.lambda_used = lambda;
  rep.a0 = a0_bound(problem.params, problem.winding, problem.period, af.f_moment(), rep.m0, lambda);

  std::optional<ActionFunctional> shifted;
  double t0 = 0;
  if (opt.use_reversal) {
    rep.reversal_center = problem.forcing.reversal_center();
    if (rep.reversal_center) {
      t0 = *rep.reversal_center;
      RotationProblem sp = problem;
      sp.forcing = problem.forcing.shifted(t0);
      shifted.emplace(sp.functional());
    }
  }

  const auto seeds = seed_plan(problem, density, opt.perturbations, opt.seed);
  rep.starts = static_cast<int>(seeds.size());
  auto outcomes = run_seeds(af, shifted ? &*shifted : nullptr, t0, seeds, opt);

  std::vector<SolutionRecord> found;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.result.converged) {
      ++rep.failed;
      continue;
    }
    ++rep.converged;
    SolutionRecord rec;
    rec.loop = o.result.loop;
    rec.loop.reduce_mean();
    rec.breakdown = af.value(rec.loop);
    rec.grad_norm = o.result.grad_norm;
    rec.tolerance = o.result.tolerance;
    rec.iterations = o.result.iterations;
    rec.seed_id = seeds[i].id;
    rec.provenance = seeds[i].provenance + (o.symmetric ? " reversal" : "");
    rec.symmetric_solve = o.symmetric;
    rec.under_resolved = o.result.under_resolved;
    found.push_back(std::move(rec));
  }
  rep.solutions = dedupe(std::move(found), rep.s1_quotient);

  std::optional<Levels> levels;
  if (constants) levels = constants->levels;
  for (auto& rec : rep.solutions) {
    classify(rec, af, rep.m0, lambda, levels, opt.certify_steps);
    if (rec.certification->pass) ++rep.certified;
  }

  const int n = problem.params.size();
  const int n0 = problem.winding.zero_count();
  rep.category_bound = rep.s1_quotient ? n : n + 1;
  rep.nondegenerate_bound = rep.s1_quotient ? 1 << (n - 1) : 1 << n;
  rep.all_nondegenerate = !rep.solutions.empty() &&
                          std::all_of(rep.solutions.begin(), rep.solutions.end(),
                                      [](const SolutionRecord& r) { return r.nondegenerate; });
  rep.applicable_bound = rep.all_nondegenerate ? rep.nondegenerate_bound : rep.category_bound;

  if (levels) {
    const int per_band = rep.s1_quotient ? n - n0 : n - n0 + 1;
    rep.level_bound = per_band << n0;
    rep.applicable_bound = std::max(rep.applicable_bound, *rep.level_bound);
    const int nb = 1 << n0;
    for (int b = 1; b <= nb; ++b) {
      BandCount bc;
      bc.band = b;
      bc.lower = b == 1 ? -std::numeric_limits<double>::infinity() : levels->a[static_cast<std::size_t>(b - 2)];
      bc.upper = b == nb ? levels->a_n : levels->a[static_cast<std::size_t>(b - 1)];
      bc.expected = per_band;
      for (const auto& r : rep.solutions)
        if (r.certification->pass && r.band == b) ++bc.found;
      rep.bands.push_back(bc);
    }
    rep.every_band_hit = std::all_of(rep.bands.begin(), rep.bands.end(), [](const BandCount& b) { return b.found > 0; });
  } else if (constants) {
    rep.notes.push_back("level bound unavailable: " + constants->levels_note);
  }
  rep.meets_bound = rep.certified >= rep.applicable_bound && (rep.bands.empty() || rep.every_band_hit);
  for (const auto& r : rep.solutions) {
    if (r.under_resolved) rep.notes.push_back("seed " + std::to_string(r.seed_id) + ": spectral tail above 1e-6");
    if (r.morse_index >= 0 && !r.nondegenerate)
      rep.notes.push_back("seed " + std::to_string(r.seed_id) + ": degenerate or near-degenerate critical point");
  }
  return rep;
}

} // namespace detail

/**
 * @brief Seeds, minimizes, clusters and certifies; compares the count of
 *        certified distinct solutions with the applicable lower bound.
 *
 * Under-counting is reported, not thrown.
 */
inline CensusReport census(const RotationProblem& problem, const SolverOptions& opt = {}) {
  if (problem.params.size() != problem.winding.size())
    throw InvalidParameter("winding dimension differs from pendulum size");
  std::optional<ConstantsReport> constants;
  double lambda = 0;
  const int n0 = problem.winding.zero_count();
  if (n0 >= 1 && n0 <= problem.params.size() - 1) {
    constants = constants_report(problem.params, problem.winding, problem.forcing, problem.period,
                                 problem.forcing_bound(), opt.lambda_resolution);
    lambda = constants->lambda_used;
  } else {
    lambda = lambda_min(problem.params, opt.lambda_resolution).conservative();
  }
  RotationProblem pr = problem;
  auto rep = detail::census_once(pr, opt, opt.density, constants, lambda);
  auto unresolved = [](const CensusReport& r) {
    return std::any_of(r.solutions.begin(), r.solutions.end(),
                       [](const SolutionRecord& s) { return s.under_resolved && !s.certification->pass; });
  };
  std::vector<std::string> reruns;
  while (unresolved(rep) && 2 * pr.harmonics <= opt.max_harmonics) {
    pr.harmonics *= 2;
    reruns.push_back("K raised to " + std::to_string(pr.harmonics) + ": a flagged solution failed certification");
    rep = detail::census_once(pr, opt, opt.density, constants, lambda);
  }
  if (!rep.meets_bound && opt.retry_on_shortfall) {
    auto again = detail::census_once(pr, opt, 2 * opt.density, constants, lambda);
    if (again.certified >= rep.certified) {
      reruns.push_back("rerun at density " + std::to_string(2 * opt.density) + " after a shortfall at " +
                       std::to_string(opt.density));
      rep = std::move(again);
    }
  }
  rep.notes.insert(rep.notes.begin(), reruns.begin(), reruns.end());
  rep.constants = std::move(constants);
  return rep;
}

} // namespace pendrot
