#pragma once

/**
 * @file torus.hpp
 * @brief Binary codes, seed points and pinned-coordinate subsets of T^N.
 *
 * For N0 distinguished coordinates sigma(1) < ... < sigma(N0) and
 * n = 2^N0, each k in [1, n] has a big-endian code
 *
 *   k - 1 = sum_i tau_i(k) 2^(N0 - i),
 *
 * and a seed point z(k) with z_i = pi (1 - tau_i(k)). Subsets of the torus are
 * conjunctions of clauses; a clause is a disjunction of atoms and an atom pins
 * one coordinate to 0 or pi.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pendrot/error.hpp"
#include "pendrot/loopspace.hpp"

namespace pendrot::torus {

inline constexpr double kPi = std::numbers::pi;

inline void check_code_range(int k, int n0) {
  if (n0 < 0 || n0 > 30) throw InvalidParameter("N0 out of range");
  if (k < 1 || k > (1 << n0))
    throw InvalidParameter("code index " + std::to_string(k) + " outside [1, 2^N0]");
}

/// tau(k): N0 bits, most significant first.
inline std::vector<int> tau(int k, int n0) {
  check_code_range(k, n0);
  std::vector<int> bits(static_cast<std::size_t>(n0));
  for (int i = 0; i < n0; ++i) bits[static_cast<std::size_t>(i)] = ((k - 1) >> (n0 - 1 - i)) & 1;
  return bits;
}

/// Inverse of tau.
inline int code_index(std::span<const int> bits) {
  int k = 0;
  for (int b : bits) k = 2 * k + b;
  return k + 1;
}

/// z(k) = (pi (1 - tau_1(k)), ..., pi (1 - tau_N0(k))).
inline std::vector<double> z_point(int k, int n0) {
  auto bits = tau(k, n0);
  std::vector<double> z(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) z[i] = kPi * (1 - bits[i]);
  return z;
}

/// Pin of one torus coordinate to a value (0 or pi).
struct Atom {
  int coord = 0;
  double value = 0;
  bool operator==(const Atom&) const = default;
};

using Clause = std::vector<Atom>;
/// Partial assignment coordinate -> pinned value.
using Pinning = std::map<int, double>;

inline bool same_angle(double a, double b, double tol) {
  return std::abs(wrap_angle(a - b)) <= tol;
}

/**
 * @brief Subset of T^N described by a conjunction of clauses of pins.
 *
 * Unconstrained coordinates range over the whole circle. An empty clause
 * list is the whole torus.
 */
class ConstraintSet {
public:
  ConstraintSet() = default;
  ConstraintSet(int dim, std::vector<Clause> clauses, std::string label = {})
      : dim_(dim), clauses_(std::move(clauses)), label_(std::move(label)) {
    for (const auto& c : clauses_)
      for (const auto& a : c)
        if (a.coord < 0 || a.coord >= dim_) throw InvalidParameter("atom coordinate out of range");
  }

  int dim() const { return dim_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  const std::string& label() const { return label_; }

  bool contains(std::span<const double> point, double tol = 1e-9) const {
    for (const auto& clause : clauses_) {
      bool any = false;
      for (const auto& a : clause)
        if (same_angle(point[static_cast<std::size_t>(a.coord)], a.value, tol)) {
          any = true;
          break;
        }
      if (!any) return false;
    }
    return true;
  }

  ConstraintSet intersect(const ConstraintSet& other) const {
    auto clauses = clauses_;
    clauses.insert(clauses.end(), other.clauses_.begin(), other.clauses_.end());
    return ConstraintSet(dim_, std::move(clauses), label_ + "&" + other.label_);
  }

  /**
   * @brief Minimal pinnings whose union is the set (disjunctive normal form).
   *
   * Each returned pinning fixes some coordinates; the remaining ones are free.
   * Pinnings are deduplicated and no pinning extends another.
   */
  std::vector<Pinning> dnf() const {
    std::vector<Pinning> out;
    Pinning current;
    expand(0, current, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::vector<Pinning> minimal;
    for (const auto& p : out) {
      bool dominated = false;
      for (const auto& other : out)
        if (&other != &p && other.size() < p.size() &&
            std::includes(p.begin(), p.end(), other.begin(), other.end()))
          dominated = true;
      if (!dominated) minimal.push_back(p);
    }
    return minimal;
  }

private:
  void expand(std::size_t idx, Pinning& current, std::vector<Pinning>& out) const {
    if (idx == clauses_.size()) {
      out.push_back(current);
      return;
    }
    const auto& clause = clauses_[idx];
    for (const auto& a : clause) {
      auto it = current.find(a.coord);
      if (it != current.end() && same_angle(it->second, a.value, 1e-12)) {
        expand(idx + 1, current, out);
        return;
      }
    }
    for (const auto& a : clause) {
      if (current.count(a.coord)) continue;
      current[a.coord] = a.value;
      expand(idx + 1, current, out);
      current.erase(a.coord);
    }
  }

  int dim_ = 0;
  std::vector<Clause> clauses_;
  std::string label_;
};

inline bool membership(const ConstraintSet& set, std::span<const double> point, double tol = 1e-9) {
  return set.contains(point, tol);
}

/// Uniform-ish samples: pinnings taken round-robin, free coordinates uniform.
template <class Rng>
std::vector<std::vector<double>> sample(const ConstraintSet& set, int count, Rng& rng) {
  const auto terms = set.dnf();
  if (terms.empty()) throw InvalidParameter("constraint set '" + set.label() + "' is empty");
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::vector<std::vector<double>> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const auto& pin = terms[static_cast<std::size_t>(s) % terms.size()];
    std::vector<double> p(static_cast<std::size_t>(set.dim()));
    for (auto& x : p) x = angle(rng);
    for (const auto& [c, v] : pin) p[static_cast<std::size_t>(c)] = v;
    pts.push_back(std::move(p));
  }
  return pts;
}

/**
 * @brief Constructors for the subsets used by the level estimates.
 *
 * `sigma` lists the N0 distinguished coordinates of T^N in increasing order;
 * index i below refers to sigma[i-1].
 */
class Subtori {
public:
  Subtori(int dim, std::vector<int> sigma) : dim_(dim), sigma_(std::move(sigma)) {
    for (std::size_t i = 0; i < sigma_.size(); ++i) {
      if (sigma_[i] < 0 || sigma_[i] >= dim_) throw InvalidParameter("sigma index out of range");
      if (i > 0 && sigma_[i] <= sigma_[i - 1]) throw InvalidParameter("sigma must be increasing");
    }
  }

  int dim() const { return dim_; }
  int n0() const { return static_cast<int>(sigma_.size()); }
  int count() const { return 1 << n0(); }
  const std::vector<int>& sigma() const { return sigma_; }

  /// S_k = {z(k)} x T^(N - N0).
  ConstraintSet s(int k) const {
    const auto z = z_point(k, n0());
    std::vector<Clause> cl;
    for (int i = 0; i < n0(); ++i) cl.push_back({{sigma_[i], z[i]}});
    return {dim_, std::move(cl), "S" + std::to_string(k)};
  }

  /// T_{k,j}: S_k with the pin of code position m released, k - j = 2^(N0 - m).
  ConstraintSet t(int k, int j) const {
    check_code_range(k, n0());
    check_code_range(j, n0());
    const int diff = k - j;
    int m = 0;
    for (int cand = 1; cand <= n0(); ++cand)
      if (diff == (1 << (n0() - cand))) m = cand;
    if (j < 1 || m == 0) throw InvalidParameter("T_{k,j} needs k - j = 2^(N0 - m) for some m");
    const auto z = z_point(k, n0());
    std::vector<Clause> cl;
    for (int i = 0; i < n0(); ++i)
      if (i + 1 != m) cl.push_back({{sigma_[i], z[i]}});
    return {dim_, std::move(cl), "T" + std::to_string(k) + "," + std::to_string(j)};
  }

  /// Released code position m of T_{k,j}.
  int released_position(int k, int j) const {
    for (int cand = 1; cand <= n0(); ++cand)
      if (k - j == (1 << (n0() - cand))) return cand;
    return 0;
  }

  /// T^{N-1}_{k,i} = {y_sigma(i) = pi tau_i(k)}.
  ConstraintSet hyper(int k, int i) const {
    const auto bits = tau(k, n0());
    if (i < 1 || i > n0()) throw InvalidParameter("code position out of range");
    return {dim_, {{{sigma_[i - 1], kPi * bits[i - 1]}}}, "T^" + std::to_string(k) + "," + std::to_string(i)};
  }

  /// Q_k: union over i of T^{N-1}_{k,i}.
  ConstraintSet q(int k) const {
    const auto bits = tau(k, n0());
    Clause c;
    for (int i = 0; i < n0(); ++i) c.push_back({sigma_[i], kPi * bits[i]});
    return {dim_, {c}, "Q" + std::to_string(k)};
  }

  /// M_k: intersection of Q_j for j = k..n.
  ConstraintSet m(int k) const {
    check_code_range(k, n0());
    std::vector<Clause> cl;
    for (int j = k; j <= count(); ++j) cl.push_back(q(j).clauses().front());
    return {dim_, std::move(cl), "M" + std::to_string(k)};
  }

  /// O_k: coordinates with tau_i(k) = 1 pinned to 0.
  ConstraintSet o(int k) const {
    const auto bits = tau(k, n0());
    std::vector<Clause> cl;
    for (int i = 0; i < n0(); ++i)
      if (bits[i] == 1) cl.push_back({{sigma_[i], 0.0}});
    return {dim_, std::move(cl), "O" + std::to_string(k)};
  }

private:
  int dim_;
  std::vector<int> sigma_;
};

/// beta(k) = sum_i (-1)^(1 - tau_i(k)) b_i for weights b listed in sigma order.
inline double signed_level(std::span<const double> b, int k) {
  const auto bits = tau(k, static_cast<int>(b.size()));
  double s = 0;
  for (std::size_t i = 0; i < b.size(); ++i) s += bits[i] ? b[i] : -b[i];
  return s;
}

/// Exact extremes of V0(y) = sum_i b_i cos y_sigma(i) over a set (separable per pin).
struct PotentialRange {
  double min = 0;
  double max = 0;
};

inline PotentialRange averaged_potential_range(const ConstraintSet& set, std::span<const int> sigma,
                                               std::span<const double> b) {
  const auto terms = set.dnf();
  if (terms.empty()) throw InvalidParameter("constraint set '" + set.label() + "' is empty");
  PotentialRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& pin : terms) {
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      auto it = pin.find(sigma[i]);
      if (it != pin.end()) {
        lo += b[i] * std::cos(it->second);
        hi += b[i] * std::cos(it->second);
      } else {
        lo -= b[i];
        hi += b[i];
      }
    }
    r.min = std::min(r.min, lo);
    r.max = std::max(r.max, hi);
  }
  return r;
}

struct PotentialCertificate {
  int k = 0;
  double max_on_m = 0;    ///< max V0 over M_{k+1}
  double level_k = 0;     ///< beta(k)
  double min_on_o = 0;    ///< min V0 over O_{k+1}
  double level_next = 0;  ///< beta(k+1)
  double grid_max_on_m = 0;
  double grid_min_on_o = 0;
  bool passed = false;
};

namespace detail {
// Extreme of V0 over the pinned structure with free sigma-coordinates on a uniform grid.
inline PotentialRange grid_range(const ConstraintSet& set, std::span<const int> sigma,
                                 std::span<const double> b, int resolution) {
  PotentialRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& pin : set.dnf()) {
    std::vector<std::size_t> free;
    double fixed = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      auto it = pin.find(sigma[i]);
      if (it != pin.end())
        fixed += b[i] * std::cos(it->second);
      else
        free.push_back(i);
    }
    std::vector<int> idx(free.size(), 0);
    while (true) {
      double v = fixed;
      for (std::size_t f = 0; f < free.size(); ++f)
        v += b[free[f]] * std::cos(kTwoPi * idx[f] / resolution);
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
      std::size_t f = 0;
      while (f < free.size() && ++idx[f] == resolution) idx[f++] = 0;
      if (f == free.size()) break;
    }
  }
  return r;
}
} // namespace detail

/**
 * @brief Certify max V0 on M_{k+1} <= beta(k) and min V0 on O_{k+1} >= beta(k+1).
 *
 * `b` holds the g-scaled weights g*beta_sigma(i). Throws InternalError when the
 * certificate fails, since the inequalities are unconditional.
 */
inline PotentialCertificate potential_bounds_certificate(const Subtori& sub, std::span<const double> b, int k,
                                                         int grid_resolution = 16) {
  const int n = sub.count();
  if (static_cast<int>(b.size()) != sub.n0()) throw InvalidParameter("weight count must equal N0");
  if (k < 1 || k > n - 1) throw InvalidParameter("certificate needs 1 <= k <= n - 1");
  if (grid_resolution < 2) throw InvalidParameter("grid resolution must be at least 2");
  PotentialCertificate c;
  c.k = k;
  const auto m_set = sub.m(k + 1);
  const auto o_set = sub.o(k + 1);
  const auto mr = averaged_potential_range(m_set, sub.sigma(), b);
  const auto orng = averaged_potential_range(o_set, sub.sigma(), b);
  c.max_on_m = mr.max;
  c.min_on_o = orng.min;
  c.level_k = signed_level(b, k);
  c.level_next = signed_level(b, k + 1);
  c.grid_max_on_m = detail::grid_range(m_set, sub.sigma(), b, grid_resolution).max;
  c.grid_min_on_o = detail::grid_range(o_set, sub.sigma(), b, grid_resolution).min;
  double scale = 0;
  for (double x : b) scale += std::abs(x);
  const double eps = 1e-12 * (1 + scale);
  c.passed = c.max_on_m <= c.level_k + eps && c.min_on_o >= c.level_next - eps &&
             c.grid_max_on_m <= c.max_on_m + eps && c.grid_min_on_o >= c.min_on_o - eps;
  if (!c.passed)
    throw InternalError("potential bound certificate failed at k=" + std::to_string(k));
  return c;
}

} // namespace pendrot::torus
