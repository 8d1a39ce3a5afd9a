#pragma once

/**
 * @file loopspace.hpp
 * @brief Truncated Fourier representation of loops with winding.
 *
 * A loop is q(t) = xbar + xt(t) + 2 pi v t / T where xbar is a point of the
 * N-torus (stored reduced to [0, 2 pi)) and xt is a zero-mean trigonometric
 * polynomial of degree K:
 *
 *   xt_i(t) = sum_{k=1..K} a_ik cos(2 pi k t/T) + b_ik sin(2 pi k t/T).
 *
 * The flat coefficient vector used by optimizers is [xbar | a (row-major) | b].
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pendrot/error.hpp"
#include "pendrot/model.hpp"

namespace pendrot {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

/// Reduces an angle to [0, 2 pi).
inline double reduce_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

/**
 * @brief Validated prime winding vector.
 *
 * Prime means: a single coordinate equal to +-1 and all others zero, or at
 * least two nonzero coordinates of which some pair is relatively prime.
 */
class WindingVector {
public:
  WindingVector() = default;

  static WindingVector validate(std::span<const int> v) {
    if (v.empty()) throw InvalidParameter("winding vector must be non-empty");
    std::vector<int> nonzero;
    for (int x : v)
      if (x != 0) nonzero.push_back(x);
    if (nonzero.empty()) throw InvalidParameter("winding vector must be nonzero");
    bool prime = false;
    if (nonzero.size() == 1) {
      prime = std::abs(nonzero.front()) == 1;
    } else {
      for (std::size_t i = 0; i < nonzero.size() && !prime; ++i)
        for (std::size_t j = i + 1; j < nonzero.size() && !prime; ++j)
          prime = std::gcd(nonzero[i], nonzero[j]) == 1;
    }
    if (!prime)
      throw InvalidParameter(nonzero.size() == 1
                                 ? "winding vector is not prime: single nonzero entry is not +-1"
                                 : "winding vector is not prime: no pair of nonzero entries is coprime");
    WindingVector w;
    w.v_.assign(v.begin(), v.end());
    return w;
  }
  static WindingVector validate(std::initializer_list<int> v) {
    return validate(std::span<const int>(v.begin(), v.size()));
  }

  int size() const { return static_cast<int>(v_.size()); }
  int operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& values() const { return v_; }

  /// Indices i (0-based, increasing) with v_i = 0.
  std::vector<int> zero_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (v_[static_cast<std::size_t>(i)] == 0) idx.push_back(i);
    return idx;
  }
  std::vector<int> rotating_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (v_[static_cast<std::size_t>(i)] != 0) idx.push_back(i);
    return idx;
  }
  int zero_count() const { return static_cast<int>(zero_indices().size()); }

  double norm_squared() const {
    double s = 0;
    for (int x : v_) s += double(x) * x;
    return s;
  }
  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd r(size());
    for (int i = 0; i < size(); ++i) r[i] = v_[static_cast<std::size_t>(i)];
    return r;
  }

  bool operator==(const WindingVector&) const = default;

private:
  std::vector<int> v_;
};

inline WindingVector validate_winding(std::span<const int> v) { return WindingVector::validate(v); }

/// Loop x = xbar + xt on T^N x (zero-mean trigonometric polynomials).
struct LoopPath {
  double period = 1.0;
  WindingVector winding;
  Eigen::VectorXd mean;     ///< xbar, N angles
  Eigen::MatrixXd cos_coef; ///< N x K, a_ik
  Eigen::MatrixXd sin_coef; ///< N x K, b_ik

  static LoopPath constant(double period, WindingVector v, const Eigen::VectorXd& mean,
                           int harmonics) {
    if (!(period > 0)) throw InvalidParameter("period must be positive");
    if (mean.size() != v.size()) throw InvalidParameter("mean and winding dimensions differ");
    LoopPath p;
    p.period = period;
    p.winding = std::move(v);
    p.mean = mean.unaryExpr([](double a) { return reduce_angle(a); });
    p.cos_coef = Eigen::MatrixXd::Zero(mean.size(), harmonics);
    p.sin_coef = Eigen::MatrixXd::Zero(mean.size(), harmonics);
    return p;
  }

  int dim() const { return static_cast<int>(mean.size()); }
  int harmonics() const { return static_cast<int>(cos_coef.cols()); }
  int coefficient_count() const { return dim() * (2 * harmonics() + 1); }
  double omega() const { return kTwoPi / period; }

  void reduce_mean() {
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] = reduce_angle(mean[i]);
  }

  Eigen::VectorXd pack() const {
    const int n = dim(), k = harmonics();
    Eigen::VectorXd c(coefficient_count());
    c.head(n) = mean;
    for (int i = 0; i < n; ++i) {
      c.segment(n + i * k, k) = cos_coef.row(i).transpose();
      c.segment(n + n * k + i * k, k) = sin_coef.row(i).transpose();
    }
    return c;
  }

  /// Same problem data, coefficients taken from a flat vector.
  LoopPath with_coefficients(const Eigen::VectorXd& c) const {
    const int n = dim(), k = harmonics();
    if (c.size() != coefficient_count()) throw InvalidParameter("coefficient vector has wrong size");
    LoopPath p = *this;
    p.mean = c.head(n);
    for (int i = 0; i < n; ++i) {
      p.cos_coef.row(i) = c.segment(n + i * k, k).transpose();
      p.sin_coef.row(i) = c.segment(n + n * k + i * k, k).transpose();
    }
    return p;
  }
};

/// Flat-vector positions of the coefficients.
struct CoefficientLayout {
  int n = 0;
  int k = 0;
  int mean(int i) const { return i; }
  int cosine(int i, int h) const { return n + i * k + (h - 1); }
  int sine(int i, int h) const { return n + n * k + i * k + (h - 1); }
  int size() const { return n * (2 * k + 1); }
  /// Harmonic index of a flat position (0 for the mean block).
  int harmonic_of(int idx) const {
    if (idx < n) return 0;
    return (idx - n) % k + 1;
  }
};

struct LoopState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Eigen::VectorXd qdd;
};

/// Angles-with-winding q(t), rates q'(t) and accelerations q''(t).
inline LoopState eval_loop(const LoopPath& loop, double t) {
  const int n = loop.dim();
  const double w = loop.omega();
  LoopState s{loop.mean + loop.winding.as_vector() * (w * t),
              loop.winding.as_vector() * w, Eigen::VectorXd::Zero(n)};
  for (int h = 1; h <= loop.harmonics(); ++h) {
    const double c = std::cos(w * h * t), sn = std::sin(w * h * t);
    const double wk = w * h;
    for (int i = 0; i < n; ++i) {
      const double a = loop.cos_coef(i, h - 1), b = loop.sin_coef(i, h - 1);
      s.q[i] += a * c + b * sn;
      s.qd[i] += wk * (-a * sn + b * c);
      s.qdd[i] += -wk * wk * (a * c + b * sn);
    }
  }
  return s;
}

struct LoopNorms {
  double oscillation_l2 = 0; ///< ||xt||_{L2}
  double velocity_l2 = 0;    ///< ||x'||_{L2}
  double w12 = 0;            ///< ||x||_{W^{1,2}} with xbar as stored
  Eigen::VectorXd velocity_l2_per_coordinate;
};

/// Exact Parseval norms of a loop.
inline LoopNorms norms(const LoopPath& loop) {
  const double half_t = 0.5 * loop.period;
  const double w = loop.omega();
  LoopNorms r;
  r.velocity_l2_per_coordinate = Eigen::VectorXd::Zero(loop.dim());
  double osc = 0;
  for (int i = 0; i < loop.dim(); ++i) {
    double vel = 0;
    for (int h = 1; h <= loop.harmonics(); ++h) {
      const double e = loop.cos_coef(i, h - 1) * loop.cos_coef(i, h - 1) +
                       loop.sin_coef(i, h - 1) * loop.sin_coef(i, h - 1);
      osc += half_t * e;
      vel += half_t * (w * h) * (w * h) * e;
    }
    r.velocity_l2_per_coordinate[i] = std::sqrt(vel);
  }
  const double vel2 = r.velocity_l2_per_coordinate.squaredNorm();
  r.oscillation_l2 = std::sqrt(osc);
  r.velocity_l2 = std::sqrt(vel2);
  r.w12 = std::sqrt(loop.period * loop.mean.squaredNorm() + osc + vel2);
  return r;
}

/// The S^1 action: the loop whose reconstruction is q(t + theta).
inline LoopPath time_shift(const LoopPath& loop, double theta) {
  LoopPath r = loop;
  const double w = loop.omega();
  for (int h = 1; h <= loop.harmonics(); ++h) {
    const double phi = w * h * theta;
    const double c = std::cos(phi), s = std::sin(phi);
    for (int i = 0; i < loop.dim(); ++i) {
      const double a = loop.cos_coef(i, h - 1), b = loop.sin_coef(i, h - 1);
      r.cos_coef(i, h - 1) = a * c + b * s;
      r.sin_coef(i, h - 1) = b * c - a * s;
    }
  }
  r.mean = loop.mean + loop.winding.as_vector() * (w * theta);
  r.reduce_mean();
  return r;
}

namespace detail {

inline void require_same_problem(const LoopPath& a, const LoopPath& b) {
  if (a.dim() != b.dim() || a.harmonics() != b.harmonics() || a.period != b.period ||
      !(a.winding == b.winding))
    throw InvalidParameter("loops belong to different problems");
}

/// Squared W^{1,2} distance between a and time_shift(b, theta) minimized over
/// 2 pi Z^N mean translations, and its derivative in theta.
inline std::pair<double, double> shifted_distance2(const LoopPath& a, const LoopPath& b,
                                                   double theta) {
  const double w = a.omega();
  const double half_t = 0.5 * a.period;
  double d2 = 0, dd = 0;
  for (int i = 0; i < a.dim(); ++i) {
    const double vi = a.winding[i];
    const double dm = wrap_angle(a.mean[i] - b.mean[i] - vi * w * theta);
    d2 += a.period * dm * dm;
    dd += a.period * 2.0 * dm * (-vi * w);
  }
  for (int h = 1; h <= a.harmonics(); ++h) {
    const double wk = w * h;
    const double weight = half_t * (1.0 + wk * wk);
    const double c = std::cos(wk * theta), s = std::sin(wk * theta);
    for (int i = 0; i < a.dim(); ++i) {
      const double ba = b.cos_coef(i, h - 1), bb = b.sin_coef(i, h - 1);
      const double sa = ba * c + bb * s;
      const double sb = bb * c - ba * s;
      const double da = a.cos_coef(i, h - 1) - sa;
      const double db = a.sin_coef(i, h - 1) - sb;
      d2 += weight * (da * da + db * db);
      dd += weight * 2.0 * (da * (-wk * sb) + db * (wk * sa));
    }
  }
  return {d2, dd};
}

} // namespace detail

/**
 * @brief W^{1,2} distance modulo the torus identification, optionally also
 *        modulo time shifts.
 *
 * The time-shift minimum is located on a 256-point grid and refined by
 * bisection on the analytic derivative.
 */
inline double distance_mod_symmetries(const LoopPath& a, const LoopPath& b,
                                      bool quotient_time_shift) {
  detail::require_same_problem(a, b);
  if (!quotient_time_shift) return std::sqrt(detail::shifted_distance2(a, b, 0.0).first);

  constexpr int kGrid = 256;
  const double step = a.period / kGrid;
  int best = 0;
  double best_d2 = detail::shifted_distance2(a, b, 0.0).first;
  for (int j = 1; j < kGrid; ++j) {
    const double d2 = detail::shifted_distance2(a, b, j * step).first;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  double lo = (best - 1) * step, hi = (best + 1) * step;
  double dlo = detail::shifted_distance2(a, b, lo).second;
  double dhi = detail::shifted_distance2(a, b, hi).second;
  if (dlo < 0 && dhi > 0) {
    for (int it = 0; it < 200 && hi - lo > 1e-17 * a.period; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double dm = detail::shifted_distance2(a, b, mid).second;
      if (dm < 0) lo = mid;
      else hi = mid;
    }
    best_d2 = std::min(best_d2, detail::shifted_distance2(a, b, 0.5 * (lo + hi)).first);
  } else {
    // no sign change: the minimum sits on a kink of the mean wrap; golden section
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = detail::shifted_distance2(a, b, x1).first;
    double f2 = detail::shifted_distance2(a, b, x2).first;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * a.period; ++it) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = detail::shifted_distance2(a, b, x1).first;
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = detail::shifted_distance2(a, b, x2).first;
      }
    }
    best_d2 = std::min({best_d2, f1, f2});
  }
  return std::sqrt(std::max(0.0, best_d2));
}

/// Tolerance below which two loops count as the same solution.
inline double dedup_tolerance(const LoopPath& a, const LoopPath& b) {
  return 1e-4 * (1.0 + std::max(norms(a).w12, norms(b).w12));
}

} // namespace pendrot
