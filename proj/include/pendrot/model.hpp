#pragma once

/**
 * @file model.hpp
 * @brief The planar N-pendulum: mass/length coefficients, kinetic matrix,
 *        potential, periodic forcing and the Euler-Lagrange residual.
 *
 * Conventions. Link angles q_i are measured so that the Lagrangian reads
 *
 *   L(q, p) = 1/2 A(q) p.p + V(q),    V(q) = g sum_j beta_j cos q_j,
 *
 *   A_ii = alpha_i l_i^2,   A_ij = alpha_max(i,j) l_i l_j cos(q_i - q_j),
 *
 * with alpha_j = sum_{s >= j} m_s and beta_j = alpha_j l_j. The forced
 * equations of motion are d/dt L_p - L_q = f(t).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pendrot/error.hpp"

namespace pendrot {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Partial mass sums alpha_j = sum_{s>=j} m_s and beta_j = alpha_j l_j.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd>
derive_coefficients(std::span<const double> mass, std::span<const double> length) {
  if (mass.empty() || mass.size() != length.size())
    throw InvalidParameter("mass and length lists must be non-empty and of equal size");
  const auto n = static_cast<Eigen::Index>(mass.size());
  Eigen::VectorXd alpha(n), beta(n);
  double tail = 0.0;
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const double m = mass[static_cast<std::size_t>(j)];
    const double l = length[static_cast<std::size_t>(j)];
    if (!(m > 0.0) || !std::isfinite(m))
      throw InvalidParameter("mass " + std::to_string(j + 1) + " must be positive");
    if (!(l > 0.0) || !std::isfinite(l))
      throw InvalidParameter("length " + std::to_string(j + 1) + " must be positive");
    tail += m;
    alpha[j] = tail;
    beta[j] = tail * l;
  }
  return {alpha, beta};
}

/// Masses, lengths and gravity of a planar N-pendulum with derived alpha/beta.
struct PendulumParams {
  Eigen::VectorXd mass;
  Eigen::VectorXd length;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  double gravity = 1.0;

  static PendulumParams make(std::span<const double> m, std::span<const double> l,
                             double g = 1.0) {
    if (!(g > 0.0) || !std::isfinite(g))
      throw InvalidParameter("gravity must be positive");
    auto [alpha, beta] = derive_coefficients(m, l);
    PendulumParams p;
    p.mass = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    p.length = Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
    p.alpha = std::move(alpha);
    p.beta = std::move(beta);
    p.gravity = g;
    return p;
  }
  static PendulumParams make(std::initializer_list<double> m, std::initializer_list<double> l,
                             double g = 1.0) {
    return make(std::span<const double>(m.begin(), m.size()),
                std::span<const double>(l.begin(), l.size()), g);
  }

  int size() const { return static_cast<int>(mass.size()); }

  /// Coefficient of cos(q_i - q_j) in A_ij (i != j), or the diagonal entry.
  double coupling(int i, int j) const {
    return alpha[std::max(i, j)] * length[i] * length[j];
  }

  /// g * beta_j, the amplitude of link j in the potential.
  double weighted_beta(int j) const { return gravity * beta[j]; }
};

/// Kinetic matrix A(q); symmetric positive definite.
inline Eigen::MatrixXd kinetic_matrix(const PendulumParams& params, const Eigen::VectorXd& q) {
  const int n = params.size();
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = params.coupling(i, i);
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = params.coupling(i, j) * std::cos(q[i] - q[j]);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

/// Directional derivative (A'(q) y) of the kinetic matrix along y.
inline Eigen::MatrixXd kinetic_matrix_derivative(const PendulumParams& params,
                                                 const Eigen::VectorXd& q,
                                                 const Eigen::VectorXd& y) {
  const int n = params.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      d(i, j) = -params.coupling(i, j) * std::sin(q[i] - q[j]) * (y[i] - y[j]);
      d(j, i) = d(i, j);
    }
  return d;
}

/// Gradient in q of the kinetic energy 1/2 A(q) qd.qd at fixed velocity.
inline Eigen::VectorXd kinetic_energy_gradient(const PendulumParams& params,
                                               const Eigen::VectorXd& q,
                                               const Eigen::VectorXd& qd) {
  const int n = params.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double w = params.coupling(i, j) * std::sin(q[i] - q[j]) * qd[i] * qd[j];
      g[i] -= w;
      g[j] += w;
    }
  return g;
}

inline double potential(const PendulumParams& params, const Eigen::VectorXd& q) {
  double v = 0.0;
  for (int j = 0; j < params.size(); ++j) v += params.beta[j] * std::cos(q[j]);
  return params.gravity * v;
}

inline Eigen::VectorXd potential_gradient(const PendulumParams& params, const Eigen::VectorXd& q) {
  Eigen::VectorXd g(params.size());
  for (int j = 0; j < params.size(); ++j) g[j] = -params.weighted_beta(j) * std::sin(q[j]);
  return g;
}

/// One harmonic of a forcing coordinate: c cos(2 pi k t/T) + s sin(2 pi k t/T).
struct Harmonic {
  int k = 1;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

/**
 * @brief Zero-mean T-periodic forcing given as a trigonometric polynomial
 *        per coordinate.
 */
class Forcing {
public:
  Forcing() = default;

  Forcing(double period, std::vector<std::vector<Harmonic>> terms)
      : period_(period), terms_(std::move(terms)) {
    if (!(period_ > 0.0)) throw InvalidParameter("forcing period must be positive");
    for (const auto& coord : terms_)
      for (const auto& h : coord)
        if (h.k < 1) throw InvalidParameter("forcing harmonics must have index k >= 1");
  }

  static Forcing zero(double period, int dim) {
    return Forcing(period, std::vector<std::vector<Harmonic>>(static_cast<std::size_t>(dim)));
  }

  /// f_coord(t) = amplitude * sin(2 pi t / T), all other coordinates zero.
  static Forcing single_sine(double period, int dim, int coord, double amplitude, int k = 1) {
    std::vector<std::vector<Harmonic>> terms(static_cast<std::size_t>(dim));
    terms[static_cast<std::size_t>(coord)].push_back({k, 0.0, amplitude});
    return Forcing(period, std::move(terms));
  }

  double period() const { return period_; }
  int size() const { return static_cast<int>(terms_.size()); }
  const std::vector<std::vector<Harmonic>>& terms() const { return terms_; }

  bool is_zero() const {
    for (const auto& coord : terms_)
      for (const auto& h : coord)
        if (h.cos_amp != 0.0 || h.sin_amp != 0.0) return false;
    return true;
  }

  int max_harmonic() const {
    int k = 0;
    for (const auto& coord : terms_)
      for (const auto& h : coord) k = std::max(k, h.k);
    return k;
  }

  Eigen::VectorXd operator()(double t) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(size());
    const double w = kTwoPi / period_;
    for (int i = 0; i < size(); ++i)
      for (const auto& h : terms_[static_cast<std::size_t>(i)]) {
        const double phase = w * h.k * t;
        f[i] += h.cos_amp * std::cos(phase) + h.sin_amp * std::sin(phase);
      }
    return f;
  }

  /// Forcing seen from a clock started at t0: g(t) = f(t + t0).
  Forcing shifted(double t0) const {
    auto terms = terms_;
    const double w = kTwoPi / period_;
    for (auto& coord : terms)
      for (auto& h : coord) {
        const double phi = w * h.k * t0;
        const double c = h.cos_amp, s = h.sin_amp;
        h.cos_amp = c * std::cos(phi) + s * std::sin(phi);
        h.sin_amp = s * std::cos(phi) - c * std::sin(phi);
      }
    return Forcing(period_, std::move(terms));
  }

  /**
   * @brief Upper bound M0 for sup_t |f(t)|.
   *
   * Maximum of |f| over `samples` uniform points, inflated by half a grid
   * spacing times a bound on |f'| so the result never underestimates the
   * supremum.
   */
  double bound(int samples = 10000) const {
    if (is_zero()) return 0.0;
    double best = 0.0;
    for (int s = 0; s < samples; ++s)
      best = std::max(best, (*this)(period_ * s / samples).norm());
    Eigen::VectorXd slope = Eigen::VectorXd::Zero(size());
    const double w = kTwoPi / period_;
    for (int i = 0; i < size(); ++i)
      for (const auto& h : terms_[static_cast<std::size_t>(i)])
        slope[i] += w * h.k * std::hypot(h.cos_amp, h.sin_amp);
    return best + 0.5 * (period_ / samples) * slope.norm();
  }

  /// L2 norm over one period (exact, by Parseval).
  double l2_norm() const {
    double s = 0.0;
    for (const auto& coord : terms_) {
      std::vector<std::pair<double, double>> by_k;
      // harmonics may repeat an index; merge before squaring
      for (const auto& h : coord) {
        if (static_cast<int>(by_k.size()) < h.k) by_k.resize(static_cast<std::size_t>(h.k), {0.0, 0.0});
        by_k[static_cast<std::size_t>(h.k - 1)].first += h.cos_amp;
        by_k[static_cast<std::size_t>(h.k - 1)].second += h.sin_amp;
      }
      for (const auto& [c, sn] : by_k) s += c * c + sn * sn;
    }
    return std::sqrt(0.5 * period_ * s);
  }

  /**
   * @brief A time t0 about which the forcing is odd, f(t0 + s) = -f(t0 - s).
   *
   * Returns the smallest such t0 in [0, T), or nullopt. The zero forcing is
   * odd about 0.
   */
  std::optional<double> reversal_center(double tol = 1e-12) const {
    const Harmonic* first = nullptr;
    for (const auto& coord : terms_)
      for (const auto& h : coord)
        if (!first && (h.cos_amp != 0.0 || h.sin_amp != 0.0)) first = &h;
    if (!first) return 0.0;
    const double w = kTwoPi / period_;
    const double phi0 = std::atan2(-first->cos_amp, first->sin_amp);
    std::vector<double> candidates;
    for (int j = 0; j < 2 * first->k + 2; ++j) {
      double t0 = (phi0 + j * std::numbers::pi) / (w * first->k);
      t0 = std::fmod(t0, period_);
      if (t0 < 0) t0 += period_;
      candidates.push_back(t0);
    }
    std::sort(candidates.begin(), candidates.end());
    for (double t0 : candidates) {
      bool odd = true;
      const Forcing g = shifted(t0);
      for (const auto& coord : g.terms_)
        for (const auto& h : coord)
          if (std::abs(h.cos_amp) > tol * (1.0 + std::abs(h.sin_amp))) odd = false;
      if (odd) return t0;
    }
    return std::nullopt;
  }

private:
  double period_ = 1.0;
  std::vector<std::vector<Harmonic>> terms_;
};

inline Eigen::VectorXd forcing_eval(const Forcing& f, double t) { return f(t); }
inline double forcing_bound(const Forcing& f) { return f.bound(); }

/**
 * @brief Residual of the forced Euler-Lagrange equations at one instant:
 *
 *   A(q) qdd + (dA/dt) qd - 1/2 grad_q(A(q) qd.qd) - grad V(q) - f(t).
 */
inline Eigen::VectorXd euler_lagrange_residual(const PendulumParams& params, const Forcing& f,
                                               double t, const Eigen::VectorXd& q,
                                               const Eigen::VectorXd& qd,
                                               const Eigen::VectorXd& qdd) {
  return kinetic_matrix(params, q) * qdd + kinetic_matrix_derivative(params, q, qd) * qd -
         kinetic_energy_gradient(params, q, qd) - potential_gradient(params, q) - f(t);
}

/// Acceleration solving the Euler-Lagrange equations for a given state.
inline Eigen::VectorXd acceleration(const PendulumParams& params, const Forcing& f, double t,
                                    const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  const Eigen::VectorXd rhs = kinetic_energy_gradient(params, q, qd) +
                              potential_gradient(params, q) + f(t) -
                              kinetic_matrix_derivative(params, q, qd) * qd;
  Eigen::LLT<Eigen::MatrixXd> llt(kinetic_matrix(params, q));
  if (llt.info() != Eigen::Success) throw InternalError("kinetic matrix is not positive definite");
  return llt.solve(rhs);
}

/// Conserved energy of the unforced system: kinetic minus V.
inline double energy(const PendulumParams& params, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& qd) {
  return 0.5 * qd.dot(kinetic_matrix(params, q) * qd) - potential(params, q);
}

} // namespace pendrot
