#pragma once

/**
 * @file action.hpp
 * @brief The action functional of a rotation problem on the truncated loop
 *        space, with its gradient and a finite-difference Hessian.
 *
 *   L(x) = int_0^T [ 1/2 A(q) q'.q' + V(q) + f(t).q ] dt,  q = x + 2 pi v t/T.
 *
 * All periodic integrands use the trapezoid rule on M uniform nodes. The only
 * non-periodic piece, int f.(2 pi v t/T), is integrated in closed form.
 */

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>
#include <vector>

#include "pendrot/error.hpp"
#include "pendrot/loopspace.hpp"
#include "pendrot/model.hpp"

namespace pendrot {

struct ActionBreakdown {
  double kinetic = 0;   ///< L1
  double potential = 0; ///< L2
  double forcing = 0;   ///< L3
  double total = 0;
};

/// Spectrum summary of the Hessian at a near-critical loop.
struct HessianReport {
  Eigen::MatrixXd matrix;      ///< raw finite-difference Hessian in coefficient coordinates
  Eigen::VectorXd eigenvalues; ///< ascending, w.r.t. the W^{1,2} inner product
  double symmetry_defect = 0;  ///< ||H - H^T|| / ||H|| before symmetrization
  double norm = 0;             ///< spectral norm of the scaled Hessian
  double threshold = 0;        ///< tau_nd = 1e-5 (1 + norm)
  int morse_index = 0;
  int near_zero = 0;
  bool nondegenerate = false;
};

/// Closed form of int_0^T f(t).(2 pi v t / T) dt.
inline double forcing_moment(const Forcing& f, const WindingVector& v) {
  double s = 0;
  for (int i = 0; i < f.size(); ++i)
    for (const auto& h : f.terms()[static_cast<std::size_t>(i)])
      s += v[i] * h.sin_amp / h.k;
  return -f.period() * s;
}

class ActionFunctional {
public:
  /// `quad_points` = 0 selects M = 8K.
  ActionFunctional(PendulumParams params, Forcing forcing, WindingVector winding, double period,
                   int harmonics, int quad_points = 0)
      : params_(std::move(params)), forcing_(std::move(forcing)), winding_(std::move(winding)),
        period_(period), k_(harmonics), m_(quad_points > 0 ? quad_points : 8 * harmonics) {
    const int n = params_.size();
    if (winding_.size() != n) throw InvalidParameter("winding dimension differs from pendulum size");
    if (forcing_.size() != n) throw InvalidParameter("forcing dimension differs from pendulum size");
    if (std::abs(forcing_.period() - period_) > 1e-12 * period_)
      throw InvalidParameter("forcing period differs from the loop period");
    if (k_ < 1) throw InvalidParameter("at least one harmonic is required");
    if (m_ < 2 * k_ + 2) throw InvalidParameter("too few quadrature points for the harmonic count");
    if (2 * forcing_.max_harmonic() >= m_)
      throw InvalidParameter("forcing harmonic aliases on the quadrature grid");

    omega_ = kTwoPi / period_;
    weight_ = period_ / m_;
    cos_table_.resize(m_, k_);
    sin_table_.resize(m_, k_);
    times_.resize(m_);
    for (int j = 0; j < m_; ++j) {
      times_[j] = period_ * j / m_;
      for (int h = 1; h <= k_; ++h) {
        // exact integer reduction of the phase keeps the table symmetric under t -> -t
        const long r = (static_cast<long>(h) * j) % m_;
        cos_table_(j, h - 1) = std::cos(kTwoPi * r / m_);
        sin_table_(j, h - 1) = std::sin(kTwoPi * r / m_);
      }
    }
    omegas_.resize(k_);
    for (int h = 1; h <= k_; ++h) omegas_[h - 1] = omega_ * h;
    forcing_samples_.resize(n, m_);
    for (int j = 0; j < m_; ++j) forcing_samples_.col(j) = forcing_(times_[j]);
    const Eigen::VectorXd mean_force = forcing_samples_.rowwise().sum() * weight_;
    if (mean_force.norm() > 1e-10 * (1.0 + forcing_samples_.cwiseAbs().maxCoeff()) * period_)
      throw InternalError("forcing has nonzero mean on the quadrature grid");
    f_moment_ = forcing_moment(forcing_, winding_);
  }

  const PendulumParams& params() const { return params_; }
  const Forcing& forcing() const { return forcing_; }
  const WindingVector& winding() const { return winding_; }
  double period() const { return period_; }
  int harmonics() const { return k_; }
  int quad_points() const { return m_; }
  int dim() const { return params_.size(); }
  int coefficient_count() const { return dim() * (2 * k_ + 1); }
  CoefficientLayout layout() const { return {dim(), k_}; }
  double f_moment() const { return f_moment_; }

  LoopPath constant_loop(const Eigen::VectorXd& mean) const {
    return LoopPath::constant(period_, winding_, mean, k_);
  }
  LoopPath loop(const Eigen::VectorXd& coefficients) const {
    return constant_loop(Eigen::VectorXd::Zero(dim())).with_coefficients(coefficients);
  }

  ActionBreakdown value(const LoopPath& loop) const {
    check(loop);
    return evaluate(loop.pack(), nullptr);
  }
  ActionBreakdown value(const Eigen::VectorXd& c) const { return evaluate(c, nullptr); }

  Eigen::VectorXd gradient(const LoopPath& loop) const {
    check(loop);
    Eigen::VectorXd g;
    evaluate(loop.pack(), &g);
    return g;
  }
  std::pair<double, Eigen::VectorXd> value_and_gradient(const Eigen::VectorXd& c) const {
    Eigen::VectorXd g;
    const double v = evaluate(c, &g).total;
    return {v, std::move(g)};
  }

  /// Weights of the W^{1,2} inner product in coefficient coordinates.
  Eigen::VectorXd metric_weights() const {
    const auto lay = layout();
    Eigen::VectorXd w(lay.size());
    for (int idx = 0; idx < lay.size(); ++idx) {
      const int h = lay.harmonic_of(idx);
      w[idx] = h == 0 ? period_ : 0.5 * period_ * (1.0 + omegas_[h - 1] * omegas_[h - 1]);
    }
    return w;
  }

  /**
   * @brief Central differences of the analytic gradient, symmetrized.
   *
   * @param s1_symmetric  true when a time-shift zero mode is expected (f = 0)
   */
  HessianReport hessian_fd(const LoopPath& loop, bool s1_symmetric) const {
    check(loop);
    const Eigen::VectorXd c0 = loop.pack();
    const auto [f0, g0] = value_and_gradient(c0);
    if (g0.norm() >= 1e-6 * (1.0 + std::abs(f0)))
      throw InvalidParameter("Hessian requested far from a critical point");
    const auto lay = layout();
    const int d = lay.size();
    Eigen::MatrixXd h(d, d);
    for (int j = 0; j < d; ++j) {
      const double step = 1e-5 / std::max(1, lay.harmonic_of(j));
      Eigen::VectorXd cp = c0, cm = c0;
      cp[j] += step;
      cm[j] -= step;
      h.col(j) = (value_and_gradient(cp).second - value_and_gradient(cm).second) / (2 * step);
    }
    HessianReport r;
    const double hn = h.norm();
    r.symmetry_defect = hn > 0 ? (h - h.transpose()).norm() / hn : 0.0;
    r.matrix = 0.5 * (h + h.transpose());
    const Eigen::VectorXd inv_sqrt_w = metric_weights().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = inv_sqrt_w.asDiagonal() * r.matrix * inv_sqrt_w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
    r.eigenvalues = es.eigenvalues();
    r.norm = r.eigenvalues.cwiseAbs().maxCoeff();
    r.threshold = 1e-5 * (1.0 + r.norm);
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
      if (r.eigenvalues[i] < -r.threshold) ++r.morse_index;
      else if (r.eigenvalues[i] <= r.threshold) ++r.near_zero;
    }
    r.nondegenerate = r.near_zero == (s1_symmetric ? 1 : 0);
    return r;
  }

private:
  void check(const LoopPath& loop) const {
    if (loop.dim() != dim() || loop.harmonics() != k_)
      throw InvalidParameter("loop dimensions do not match the functional");
    if (std::abs(loop.period - period_) > 1e-12 * period_)
      throw InvalidParameter("loop period differs from the forcing period");
    if (!(loop.winding == winding_)) throw InvalidParameter("loop winding differs from the problem");
  }

  ActionBreakdown evaluate(const Eigen::VectorXd& c, Eigen::VectorXd* grad) const {
    const int n = dim();
    const auto lay = layout();
    if (c.size() != lay.size()) throw InvalidParameter("coefficient vector has wrong size");

    Eigen::MatrixXd a(n, k_), b(n, k_);
    for (int i = 0; i < n; ++i) {
      a.row(i) = c.segment(lay.cosine(i, 1), k_).transpose();
      b.row(i) = c.segment(lay.sine(i, 1), k_).transpose();
    }
    const Eigen::MatrixXd xt = a * cos_table_.transpose() + b * sin_table_.transpose();
    const Eigen::MatrixXd xd = (b * omegas_.asDiagonal()) * cos_table_.transpose() -
                               (a * omegas_.asDiagonal()) * sin_table_.transpose();

    Eigen::MatrixXd p(n, m_), g(n, m_);
    double kin = 0, pot = 0;
    Eigen::VectorXd q(n), qd(n);
    for (int j = 0; j < m_; ++j) {
      for (int i = 0; i < n; ++i) {
        q[i] = c[i] + xt(i, j) + winding_[i] * omega_ * times_[j];
        qd[i] = xd(i, j) + winding_[i] * omega_;
      }
      for (int i = 0; i < n; ++i) {
        const double d = params_.coupling(i, i);
        kin += 0.5 * d * qd[i] * qd[i];
        p(i, j) = d * qd[i];
        const double sb = std::sin(q[i]);
        pot += params_.weighted_beta(i) * std::cos(q[i]);
        g(i, j) = -params_.weighted_beta(i) * sb + forcing_samples_(i, j);
      }
      for (int i = 0; i < n; ++i)
        for (int l = i + 1; l < n; ++l) {
          const double cc = params_.coupling(i, l);
          const double cd = std::cos(q[i] - q[l]), sd = std::sin(q[i] - q[l]);
          kin += cc * cd * qd[i] * qd[l];
          p(i, j) += cc * cd * qd[l];
          p(l, j) += cc * cd * qd[i];
          const double w = cc * sd * qd[i] * qd[l];
          g(i, j) -= w;
          g(l, j) += w;
        }
    }
    ActionBreakdown r;
    r.kinetic = kin * weight_;
    r.potential = pot * weight_;
    r.forcing = (forcing_samples_.cwiseProduct(xt)).sum() * weight_ + f_moment_;
    r.total = r.kinetic + r.potential + r.forcing;

    if (grad) {
      grad->resize(lay.size());
      const Eigen::MatrixXd gc = g * cos_table_, gs = g * sin_table_;
      const Eigen::MatrixXd pc = p * cos_table_, ps = p * sin_table_;
      for (int i = 0; i < n; ++i) {
        (*grad)[i] = g.row(i).sum() * weight_;
        for (int h = 1; h <= k_; ++h) {
          const double wk = omegas_[h - 1];
          (*grad)[lay.cosine(i, h)] = (gc(i, h - 1) - wk * ps(i, h - 1)) * weight_;
          (*grad)[lay.sine(i, h)] = (gs(i, h - 1) + wk * pc(i, h - 1)) * weight_;
        }
      }
    }
    return r;
  }

  PendulumParams params_;
  Forcing forcing_;
  WindingVector winding_;
  double period_;
  int k_;
  int m_;
  double omega_ = 0;
  double weight_ = 0;
  double f_moment_ = 0;
  Eigen::VectorXd times_;
  Eigen::VectorXd omegas_;
  Eigen::MatrixXd cos_table_;
  Eigen::MatrixXd sin_table_;
  Eigen::MatrixXd forcing_samples_;
};

inline ActionBreakdown action(const PendulumParams& params, const Forcing& f, const LoopPath& loop,
                              int quad_points = 0) {
  return ActionFunctional(params, f, loop.winding, loop.period, loop.harmonics(), quad_points)
      .value(loop);
}

inline Eigen::VectorXd action_gradient(const PendulumParams& params, const Forcing& f,
                                       const LoopPath& loop, int quad_points = 0) {
  return ActionFunctional(params, f, loop.winding, loop.period, loop.harmonics(), quad_points)
      .gradient(loop);
}

inline HessianReport action_hessian_fd(const PendulumParams& params, const Forcing& f,
                                       const LoopPath& loop, int quad_points = 0) {
  return ActionFunctional(params, f, loop.winding, loop.period, loop.harmonics(), quad_points)
      .hessian_fd(loop, f.is_zero());
}

} // namespace pendrot
