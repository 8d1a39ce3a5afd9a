#pragma once

/**
 * @file verify.hpp
 * @brief Independent certification of candidate rotations by direct
 *        integration of the Euler-Lagrange equations.
 */

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pendrot/error.hpp"
#include "pendrot/loopspace.hpp"
#include "pendrot/model.hpp"

namespace pendrot {

/// Uniformly sampled solution of the first-order system; column j is time j*dt.
struct Trajectory {
  double dt = 0;
  Eigen::MatrixXd q;
  Eigen::MatrixXd qd;

  int steps() const { return static_cast<int>(q.cols()) - 1; }
};

/// Classic fourth-order Runge-Kutta over [0, duration] with `steps` equal steps.
inline Trajectory integrate(const PendulumParams& params, const Forcing& f, const Eigen::VectorXd& q0,
                            const Eigen::VectorXd& qd0, double duration, int steps) {
  if (steps < 1000) throw InvalidParameter("integration needs at least 1000 steps");
  if (!(duration > 0)) throw InvalidParameter("integration time must be positive");
  const int n = params.size();
  if (q0.size() != n || qd0.size() != n) throw InvalidParameter("initial state has wrong dimension");
  Trajectory tr;
  tr.dt = duration / steps;
  tr.q.resize(n, steps + 1);
  tr.qd.resize(n, steps + 1);
  Eigen::VectorXd q = q0, v = qd0;
  tr.q.col(0) = q;
  tr.qd.col(0) = v;
  const double h = tr.dt;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    const Eigen::VectorXd k1q = v;
    const Eigen::VectorXd k1v = acceleration(params, f, t, q, v);
    const Eigen::VectorXd k2q = v + 0.5 * h * k1v;
    const Eigen::VectorXd k2v = acceleration(params, f, t + 0.5 * h, q + 0.5 * h * k1q, k2q);
    const Eigen::VectorXd k3q = v + 0.5 * h * k2v;
    const Eigen::VectorXd k3v = acceleration(params, f, t + 0.5 * h, q + 0.5 * h * k2q, k3q);
    const Eigen::VectorXd k4q = v + h * k3v;
    const Eigen::VectorXd k4v = acceleration(params, f, t + h, q + h * k3q, k4q);
    q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    tr.q.col(s + 1) = q;
    tr.qd.col(s + 1) = v;
  }
  return tr;
}

/// max_t |E(t) - E(0)| / (1 + |E(0)|) for the unforced energy.
inline double relative_energy_drift(const PendulumParams& params, const Trajectory& tr) {
  const double e0 = energy(params, tr.q.col(0), tr.qd.col(0));
  double worst = 0;
  for (int s = 1; s <= tr.steps(); ++s)
    worst = std::max(worst, std::abs(energy(params, tr.q.col(s), tr.qd.col(s)) - e0));
  return worst / (1 + std::abs(e0));
}

/**
 * @brief Observed convergence order from endpoint differences at steps,
 *        2 steps and 4 steps: log2(|y_s - y_2s| / |y_2s - y_4s|).
 */
inline double empirical_order(const PendulumParams& params, const Forcing& f, const Eigen::VectorXd& q0,
                              const Eigen::VectorXd& qd0, double duration, int steps) {
  auto end = [&](int s) {
    const auto tr = integrate(params, f, q0, qd0, duration, s);
    Eigen::VectorXd y(2 * params.size());
    y << tr.q.col(s), tr.qd.col(s);
    return y;
  };
  const Eigen::VectorXd a = end(steps), b = end(2 * steps), c = end(4 * steps);
  return std::log2((a - b).norm() / (b - c).norm());
}

struct Certification {
  double defect = 0;        ///< |q(T) - q(0) - 2 pi v| + |q'(T) - q'(0)|
  double defect_tol = 0;
  double residual = 0;      ///< max Euler-Lagrange residual of the loop on the grid
  double residual_tol = 0;
  double sup_gap = 0;       ///< max |q_loop(t) - q_ode(t)| over the integration samples
  int steps = 0;
  bool pass = false;
};

/**
 * @brief Integrate from the loop's initial state over one period and check
 *        the winding periodicity and the residual along the loop.
 *
 * @param m0  forcing bound entering the residual tolerance
 */
inline Certification certify(const PendulumParams& params, const Forcing& f, const LoopPath& loop, double m0,
                             int steps = 4096, int grid_points = 0) {
  if (std::abs(f.period() - loop.period) > 1e-12 * loop.period)
    throw InvalidParameter("forcing period differs from the loop period");
  Certification c;
  c.steps = steps;
  const auto s0 = eval_loop(loop, 0.0);
  const auto tr = integrate(params, f, s0.q, s0.qd, loop.period, steps);
  const Eigen::VectorXd winding = kTwoPi * loop.winding.as_vector();
  c.defect = (tr.q.col(steps) - tr.q.col(0) - winding).norm() + (tr.qd.col(steps) - tr.qd.col(0)).norm();
  c.defect_tol = 1e-5 * (1 + winding.norm());

  for (int s = 0; s <= steps; ++s)
    c.sup_gap = std::max(c.sup_gap, (eval_loop(loop, s * tr.dt).q - tr.q.col(s)).cwiseAbs().maxCoeff());

  const int m = grid_points > 0 ? grid_points : 8 * std::max(1, loop.harmonics());
  for (int j = 0; j < m; ++j) {
    const double t = loop.period * j / m;
    const auto st = eval_loop(loop, t);
    c.residual = std::max(c.residual, euler_lagrange_residual(params, f, t, st.q, st.qd, st.qdd).norm());
  }
  double sum_beta = 0;
  for (int i = 0; i < params.size(); ++i) sum_beta += params.weighted_beta(i);
  c.residual_tol = 1e-4 * (1 + m0 + sum_beta);
  c.pass = c.defect < c.defect_tol && c.residual < c.residual_tol;
  return c;
}

} // namespace pendrot
