#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pendrot/loopspace.hpp"
#include "pendrot/model.hpp"

namespace testutil {

inline pendrot::PendulumParams random_params(std::mt19937_64& rng, int n, double lo = 0.2, double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> m(n), l(n);
  for (int i = 0; i < n; ++i) {
    m[i] = u(rng);
    l[i] = u(rng);
  }
  return pendrot::PendulumParams::make(m, l, u(rng));
}

/// Smooth random loop: amplitude `amp` with 1/h^2 decay.
inline pendrot::LoopPath random_loop(std::mt19937_64& rng, double period, const pendrot::WindingVector& v, int k,
                                     double amp = 0.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, pendrot::kTwoPi);
  Eigen::VectorXd mean(v.size());
  for (int i = 0; i < v.size(); ++i) mean[i] = ang(rng);
  auto loop = pendrot::LoopPath::constant(period, v, mean, k);
  for (int i = 0; i < v.size(); ++i)
    for (int h = 1; h <= k; ++h) {
      loop.cos_coef(i, h - 1) = amp * u(rng) / (h * h);
      loop.sin_coef(i, h - 1) = amp * u(rng) / (h * h);
    }
  return loop;
}

inline pendrot::WindingVector first_link_rotating(int n) {
  std::vector<int> v(n, 0);
  v[0] = 1;
  return pendrot::WindingVector::validate(v);
}

} // namespace testutil
