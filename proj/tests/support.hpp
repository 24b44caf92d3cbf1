#pragma once

#include "stdf/simulator.hpp"
#include "stdf/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace stdf::testing {

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline StateBelief random_belief(Rng& rng) {
  StateBelief b;
  for (int i = 0; i < 4; ++i) b.mean(i) = uniform(rng, -1000.0, 1000.0);
  Eigen::Matrix4d A;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = uniform(rng, -3.0, 3.0);
  b.cov = A * A.transpose() + Eigen::Matrix4d::Identity() * uniform(rng, 0.1, 10.0);
  return b;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Largest element-wise difference relative to the largest magnitude involved.
template <class A, class B>
double max_rel(const A& a, const B& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

}  // namespace stdf::testing
