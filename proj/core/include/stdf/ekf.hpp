#pragma once

#include "stdf/types.hpp"

namespace stdf {

/// Constant-velocity transition s' = F s + w, w ~ N(0, Q).
struct TransitionModel {
  double deltaT = 1.0;
  Matrix4 F = Matrix4::Identity();
  Matrix4 Q = Matrix4::Zero();
};

/// F = [[I, dT I], [0, I]]; Q = diag(q, q, sigmaV^2, sigmaV^2) with
/// q = (sigmaV dT)^2 / 4 (velocity random walk).
TransitionModel make_transition_model(double deltaT, double sigmaV);

/// Stage 1: mean' = F mean, cov' = F cov F^T + Q.
StateBelief ekf_predict(const StateBelief& prev, const TransitionModel& model);

/// Stage 3: treats the fused position belief as a direct observation of the
/// position block (H = [I 0]) and applies the Kalman correction. The
/// returned covariance is symmetrized.
///
/// Throws NumericalFailure when the innovation covariance has condition
/// number above 1e12.
StateBelief ekf_update(const StateBelief& prior, const PositionBelief& fused);

}  // namespace stdf
