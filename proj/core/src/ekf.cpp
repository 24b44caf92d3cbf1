#include "stdf/ekf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stdf {

namespace {

constexpr double kMaxInnovationCondition = 1e12;

void require_finite(const StateBelief& b, const char* what) {
  if (!b.mean.allFinite() || !b.cov.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite state belief");
  }
}

}  // namespace

TransitionModel make_transition_model(double deltaT, double sigmaV) {
  if (!(deltaT > 0.0) || !std::isfinite(deltaT)) {
    throw std::invalid_argument("make_transition_model: deltaT must be positive");
  }
  if (!(sigmaV >= 0.0) || !std::isfinite(sigmaV)) {
    throw std::invalid_argument("make_transition_model: sigmaV must be non-negative");
  }
  TransitionModel m;
  m.deltaT = deltaT;
  m.F = Matrix4::Identity();
  m.F(0, 2) = deltaT;
  m.F(1, 3) = deltaT;
  const double qv = sigmaV * sigmaV;
  const double qp = (sigmaV * deltaT) * (sigmaV * deltaT) / 4.0;
  m.Q = Vector4(qp, qp, qv, qv).asDiagonal();
  return m;
}

StateBelief ekf_predict(const StateBelief& prev, const TransitionModel& model) {
  require_finite(prev, "ekf_predict");
  StateBelief out;
  out.mean = model.F * prev.mean;
  out.cov = model.F * prev.cov * model.F.transpose() + model.Q;
  return out;
}

StateBelief ekf_update(const StateBelief& prior, const PositionBelief& fused) {
  require_finite(prior, "ekf_update");
  if (!std::isfinite(fused.meanX) || !std::isfinite(fused.meanY) || !(fused.varX > 0.0) ||
      !(fused.varY > 0.0)) {
    throw std::invalid_argument("ekf_update: invalid fused position belief");
  }

  // H = [I 0]: H P H^T is the top-left block, P H^T the left two columns.
  const Vector2 residual(fused.meanX - prior.mean(0), fused.meanY - prior.mean(1));
  Matrix2 C = prior.cov.topLeftCorner<2, 2>();
  C(0, 0) += fused.varX;
  C(1, 1) += fused.varY;

  const double det = C(0, 0) * C(1, 1) - C(0, 1) * C(1, 0);
  const double half_trace = 0.5 * (C(0, 0) + C(1, 1));
  const double disc = std::sqrt(std::max(
      0.0, 0.25 * (C(0, 0) - C(1, 1)) * (C(0, 0) - C(1, 1)) + C(0, 1) * C(1, 0)));
  const double lmax = half_trace + disc;
  const double lmin = half_trace - disc;
  if (!(det > 0.0) || !(lmin > 0.0) || lmax / lmin > kMaxInnovationCondition) {
    std::ostringstream msg;
    msg << "ekf_update: innovation covariance is singular (det=" << det << ", eig=[" << lmin
        << ", " << lmax << "], prior position=(" << prior.mean(0) << ", " << prior.mean(1)
        << "), fused=(" << fused.meanX << ", " << fused.meanY << "))";
    throw NumericalFailure(msg.str());
  }
  Matrix2 C_inv;
  C_inv << C(1, 1), -C(0, 1), -C(1, 0), C(0, 0);
  C_inv /= det;

  const Eigen::Matrix<double, 4, 2> PHt = prior.cov.leftCols<2>();
  const Eigen::Matrix<double, 4, 2> K = PHt * C_inv;

  StateBelief out;
  out.mean = prior.mean + K * residual;
  // P - K C K^T rearranged so the position rows never subtract two nearly
  // equal numbers: P_x. (I - C^-1 P_xx) = P_x. C^-1 R.
  Matrix2 R = Matrix2::Zero();
  R(0, 0) = fused.varX;
  R(1, 1) = fused.varY;
  out.cov = prior.cov;
  out.cov.leftCols<2>() = PHt * (C_inv * R);
  out.cov.bottomRightCorner<2, 2>() -= K.bottomRows<2>() * prior.cov.topRightCorner<2, 2>();
  out.cov.topRightCorner<2, 2>() = out.cov.bottomLeftCorner<2, 2>().transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace stdf
