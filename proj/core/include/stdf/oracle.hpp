#pragma once

#include "stdf/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace stdf::oracle {

/// Tensor-grid trapezoid quadrature settings.
///
/// With `halfWidths` unset the range-factor variables are integrated in a
/// frame aligned with the linearization direction and the box is grown
/// (doubling) until the integrand at every box edge is e^-46 below its peak.
/// A direction along which it never decays marks the message improper unless
/// that direction is orthogonal to the requested axis. With `halfWidths` set,
/// an axis-aligned box of that half-size around the linearization point is
/// used as-is (required for the exact integrand, whose ring is not local).
struct QuadratureSpec {
  int nodes = 256;      // per range-factor variable, >= 64
  int peerNodes = 64;   // per peer-belief variable, >= 16; truncated at +-6 std
  std::optional<Vector2> halfWidths;
  double maxHalfWidth = 1e7;

  void validate() const;
};

enum class Integrand {
  Taylor,  // second-order Taylor polynomial of the range, exponent truncated at second order
  Exact,   // true Euclidean range
};

/// Moment-matched Gaussian of the axis marginal of
///   exp{-(z - ||x_i - anchor||)^2 / (2 s2)}  integrated over the other axis.
/// nullopt when the integrand is improper for that axis.
/// Throws NumericalFailure when the grid carries no mass.
std::optional<AxisGaussian> integrate_anchor_message(Axis axis, const Position2D& linPoint,
                                                     const Position2D& anchorPos,
                                                     const RangeMeasurement& z,
                                                     const QuadratureSpec& spec,
                                                     Integrand integrand = Integrand::Taylor);

/// As above with the peer's Gaussian belief multiplied in and its position
/// integrated out (4D tensor grid over the range offset and the peer
/// displacement). Serves the temporal factor by passing the previous posterior
/// as `peer` and the travelled distance as `z`.
std::optional<AxisGaussian> integrate_agent_message(Axis axis, const Position2D& linPointI,
                                                    const PeerBelief& peer,
                                                    const RangeMeasurement& z,
                                                    const QuadratureSpec& spec,
                                                    Integrand integrand = Integrand::Taylor);

/// Gauss-Newton minimizer of sum_k (||x - a_k|| - r_k)^2, converged when the
/// step is below 1e-9 m. Throws std::invalid_argument for fewer than three or
/// collinear anchors and NumericalFailure after 100 iterations.
Position2D trilaterate(std::span<const Position2D> anchors, std::span<const double> ranges,
                       const Position2D& init);

/// Straight evaluation of the prediction equations in long double.
StateBelief dense_ekf_predict(const StateBelief& prev, double deltaT, const Matrix4& Q);

/// Straight evaluation of the refinement equations in long double, with an
/// explicit H = [I 0] and an LU inverse of the innovation covariance.
StateBelief dense_ekf_update(const StateBelief& prior, const PositionBelief& fused);

/// Posterior mean of a Gaussian position prior times exact anchor range
/// likelihoods, by trapezoid quadrature over a square box around the prior mean.
Position2D posterior_mean_grid(const Vector2& priorMean, const Matrix2& priorCov,
                               std::span<const Position2D> anchors,
                               std::span<const RangeMeasurement> ranges, double halfWidth,
                               int nodes);

}  // namespace stdf::oracle
