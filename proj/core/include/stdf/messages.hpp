#pragma once

#include "stdf/types.hpp"

#include <optional>
#include <span>

namespace stdf {

/// Geometry guard: every coefficient system divides by powers of the
/// linearization distance.
inline constexpr double kMinGeometryDistance = 1e-3;

/// Closed-form Gaussian message N(beta / (2 alpha), gamma / (2 alpha)).
///
/// For a range z with variance s2, linearized at distance rho with offset
/// e = (e_a, e_b) from the other node (a = target axis, b = the
/// integrated-out axis):
///
///   alpha = rho^5 (rho - z)
///   beta  = 2 rho^4 (rho - z) (rho lin_a - (rho - z) e_a)
///   gamma = 2 s2 rho^3 (rho e_b^2 + (rho - z) e_a^2) + 2 alpha v_a
///
/// where v_a is the other node's belief variance on axis a (zero for anchors).
struct MessageCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  [[nodiscard]] double mean() const { return beta / (2.0 * alpha); }
  [[nodiscard]] double variance() const { return gamma / (2.0 * alpha); }
};

/// Coefficients of the message a range factor sends to one position axis of
/// the agent linearized at `lin`, when the other end of the range has mean
/// `other` and variance `otherVariance` on that axis. Returns nullopt when the
/// linearization distance is below kMinGeometryDistance.
std::optional<MessageCoefficients> range_message_coefficients(Axis axis, const Position2D& lin,
                                                              const Position2D& other,
                                                              double range, double rangeVariance,
                                                              double otherVariance);

/// Anchor -> agent message. nullopt means Rejected: degenerate geometry, or
/// the quadratic exponent is not normalizable along the integrated-out axis
/// (linearization point inside the measured range circle).
std::optional<AxisGaussian> anchor_message(Axis axis, const Position2D& linPoint,
                                           const Position2D& anchorPos,
                                           const RangeMeasurement& z);

/// Agent j -> agent i message with the peer's belief integrated out.
std::optional<AxisGaussian> agent_message(Axis axis, const Position2D& linPointI,
                                          const PeerBelief& peer, const RangeMeasurement& z);

/// Temporal message from the travelled-distance measurement, with the previous
/// slot's position belief integrated out. Computed once per slot.
std::optional<AxisGaussian> temporal_message(Axis axis, const Position2D& curLinPoint,
                                             const PeerBelief& prevPosterior,
                                             const InternalMeasurement& zInt);

/// Product of the prior with every message (precisions add).
AxisGaussian fuse_axis(const AxisGaussian& prior, std::span<const AxisGaussian> messages);

}  // namespace stdf
