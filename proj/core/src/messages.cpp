#include "stdf/messages.hpp"

#include <cmath>

namespace stdf {

namespace {

struct AxisOffset {
  double along;   // e_a: offset on the target axis
  double across;  // e_b: offset on the integrated-out axis
  double lin;     // linearization coordinate on the target axis
};

AxisOffset split(Axis axis, const Position2D& lin, const Position2D& other) {
  if (axis == Axis::X) return {lin.x - other.x, lin.y - other.y, lin.x};
  return {lin.y - other.y, lin.x - other.x, lin.y};
}

std::optional<AxisGaussian> range_message(Axis axis, const Position2D& lin,
                                          const Position2D& other, double range,
                                          double rangeVariance, double otherVariance) {
  if (!(rangeVariance > 0.0) || !(otherVariance >= 0.0)) return std::nullopt;
  const auto coeffs =
      range_message_coefficients(axis, lin, other, range, rangeVariance, otherVariance);
  if (!coeffs) return std::nullopt;

  const AxisOffset o = split(axis, lin, other);
  AxisGaussian msg;
  if (o.across == 0.0) {
    // The exponent separates into a target-axis Gaussian times a function of
    // the other axis only, so the integral over that axis is a constant.
    const double rho = std::abs(o.along);
    const double unit = o.along > 0.0 ? 1.0 : -1.0;
    msg.mean = o.lin + (range - rho) * unit;
    msg.variance = rangeVariance + otherVariance;
  } else {
    if (!(coeffs->alpha > 0.0)) return std::nullopt;
    msg.mean = coeffs->mean();
    msg.variance = coeffs->variance();
  }
  if (!msg.valid()) return std::nullopt;
  return msg;
}

}  // namespace

std::optional<MessageCoefficients> range_message_coefficients(Axis axis, const Position2D& lin,
                                                              const Position2D& other,
                                                              double range, double rangeVariance,
                                                              double otherVariance) {
  const AxisOffset o = split(axis, lin, other);
  const double rho = std::sqrt(o.along * o.along + o.across * o.across);
  if (!(rho >= kMinGeometryDistance)) return std::nullopt;

  const double gap = rho - range;
  const double rho2 = rho * rho;
  const double rho3 = rho2 * rho;
  const double rho4 = rho2 * rho2;

  MessageCoefficients c;
  c.alpha = rho4 * rho * gap;
  c.beta = 2.0 * rho4 * gap * (rho * o.lin - gap * o.along);
  // rho^3 - z e_a^2 written without the cancellation near z == rho.
  const double tangential = rho * o.across * o.across + gap * o.along * o.along;
  c.gamma = 2.0 * rangeVariance * rho3 * tangential + 2.0 * c.alpha * otherVariance;
  if (!std::isfinite(c.alpha) || !std::isfinite(c.beta) || !std::isfinite(c.gamma)) {
    return std::nullopt;
  }
  return c;
}

std::optional<AxisGaussian> anchor_message(Axis axis, const Position2D& linPoint,
                                           const Position2D& anchorPos,
                                           const RangeMeasurement& z) {
  return range_message(axis, linPoint, anchorPos, z.value, z.variance, 0.0);
}

std::optional<AxisGaussian> agent_message(Axis axis, const Position2D& linPointI,
                                          const PeerBelief& peer, const RangeMeasurement& z) {
  if (!peer.x.valid() || !peer.y.valid()) return std::nullopt;
  return range_message(axis, linPointI, peer.mean(), z.value, z.variance,
                       peer.on(axis).variance);
}

std::optional<AxisGaussian> temporal_message(Axis axis, const Position2D& curLinPoint,
                                             const PeerBelief& prevPosterior,
                                             const InternalMeasurement& zInt) {
  if (!prevPosterior.x.valid() || !prevPosterior.y.valid()) return std::nullopt;
  return range_message(axis, curLinPoint, prevPosterior.mean(), zInt.value, zInt.variance,
                       prevPosterior.on(axis).variance);
}

AxisGaussian fuse_axis(const AxisGaussian& prior, std::span<const AxisGaussian> messages) {
  double precision = 1.0 / prior.variance;
  double weighted = prior.mean / prior.variance;
  for (const AxisGaussian& m : messages) {
    precision += 1.0 / m.variance;
    weighted += m.mean / m.variance;
  }
  return {weighted / precision, 1.0 / precision};
}

}  // namespace stdf
