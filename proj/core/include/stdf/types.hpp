#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace stdf {

using Vector2 = Eigen::Vector2d;
using Vector4 = Eigen::Vector4d;
using Matrix2 = Eigen::Matrix2d;
using Matrix4 = Eigen::Matrix4d;

/// Raised when a computation cannot produce a trustworthy number
/// (ill-conditioned innovation covariance, quadrature mass underflow,
/// non-converging least squares).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind : std::uint8_t { Anchor, Agent };

struct NodeId {
  NodeKind kind = NodeKind::Agent;
  std::uint32_t index = 0;

  static constexpr NodeId anchor(std::uint32_t i) { return {NodeKind::Anchor, i}; }
  static constexpr NodeId agent(std::uint32_t i) { return {NodeKind::Agent, i}; }

  [[nodiscard]] constexpr bool is_anchor() const { return kind == NodeKind::Anchor; }

  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

std::string to_string(NodeId id);

struct Position2D {
  double x = 0.0;
  double y = 0.0;

  [[nodiscard]] Vector2 vec() const { return {x, y}; }
  static Position2D from(const Vector2& v) { return {v.x(), v.y()}; }

  friend constexpr bool operator==(const Position2D&, const Position2D&) = default;
};

struct Velocity2D {
  double vx = 0.0;
  double vy = 0.0;

  friend constexpr bool operator==(const Velocity2D&, const Velocity2D&) = default;
};

double distance(const Position2D& a, const Position2D& b);

struct AgentTruth {
  Position2D position;
  Velocity2D velocity;
};

/// Gaussian estimate of the full kinematic state (x, y, vx, vy).
struct StateBelief {
  Vector4 mean = Vector4::Zero();
  Matrix4 cov = Matrix4::Identity();

  [[nodiscard]] Position2D position() const { return {mean(0), mean(1)}; }

  /// Symmetry (1e-9 relative) and PSD (eigenvalues >= -1e-9 trace) check.
  [[nodiscard]] bool valid() const;
};

/// One-dimensional Gaussian; the unit every factor-graph message is expressed in.
struct AxisGaussian {
  double mean = 0.0;
  double variance = 1.0;

  [[nodiscard]] double precision() const { return 1.0 / variance; }
  [[nodiscard]] bool valid() const;
};

/// Diagonal position estimate handed from data fusion to the refinement stage.
struct PositionBelief {
  double meanX = 0.0;
  double meanY = 0.0;
  double varX = 1.0;
  double varY = 1.0;
};

struct RangeMeasurement {
  NodeId from;
  NodeId to;
  double value = 0.0;
  double variance = 1.0;
};

/// Distance an agent measured itself travelling since the previous slot.
struct InternalMeasurement {
  NodeId agent;
  double value = 0.0;
  double variance = 1.0;
};

enum class Axis : std::uint8_t { X, Y };

/// Per-axis position belief broadcast by an agent (or remembered from the
/// previous slot for the temporal factor).
struct PeerBelief {
  AxisGaussian x;
  AxisGaussian y;

  [[nodiscard]] const AxisGaussian& on(Axis a) const { return a == Axis::X ? x : y; }
  [[nodiscard]] Position2D mean() const { return {x.mean, y.mean}; }
};

PeerBelief position_marginals(const StateBelief& belief);

}  // namespace stdf
