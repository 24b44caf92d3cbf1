#include "stdf/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stdf::oracle {

namespace {

constexpr double kEdgeDrop = 46.0;  // e^-46 ~ 1e-20
constexpr int kSearchNodes = 65;

/// Log of the (unnormalized) range factor as a function of the displacement
/// of agent i from its linearization point.
struct RangeFactor {
  Vector2 offset;  // linearization point minus the other node
  double range;
  double variance;
  Integrand integrand;
  double rho;
  Vector2 unit;
  Matrix2 hessian;

  RangeFactor(const Vector2& off, double z, double s2, Integrand kind)
      : offset(off), range(z), variance(s2), integrand(kind), rho(off.norm()) {
    unit = rho > 0.0 ? Vector2(off / rho) : Vector2(1.0, 0.0);
    hessian = rho > 0.0 ? Matrix2((Matrix2::Identity() - unit * unit.transpose()) / rho)
                        : Matrix2::Zero();
  }

  [[nodiscard]] double log_value(const Vector2& d) const {
    if (integrand == Integrand::Exact) {
      const double r = range - (offset + d).norm();
      return -r * r / (2.0 * variance);
    }
    // (z - rho - g.d - d'Hd/2)^2 with every term above second order dropped.
    const double eps = range - rho;
    const double lin = unit.dot(d);
    const double quad = d.dot(hessian * d);
    return -(eps * eps - 2.0 * eps * lin - eps * quad + lin * lin) / (2.0 * variance);
  }
};

struct Frame {
  Vector2 centre = Vector2::Zero();
  Vector2 axis1{1.0, 0.0};
  Vector2 axis2{0.0, 1.0};
  double half1 = 1.0;
  double half2 = 1.0;

  [[nodiscard]] Vector2 point(double s, double t) const { return centre + s * axis1 + t * axis2; }
};

double node(double lo, double hi, int i, int n) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

double trapezoid_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

/// Half-width along `dir` through `centre` at which the factor has fallen
/// kEdgeDrop below the largest value seen on that line; nullopt if it never does.
std::optional<double> extent(const RangeFactor& f, const Vector2& centre, const Vector2& dir,
                             double cap) {
  double peak = f.log_value(centre);
  for (double w = 0.5; w <= cap; w *= 2.0) {
    const double a = f.log_value(centre + w * dir);
    const double b = f.log_value(centre - w * dir);
    peak = std::max({peak, a, b});
    if (a < peak - kEdgeDrop && b < peak - kEdgeDrop) return w;
  }
  return std::nullopt;
}

std::optional<Frame> choose_frame(const RangeFactor& f, Axis axis, const QuadratureSpec& spec) {
  Frame frame;
  if (spec.halfWidths) {
    frame.half1 = spec.halfWidths->x();
    frame.half2 = spec.halfWidths->y();
    return frame;
  }
  if (f.integrand == Integrand::Exact) {
    throw std::invalid_argument("oracle: the exact integrand needs explicit halfWidths");
  }
  frame.axis1 = f.unit;
  frame.axis2 = Vector2(-f.unit.y(), f.unit.x());
  const int a = axis == Axis::X ? 0 : 1;

  for (int pass = 0; pass < 4; ++pass) {
    const auto w1 = extent(f, frame.centre, frame.axis1, spec.maxHalfWidth);
    const auto w2 = extent(f, frame.centre, frame.axis2, spec.maxHalfWidth);
    // A non-decaying direction with no component on the requested axis only
    // scales the axis marginal by a constant.
    if (!w1 && frame.axis1[a] != 0.0) return std::nullopt;
    if (!w2 && frame.axis2[a] != 0.0) return std::nullopt;
    frame.half1 = w1.value_or(1.0);
    frame.half2 = w2.value_or(1.0);

    // Re-centre on the coarse-grid maximum and search again.
    double best = -std::numeric_limits<double>::infinity();
    Vector2 arg = frame.centre;
    for (int i = 0; i < kSearchNodes; ++i) {
      for (int j = 0; j < kSearchNodes; ++j) {
        const Vector2 p = frame.point(node(-frame.half1, frame.half1, i, kSearchNodes),
                                      node(-frame.half2, frame.half2, j, kSearchNodes));
        const double v = f.log_value(p);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
    }
    if ((arg - frame.centre).norm() <= 1e-12 * (1.0 + frame.centre.norm())) break;
    frame.centre = arg;
  }
  return frame;
}

struct WeightedNodes {
  std::vector<double> weight;  // trapezoid weight times normalized integrand
  std::vector<double> along;   // displacement on the requested axis
};

WeightedNodes tabulate(const RangeFactor& f, const Frame& frame, Axis axis, int n) {
  const int a = axis == Axis::X ? 0 : 1;
  WeightedNodes out;
  out.weight.resize(static_cast<std::size_t>(n) * n);
  out.along.resize(out.weight.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vector2 p = frame.point(node(-frame.half1, frame.half1, i, n),
                                    node(-frame.half2, frame.half2, j, n));
      const std::size_t k = static_cast<std::size_t>(i) * n + j;
      out.weight[k] = f.log_value(p);
      out.along[k] = p[a];
      peak = std::max(peak, out.weight[k]);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * n + j;
      out.weight[k] = trapezoid_weight(i, n) * trapezoid_weight(j, n) *
                      std::exp(out.weight[k] - peak);
    }
  }
  return out;
}

std::optional<AxisGaussian> finish(double m0, double m1, double m2, double lin,
                                   const char* what) {
  if (!(m0 > 0.0) || !std::isfinite(m0) || !std::isfinite(m1) || !std::isfinite(m2)) {
    std::ostringstream msg;
    msg << what << ": quadrature mass underflow (m0=" << m0 << ", m1=" << m1 << ", m2=" << m2
        << ")";
    throw NumericalFailure(msg.str());
  }
  const double mean = m1 / m0;
  const double var = m2 / m0 - mean * mean;
  if (!(var > 0.0)) return std::nullopt;
  return AxisGaussian{lin + mean, var};
}

}  // namespace

void QuadratureSpec::validate() const {
  if (nodes < 64) throw std::invalid_argument("QuadratureSpec: nodes must be >= 64");
  if (peerNodes < 16) throw std::invalid_argument("QuadratureSpec: peerNodes must be >= 16");
  if (halfWidths && !(halfWidths->minCoeff() > 0.0)) {
    throw std::invalid_argument("QuadratureSpec: halfWidths must be positive");
  }
}

std::optional<AxisGaussian> integrate_anchor_message(Axis axis, const Position2D& linPoint,
                                                     const Position2D& anchorPos,
                                                     const RangeMeasurement& z,
                                                     const QuadratureSpec& spec,
                                                     Integrand integrand) {
  spec.validate();
  const RangeFactor f(linPoint.vec() - anchorPos.vec(), z.value, z.variance, integrand);
  const auto frame = choose_frame(f, axis, spec);
  if (!frame) return std::nullopt;
  const WeightedNodes t = tabulate(f, *frame, axis, spec.nodes);
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < t.weight.size(); ++k) {
    m0 += t.weight[k];
    m1 += t.weight[k] * t.along[k];
    m2 += t.weight[k] * t.along[k] * t.along[k];
  }
  return finish(m0, m1, m2, axis == Axis::X ? linPoint.x : linPoint.y,
                "integrate_anchor_message");
}

std::optional<AxisGaussian> integrate_agent_message(Axis axis, const Position2D& linPointI,
                                                    const PeerBelief& peer,
                                                    const RangeMeasurement& z,
                                                    const QuadratureSpec& spec,
                                                    Integrand integrand) {
  spec.validate();
  if (!peer.x.valid() || !peer.y.valid()) {
    throw std::invalid_argument("integrate_agent_message: invalid peer belief");
  }
  // Variables: range offset delta = d_i - d_j (2D) and peer displacement d_j
  // (2D); the agent displacement is d_i = delta + d_j.
  const RangeFactor f(linPointI.vec() - peer.mean().vec(), z.value, z.variance, integrand);
  const auto frame = choose_frame(f, axis, spec);
  if (!frame) return std::nullopt;
  const WeightedNodes range = tabulate(f, *frame, axis, spec.nodes);

  const int m = spec.peerNodes;
  const double sx = std::sqrt(peer.x.variance);
  const double sy = std::sqrt(peer.y.variance);
  std::vector<double> peerWeight(static_cast<std::size_t>(m) * m);
  std::vector<double> peerAlong(peerWeight.size());
  for (int i = 0; i < m; ++i) {
    const double px = node(-6.0 * sx, 6.0 * sx, i, m);
    for (int j = 0; j < m; ++j) {
      const double py = node(-6.0 * sy, 6.0 * sy, j, m);
      const std::size_t k = static_cast<std::size_t>(i) * m + j;
      peerWeight[k] = trapezoid_weight(i, m) * trapezoid_weight(j, m) *
                      std::exp(-0.5 * (px * px / peer.x.variance + py * py / peer.y.variance));
      peerAlong[k] = axis == Axis::X ? px : py;
    }
  }

  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < range.weight.size(); ++r) {
    const double lw = range.weight[r];
    if (lw == 0.0) continue;
    const double base = range.along[r];
    for (std::size_t p = 0; p < peerWeight.size(); ++p) {
      const double w = lw * peerWeight[p];
      const double x = base + peerAlong[p];
      m0 += w;
      m1 += w * x;
      m2 += w * x * x;
    }
  }
  return finish(m0, m1, m2, axis == Axis::X ? linPointI.x : linPointI.y,
                "integrate_agent_message");
}

Position2D trilaterate(std::span<const Position2D> anchors, std::span<const double> ranges,
                       const Position2D& init) {
  if (anchors.size() < 3 || anchors.size() != ranges.size()) {
    throw std::invalid_argument("trilaterate: need >= 3 anchors with one range each");
  }
  Vector2 centroid = Vector2::Zero();
  for (const auto& a : anchors) centroid += a.vec();
  centroid /= static_cast<double>(anchors.size());
  Matrix2 scatter = Matrix2::Zero();
  for (const auto& a : anchors) {
    const Vector2 d = a.vec() - centroid;
    scatter += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix2> eig(scatter);
  if (eig.eigenvalues()(0) <= 1e-12 * std::max(eig.eigenvalues()(1), 1e-300)) {
    throw std::invalid_argument("trilaterate: anchors are collinear");
  }

  Vector2 x = init.vec();
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::MatrixX2d J(anchors.size(), 2);
    Eigen::VectorXd r(anchors.size());
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      const Vector2 d = x - anchors[k].vec();
      const double n = d.norm();
      if (n == 0.0) {
        J.row(static_cast<Eigen::Index>(k)).setZero();
      } else {
        J.row(static_cast<Eigen::Index>(k)) = d.transpose() / n;
      }
      r(static_cast<Eigen::Index>(k)) = n - ranges[k];
    }
    const Matrix2 JtJ = J.transpose() * J;
    const Vector2 step = JtJ.ldlt().solve(-J.transpose() * r);
    if (!step.allFinite()) throw NumericalFailure("trilaterate: singular normal equations");
    x += step;
    if (step.norm() < 1e-9) return Position2D::from(x);
  }
  throw NumericalFailure("trilaterate: no convergence after 100 iterations");
}

namespace {

using Vec4L = Eigen::Matrix<long double, 4, 1>;
using Mat4L = Eigen::Matrix<long double, 4, 4>;
using Mat2L = Eigen::Matrix<long double, 2, 2>;
using Vec2L = Eigen::Matrix<long double, 2, 1>;
using Mat24L = Eigen::Matrix<long double, 2, 4>;

}  // namespace

StateBelief dense_ekf_predict(const StateBelief& prev, double deltaT, const Matrix4& Q) {
  Mat4L F = Mat4L::Zero();
  const Mat2L I2 = Mat2L::Identity();
  F.block<2, 2>(0, 0) = I2;
  F.block<2, 2>(0, 2) = static_cast<long double>(deltaT) * I2;
  F.block<2, 2>(2, 2) = I2;
  const Vec4L s = prev.mean.cast<long double>();
  const Mat4L P = prev.cov.cast<long double>();
  StateBelief out;
  out.mean = (F * s).cast<double>();
  out.cov = (F * P * F.transpose() + Q.cast<long double>()).cast<double>();
  return out;
}

StateBelief dense_ekf_update(const StateBelief& prior, const PositionBelief& fused) {
  Mat24L H = Mat24L::Zero();
  H(0, 0) = 1.0L;
  H(1, 1) = 1.0L;
  const Vec4L s = prior.mean.cast<long double>();
  const Mat4L P = prior.cov.cast<long double>();
  Mat2L R = Mat2L::Zero();
  R(0, 0) = fused.varX;
  R(1, 1) = fused.varY;
  const Vec2L m(static_cast<long double>(fused.meanX), static_cast<long double>(fused.meanY));

  const Vec2L dm = m - H * s;
  const Mat2L C = H * P * H.transpose() + R;
  const Mat2L Cinv = C.fullPivLu().inverse();
  const Eigen::Matrix<long double, 4, 2> K = P * H.transpose() * Cinv;
  StateBelief out;
  out.mean = (s + K * dm).cast<double>();
  const Mat4L post = P - K * C * K.transpose();
  out.cov = ((post + post.transpose()) / 2.0L).cast<double>();
  return out;
}

Position2D posterior_mean_grid(const Vector2& priorMean, const Matrix2& priorCov,
                               std::span<const Position2D> anchors,
                               std::span<const RangeMeasurement> ranges, double halfWidth,
                               int nodes) {
  if (anchors.size() != ranges.size()) {
    throw std::invalid_argument("posterior_mean_grid: one range per anchor required");
  }
  const Matrix2 info = priorCov.inverse();
  std::vector<double> logp(static_cast<std::size_t>(nodes) * nodes);
  std::vector<Vector2> pts(logp.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const Vector2 d(node(-halfWidth, halfWidth, i, nodes), node(-halfWidth, halfWidth, j, nodes));
      const Vector2 x = priorMean + d;
      double lp = -0.5 * d.dot(info * d);
      for (std::size_t k = 0; k < anchors.size(); ++k) {
        const double r = ranges[k].value - (x - anchors[k].vec()).norm();
        lp -= r * r / (2.0 * ranges[k].variance);
      }
      const std::size_t k = static_cast<std::size_t>(i) * nodes + j;
      logp[k] = lp;
      pts[k] = x;
      peak = std::max(peak, lp);
    }
  }
  double m0 = 0.0;
  Vector2 m1 = Vector2::Zero();
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * nodes + j;
      const double w = trapezoid_weight(i, nodes) * trapezoid_weight(j, nodes) *
                       std::exp(logp[k] - peak);
      m0 += w;
      m1 += w * pts[k];
    }
  }
  if (!(m0 > 0.0)) throw NumericalFailure("posterior_mean_grid: no mass on grid");
  return Position2D::from(m1 / m0);
}

}  // namespace stdf::oracle
