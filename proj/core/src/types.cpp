#include "stdf/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace stdf {

std::string to_string(NodeId id) {
  return (id.is_anchor() ? "anchor" : "agent") + std::to_string(id.index);
}

double distance(const Position2D& a, const Position2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

bool StateBelief::valid() const {
  if (!mean.allFinite() || !cov.allFinite()) return false;
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  const Matrix4 sym = 0.5 * (cov + cov.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix4> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -1e-9 * std::abs(sym.trace());
}

bool AxisGaussian::valid() const {
  return std::isfinite(mean) && std::isfinite(variance) && variance > 0.0;
}

PeerBelief position_marginals(const StateBelief& belief) {
  return {{belief.mean(0), belief.cov(0, 0)}, {belief.mean(1), belief.cov(1, 1)}};
}

}  // namespace stdf
