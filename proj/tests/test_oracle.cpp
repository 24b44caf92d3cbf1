#include "stdf/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <vector>

namespace stdf {
namespace {

using testing::rel_diff;
using testing::uniform;

RangeMeasurement range(double value, double variance) {
  return {NodeId::anchor(0), NodeId::agent(0), value, variance};
}

oracle::QuadratureSpec spec(int nodes, int peerNodes = 32) {
  oracle::QuadratureSpec s;
  s.nodes = nodes;
  s.peerNodes = peerNodes;
  return s;
}

TEST(QuadratureSpec, Validation) {
  EXPECT_THROW(spec(32).validate(), std::invalid_argument);
  EXPECT_THROW(spec(64, 8).validate(), std::invalid_argument);
  oracle::QuadratureSpec s = spec(64);
  s.halfWidths = Vector2(1.0, -1.0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(OracleAnchor, ExactIntegrandAtSymmetricGeometry) {
  // The exact factor is a ring, so the marginal depends on how much arc the
  // box admits; +-10 m is 10 range std on either side.
  oracle::QuadratureSpec s = spec(256);
  s.halfWidths = Vector2(10.0, 10.0);
  const auto a =
      oracle::integrate_anchor_message(Axis::X, {100, 0}, {0, 0}, range(100, 1), s, oracle::Integrand::Exact);
  ASSERT_TRUE(a);
  EXPECT_NEAR(a->mean, 100.0, 0.5);
  s.nodes = 512;
  const auto b =
      oracle::integrate_anchor_message(Axis::X, {100, 0}, {0, 0}, range(100, 1), s, oracle::Integrand::Exact);
  ASSERT_TRUE(b);
  EXPECT_LT(std::abs(a->mean - b->mean), 1e-3);
}

TEST(OracleAnchor, ExactIntegrandNeedsExplicitBox) {
  EXPECT_THROW(oracle::integrate_anchor_message(Axis::X, {100, 0}, {0, 0}, range(100, 1), spec(64),
                                                oracle::Integrand::Exact),
               std::invalid_argument);
}

TEST(OracleAnchor, NodeCountConvergence) {
  const auto a = oracle::integrate_anchor_message(Axis::Y, {60, 80}, {0, 0}, range(97, 2), spec(128));
  const auto b = oracle::integrate_anchor_message(Axis::Y, {60, 80}, {0, 0}, range(97, 2), spec(256));
  ASSERT_TRUE(a && b);
  EXPECT_LT(rel_diff(a->mean, b->mean), 1e-4);
  EXPECT_LT(rel_diff(a->variance, b->variance), 1e-4);
}

TEST(OracleAnchor, HalvedSpacingIsStable) {
  // Property: on random proper geometries, doubling nodes moves neither
  // moment by more than 1e-3 relative.
  Rng rng = make_rng(31, 0);
  int checked = 0;
  for (int c = 0; c < 400 && checked < 100; ++c) {
    const Position2D lin{uniform(rng, 0, 3000), uniform(rng, 0, 3000)};
    const double d = uniform(rng, 50, 1000);
    const double t = uniform(rng, 0, 2 * std::numbers::pi);
    const Position2D other{lin.x + d * std::cos(t), lin.y + d * std::sin(t)};
    const auto r = range(d - uniform(rng, 0.01, 10.0), 0.01 * d);
    const Axis axis = c % 2 ? Axis::X : Axis::Y;
    const auto a = oracle::integrate_anchor_message(axis, lin, other, r, spec(64));
    const auto b = oracle::integrate_anchor_message(axis, lin, other, r, spec(128));
    ASSERT_TRUE(a && b);
    ASSERT_LT(std::abs(a->mean - b->mean) / std::sqrt(b->variance), 1e-3) << c;
    ASSERT_LT(rel_diff(a->variance, b->variance), 1e-3) << c;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(OracleAgent, DeltaLimitMatchesAnchor) {
  const PeerBelief peer{{0, 1e-6}, {0, 1e-6}};
  const Position2D lin{120, 90};
  const auto r = range(148, 1.5);
  const auto a = oracle::integrate_anchor_message(Axis::X, lin, peer.mean(), r, spec(128));
  const auto g = oracle::integrate_agent_message(Axis::X, lin, peer, r, spec(128, 24));
  ASSERT_TRUE(a && g);
  EXPECT_LT(rel_diff(a->mean, g->mean), 1e-2);
  EXPECT_LT(rel_diff(a->variance, g->variance), 1e-2);
}

TEST(OracleAgent, RefinementConvergence) {
  const PeerBelief peer{{0, 25}, {10, 16}};
  const Position2D lin{150, 140};
  const auto r = range(195, 4);
  const auto a = oracle::integrate_agent_message(Axis::Y, lin, peer, r, spec(64, 24));
  const auto b = oracle::integrate_agent_message(Axis::Y, lin, peer, r, spec(128, 48));
  ASSERT_TRUE(a && b);
  EXPECT_LT(rel_diff(a->mean, b->mean), 1e-3);
  EXPECT_LT(rel_diff(a->variance, b->variance), 1e-3);
}

TEST(OracleAgent, RejectsInvalidPeer) {
  const PeerBelief peer{{0, 0.0}, {0, 1}};
  EXPECT_THROW(oracle::integrate_agent_message(Axis::X, {10, 0}, peer, range(10, 1), spec(64)),
               std::invalid_argument);
}

TEST(Trilaterate, NoiselessFix) {
  const std::vector<Position2D> anchors{{0, 0}, {100, 0}, {0, 100}};
  const Position2D truth{30, 40};
  std::vector<double> ranges;
  for (const auto& a : anchors) ranges.push_back(distance(a, truth));
  const Position2D fix = oracle::trilaterate(anchors, ranges, {50, 50});
  EXPECT_NEAR(fix.x, 30.0, 1e-6);
  EXPECT_NEAR(fix.y, 40.0, 1e-6);
}

TEST(Trilaterate, CollinearAnchorsRejected) {
  const std::vector<Position2D> anchors{{0, 0}, {100, 0}, {200, 0}};
  const std::vector<double> ranges{50, 60, 160};
  EXPECT_THROW(oracle::trilaterate(anchors, ranges, {10, 10}), std::invalid_argument);
  EXPECT_THROW(oracle::trilaterate(std::span(anchors).first(2), std::span(ranges).first(2), {10, 10}),
               std::invalid_argument);
}

TEST(Trilaterate, NoisyFixBeatsTruthResidual) {
  Rng rng = make_rng(32, 0);
  for (int c = 0; c < 100; ++c) {
    std::vector<Position2D> anchors;
    for (int k = 0; k < 4; ++k) anchors.push_back({uniform(rng, 0, 1000), uniform(rng, 0, 1000)});
    const Position2D truth{uniform(rng, 200, 800), uniform(rng, 200, 800)};
    std::vector<double> ranges;
    for (const auto& a : anchors) {
      const double d = distance(a, truth);
      ranges.push_back(d + gaussian(rng, std::sqrt(0.01 * d)));
    }
    auto residual = [&](const Position2D& p) {
      double s = 0.0;
      for (std::size_t k = 0; k < anchors.size(); ++k) {
        const double r = distance(p, anchors[k]) - ranges[k];
        s += r * r;
      }
      return s;
    };
    const Position2D fix = oracle::trilaterate(anchors, ranges, truth);
    EXPECT_LE(residual(fix), residual(truth) + 1e-9) << c;
  }
}

TEST(PosteriorGrid, WideDiffusePriorRecoversTrilateration) {
  const std::vector<Position2D> anchors{{0, 0}, {400, 0}, {0, 400}};
  const Position2D truth{150, 220};
  std::vector<RangeMeasurement> ranges;
  for (const auto& a : anchors) ranges.push_back(range(distance(a, truth), 0.01));
  const Position2D m = oracle::posterior_mean_grid(Vector2(160, 210), Matrix2::Identity() * 1e6,
                                                   anchors, ranges, 30.0, 601);
  EXPECT_NEAR(m.x, truth.x, 0.05);
  EXPECT_NEAR(m.y, truth.y, 0.05);
}

}  // namespace
}  // namespace stdf
