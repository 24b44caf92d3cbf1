#include "stdf/localizer.hpp"
#include "stdf/oracle.hpp"
#include "stdf/simulator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

namespace stdf {
namespace {

using testing::uniform;

StateBelief belief_at(double x, double y, double posVar = 25.0, double velVar = 100.0) {
  StateBelief b;
  b.mean << x, y, 0, 0;
  b.cov = Vector4(posVar, posVar, velVar, velVar).asDiagonal();
  return b;
}

Inbox anchor_inbox(const std::vector<Position2D>& anchors, const Position2D& truth,
                   double variance = 1e-10) {
  Inbox inbox;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    inbox.anchorObs.push_back({anchors[k], {NodeId::anchor(static_cast<std::uint32_t>(k)),
                                            NodeId::agent(0), distance(anchors[k], truth), variance}});
  }
  return inbox;
}

const TransitionModel kStatic = make_transition_model(1.0, 0.0);

TEST(StepAgent, EmptyInboxIsDeadReckoning) {
  const TransitionModel model = make_transition_model(1.0, 5.0);
  AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(100, 200));
  rt.belief.mean(2) = 10;
  const StateBelief expected = ekf_predict(rt.belief, model);
  const AgentRuntime out = step_agent(rt, Inbox{}, model, 30);
  EXPECT_EQ(out.belief.mean, expected.mean);
  EXPECT_EQ(out.belief.cov, expected.cov);
  const PeerBelief b = broadcast_belief(out);
  EXPECT_EQ(b.x.mean, expected.mean(0));
  EXPECT_EQ(b.x.variance, expected.cov(0, 0));
  EXPECT_EQ(b.y.variance, expected.cov(1, 1));
  EXPECT_EQ(count_message_ops(out), 0U);
}

TEST(StepAgent, BroadcastAfterPredictionIsPrior) {
  AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(5, 6));
  begin_slot(rt, make_transition_model(1.0, 5.0), std::nullopt);
  const PeerBelief b = broadcast_belief(rt);
  EXPECT_EQ(b.x.mean, rt.predicted.mean(0));
  EXPECT_EQ(b.y.mean, rt.predicted.mean(1));
  EXPECT_EQ(b.x.variance, rt.predicted.cov(0, 0));
  EXPECT_EQ(b.y.variance, rt.predicted.cov(1, 1));
}

TEST(StepAgent, ThreeAnchorNoiselessFix) {
  const std::vector<Position2D> anchors{{0, 0}, {400, 0}, {0, 400}};
  const Position2D truth{150, 220};
  AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(153, 216));
  rt.fresh = true;
  const AgentRuntime out = step_agent(rt, anchor_inbox(anchors, truth), kStatic, 30);
  EXPECT_LT(distance(out.fusedIter.mean(), truth), 1.0);
  std::vector<double> ranges;
  for (const auto& a : anchors) ranges.push_back(distance(a, truth));
  const Position2D fix = oracle::trilaterate(anchors, ranges, {153, 216});
  EXPECT_LT(distance(out.fusedIter.mean(), fix), 1.0);
  EXPECT_LT(out.fusedIter.x.variance, out.prior.x.variance);
  EXPECT_LT(out.fusedIter.y.variance, out.prior.y.variance);
}

TEST(StepAgent, ReplayIsBitIdentical) {
  const std::vector<Position2D> anchors{{0, 0}, {600, 0}, {0, 600}, {600, 600}};
  Inbox inbox = anchor_inbox(anchors, {250, 310}, 3.0);
  inbox.agentObs.push_back({NodeId::agent(1), NodeId::agent(0), 120.0, 1.2});
  inbox.peerBeliefs[NodeId::agent(1)] = {{330, 9}, {390, 16}};
  inbox.internal = InternalMeasurement{NodeId::agent(0), 49.0, 0.5};
  AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(240, 300));
  rt.belief.mean(2) = 40;
  rt.prevPosterior = PeerBelief{{200, 9}, {300, 9}};
  const TransitionModel model = make_transition_model(1.0, 5.0);
  const AgentRuntime a = step_agent(rt, inbox, model, 30);
  const AgentRuntime b = step_agent(rt, inbox, model, 30);
  EXPECT_EQ(a.belief.mean, b.belief.mean);
  EXPECT_EQ(a.belief.cov, b.belief.cov);
  EXPECT_EQ(a.stats.temporalEvaluations, 2U);
}

TEST(StepAgent, MessageCountForFourNeighbors) {
  const std::vector<Position2D> anchors{{0, 0}, {600, 0}, {0, 600}, {600, 600}};
  AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(300, 280));
  const AgentRuntime out = step_agent(rt, anchor_inbox(anchors, {310, 290}, 3.0), kStatic, 30);
  EXPECT_EQ(count_message_ops(out), 240U);
  EXPECT_LE(out.stats.spatialRejected, out.stats.spatialEvaluations);
}

TEST(LocalizerProperties, FusedVarianceNeverExceedsPrior) {
  Rng rng = make_rng(41, 0);
  const TransitionModel model = make_transition_model(1.0, 5.0);
  for (int c = 0; c < 150; ++c) {
    const Position2D truth{uniform(rng, 500, 2500), uniform(rng, 500, 2500)};
    Inbox inbox;
    const int n = static_cast<int>(uniform(rng, 0, 8));
    for (int k = 0; k < n; ++k) {
      const Position2D a{truth.x + uniform(rng, -500, 500), truth.y + uniform(rng, -500, 500)};
      const double d = distance(a, truth);
      inbox.anchorObs.push_back({a, {NodeId::anchor(static_cast<std::uint32_t>(k)), NodeId::agent(0),
                                     d + gaussian(rng, std::sqrt(0.01 * d)), 0.01 * d}});
    }
    AgentRuntime rt = make_runtime(
        NodeId::agent(0), belief_at(truth.x + gaussian(rng, 10), truth.y + gaussian(rng, 10), 100));
    const AgentRuntime out = step_agent(rt, inbox, model, 30);
    ASSERT_LE(out.fusedIter.x.variance, out.prior.x.variance * (1 + 1e-12));
    ASSERT_LE(out.fusedIter.y.variance, out.prior.y.variance * (1 + 1e-12));
    ASSERT_TRUE(out.belief.valid());
  }
}

TEST(LocalizerProperties, AllRejectedIsDeadReckoning) {
  Rng rng = make_rng(42, 0);
  const TransitionModel model = make_transition_model(1.0, 5.0);
  for (int c = 0; c < 100; ++c) {
    StateBelief start = belief_at(uniform(rng, 0, 3000), uniform(rng, 0, 3000));
    start.mean(2) = uniform(rng, -50, 50);
    start.mean(3) = uniform(rng, -50, 50);
    const StateBelief pred = ekf_predict(start, model);
    // Every anchor sits exactly on the predicted position: degenerate geometry.
    Inbox inbox;
    for (std::uint32_t k = 0; k < 3; ++k) {
      inbox.anchorObs.push_back({pred.position(), {NodeId::anchor(k), NodeId::agent(0), 10.0, 1.0}});
    }
    const AgentRuntime out = step_agent(make_runtime(NodeId::agent(0), start), inbox, model, 30);
    ASSERT_EQ(out.stats.spatialRejected, out.stats.spatialEvaluations);
    ASSERT_EQ(out.belief.mean, pred.mean);
    ASSERT_EQ(out.belief.cov, pred.cov);
  }
}

TEST(LocalizerProperties, RejectedMessagesAreNotFused) {
  Rng rng = make_rng(43, 0);
  for (int c = 0; c < 100; ++c) {
    const Position2D truth{uniform(rng, 500, 2500), uniform(rng, 500, 2500)};
    AgentRuntime rt = make_runtime(NodeId::agent(0), belief_at(truth.x + 3, truth.y - 2, 100));
    rt.fresh = true;
    begin_slot(rt, kStatic, std::nullopt);
    const Position2D lin = rt.fusedIter.mean();
    Inbox good;
    for (std::uint32_t k = 0; k < 3; ++k) {
      const Position2D a{truth.x + uniform(rng, -500, 500), truth.y + uniform(rng, -500, 500)};
      // Range slightly short of the linearization distance keeps the message proper.
      good.anchorObs.push_back({a, {NodeId::anchor(k), NodeId::agent(0), distance(a, lin) - 1.0, 2.0}});
    }
    Inbox withBad = good;
    withBad.anchorObs.push_back({lin, {NodeId::anchor(9), NodeId::agent(0), 5.0, 1.0}});
    const PeerLookup none = [](NodeId) { return nullptr; };
    const PeerBelief a = fuse_iteration(rt, good, none);
    const PeerBelief b = fuse_iteration(rt, withBad, none);
    ASSERT_EQ(a.x.mean, b.x.mean);
    ASSERT_EQ(a.x.variance, b.x.variance);
    ASSERT_EQ(a.y.mean, b.y.mean);
    ASSERT_EQ(a.y.variance, b.y.variance);
    ASSERT_EQ(rt.stats.spatialRejected, 2U);
  }
}

TEST(LocalizerProperties, IterationErrorNonIncreasingAfterSecond) {
  Rng rng = make_rng(44, 0);
  for (int c = 0; c < 100; ++c) {
    const Position2D truth{uniform(rng, 100, 300), uniform(rng, 100, 300)};
    const std::vector<Position2D> anchors{{0, 0}, {400, 0}, {0, 400}};
    AgentRuntime rt = make_runtime(
        NodeId::agent(0), belief_at(truth.x + uniform(rng, -5, 5), truth.y + uniform(rng, -5, 5)));
    rt.fresh = true;
    begin_slot(rt, kStatic, std::nullopt);
    const Inbox inbox = anchor_inbox(anchors, truth);
    const PeerLookup none = [](NodeId) { return nullptr; };
    double previous = 0.0;
    for (int l = 1; l <= 30; ++l) {
      rt.fusedIter = fuse_iteration(rt, inbox, none);
      const double err = distance(rt.fusedIter.mean(), truth);
      if (l > 2) ASSERT_LE(err, previous + 1e-9) << "case " << c << " iteration " << l;
      previous = err;
    }
  }
}

TEST(LocalizerProperties, ProcessingOrderDoesNotMatter) {
  ScenarioConfig cfg;
  cfg.agentCount = 25;
  const TransitionModel model = make_transition_model(cfg.deltaT, cfg.processNoiseStd);
  Rng rng = make_rng(45, 0);
  for (int c = 0; c < 100; ++c) {
    WorldState w = init_world(cfg, 100 + static_cast<std::uint64_t>(c));
    const SenseResult s = sense(w, cfg);
    std::vector<AgentRuntime> a;
    for (std::size_t k = 0; k < w.agents.size(); ++k) {
      a.push_back(make_runtime(NodeId::agent(static_cast<std::uint32_t>(k)), spawn_prior(w, k, cfg)));
      a.back().fresh = true;
    }
    std::vector<AgentRuntime> b = a;
    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    LocalizerOptions options;
    options.lMax = 5;
    step_network(a, s.inboxes, model, options);
    step_network(b, s.inboxes, model, options, order);
    for (std::size_t k = 0; k < a.size(); ++k) {
      ASSERT_EQ(a[k].belief.mean, b[k].belief.mean);
      ASSERT_EQ(a[k].belief.cov, b[k].belief.cov);
    }
  }
}

TEST(StepNetwork, RequiresMatchingInboxes) {
  std::vector<AgentRuntime> agents{make_runtime(NodeId::agent(0), belief_at(0, 0))};
  EXPECT_THROW(step_network(agents, {}, kStatic, {}), std::invalid_argument);
}

}  // namespace
}  // namespace stdf
