#include "stdf/scenario.hpp"
#include "stdf/simulator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace stdf {
namespace {

TEST(InitWorld, DefaultAnchorLayout) {
  const WorldState w = init_world(ScenarioConfig{});
  ASSERT_EQ(w.anchors.size(), 13U);
  EXPECT_EQ(w.anchors.front(), (Position2D{0, 0}));
  EXPECT_EQ(w.anchors.back(), (Position2D{1500, 1500}));
  EXPECT_EQ(w.anchors[8], (Position2D{750, 750}));
  EXPECT_EQ(w.anchors[11], (Position2D{2250, 2250}));
}

TEST(InitWorld, AgentsInsideAgentArea) {
  ScenarioConfig cfg;
  cfg.agentCount = 40;
  const WorldState w = init_world(cfg);
  ASSERT_EQ(w.agents.size(), 40U);
  for (const auto& a : w.agents) {
    EXPECT_GE(a.position.x, 100.0);
    EXPECT_LE(a.position.x, 2900.0);
    EXPECT_GE(a.position.y, 100.0);
    EXPECT_LE(a.position.y, 2900.0);
    EXPECT_NEAR(std::hypot(a.velocity.vx, a.velocity.vy), 50.0, 1e-9);
  }
}

TEST(InitWorld, SameSeedSameWorld) {
  const WorldState a = init_world(ScenarioConfig{}, 9);
  const WorldState b = init_world(ScenarioConfig{}, 9);
  for (std::size_t k = 0; k < a.agents.size(); ++k) {
    EXPECT_EQ(a.agents[k].position, b.agents[k].position);
    EXPECT_EQ(a.agents[k].velocity, b.agents[k].velocity);
  }
}

TEST(InitWorld, InvalidConfigThrows) {
  ScenarioConfig cfg;
  cfg.agentCount = 0;
  EXPECT_THROW(init_world(cfg), ConfigError);
}

TEST(StepMobility, NoPerturbationIsStraightLine) {
  ScenarioConfig cfg;
  cfg.speedStd = 0.0;
  WorldState w = init_world(cfg, 3);
  const auto before = w.agents;
  step_mobility(w, cfg);
  for (std::size_t k = 0; k < w.agents.size(); ++k) {
    if (w.respawned[k]) continue;
    EXPECT_EQ(w.agents[k].position.x, before[k].position.x + before[k].velocity.vx);
    EXPECT_EQ(w.agents[k].position.y, before[k].position.y + before[k].velocity.vy);
  }
}

TEST(StepMobility, LeavingAgentIsReplaced) {
  ScenarioConfig cfg;
  cfg.speedStd = 0.0;
  WorldState w = init_world(cfg, 3);
  w.agents[0].position = {2999, 1500};
  w.agents[0].velocity = {50, 0};
  step_mobility(w, cfg);
  EXPECT_TRUE(w.respawned[0]);
  EXPECT_FALSE(w.hasPrevious[0]);
  EXPECT_EQ(w.spawnSlot[0], 1);
  EXPECT_EQ(w.agents.size(), static_cast<std::size_t>(cfg.agentCount));
  EXPECT_GE(w.agents[0].position.x, cfg.agentAreaMin);
  EXPECT_LE(w.agents[0].position.x, cfg.agentAreaMax);
}

TEST(StepMobility, VelocityIncrementStatistics) {
  ScenarioConfig cfg;
  cfg.agentCount = 1;
  cfg.areaMin = -1e12;
  cfg.areaMax = 1e12;
  WorldState w = init_world(cfg, 5);
  double sum = 0.0;
  double sumSq = 0.0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    const double before = w.agents[0].velocity.vx;
    step_mobility(w, cfg);
    const double dv = w.agents[0].velocity.vx - before;
    sum += dv;
    sumSq += dv * dv;
  }
  const double mean = sum / steps;
  const double sd = std::sqrt(sumSq / steps - mean * mean);
  EXPECT_NEAR(sd, 5.0, 0.05);
}

TEST(Sense, RadiusAndVariance) {
  ScenarioConfig cfg;
  cfg.agentCount = 3;
  WorldState w = init_world(cfg, 1);
  w.agents[0].position = {1000, 1000};
  w.agents[1].position = {1700, 1000};  // 700 m away
  w.agents[2].position = {1000, 1400};  // 400 m away
  const SenseResult s = sense(w, cfg);
  const auto& obs = s.inboxes[0].agentObs;
  ASSERT_EQ(obs.size(), 1U);
  EXPECT_EQ(obs[0].from, NodeId::agent(2));
  EXPECT_DOUBLE_EQ(obs[0].variance, 4.0);
  EXPECT_FALSE(s.inboxes[0].internal);  // no previous slot yet
}

TEST(Sense, NoiselessRanges) {
  ScenarioConfig cfg;
  cfg.rangeNoiseCoeff = 1e-12;
  cfg.internalNoiseCoeff = 1e-12;
  WorldState w = init_world(cfg, 2);
  const SenseResult s = sense(w, cfg);
  for (std::size_t i = 0; i < s.inboxes.size(); ++i) {
    for (const auto& [pos, z] : s.inboxes[i].anchorObs) {
      EXPECT_NEAR(z.value, distance(pos, w.agents[i].position), 1e-3);
    }
    for (const auto& z : s.inboxes[i].agentObs) {
      EXPECT_NEAR(z.value, distance(w.agents[z.from.index].position, w.agents[i].position), 1e-3);
    }
  }
}

TEST(SimulatorProperties, ConnectivityIsSymmetric) {
  ScenarioConfig cfg;
  cfg.agentCount = 60;
  for (int c = 0; c < 100; ++c) {
    WorldState w = init_world(cfg, 1000 + static_cast<std::uint64_t>(c));
    for (int s = 0; s < c % 5; ++s) step_mobility(w, cfg);
    const SenseResult r = sense(w, cfg);
    for (std::size_t i = 0; i < r.inboxes.size(); ++i) {
      for (const auto& z : r.inboxes[i].agentObs) {
        const auto& back = r.inboxes[z.from.index].agentObs;
        ASSERT_TRUE(std::any_of(back.begin(), back.end(), [&](const RangeMeasurement& m) {
          return m.from == NodeId::agent(static_cast<std::uint32_t>(i));
        }));
      }
    }
  }
}

TEST(SimulatorProperties, RespawnConservesAgentCount) {
  ScenarioConfig cfg;
  cfg.initialSpeed = 300.0;  // leave the area often
  for (int c = 0; c < 100; ++c) {
    cfg.agentCount = 1 + c % 60;
    WorldState w = init_world(cfg, 2000 + static_cast<std::uint64_t>(c));
    for (int s = 0; s < 20; ++s) {
      step_mobility(w, cfg);
      ASSERT_EQ(w.agents.size(), static_cast<std::size_t>(cfg.agentCount));
      for (const auto& a : w.agents) {
        ASSERT_GE(a.position.x, cfg.areaMin);
        ASSERT_LE(a.position.x, cfg.areaMax);
        ASSERT_GE(a.position.y, cfg.areaMin);
        ASSERT_LE(a.position.y, cfg.areaMax);
      }
    }
  }
}

TEST(SimulatorProperties, MeasurementsAreUnbiased) {
  Rng rng = make_rng(51, 0);
  const double d = 400.0;
  const double sd = std::sqrt(0.01 * d);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += d + gaussian(rng, sd);
  EXPECT_LT(std::abs(sum / n - d), 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(SimulatorProperties, ReplayDeterminism) {
  ScenarioConfig cfg;
  WorldState a = init_world(cfg, 77);
  WorldState b = init_world(cfg, 77);
  for (int s = 0; s < 30; ++s) {
    step_mobility(a, cfg);
    step_mobility(b, cfg);
    ASSERT_EQ(hash_measurements(sense(a, cfg)), hash_measurements(sense(b, cfg)));
  }
}

TEST(Scenario, ParseRoundTrip) {
  ScenarioConfig cfg;
  cfg.agentCount = 55;
  cfg.seed = 123456789012345ULL;
  cfg.velocityPerturbation = VelocityPerturbation::Magnitude;
  cfg.temporalSource = TemporalSource::Fused;
  cfg.rangeNoiseCoeff = 0.02;
  std::stringstream ss;
  write_scenario(ss, cfg);
  const ScenarioConfig back = parse_scenario(ss);
  EXPECT_EQ(back.agentCount, 55);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.velocityPerturbation, VelocityPerturbation::Magnitude);
  EXPECT_EQ(back.temporalSource, TemporalSource::Fused);
  EXPECT_EQ(back.rangeNoiseCoeff, 0.02);
}

TEST(Scenario, ParseErrors) {
  std::stringstream unknown("agentCount = 4\nbogus = 1\n");
  EXPECT_THROW(parse_scenario(unknown), ConfigError);
  std::stringstream dup("slots = 4\nslots = 5\n");
  EXPECT_THROW(parse_scenario(dup), ConfigError);
  std::stringstream bad("slots = four\n");
  EXPECT_THROW(parse_scenario(bad), ConfigError);
  std::stringstream invalid("commRadius = -1\n");
  EXPECT_THROW(parse_scenario(invalid), ConfigError);
  std::stringstream comments("# header\n\nslots = 7  # trailing\n");
  EXPECT_EQ(parse_scenario(comments).slots, 7);
}

}  // namespace
}  // namespace stdf
