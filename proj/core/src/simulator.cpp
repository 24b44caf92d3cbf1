#include "stdf/simulator.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace stdf {

namespace {

constexpr double kMinVariance = 1e-12;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void spawn_agent(WorldState& w, std::size_t k, const ScenarioConfig& cfg) {
  const double heading = uniform(w.rng, 0.0, 2.0 * std::numbers::pi);
  AgentTruth& a = w.agents[k];
  a.position = {uniform(w.rng, cfg.agentAreaMin, cfg.agentAreaMax),
                uniform(w.rng, cfg.agentAreaMin, cfg.agentAreaMax)};
  a.velocity = {cfg.initialSpeed * std::cos(heading), cfg.initialSpeed * std::sin(heading)};
  w.hasPrevious[k] = false;
  w.spawnSlot[k] = w.slot;
  if (cfg.exactPriors) {
    w.priorMeans[k] = Vector4(a.position.x, a.position.y, a.velocity.vx, a.velocity.vy);
  } else {
    w.priorMeans[k] = Vector4(a.position.x + gaussian(w.rng, cfg.priorPositionStd),
                              a.position.y + gaussian(w.rng, cfg.priorPositionStd), 0.0, 0.0);
  }
}

bool outside(const Position2D& p, const ScenarioConfig& cfg) {
  return p.x < cfg.areaMin || p.x > cfg.areaMax || p.y < cfg.areaMin || p.y > cfg.areaMax;
}

RangeMeasurement draw_range(Rng& rng, NodeId from, NodeId to, double d, double coeff,
                            std::uint64_t& clamped) {
  const double variance = std::max(coeff * d, kMinVariance);
  double z = d + gaussian(rng, std::sqrt(variance));
  if (z < 0.0) {
    z = 0.0;
    ++clamped;
  }
  return {from, to, z, variance};
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(substream),
                    static_cast<std::uint32_t>(substream >> 32)};
  return Rng(seq);
}

double gaussian(Rng& rng, double stddev) {
  if (stddev == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, stddev)(rng);
}

std::vector<Position2D> anchor_layout(const ScenarioConfig& cfg) {
  const double lo = cfg.areaMin;
  const double hi = cfg.areaMax;
  const double mid = 0.5 * (lo + hi);
  const double q1 = lo + 0.25 * (hi - lo);
  const double q3 = lo + 0.75 * (hi - lo);
  const std::vector<Position2D> all = {
      {lo, lo}, {hi, lo}, {hi, hi}, {lo, hi},    // corners
      {mid, lo}, {hi, mid}, {mid, hi}, {lo, mid},  // edge midpoints
      {q1, q1}, {q1, q3}, {q3, q1}, {q3, q3},    // inner points
      {mid, mid},                                // centre
  };
  return {all.begin(), all.begin() + cfg.anchorCount};
}

WorldState init_world(const ScenarioConfig& cfg) { return init_world(cfg, cfg.seed); }

WorldState init_world(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  WorldState w;
  w.rng = make_rng(seed, 0);
  w.anchors = anchor_layout(cfg);
  const auto n = static_cast<std::size_t>(cfg.agentCount);
  w.agents.resize(n);
  w.previousPositions.resize(n);
  w.hasPrevious.assign(n, false);
  w.respawned.assign(n, false);
  w.spawnSlot.assign(n, 0);
  w.priorMeans.assign(n, Vector4::Zero());
  for (std::size_t k = 0; k < n; ++k) spawn_agent(w, k, cfg);
  return w;
}

StateBelief spawn_prior(const WorldState& w, std::size_t agent, const ScenarioConfig& cfg) {
  StateBelief b;
  b.mean = w.priorMeans.at(agent);
  const double p = cfg.priorPositionStd * cfg.priorPositionStd;
  const double v = cfg.priorVelocityStd * cfg.priorVelocityStd;
  b.cov = Vector4(p, p, v, v).asDiagonal();
  return b;
}

void step_mobility(WorldState& w, const ScenarioConfig& cfg) {
  ++w.slot;
  for (std::size_t k = 0; k < w.agents.size(); ++k) {
    AgentTruth& a = w.agents[k];
    if (cfg.velocityPerturbation == VelocityPerturbation::Component) {
      a.velocity.vx += gaussian(w.rng, cfg.speedStd);
      a.velocity.vy += gaussian(w.rng, cfg.speedStd);
    } else {
      const double speed = std::hypot(a.velocity.vx, a.velocity.vy);
      const double heading = std::atan2(a.velocity.vy, a.velocity.vx);
      const double next = speed + gaussian(w.rng, cfg.speedStd);
      a.velocity = {next * std::cos(heading), next * std::sin(heading)};
    }
    w.previousPositions[k] = a.position;
    a.position.x = a.position.x + a.velocity.vx * cfg.deltaT;
    a.position.y = a.position.y + a.velocity.vy * cfg.deltaT;
    w.hasPrevious[k] = true;
    w.respawned[k] = false;
    if (outside(a.position, cfg)) {
      spawn_agent(w, k, cfg);
      w.respawned[k] = true;
    }
  }
}

SenseResult sense(WorldState& w, const ScenarioConfig& cfg) {
  SenseResult out;
  const std::size_t n = w.agents.size();
  out.inboxes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Inbox& inbox = out.inboxes[i];
    const NodeId self = NodeId::agent(static_cast<std::uint32_t>(i));
    const Position2D& pi = w.agents[i].position;
    for (std::size_t k = 0; k < w.anchors.size(); ++k) {
      const double d = distance(pi, w.anchors[k]);
      if (d > cfg.commRadius) continue;
      inbox.anchorObs.emplace_back(
          w.anchors[k], draw_range(w.rng, NodeId::anchor(static_cast<std::uint32_t>(k)), self,
                                   d, cfg.rangeNoiseCoeff, out.clampedDraws));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = distance(pi, w.agents[j].position);
      if (d > cfg.commRadius) continue;
      inbox.agentObs.push_back(draw_range(w.rng, NodeId::agent(static_cast<std::uint32_t>(j)),
                                          self, d, cfg.rangeNoiseCoeff, out.clampedDraws));
    }
    if (w.hasPrevious[i]) {
      const double travelled = distance(pi, w.previousPositions[i]);
      const double variance = std::max(cfg.internalNoiseCoeff * travelled, kMinVariance);
      double z = travelled + gaussian(w.rng, std::sqrt(variance));
      if (z < 0.0) {
        z = 0.0;
        ++out.clampedDraws;
      }
      inbox.internal = InternalMeasurement{self, z, variance};
    }
  }
  return out;
}

std::uint64_t hash_measurements(const SenseResult& s, std::uint64_t h) {
  auto mix = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Inbox& inbox : s.inboxes) {
    for (const auto& [pos, z] : inbox.anchorObs) {
      mix(pos.x);
      mix(pos.y);
      mix(z.value);
      mix(z.variance);
    }
    for (const auto& z : inbox.agentObs) {
      mix(static_cast<double>(z.from.index));
      mix(z.value);
      mix(z.variance);
    }
    if (inbox.internal) {
      mix(inbox.internal->value);
      mix(inbox.internal->variance);
    }
  }
  return h;
}

}  // namespace stdf
