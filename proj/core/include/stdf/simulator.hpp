#pragma once

#include "stdf/localizer.hpp"
#include "stdf/scenario.hpp"
#include "stdf/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace stdf {

using Rng = std::mt19937_64;

/// Deterministic generator for (seed, stream, substream); independent streams
/// for the world, each Monte-Carlo run and each algorithm.
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

/// Standard normal draw scaled by `stddev`.
double gaussian(Rng& rng, double stddev);

struct WorldState {
  int slot = 0;
  std::vector<Position2D> anchors;
  std::vector<AgentTruth> agents;  // indexed by NodeId::agent(k).index
  std::vector<Position2D> previousPositions;
  std::vector<bool> hasPrevious;     // false on the slot an agent (re)spawns
  std::vector<bool> respawned;       // set by the last step_mobility
  std::vector<int> spawnSlot;        // slot of the latest (re)spawn
  std::vector<Vector4> priorMeans;   // prior mean handed to estimators at spawn
  Rng rng;
};

/// 13-point anchor layout: corners, edge midpoints, four inner points at the
/// quarter/three-quarter marks and the centre (prefix of length anchorCount).
std::vector<Position2D> anchor_layout(const ScenarioConfig& cfg);

WorldState init_world(const ScenarioConfig& cfg);
WorldState init_world(const ScenarioConfig& cfg, std::uint64_t seed);

/// Prior belief for agent k as of its spawn slot: priorMeans[k] with
/// covariance diag(p^2, p^2, v^2, v^2).
StateBelief spawn_prior(const WorldState& w, std::size_t agent, const ScenarioConfig& cfg);

/// Advances one slot: velocity perturbation, constant-velocity move, and
/// replacement of agents that left the area.
void step_mobility(WorldState& w, const ScenarioConfig& cfg);

struct SenseResult {
  std::vector<Inbox> inboxes;  // per agent; peerBeliefs left empty
  std::uint64_t clampedDraws = 0;
};

/// Noisy ranges for every ordered pair within commRadius (anchors to agents,
/// agents to agents) and each agent's travelled-distance measurement.
SenseResult sense(WorldState& w, const ScenarioConfig& cfg);

/// FNV-1a over every value and variance in the measurement stream.
std::uint64_t hash_measurements(const SenseResult& s, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace stdf
