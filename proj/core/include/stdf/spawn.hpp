#pragma once

#include "stdf/ekf.hpp"
#include "stdf/localizer.hpp"
#include "stdf/simulator.hpp"
#include "stdf/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stdf {

/// Label used in every output produced by the particle baseline; the exact
/// SPAWN variant of the original comparison is not published.
inline constexpr const char* kSpawnVariantLabel = "particle-SPAWN (this artifact's variant)";

struct Particle {
  Position2D pos;
  double weight = 0.0;
};

struct ParticleCloud {
  std::vector<Particle> particles;

  [[nodiscard]] std::size_t size() const { return particles.size(); }
  /// Non-negative weights summing to 1 within 1e-9, at least two particles.
  [[nodiscard]] bool valid() const;
  [[nodiscard]] Position2D mean() const;
  /// Weighted per-axis mean and variance (variance floored at 1e-6 m^2).
  [[nodiscard]] PeerBelief moments() const;

  static ParticleCloud from_gaussian(const Vector2& mean, const Matrix2& cov, std::size_t count,
                                     Rng& rng);
  static ParticleCloud uniform_disc(const Position2D& centre, double radius, std::size_t count,
                                    Rng& rng);
};

struct SpawnStats {
  std::uint64_t particleEvaluations = 0;  // particle x neighbour likelihood evaluations
  std::uint64_t divergences = 0;          // weight underflow re-initializations
  std::uint64_t numericalFailures = 0;    // EKF refinements that fell back to the prediction
};

/// Weights every particle of `prior` by the product of its range likelihoods:
/// exact Gaussian range likelihood for anchors, and for agent neighbours the
/// same likelihood with the peer's belief variance projected on the
/// peer-to-particle direction added to the range variance. When the total
/// weight underflows (< 1e-300) the cloud is re-initialized uniformly over the
/// communication disc of the first neighbour and `stats.divergences` counts it.
ParticleCloud reweight(const ParticleCloud& prior, const Inbox& inbox, const PeerLookup& peers,
                       double commRadius, Rng& rng, SpawnStats& stats);

/// Systematic resampling; output weights are uniform.
ParticleCloud systematic_resample(const ParticleCloud& cloud, Rng& rng);

/// lMax SPA iterations for one agent with neighbour beliefs held at
/// inbox.peerBeliefs: each iteration reweights `cloud` and resamples.
ParticleCloud spawn_step(const ParticleCloud& cloud, const Inbox& inbox, int lMax, Rng& rng,
                         double commRadius = 600.0, SpawnStats* stats = nullptr);

struct SpawnOptions {
  int lMax = 30;
  double deltaT = 1.0;
  double jitterStd = 5.0;  // sigma_v * deltaT
  double commRadius = 600.0;
};

/// Particle SPAWN agent. It has no EKF: between slots particles move with the
/// finite-difference velocity of the last two cloud means plus Gaussian jitter
/// (zero velocity after a slot in which the cloud was re-initialized).
struct SpawnRuntime {
  NodeId id;
  ParticleCloud cloud;   // posterior of the last completed slot
  ParticleCloud prior;   // propagated cloud of the current slot
  ParticleCloud current; // belief after the latest iteration
  std::vector<Position2D> meanHistory;  // at most the last two slot means
  bool fresh = false;  // first slot after (re)spawn: no propagation
  Rng rng;
  SpawnStats stats;
};

SpawnRuntime make_spawn_runtime(NodeId id, const StateBelief& prior, std::size_t particles,
                                Rng rng);

void spawn_network_step(std::vector<SpawnRuntime>& agents, std::span<const Inbox> inboxes,
                        const SpawnOptions& options);

/// SPA-EKF agent: EKF prediction provides the particle prior, the particle
/// SPA result is moment-matched and folded back with the EKF update.
struct SpaEkfRuntime {
  NodeId id;
  StateBelief belief;
  StateBelief predicted;
  ParticleCloud prior;
  ParticleCloud current;
  std::size_t particles = 500;
  bool fresh = false;  // first slot after (re)spawn: no prediction
  Rng rng;
  SpawnStats stats;
};

SpaEkfRuntime make_spa_ekf_runtime(NodeId id, const StateBelief& prior, std::size_t particles,
                                   Rng rng);

/// Single-agent SPA-EKF slot with neighbour beliefs held at inbox.peerBeliefs.
void spa_ekf_step(SpaEkfRuntime& rt, const Inbox& inbox, const TransitionModel& model, int lMax,
                  double commRadius = 600.0);

void spa_ekf_network_step(std::vector<SpaEkfRuntime>& agents, std::span<const Inbox> inboxes,
                          const TransitionModel& model, int lMax, double commRadius);

}  // namespace stdf
