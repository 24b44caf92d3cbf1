#include "stdf/spawn.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stdf {

namespace {

constexpr double kMinParticleVariance = 1e-6;
const double kLogUnderflow = std::log(1e-300);

const PeerBelief* lookup_fixed(const Inbox& inbox, NodeId id) {
  const auto it = inbox.peerBeliefs.find(id);
  return it == inbox.peerBeliefs.end() ? nullptr : &it->second;
}

Position2D divergence_centre(const ParticleCloud& prior, const Inbox& inbox,
                             const PeerLookup& peers) {
  if (!inbox.anchorObs.empty()) return inbox.anchorObs.front().first;
  for (const auto& z : inbox.agentObs) {
    if (const PeerBelief* p = peers(z.from)) return p->mean();
  }
  return prior.mean();
}

}  // namespace

bool ParticleCloud::valid() const {
  if (particles.size() < 2) return false;
  double total = 0.0;
  for (const auto& p : particles) {
    if (!(p.weight >= 0.0)) return false;
    total += p.weight;
  }
  return std::abs(total - 1.0) <= 1e-9;
}

Position2D ParticleCloud::mean() const {
  double x = 0.0;
  double y = 0.0;
  for (const auto& p : particles) {
    x += p.weight * p.pos.x;
    y += p.weight * p.pos.y;
  }
  return {x, y};
}

PeerBelief ParticleCloud::moments() const {
  const Position2D m = mean();
  double vx = 0.0;
  double vy = 0.0;
  for (const auto& p : particles) {
    vx += p.weight * (p.pos.x - m.x) * (p.pos.x - m.x);
    vy += p.weight * (p.pos.y - m.y) * (p.pos.y - m.y);
  }
  return {{m.x, std::max(vx, kMinParticleVariance)}, {m.y, std::max(vy, kMinParticleVariance)}};
}

ParticleCloud ParticleCloud::from_gaussian(const Vector2& mean, const Matrix2& cov,
                                           std::size_t count, Rng& rng) {
  Matrix2 L = Matrix2::Zero();
  const Eigen::LLT<Matrix2> llt(cov);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    L(0, 0) = std::sqrt(std::max(cov(0, 0), 0.0));
    L(1, 1) = std::sqrt(std::max(cov(1, 1), 0.0));
  }
  ParticleCloud cloud;
  cloud.particles.resize(count);
  const double w = 1.0 / static_cast<double>(count);
  for (auto& p : cloud.particles) {
    const Vector2 n(gaussian(rng, 1.0), gaussian(rng, 1.0));
    p.pos = Position2D::from(mean + L * n);
    p.weight = w;
  }
  return cloud;
}

ParticleCloud ParticleCloud::uniform_disc(const Position2D& centre, double radius,
                                          std::size_t count, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ParticleCloud cloud;
  cloud.particles.resize(count);
  const double w = 1.0 / static_cast<double>(count);
  for (auto& p : cloud.particles) {
    const double r = radius * std::sqrt(unit(rng));
    const double t = 2.0 * std::numbers::pi * unit(rng);
    p.pos = {centre.x + r * std::cos(t), centre.y + r * std::sin(t)};
    p.weight = w;
  }
  return cloud;
}

ParticleCloud reweight(const ParticleCloud& prior, const Inbox& inbox, const PeerLookup& peers,
                       double commRadius, Rng& rng, SpawnStats& stats) {
  const std::size_t n = prior.size();
  std::vector<double> logw(n);
  for (std::size_t i = 0; i < n; ++i) logw[i] = std::log(prior.particles[i].weight);

  const double log2pi = std::log(2.0 * std::numbers::pi);
  bool any = false;
  for (const auto& [anchor, z] : inbox.anchorObs) {
    const double norm = -0.5 * (log2pi + std::log(z.variance));
    const double inv2s = 0.5 / z.variance;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = prior.particles[i].pos.x - anchor.x;
      const double dy = prior.particles[i].pos.y - anchor.y;
      const double r = z.value - std::sqrt(dx * dx + dy * dy);
      logw[i] += norm - r * r * inv2s;
    }
    stats.particleEvaluations += n;
    any = true;
  }
  for (const auto& z : inbox.agentObs) {
    const PeerBelief* peer = peers(z.from);
    if (peer == nullptr) continue;
    const Position2D pm = peer->mean();
    const double sx = peer->x.variance;
    const double sy = peer->y.variance;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = prior.particles[i].pos.x - pm.x;
      const double dy = prior.particles[i].pos.y - pm.y;
      const double d2 = dx * dx + dy * dy;
      const double d = std::sqrt(d2);
      const double spread = d2 > 0.0 ? (dx * dx * sx + dy * dy * sy) / d2 : 0.5 * (sx + sy);
      const double s2 = z.variance + spread;
      const double r = z.value - d;
      logw[i] += -0.5 * (log2pi + std::log(s2)) - 0.5 * r * r / s2;
    }
    stats.particleEvaluations += n;
    any = true;
  }
  if (!any) return prior;

  const double peak = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0;
  for (double& lw : logw) {
    lw = std::exp(lw - peak);
    sum += lw;
  }
  if (!std::isfinite(peak) || peak + std::log(sum) < kLogUnderflow) {
    ++stats.divergences;
    return ParticleCloud::uniform_disc(divergence_centre(prior, inbox, peers), commRadius, n,
                                       rng);
  }
  ParticleCloud out = prior;
  for (std::size_t i = 0; i < n; ++i) out.particles[i].weight = logw[i] / sum;
  return out;
}

ParticleCloud systematic_resample(const ParticleCloud& cloud, Rng& rng) {
  const std::size_t n = cloud.size();
  ParticleCloud out;
  out.particles.resize(n);
  const double step = 1.0 / static_cast<double>(n);
  const double u0 = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = cloud.particles.front().weight;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) * step;
    while (u > cumulative && j + 1 < n) cumulative += cloud.particles[++j].weight;
    out.particles[i] = {cloud.particles[j].pos, step};
  }
  return out;
}

ParticleCloud spawn_step(const ParticleCloud& cloud, const Inbox& inbox, int lMax, Rng& rng,
                         double commRadius, SpawnStats* stats) {
  if (lMax < 1) throw std::invalid_argument("spawn_step: lMax must be positive");
  if (!cloud.valid()) throw std::invalid_argument("spawn_step: invalid particle cloud");
  SpawnStats local;
  SpawnStats& s = stats ? *stats : local;
  const PeerLookup peers = [&inbox](NodeId id) { return lookup_fixed(inbox, id); };
  ParticleCloud current = cloud;
  for (int l = 1; l <= lMax; ++l) {
    current = systematic_resample(reweight(cloud, inbox, peers, commRadius, rng, s), rng);
  }
  return current;
}

SpawnRuntime make_spawn_runtime(NodeId id, const StateBelief& prior, std::size_t particles,
                                Rng rng) {
  SpawnRuntime rt;
  rt.id = id;
  rt.rng = std::move(rng);
  rt.cloud = ParticleCloud::from_gaussian(prior.mean.head<2>(), prior.cov.topLeftCorner<2, 2>(),
                                          particles, rt.rng);
  rt.prior = rt.cloud;
  rt.current = rt.cloud;
  return rt;
}

void spawn_network_step(std::vector<SpawnRuntime>& agents, std::span<const Inbox> inboxes,
                        const SpawnOptions& options) {
  if (inboxes.size() != agents.size()) {
    throw std::invalid_argument("spawn_network_step: one inbox per agent required");
  }
  for (auto& rt : agents) {
    rt.stats = {};
    if (rt.fresh) {
      rt.prior = rt.cloud;
      rt.fresh = false;
    } else {
      double vx = 0.0;
      double vy = 0.0;
      if (rt.meanHistory.size() == 2) {
        vx = (rt.meanHistory[1].x - rt.meanHistory[0].x) / options.deltaT;
        vy = (rt.meanHistory[1].y - rt.meanHistory[0].y) / options.deltaT;
      }
      rt.prior = rt.cloud;
      for (auto& p : rt.prior.particles) {
        p.pos.x += vx * options.deltaT + gaussian(rt.rng, options.jitterStd);
        p.pos.y += vy * options.deltaT + gaussian(rt.rng, options.jitterStd);
      }
    }
    rt.current = rt.prior;
  }

  std::vector<PeerBelief> previous(agents.size());
  const PeerLookup lookup = [&previous](NodeId id) -> const PeerBelief* {
    if (id.is_anchor() || id.index >= previous.size()) return nullptr;
    return &previous[id.index];
  };
  for (int l = 1; l <= options.lMax; ++l) {
    for (std::size_t k = 0; k < agents.size(); ++k) previous[k] = agents[k].current.moments();
    for (std::size_t k = 0; k < agents.size(); ++k) {
      auto& rt = agents[k];
      rt.current = systematic_resample(
          reweight(rt.prior, inboxes[k], lookup, options.commRadius, rt.rng, rt.stats), rt.rng);
    }
  }

  for (auto& rt : agents) {
    rt.cloud = rt.current;
    // A re-initialized cloud says nothing about motion.
    if (rt.stats.divergences > 0) rt.meanHistory.clear();
    rt.meanHistory.push_back(rt.cloud.mean());
    if (rt.meanHistory.size() > 2) rt.meanHistory.erase(rt.meanHistory.begin());
  }
}

SpaEkfRuntime make_spa_ekf_runtime(NodeId id, const StateBelief& prior, std::size_t particles,
                                   Rng rng) {
  SpaEkfRuntime rt;
  rt.id = id;
  rt.belief = prior;
  rt.predicted = prior;
  rt.particles = particles;
  rt.rng = std::move(rng);
  return rt;
}

namespace {

void spa_ekf_begin(SpaEkfRuntime& rt, const TransitionModel& model) {
  rt.stats = {};
  rt.predicted = rt.fresh ? rt.belief : ekf_predict(rt.belief, model);
  rt.fresh = false;
  rt.prior = ParticleCloud::from_gaussian(rt.predicted.mean.head<2>(),
                                          rt.predicted.cov.topLeftCorner<2, 2>(), rt.particles,
                                          rt.rng);
  rt.current = rt.prior;
}

void spa_ekf_finish(SpaEkfRuntime& rt, const Inbox& inbox, bool informed) {
  if (!informed || inbox.neighbor_count() == 0) {
    rt.belief = rt.predicted;
    return;
  }
  const PeerBelief m = rt.current.moments();
  rt.belief = ekf_update(rt.predicted, {m.x.mean, m.y.mean, m.x.variance, m.y.variance});
}

}  // namespace

void spa_ekf_step(SpaEkfRuntime& rt, const Inbox& inbox, const TransitionModel& model, int lMax,
                  double commRadius) {
  if (lMax < 1) throw std::invalid_argument("spa_ekf_step: lMax must be positive");
  spa_ekf_begin(rt, model);
  const PeerLookup peers = [&inbox](NodeId id) { return lookup_fixed(inbox, id); };
  for (int l = 1; l <= lMax; ++l) {
    rt.current = systematic_resample(
        reweight(rt.prior, inbox, peers, commRadius, rt.rng, rt.stats), rt.rng);
  }
  spa_ekf_finish(rt, inbox, rt.stats.particleEvaluations > 0);
}

void spa_ekf_network_step(std::vector<SpaEkfRuntime>& agents, std::span<const Inbox> inboxes,
                          const TransitionModel& model, int lMax, double commRadius) {
  if (inboxes.size() != agents.size()) {
    throw std::invalid_argument("spa_ekf_network_step: one inbox per agent required");
  }
  for (auto& rt : agents) spa_ekf_begin(rt, model);

  std::vector<PeerBelief> previous(agents.size());
  const PeerLookup lookup = [&previous](NodeId id) -> const PeerBelief* {
    if (id.is_anchor() || id.index >= previous.size()) return nullptr;
    return &previous[id.index];
  };
  for (int l = 1; l <= lMax; ++l) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      previous[k] = l == 1 ? position_marginals(agents[k].predicted) : agents[k].current.moments();
    }
    for (std::size_t k = 0; k < agents.size(); ++k) {
      auto& rt = agents[k];
      rt.current = systematic_resample(
          reweight(rt.prior, inboxes[k], lookup, commRadius, rt.rng, rt.stats), rt.rng);
    }
  }
  for (std::size_t k = 0; k < agents.size(); ++k) {
    try {
      spa_ekf_finish(agents[k], inboxes[k], agents[k].stats.particleEvaluations > 0);
    } catch (const NumericalFailure&) {
      agents[k].belief = agents[k].predicted;
      ++agents[k].stats.numericalFailures;
    }
  }
}

}  // namespace stdf
