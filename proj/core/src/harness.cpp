#include "stdf/harness.hpp"

#include "stdf/ekf.hpp"
#include "stdf/localizer.hpp"
#include "stdf/spawn.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace stdf {

std::string_view label(Algorithm a) {
  switch (a) {
    case Algorithm::EkfStdf: return "ekf-stdf";
    case Algorithm::Spawn: return "spawn";
    case Algorithm::SpaEkf: return "spa-ekf";
    case Algorithm::EkfOnly: return "ekf-only";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : {Algorithm::EkfStdf, Algorithm::Spawn, Algorithm::SpaEkf, Algorithm::EkfOnly}) {
    if (label(a) == text) return a;
  }
  throw ConfigError(fmt::format("unknown algorithm '{}' (expected ekf-stdf, spawn, spa-ekf or ekf-only)", text));
}

std::uint64_t run_seed(const ScenarioConfig& cfg, int run) {
  Rng rng = make_rng(cfg.seed, 1, static_cast<std::uint64_t>(run));
  return rng();
}

namespace {

/// Estimator state for one run; only the vector of the active algorithm is used.
struct Estimators {
  Algorithm algorithm;
  std::uint64_t seed;
  std::vector<AgentRuntime> stdf;
  std::vector<SpawnRuntime> spawn;
  std::vector<SpaEkfRuntime> spaEkf;
  std::vector<StateBelief> deadReckoning;
  std::vector<bool> deadReckoningFresh;

  Estimators(Algorithm a, std::uint64_t s, std::size_t n) : algorithm(a), seed(s) {
    switch (a) {
      case Algorithm::EkfStdf: stdf.resize(n); break;
      case Algorithm::Spawn: spawn.resize(n); break;
      case Algorithm::SpaEkf: spaEkf.resize(n); break;
      case Algorithm::EkfOnly:
        deadReckoning.resize(n);
        deadReckoningFresh.assign(n, true);
        break;
    }
  }

  void spawn_agent(std::size_t k, const StateBelief& prior, const ScenarioConfig& cfg,
                   bool first) {
    const NodeId id = NodeId::agent(static_cast<std::uint32_t>(k));
    const auto particles = static_cast<std::size_t>(cfg.particleCount);
    switch (algorithm) {
      case Algorithm::EkfStdf:
        stdf[k] = make_runtime(id, prior);
        stdf[k].fresh = true;
        break;
      case Algorithm::Spawn: {
        Rng rng = first ? make_rng(seed, 10 + static_cast<int>(algorithm), k)
                        : std::move(spawn[k].rng);
        spawn[k] = make_spawn_runtime(id, prior, particles, std::move(rng));
        spawn[k].fresh = true;
        break;
      }
      case Algorithm::SpaEkf: {
        Rng rng = first ? make_rng(seed, 10 + static_cast<int>(algorithm), k)
                        : std::move(spaEkf[k].rng);
        spaEkf[k] = make_spa_ekf_runtime(id, prior, particles, std::move(rng));
        spaEkf[k].fresh = true;
        break;
      }
      case Algorithm::EkfOnly:
        deadReckoning[k] = prior;
        deadReckoningFresh[k] = true;
        break;
    }
  }

  /// Returns per-agent numerical-failure flags.
  std::vector<bool> step(std::span<const Inbox> inboxes, const TransitionModel& model,
                         const ScenarioConfig& cfg, RunSummary& summary) {
    std::vector<bool> failed(inboxes.size(), false);
    switch (algorithm) {
      case Algorithm::EkfStdf: {
        step_network(stdf, inboxes, model, {cfg.lMax, cfg.temporalSource});
        for (std::size_t k = 0; k < stdf.size(); ++k) {
          summary.messageOps += count_message_ops(stdf[k]);
          failed[k] = stdf[k].stats.numericalFailure;
        }
        break;
      }
      case Algorithm::Spawn: {
        spawn_network_step(spawn, inboxes,
                           {cfg.lMax, cfg.deltaT, cfg.processNoiseStd * cfg.deltaT, cfg.commRadius});
        for (const auto& rt : spawn) {
          summary.messageOps += rt.stats.particleEvaluations;
          summary.divergences += rt.stats.divergences;
        }
        break;
      }
      case Algorithm::SpaEkf: {
        spa_ekf_network_step(spaEkf, inboxes, model, cfg.lMax, cfg.commRadius);
        for (std::size_t k = 0; k < spaEkf.size(); ++k) {
          summary.messageOps += spaEkf[k].stats.particleEvaluations;
          summary.divergences += spaEkf[k].stats.divergences;
          failed[k] = spaEkf[k].stats.numericalFailures > 0;
        }
        break;
      }
      case Algorithm::EkfOnly:
        for (std::size_t k = 0; k < deadReckoning.size(); ++k) {
          if (!deadReckoningFresh[k]) deadReckoning[k] = ekf_predict(deadReckoning[k], model);
          deadReckoningFresh[k] = false;
        }
        break;
    }
    return failed;
  }

  [[nodiscard]] Position2D estimate(std::size_t k) const {
    switch (algorithm) {
      case Algorithm::EkfStdf: return stdf[k].belief.position();
      case Algorithm::Spawn: return spawn[k].cloud.mean();
      case Algorithm::SpaEkf: return spaEkf[k].belief.position();
      case Algorithm::EkfOnly: return deadReckoning[k].position();
    }
    return {};
  }
};

struct RunOutput {
  std::vector<RunRecord> records;
  RunSummary summary;
  std::uint64_t hash = 0;
};

bool tracked(const RunOptions& options, std::size_t k) {
  if (!options.trackedAgents) return true;
  const auto& t = *options.trackedAgents;
  return std::find(t.begin(), t.end(), static_cast<std::uint32_t>(k)) != t.end();
}

RunOutput run_one(const ScenarioConfig& cfg, std::optional<Algorithm> algorithm, int run,
                  const RunOptions& options) {
  RunOutput out;
  out.hash = 0xcbf29ce484222325ULL;
  const std::uint64_t seed = run_seed(cfg, run);
  WorldState world = init_world(cfg, seed);
  const TransitionModel model = make_transition_model(cfg.deltaT, cfg.processNoiseStd);
  const std::size_t n = world.agents.size();

  std::optional<Estimators> est;
  if (algorithm) {
    est.emplace(*algorithm, seed, n);
    for (std::size_t k = 0; k < n; ++k) est->spawn_agent(k, spawn_prior(world, k, cfg), cfg, true);
  }

  for (int slot = 0; slot < cfg.slots; ++slot) {
    if (slot > 0) {
      step_mobility(world, cfg);
      if (est) {
        for (std::size_t k = 0; k < n; ++k) {
          if (world.respawned[k]) est->spawn_agent(k, spawn_prior(world, k, cfg), cfg, false);
        }
      }
    }
    SenseResult sensed = sense(world, cfg);
    if (options.links) options.links(slot, world, sensed);
    out.hash = hash_measurements(sensed, out.hash);
    out.summary.clampedDraws += sensed.clampedDraws;
    if (!est) continue;

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<bool> failed = est->step(sensed.inboxes, model, cfg, out.summary);
    out.summary.wallSeconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (std::size_t k = 0; k < n; ++k) {
      out.summary.agentSlots += 1;
      out.summary.neighborSum += sensed.inboxes[k].neighbor_count();
      if (failed[k]) ++out.summary.numericalFailures;
      if (!tracked(options, k)) continue;
      if (world.spawnSlot[k] > 0 && slot - world.spawnSlot[k] < kRespawnWarmupSlots) {
        ++out.summary.excludedRecords;
        continue;
      }
      RunRecord r;
      r.run = run;
      r.slot = slot;
      r.agent = NodeId::agent(static_cast<std::uint32_t>(k));
      r.truth = world.agents[k].position;
      r.estimate = est->estimate(k);
      r.neighborCount = static_cast<int>(sensed.inboxes[k].neighbor_count());
      r.algorithm = *algorithm;
      r.numericalFailure = failed[k];
      out.records.push_back(r);
    }
  }
  return out;
}

std::vector<RunOutput> run_all(const ScenarioConfig& cfg, std::optional<Algorithm> algorithm,
                               const RunOptions& options) {
  cfg.validate();
  if (options.threads < 1) throw ConfigError("threads must be >= 1");
  std::vector<RunOutput> outputs(static_cast<std::size_t>(cfg.mcRuns));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  auto worker = [&] {
    for (int run = next++; run < cfg.mcRuns; run = next++) {
      try {
        outputs[static_cast<std::size_t>(run)] = run_one(cfg, algorithm, run, options);
      } catch (...) {
        const std::lock_guard lock(errorMutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int threads = std::min(options.threads, std::max(cfg.mcRuns, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return outputs;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, Algorithm algorithm,
                            const RunOptions& options) {
  ScenarioResult result;
  for (RunOutput& o : run_all(cfg, algorithm, options)) {
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    RunSummary& s = result.summary;
    s.excludedRecords += o.summary.excludedRecords;
    s.clampedDraws += o.summary.clampedDraws;
    s.numericalFailures += o.summary.numericalFailures;
    s.divergences += o.summary.divergences;
    s.messageOps += o.summary.messageOps;
    s.agentSlots += o.summary.agentSlots;
    s.neighborSum += o.summary.neighborSum;
    s.wallSeconds += o.summary.wallSeconds;
    s.measurementHashes.push_back(o.hash);
  }
  return result;
}

std::vector<std::uint64_t> measurement_hashes(const ScenarioConfig& cfg,
                                              const RunOptions& options) {
  std::vector<std::uint64_t> hashes;
  for (const RunOutput& o : run_all(cfg, std::nullopt, options)) hashes.push_back(o.hash);
  return hashes;
}

std::vector<RmsePoint> compute_rmse(std::span<const RunRecord> records, GroupBy groupBy) {
  struct Acc {
    double sum = 0.0;
    double sumSq = 0.0;
    std::size_t n = 0;
  };
  std::map<std::pair<Algorithm, double>, Acc> groups;
  for (const RunRecord& r : records) {
    double key = 0.0;
    if (groupBy == GroupBy::Slot) key = r.slot;
    if (groupBy == GroupBy::NeighborCount) key = std::min(r.neighborCount, 4);
    const double dx = r.truth.x - r.estimate.x;
    const double dy = r.truth.y - r.estimate.y;
    const double sq = dx * dx + dy * dy;
    Acc& a = groups[{r.algorithm, key}];
    a.sum += sq;
    a.sumSq += sq * sq;
    ++a.n;
  }
  std::vector<RmsePoint> out;
  out.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    RmsePoint p;
    p.algorithm = key.first;
    p.groupKey = key.second;
    p.n = a.n;
    const double mse = a.sum / static_cast<double>(a.n);
    p.rmse = std::sqrt(mse);
    if (a.n > 1 && p.rmse > 0.0) {
      const double var =
          std::max(0.0, (a.sumSq - a.sum * mse) / static_cast<double>(a.n - 1));
      p.ci95 = 1.96 * std::sqrt(var / static_cast<double>(a.n)) / (2.0 * p.rmse);
    }
    out.push_back(p);
  }
  return out;
}

void write_records_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << "run,slot,agent,alg,true_x,true_y,est_x,est_y,err,neighbors\n";
  for (const RunRecord& r : records) {
    fmt::print(out, "{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", r.run, r.slot,
               r.agent.index, label(r.algorithm), r.truth.x, r.truth.y, r.estimate.x,
               r.estimate.y, r.error(), r.neighborCount);
  }
}

void write_summary_csv(std::ostream& out, std::span<const RmsePoint> points) {
  out << "group_key,alg,rmse,ci95,n\n";
  for (const RmsePoint& p : points) {
    fmt::print(out, "{},{},{:.6f},{:.6f},{}\n", p.groupKey, label(p.algorithm), p.rmse, p.ci95,
               p.n);
  }
}

std::optional<int> fig2_neighbor_cap(int slot) {
  if (slot >= 10 && slot <= 20) return 1;
  if (slot >= 31 && slot <= 40) return 0;
  if (slot >= 51 && slot <= 60) return 2;
  if (slot >= 71 && slot <= 80) return 3;
  return std::nullopt;
}

void apply_neighbor_cap(std::uint32_t designated, int cap, const WorldState& w, SenseResult& s) {
  Inbox& own = s.inboxes.at(designated);
  const Position2D me = w.agents[designated].position;
  struct Link {
    double d;
    bool anchor;
    std::size_t index;  // into anchorObs / agentObs
  };
  std::vector<Link> links;
  for (std::size_t i = 0; i < own.anchorObs.size(); ++i) {
    links.push_back({distance(me, own.anchorObs[i].first), true, i});
  }
  for (std::size_t i = 0; i < own.agentObs.size(); ++i) {
    links.push_back({distance(me, w.agents[own.agentObs[i].from.index].position), false, i});
  }
  std::stable_sort(links.begin(), links.end(),
                   [](const Link& a, const Link& b) { return a.d < b.d; });

  std::vector<bool> keepAnchor(own.anchorObs.size(), false);
  std::vector<bool> keepAgent(own.agentObs.size(), false);
  for (std::size_t i = 0; i < links.size() && i < static_cast<std::size_t>(std::max(cap, 0)); ++i) {
    (links[i].anchor ? keepAnchor : keepAgent)[links[i].index] = true;
  }

  decltype(own.anchorObs) anchors;
  for (std::size_t i = 0; i < own.anchorObs.size(); ++i) {
    if (keepAnchor[i]) anchors.push_back(own.anchorObs[i]);
  }
  std::vector<RangeMeasurement> agents;
  const NodeId self = NodeId::agent(designated);
  for (std::size_t i = 0; i < own.agentObs.size(); ++i) {
    if (keepAgent[i]) {
      agents.push_back(own.agentObs[i]);
      continue;
    }
    auto& theirs = s.inboxes.at(own.agentObs[i].from.index).agentObs;
    std::erase_if(theirs, [&](const RangeMeasurement& z) { return z.from == self; });
  }
  own.anchorObs = std::move(anchors);
  own.agentObs = std::move(agents);
}

Fig2Result fig2_protocol(const ScenarioConfig& cfg, std::span<const Algorithm> algorithms,
                         int threads) {
  RunOptions options;
  options.threads = threads;
  options.trackedAgents = std::vector<std::uint32_t>{0};
  options.links = [](int slot, const WorldState& w, SenseResult& s) {
    if (const auto cap = fig2_neighbor_cap(slot)) apply_neighbor_cap(0, *cap, w, s);
  };
  Fig2Result result;
  for (Algorithm a : algorithms) {
    ScenarioResult r = run_scenario(cfg, a, options);
    std::vector<RunRecord> outage;
    for (const RunRecord& rec : r.records) {
      if (rec.slot >= 10 && rec.slot <= 20) outage.push_back(rec);
    }
    const auto o = compute_rmse(outage, GroupBy::None);
    result.outageRmse[a] = o.empty() ? std::nan("") : o.front().rmse;
    result.summaries[a] = r.summary;
    result.records.insert(result.records.end(), r.records.begin(), r.records.end());
  }
  result.byNeighbors = compute_rmse(result.records, GroupBy::NeighborCount);
  return result;
}

Fig3Result fig3_protocol(const ScenarioConfig& cfg, std::span<const Algorithm> algorithms,
                         std::span<const int> agentCounts, int threads) {
  Fig3Result result;
  RunOptions options;
  options.threads = threads;
  for (const int count : agentCounts) {
    ScenarioConfig c = cfg;
    c.agentCount = count;
    for (Algorithm a : algorithms) {
      ScenarioResult r = run_scenario(c, a, options);
      for (RmsePoint p : compute_rmse(r.records, GroupBy::None)) {
        p.groupKey = count;
        result.points.push_back(p);
      }
      result.summaries[{count, a}] = r.summary;
    }
  }
  return result;
}

std::vector<BenchRow> bench_complexity(const ScenarioConfig& cfg,
                                       std::span<const Algorithm> algorithms, int threads) {
  RunOptions options;
  options.threads = threads;
  std::vector<BenchRow> rows;
  for (Algorithm a : algorithms) {
    const ScenarioResult r = run_scenario(cfg, a, options);
    const auto& s = r.summary;
    BenchRow row;
    row.algorithm = a;
    const double agentSlots = std::max<double>(1.0, static_cast<double>(s.agentSlots));
    row.meanNeighbors = static_cast<double>(s.neighborSum) / agentSlots;
    row.opsPerAgentSlot = static_cast<double>(s.messageOps) / agentSlots;
    switch (a) {
      case Algorithm::EkfStdf: row.analyticOpsPerAgentSlot = 2.0 * row.meanNeighbors * cfg.lMax; break;
      case Algorithm::Spawn:
      case Algorithm::SpaEkf:
        row.analyticOpsPerAgentSlot = row.meanNeighbors * cfg.particleCount * cfg.lMax;
        break;
      case Algorithm::EkfOnly: row.analyticOpsPerAgentSlot = 0.0; break;
    }
    const double slots = std::max(1.0, static_cast<double>(cfg.mcRuns) * cfg.slots);
    row.wallSecondsPerSlot = s.wallSeconds / slots;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "alg,n_rel,ops_per_agent_slot,analytic_ops_per_agent_slot,wall_s_per_slot\n";
  for (const BenchRow& r : rows) {
    fmt::print(out, "{},{:.4f},{:.2f},{:.2f},{:.9f}\n", label(r.algorithm), r.meanNeighbors,
               r.opsPerAgentSlot, r.analyticOpsPerAgentSlot, r.wallSecondsPerSlot);
  }
}

void write_metadata(std::ostream& out, const ScenarioConfig& cfg,
                    const std::map<std::string, std::string>& extra) {
  out << "# scenario\n";
  write_scenario(out, cfg);
  out << "# protocol\n";
  out << "respawn_warmup_slots = " << kRespawnWarmupSlots << '\n';
  out << "spawn_variant = " << kSpawnVariantLabel << '\n';
  out << "fig2_link_mask = agent 0 keeps its k nearest links (anchors and agents, both "
         "directions); k=1 slots 10-20, k=0 slots 31-40, k=2 slots 51-60, k=3 slots 71-80, "
         "uncapped otherwise\n";
  for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
}

}  // namespace stdf
