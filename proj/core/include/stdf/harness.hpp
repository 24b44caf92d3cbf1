#pragma once

#include "stdf/scenario.hpp"
#include "stdf/simulator.hpp"
#include "stdf/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stdf {

enum class Algorithm : std::uint8_t { EkfStdf, Spawn, SpaEkf, EkfOnly };

/// "ekf-stdf", "spawn", "spa-ekf", "ekf-only".
std::string_view label(Algorithm a);
/// Inverse of label(); throws ConfigError for anything else.
Algorithm parse_algorithm(std::string_view text);

inline constexpr int kRespawnWarmupSlots = 5;

struct RunRecord {
  int run = 0;
  int slot = 0;
  NodeId agent;
  Position2D truth;
  Position2D estimate;
  int neighborCount = 0;
  Algorithm algorithm = Algorithm::EkfStdf;
  bool numericalFailure = false;  // estimator threw; estimate is the last prediction

  [[nodiscard]] double error() const { return distance(truth, estimate); }
};

struct RmsePoint {
  double groupKey = 0.0;
  Algorithm algorithm = Algorithm::EkfStdf;
  double rmse = 0.0;
  double ci95 = 0.0;
  std::size_t n = 0;
};

/// Modifies the freshly sensed measurements of one slot before any estimator
/// sees them (the same edit is applied for every algorithm).
using LinkPolicy = std::function<void(int slot, const WorldState&, SenseResult&)>;

struct RunOptions {
  int threads = 1;
  LinkPolicy links;
  /// When set, only these agents produce records.
  std::optional<std::vector<std::uint32_t>> trackedAgents;
};

struct RunSummary {
  std::uint64_t excludedRecords = 0;  // respawn warm-up rows not emitted
  std::uint64_t clampedDraws = 0;
  std::uint64_t numericalFailures = 0;
  std::uint64_t divergences = 0;       // particle re-initializations
  std::uint64_t messageOps = 0;        // spatial evaluations (messages or particle terms)
  std::uint64_t agentSlots = 0;
  std::uint64_t neighborSum = 0;       // sum of neighbour counts over agent-slots
  double wallSeconds = 0.0;            // estimator time only
  std::vector<std::uint64_t> measurementHashes;  // per run
};

struct ScenarioResult {
  std::vector<RunRecord> records;
  RunSummary summary;
};

/// Seed of Monte-Carlo run `run`; world and measurements depend on it only.
std::uint64_t run_seed(const ScenarioConfig& cfg, int run);

/// Every Monte-Carlo run of `cfg` for one algorithm. Output is ordered by
/// (run, slot, agent) and independent of `options.threads`.
ScenarioResult run_scenario(const ScenarioConfig& cfg, Algorithm algorithm,
                            const RunOptions& options = {});

/// Measurement-stream hash of each run, without running any estimator.
std::vector<std::uint64_t> measurement_hashes(const ScenarioConfig& cfg,
                                              const RunOptions& options = {});

enum class GroupBy : std::uint8_t { Slot, NeighborCount, None };

/// RMSE per (group, algorithm); ci95 from the normal approximation of the
/// mean squared error, carried to the root by the delta method. Neighbour
/// counts of 4 or more share the group 4.
std::vector<RmsePoint> compute_rmse(std::span<const RunRecord> records, GroupBy groupBy);

void write_records_csv(std::ostream& out, std::span<const RunRecord> records);
void write_summary_csv(std::ostream& out, std::span<const RmsePoint> points);

/// Designated-agent link schedule: the neighbour cap of agent 0 in `slot`, or
/// nullopt for no cap.
std::optional<int> fig2_neighbor_cap(int slot);

/// Keeps the designated agent's `cap` nearest links (anchors and agents) and
/// drops the rest in both directions.
void apply_neighbor_cap(std::uint32_t designated, int cap, const WorldState& w, SenseResult& s);

struct Fig2Result {
  std::vector<RunRecord> records;  // designated agent only
  std::vector<RmsePoint> byNeighbors;
  std::map<Algorithm, double> outageRmse;  // slots 10..20
  std::map<Algorithm, RunSummary> summaries;
};

Fig2Result fig2_protocol(const ScenarioConfig& cfg, std::span<const Algorithm> algorithms,
                         int threads = 1);

struct Fig3Result {
  std::vector<RmsePoint> points;  // groupKey = agent count
  std::map<std::pair<int, Algorithm>, RunSummary> summaries;
};

Fig3Result fig3_protocol(const ScenarioConfig& cfg, std::span<const Algorithm> algorithms,
                         std::span<const int> agentCounts, int threads = 1);

struct BenchRow {
  Algorithm algorithm = Algorithm::EkfStdf;
  double meanNeighbors = 0.0;
  double opsPerAgentSlot = 0.0;
  double analyticOpsPerAgentSlot = 0.0;
  double wallSecondsPerSlot = 0.0;
};

/// Runs each algorithm over the same scenario and reports measured spatial
/// evaluation counts, the analytic count (2 N_rel l_max for the closed-form
/// messages, N_rel N_s l_max for the particle methods) and wall time.
std::vector<BenchRow> bench_complexity(const ScenarioConfig& cfg,
                                       std::span<const Algorithm> algorithms, int threads = 1);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

/// Human-readable metadata block (defaults, link schedule, exclusions).
void write_metadata(std::ostream& out, const ScenarioConfig& cfg,
                    const std::map<std::string, std::string>& extra);

}  // namespace stdf
