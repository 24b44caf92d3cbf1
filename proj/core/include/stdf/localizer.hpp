#pragma once

#include "stdf/ekf.hpp"
#include "stdf/messages.hpp"
#include "stdf/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace stdf {

/// Which belief of the previous slot the temporal factor integrates over.
enum class TemporalSource : std::uint8_t {
  Refined,  // Stage-3 posterior marginals (default)
  Fused,    // final Stage-2 belief
};

struct LocalizerOptions {
  int lMax = 30;
  TemporalSource temporalSource = TemporalSource::Refined;
};

/// Per-slot instrumentation. Evaluations are counted per axis.
struct SlotStats {
  std::uint64_t spatialEvaluations = 0;
  std::uint64_t spatialRejected = 0;
  std::uint64_t temporalEvaluations = 0;
  std::uint64_t temporalRejected = 0;
  std::uint64_t acceptedLastIteration = 0;
  bool numericalFailure = false;  // refinement failed; belief fell back to the prediction
};

struct AgentRuntime {
  NodeId id;
  StateBelief belief;       // refined belief of the last completed slot
  StateBelief predicted;    // Stage-1 output of the current slot
  PeerBelief prior;         // position marginals of `predicted`
  PeerBelief fusedIter;     // belief after the latest spatial iteration
  std::optional<PeerBelief> prevPosterior;
  std::optional<AxisGaussian> temporalX;
  std::optional<AxisGaussian> temporalY;
  SlotStats stats;
  bool fresh = false;  // first slot after (re)spawn: belief already describes this slot
};

struct Inbox {
  std::vector<std::pair<Position2D, RangeMeasurement>> anchorObs;
  std::vector<RangeMeasurement> agentObs;  // `from` names the peer agent
  std::map<NodeId, PeerBelief> peerBeliefs;
  std::optional<InternalMeasurement> internal;

  [[nodiscard]] std::size_t neighbor_count() const { return anchorObs.size() + agentObs.size(); }
};

using PeerLookup = std::function<const PeerBelief*(NodeId)>;

AgentRuntime make_runtime(NodeId id, const StateBelief& initial);

/// Stage 1 plus the temporal message; leaves fusedIter at the prior marginals.
void begin_slot(AgentRuntime& rt, const TransitionModel& model,
                const std::optional<InternalMeasurement>& internal);

/// One spatial iteration: messages linearized at rt.fusedIter, fused with the
/// prior and the temporal message. Does not modify rt.fusedIter so that a
/// synchronous round can read every agent's previous-iteration belief.
PeerBelief fuse_iteration(AgentRuntime& rt, const Inbox& inbox, const PeerLookup& peers);

/// Stage 3. Skipped (belief = predicted) when the final iteration fused no
/// message at all.
void finish_slot(AgentRuntime& rt, const LocalizerOptions& options = {});

/// Whole slot for a single agent whose neighbours' beliefs are held fixed at
/// inbox.peerBeliefs.
AgentRuntime step_agent(AgentRuntime rt, const Inbox& inbox, const TransitionModel& model,
                        int lMax, const LocalizerOptions& options = {});

PeerBelief broadcast_belief(const AgentRuntime& rt);

/// Spatial message evaluations (both axes) performed in the last slot.
std::uint64_t count_message_ops(const AgentRuntime& rt);

/// Synchronous schedule over a whole network. `agents[k]` must have
/// id == NodeId::agent(k); inboxes are indexed the same way and their
/// peerBeliefs are ignored (beliefs are exchanged internally per iteration).
/// `order`, when given, is the processing order within an iteration; outputs
/// do not depend on it. A NumericalFailure in one agent's refinement is
/// contained: that agent keeps its prediction and stats.numericalFailure is set.
void step_network(std::vector<AgentRuntime>& agents, std::span<const Inbox> inboxes,
                  const TransitionModel& model, const LocalizerOptions& options,
                  std::span<const std::size_t> order = {});

}  // namespace stdf
