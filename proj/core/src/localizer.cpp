#include "stdf/localizer.hpp"

#include <numeric>
#include <stdexcept>

namespace stdf {

AgentRuntime make_runtime(NodeId id, const StateBelief& initial) {
  AgentRuntime rt;
  rt.id = id;
  rt.belief = initial;
  rt.predicted = initial;
  rt.prior = position_marginals(initial);
  rt.fusedIter = rt.prior;
  return rt;
}

void begin_slot(AgentRuntime& rt, const TransitionModel& model,
                const std::optional<InternalMeasurement>& internal) {
  rt.stats = {};
  rt.predicted = rt.fresh ? rt.belief : ekf_predict(rt.belief, model);
  rt.fresh = false;
  rt.prior = position_marginals(rt.predicted);
  rt.fusedIter = rt.prior;
  rt.temporalX.reset();
  rt.temporalY.reset();
  if (internal && rt.prevPosterior) {
    const Position2D lin = rt.predicted.position();
    rt.temporalX = temporal_message(Axis::X, lin, *rt.prevPosterior, *internal);
    rt.temporalY = temporal_message(Axis::Y, lin, *rt.prevPosterior, *internal);
    rt.stats.temporalEvaluations += 2;
    rt.stats.temporalRejected += (rt.temporalX ? 0 : 1) + (rt.temporalY ? 0 : 1);
  }
}

PeerBelief fuse_iteration(AgentRuntime& rt, const Inbox& inbox, const PeerLookup& peers) {
  const Position2D lin = rt.fusedIter.mean();
  std::vector<AxisGaussian> mx;
  std::vector<AxisGaussian> my;
  mx.reserve(inbox.neighbor_count() + 1);
  my.reserve(inbox.neighbor_count() + 1);

  auto keep = [&](std::optional<AxisGaussian> m, std::vector<AxisGaussian>& into) {
    ++rt.stats.spatialEvaluations;
    if (m) {
      into.push_back(*m);
    } else {
      ++rt.stats.spatialRejected;
    }
  };

  for (const auto& [anchor, z] : inbox.anchorObs) {
    keep(anchor_message(Axis::X, lin, anchor, z), mx);
    keep(anchor_message(Axis::Y, lin, anchor, z), my);
  }
  for (const RangeMeasurement& z : inbox.agentObs) {
    const PeerBelief* peer = peers(z.from);
    if (peer == nullptr) continue;
    keep(agent_message(Axis::X, lin, *peer, z), mx);
    keep(agent_message(Axis::Y, lin, *peer, z), my);
  }
  rt.stats.acceptedLastIteration = mx.size() + my.size();

  if (rt.temporalX) mx.push_back(*rt.temporalX);
  if (rt.temporalY) my.push_back(*rt.temporalY);
  return {fuse_axis(rt.prior.x, mx), fuse_axis(rt.prior.y, my)};
}

void finish_slot(AgentRuntime& rt, const LocalizerOptions& options) {
  const bool informed =
      rt.stats.acceptedLastIteration > 0 || rt.temporalX.has_value() || rt.temporalY.has_value();
  if (informed) {
    const PositionBelief fused{rt.fusedIter.x.mean, rt.fusedIter.y.mean, rt.fusedIter.x.variance,
                               rt.fusedIter.y.variance};
    rt.belief = ekf_update(rt.predicted, fused);
  } else {
    rt.belief = rt.predicted;
    rt.fusedIter = rt.prior;
  }
  rt.prevPosterior = options.temporalSource == TemporalSource::Refined
                         ? position_marginals(rt.belief)
                         : rt.fusedIter;
}

AgentRuntime step_agent(AgentRuntime rt, const Inbox& inbox, const TransitionModel& model,
                        int lMax, const LocalizerOptions& options) {
  if (lMax < 1) throw std::invalid_argument("step_agent: lMax must be positive");
  begin_slot(rt, model, inbox.internal);
  const PeerLookup lookup = [&inbox](NodeId id) -> const PeerBelief* {
    const auto it = inbox.peerBeliefs.find(id);
    return it == inbox.peerBeliefs.end() ? nullptr : &it->second;
  };
  for (int l = 1; l <= lMax; ++l) {
    rt.fusedIter = fuse_iteration(rt, inbox, lookup);
  }
  finish_slot(rt, options);
  return rt;
}

PeerBelief broadcast_belief(const AgentRuntime& rt) { return rt.fusedIter; }

std::uint64_t count_message_ops(const AgentRuntime& rt) { return rt.stats.spatialEvaluations; }

void step_network(std::vector<AgentRuntime>& agents, std::span<const Inbox> inboxes,
                  const TransitionModel& model, const LocalizerOptions& options,
                  std::span<const std::size_t> order) {
  if (inboxes.size() != agents.size()) {
    throw std::invalid_argument("step_network: one inbox per agent required");
  }
  if (options.lMax < 1) throw std::invalid_argument("step_network: lMax must be positive");
  std::vector<std::size_t> default_order;
  if (order.empty()) {
    default_order.resize(agents.size());
    std::iota(default_order.begin(), default_order.end(), std::size_t{0});
    order = default_order;
  }

  for (std::size_t k = 0; k < agents.size(); ++k) {
    begin_slot(agents[k], model, inboxes[k].internal);
  }

  std::vector<PeerBelief> previous(agents.size());
  std::vector<PeerBelief> next(agents.size());
  const PeerLookup lookup = [&previous](NodeId id) -> const PeerBelief* {
    if (id.is_anchor() || id.index >= previous.size()) return nullptr;
    return &previous[id.index];
  };
  for (int l = 1; l <= options.lMax; ++l) {
    for (std::size_t k = 0; k < agents.size(); ++k) previous[k] = broadcast_belief(agents[k]);
    for (const std::size_t k : order) next[k] = fuse_iteration(agents[k], inboxes[k], lookup);
    for (std::size_t k = 0; k < agents.size(); ++k) agents[k].fusedIter = next[k];
  }

  for (auto& rt : agents) {
    try {
      finish_slot(rt, options);
    } catch (const NumericalFailure&) {
      rt.belief = rt.predicted;
      rt.prevPosterior = position_marginals(rt.belief);
      rt.stats.numericalFailure = true;
    }
  }
}

}  // namespace stdf
