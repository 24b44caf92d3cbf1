#include "stdf/validate.hpp"

#include "stdf/messages.hpp"
#include "stdf/simulator.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace stdf {

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Anchor: return "anchor";
    case MessageKind::Agent: return "agent";
    case MessageKind::Temporal: return "temporal";
  }
  return "unknown";
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Position2D disc_point(Rng& rng, const Position2D& c, double radius) {
  const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
  const double t = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return {c.x + r * std::cos(t), c.y + r * std::sin(t)};
}

}  // namespace

ValidationReport validate_messages(const ValidationOptions& options) {
  options.spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ValidationReport report;
  Rng rng = make_rng(options.seed, 0);
  const int maxAttempts = 20 * std::max(options.cases, 1);

  for (int i = 0; i < maxAttempts && report.compared < options.cases; ++i) {
    ValidationCase c;
    c.index = i;
    c.kind = static_cast<MessageKind>(i % 3);
    c.axis = uniform(rng, 0.0, 1.0) < 0.5 ? Axis::X : Axis::Y;

    const Position2D truth{uniform(rng, 0.0, 3000.0), uniform(rng, 0.0, 3000.0)};
    const double d = uniform(rng, 50.0, 1000.0);
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Position2D other{truth.x + d * std::cos(heading), truth.y + d * std::sin(heading)};
    const double variance = 0.01 * d;
    const double z = d + gaussian(rng, std::sqrt(variance));
    const Position2D lin = disc_point(rng, truth, 10.0);
    const PeerBelief peer{{other.x, uniform(rng, 1.0, 100.0)}, {other.y, uniform(rng, 1.0, 100.0)}};

    const RangeMeasurement range{NodeId::anchor(0), NodeId::agent(0), z, variance};
    switch (c.kind) {
      case MessageKind::Anchor:
        c.closed = anchor_message(c.axis, lin, other, range);
        c.oracle = oracle::integrate_anchor_message(c.axis, lin, other, range, options.spec);
        break;
      case MessageKind::Agent:
        c.closed = agent_message(c.axis, lin, peer, range);
        c.oracle = oracle::integrate_agent_message(c.axis, lin, peer, range, options.spec);
        break;
      case MessageKind::Temporal:
        c.closed = temporal_message(c.axis, lin, peer,
                                    InternalMeasurement{NodeId::agent(0), z, variance});
        c.oracle = oracle::integrate_agent_message(c.axis, lin, peer, range, options.spec);
        break;
    }
    c.geometry = fmt::format("lin=({:.3f},{:.3f}) other=({:.3f},{:.3f}) z={:.4f} s2={:.4f} "
                             "peer_var=({:.3f},{:.3f})",
                             lin.x, lin.y, other.x, other.y, z, variance, peer.x.variance,
                             peer.y.variance);

    if (!c.closed && !c.oracle) {
      c.pass = true;
      ++report.bothRejected;
    } else if (c.closed && c.oracle) {
      ++report.compared;
      c.meanError = std::abs(c.closed->mean - c.oracle->mean) / std::sqrt(c.oracle->variance);
      c.varianceError = std::abs(c.closed->variance - c.oracle->variance) / c.oracle->variance;
      c.pass = c.meanError < options.meanTolerance && c.varianceError < options.varianceTolerance;
      report.maxMeanError = std::max(report.maxMeanError, c.meanError);
      report.maxVarianceError = std::max(report.maxVarianceError, c.varianceError);
    } else {
      c.pass = false;  // one side proper, the other not
    }
    if (!c.pass) ++report.failed;
    report.cases.push_back(std::move(c));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_validation_report(std::ostream& out, const ValidationReport& report,
                             const ValidationOptions& options) {
  fmt::print(out, "closed-form messages vs Taylor-integrand quadrature\n");
  fmt::print(out, "nodes={} peer_nodes={} seed={} mean_tol={} var_tol={}\n", options.spec.nodes,
             options.spec.peerNodes, options.seed, options.meanTolerance,
             options.varianceTolerance);
  for (const ValidationCase& c : report.cases) {
    if (c.pass) continue;
    auto show = [](const std::optional<AxisGaussian>& g) {
      return g ? fmt::format("N({:.6f}, {:.6f})", g->mean, g->variance) : std::string("rejected");
    };
    fmt::print(out, "DISCREPANCY case {} {} axis {}: closed {} oracle {} mean_err={:.3e} "
                    "var_err={:.3e} [{}]\n",
               c.index, to_string(c.kind), c.axis == Axis::X ? "x" : "y", show(c.closed),
               show(c.oracle), c.meanError, c.varianceError, c.geometry);
  }
  fmt::print(out, "compared={} both_rejected={} failed={} max_mean_err={:.3e} "
                  "max_var_err={:.3e} seconds={:.2f}\n",
             report.compared, report.bothRejected, report.failed, report.maxMeanError,
             report.maxVarianceError, report.seconds);
  fmt::print(out, "{}\n", report.ok() ? "PASS" : "FAIL");
}

}  // namespace stdf
