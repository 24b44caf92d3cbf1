#pragma once

#include "stdf/oracle.hpp"
#include "stdf/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stdf {

enum class MessageKind : std::uint8_t { Anchor, Agent, Temporal };

const char* to_string(MessageKind kind);

struct ValidationOptions {
  int cases = 200;  // proper (normalizable) configurations to compare
  std::uint64_t seed = 7;
  oracle::QuadratureSpec spec{128, 48, std::nullopt, 1e7};
  double meanTolerance = 0.05;      // |closed - oracle| / oracle std
  double varianceTolerance = 0.1;   // relative
};

struct ValidationCase {
  int index = 0;
  MessageKind kind = MessageKind::Anchor;
  Axis axis = Axis::X;
  std::optional<AxisGaussian> closed;
  std::optional<AxisGaussian> oracle;
  double meanError = 0.0;      // in oracle standard deviations
  double varianceError = 0.0;  // relative
  bool pass = false;
  std::string geometry;
};

struct ValidationReport {
  std::vector<ValidationCase> cases;
  int compared = 0;       // both sides proper
  int bothRejected = 0;   // closed form Rejected and oracle improper
  int failed = 0;
  double maxMeanError = 0.0;
  double maxVarianceError = 0.0;
  double seconds = 0.0;

  [[nodiscard]] bool ok() const { return failed == 0 && compared > 0; }
};

/// Randomized closed-form vs quadrature comparison. Each configuration draws a
/// true position, a second node 50-1000 m away, a range with variance
/// 0.01 * distance and a linearization point within 10 m of the truth; peer and
/// previous-slot variances are drawn in [1, 100] m^2. Configurations continue
/// until `cases` proper comparisons are collected; agreement on rejection
/// (closed form Rejected exactly when the oracle integrand is improper) is
/// checked on the way.
ValidationReport validate_messages(const ValidationOptions& options = {});

void write_validation_report(std::ostream& out, const ValidationReport& report,
                             const ValidationOptions& options);

}  // namespace stdf
