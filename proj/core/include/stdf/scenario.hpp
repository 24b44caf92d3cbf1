#pragma once

#include "stdf/localizer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace stdf {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VelocityPerturbation : std::uint8_t {
  Component,  // N(0, speedStd^2) added to vx and vy independently
  Magnitude,  // N(0, speedStd^2) added to the speed, heading kept
};

/// Full experiment description. Defaults reproduce the 3000 m x 3000 m,
/// 13-anchor, 600 m radius, 50 m/s setup.
struct ScenarioConfig {
  double areaMin = 0.0;
  double areaMax = 3000.0;
  double agentAreaMin = 100.0;
  double agentAreaMax = 2900.0;
  int anchorCount = 13;
  int agentCount = 40;
  double commRadius = 600.0;
  double deltaT = 1.0;
  double initialSpeed = 50.0;
  double speedStd = 5.0;
  double rangeNoiseCoeff = 0.01;     // range variance = coeff * distance
  double internalNoiseCoeff = 0.01;  // travelled-distance variance = coeff * distance
  int lMax = 30;
  int slots = 100;
  int mcRuns = 20;
  std::uint64_t seed = 1;
  int particleCount = 500;

  double processNoiseStd = 5.0;  // sigma_v of the EKF transition noise
  double priorPositionStd = 10.0;
  double priorVelocityStd = 100.0;
  bool exactPriors = false;  // prior mean equals the true state
  VelocityPerturbation velocityPerturbation = VelocityPerturbation::Component;
  TemporalSource temporalSource = TemporalSource::Refined;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Parses `key = value` lines ('#' starts a comment). Keys are the field
/// names above; unknown keys, duplicate keys and malformed values throw
/// ConfigError. The result is validated.
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Writes every field in parseable form.
void write_scenario(std::ostream& out, const ScenarioConfig& cfg);

}  // namespace stdf
