#include "stdf/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace stdf {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid value for '" + key + "': '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid value for '" + key + "': '" + text + "' (expected true/false)");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

template <typename T>
Setter number(T ScenarioConfig::*field) {
  return [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
    c.*field = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"areaMin", number(&ScenarioConfig::areaMin)},
      {"areaMax", number(&ScenarioConfig::areaMax)},
      {"agentAreaMin", number(&ScenarioConfig::agentAreaMin)},
      {"agentAreaMax", number(&ScenarioConfig::agentAreaMax)},
      {"anchorCount", number(&ScenarioConfig::anchorCount)},
      {"agentCount", number(&ScenarioConfig::agentCount)},
      {"commRadius", number(&ScenarioConfig::commRadius)},
      {"deltaT", number(&ScenarioConfig::deltaT)},
      {"initialSpeed", number(&ScenarioConfig::initialSpeed)},
      {"speedStd", number(&ScenarioConfig::speedStd)},
      {"rangeNoiseCoeff", number(&ScenarioConfig::rangeNoiseCoeff)},
      {"internalNoiseCoeff", number(&ScenarioConfig::internalNoiseCoeff)},
      {"lMax", number(&ScenarioConfig::lMax)},
      {"slots", number(&ScenarioConfig::slots)},
      {"mcRuns", number(&ScenarioConfig::mcRuns)},
      {"seed", number(&ScenarioConfig::seed)},
      {"particleCount", number(&ScenarioConfig::particleCount)},
      {"processNoiseStd", number(&ScenarioConfig::processNoiseStd)},
      {"priorPositionStd", number(&ScenarioConfig::priorPositionStd)},
      {"priorVelocityStd", number(&ScenarioConfig::priorVelocityStd)},
      {"exactPriors",
       [](ScenarioConfig& c, const std::string& k, const std::string& v) {
         c.exactPriors = parse_bool(k, v);
       }},
      {"velocityPerturbation",
       [](ScenarioConfig& c, const std::string& k, const std::string& v) {
         if (v == "component") {
           c.velocityPerturbation = VelocityPerturbation::Component;
         } else if (v == "magnitude") {
           c.velocityPerturbation = VelocityPerturbation::Magnitude;
         } else {
           throw ConfigError("invalid value for '" + k + "': '" + v +
                             "' (expected component/magnitude)");
         }
       }},
      {"temporalSource",
       [](ScenarioConfig& c, const std::string& k, const std::string& v) {
         if (v == "refined") {
           c.temporalSource = TemporalSource::Refined;
         } else if (v == "fused") {
           c.temporalSource = TemporalSource::Fused;
         } else {
           throw ConfigError("invalid value for '" + k + "': '" + v +
                             "' (expected refined/fused)");
         }
       }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid scenario: " + what);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(areaMax > areaMin, "areaMax must exceed areaMin");
  require(agentAreaMax > agentAreaMin, "agentAreaMax must exceed agentAreaMin");
  require(agentAreaMin >= areaMin && agentAreaMax <= areaMax, "agent area must lie inside area");
  require(anchorCount >= 1 && anchorCount <= 13, "anchorCount must be in [1, 13]");
  require(agentCount >= 1, "agentCount must be >= 1");
  require(commRadius > 0.0, "commRadius must be positive");
  require(deltaT > 0.0, "deltaT must be positive");
  require(initialSpeed >= 0.0, "initialSpeed must be non-negative");
  require(speedStd >= 0.0, "speedStd must be non-negative");
  require(rangeNoiseCoeff > 0.0, "rangeNoiseCoeff must be positive");
  require(internalNoiseCoeff > 0.0, "internalNoiseCoeff must be positive");
  require(lMax >= 1, "lMax must be >= 1");
  require(slots >= 0, "slots must be >= 0");
  require(mcRuns >= 1, "mcRuns must be >= 1");
  require(particleCount >= 2, "particleCount must be >= 2");
  require(processNoiseStd >= 0.0, "processNoiseStd must be non-negative");
  require(priorPositionStd > 0.0, "priorPositionStd must be positive");
  require(priorVelocityStd > 0.0, "priorVelocityStd must be positive");
}

ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const ScenarioConfig& c) {
  std::ostringstream s;
  s.precision(17);
  s << "areaMin = " << c.areaMin << '\n'
    << "areaMax = " << c.areaMax << '\n'
    << "agentAreaMin = " << c.agentAreaMin << '\n'
    << "agentAreaMax = " << c.agentAreaMax << '\n'
    << "anchorCount = " << c.anchorCount << '\n'
    << "agentCount = " << c.agentCount << '\n'
    << "commRadius = " << c.commRadius << '\n'
    << "deltaT = " << c.deltaT << '\n'
    << "initialSpeed = " << c.initialSpeed << '\n'
    << "speedStd = " << c.speedStd << '\n'
    << "rangeNoiseCoeff = " << c.rangeNoiseCoeff << '\n'
    << "internalNoiseCoeff = " << c.internalNoiseCoeff << '\n'
    << "lMax = " << c.lMax << '\n'
    << "slots = " << c.slots << '\n'
    << "mcRuns = " << c.mcRuns << '\n'
    << "seed = " << c.seed << '\n'
    << "particleCount = " << c.particleCount << '\n'
    << "processNoiseStd = " << c.processNoiseStd << '\n'
    << "priorPositionStd = " << c.priorPositionStd << '\n'
    << "priorVelocityStd = " << c.priorVelocityStd << '\n'
    << "exactPriors = " << (c.exactPriors ? "true" : "false") << '\n'
    << "velocityPerturbation = "
    << (c.velocityPerturbation == VelocityPerturbation::Component ? "component" : "magnitude")
    << '\n'
    << "temporalSource = " << (c.temporalSource == TemporalSource::Refined ? "refined" : "fused")
    << '\n';
  out << s.str();
}

}  // namespace stdf
