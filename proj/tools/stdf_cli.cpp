#include "stdf/harness.hpp"
#include "stdf/scenario.hpp"
#include "stdf/spawn.hpp"
#include "stdf/validate.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace stdf;

constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;

ScenarioConfig load_or_default(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : load_scenario(path);
}

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& n : names) out.push_back(parse_algorithm(n));
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  return f;
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string summary_line(const RunSummary& s) {
  return fmt::format("excluded_rows={} clamped_draws={} numerical_failures={} divergences={}",
                     s.excludedRecords, s.clampedDraws, s.numericalFailures, s.divergences);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative positioning experiments: EKF-STDF, particle SPAWN, SPA-EKF, EKF"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string alg = "ekf-stdf";
  std::vector<std::string> algs{"ekf-stdf", "spawn", "spa-ekf", "ekf-only"};
  std::vector<int> agentCounts{30, 40, 50, 60};
  int threads = 1;
  int cases = 200;
  std::uint64_t seed = 7;

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo runs of one algorithm, per-record CSV");
  simulate->add_option("--config", config, "scenario file (key = value)");
  simulate->add_option("--alg", alg, "ekf-stdf | spawn | spa-ekf | ekf-only");
  simulate->add_option("--out", out, "records CSV")->required();
  simulate->add_option("--threads", threads, "concurrent Monte-Carlo runs")->check(CLI::PositiveNumber);

  auto* fig2 = app.add_subcommand("fig2", "designated agent under a neighbour-count link schedule");
  fig2->add_option("--config", config, "scenario file");
  fig2->add_option("--out", out, "summary CSV grouped by neighbour count")->required();
  fig2->add_option("--algs", algs, "algorithms")->delimiter(',');
  fig2->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* fig3 = app.add_subcommand("fig3", "RMSE versus number of agents");
  fig3->add_option("--config", config, "scenario file");
  fig3->add_option("--out", out, "summary CSV grouped by agent count")->required();
  fig3->add_option("--algs", algs, "algorithms")->delimiter(',');
  fig3->add_option("--agents", agentCounts, "agent counts")->delimiter(',');
  fig3->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "message-evaluation counts and wall time per slot");
  bench->add_option("--config", config, "scenario file");
  bench->add_option("--out", out, "CSV (stdout when omitted)");
  bench->add_option("--algs", algs, "algorithms")->delimiter(',');
  bench->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "closed-form messages against quadrature");
  validate->add_option("--cases", cases, "proper configurations to compare")->check(CLI::PositiveNumber);
  validate->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) {
      const ScenarioConfig cfg = load_or_default(config);
      const Algorithm a = parse_algorithm(alg);
      RunOptions options;
      options.threads = threads;
      const ScenarioResult r = run_scenario(cfg, a, options);
      auto f = open_out(out);
      write_records_csv(f, r.records);
      std::vector<std::string> hashes;
      for (auto h : r.summary.measurementHashes) hashes.push_back(hex(h));
      auto meta = open_out(out + ".meta");
      write_metadata(meta, cfg,
                     {{"algorithm", std::string(label(a))},
                      {"records", std::to_string(r.records.size())},
                      {"summary", summary_line(r.summary)},
                      {"measurement_hashes", fmt::format("{}", fmt::join(hashes, " "))}});
      const auto overall = compute_rmse(r.records, GroupBy::None);
      if (!overall.empty()) {
        fmt::print("{} rmse={:.4f} m ci95={:.4f} n={} ({})\n", label(a), overall[0].rmse,
                   overall[0].ci95, overall[0].n, summary_line(r.summary));
      }
      return 0;
    }
    if (*fig2) {
      const ScenarioConfig cfg = load_or_default(config);
      const auto list = parse_algorithms(algs);
      const Fig2Result r = fig2_protocol(cfg, list, threads);
      auto f = open_out(out);
      write_summary_csv(f, r.byNeighbors);
      auto rec = open_out(out + ".records.csv");
      write_records_csv(rec, r.records);
      std::map<std::string, std::string> extra;
      for (const auto& [a, v] : r.outageRmse) {
        extra[fmt::format("outage_rmse_{}", label(a))] = fmt::format("{:.4f}", v);
        extra[fmt::format("summary_{}", label(a))] = summary_line(r.summaries.at(a));
        fmt::print("{} outage (slots 10-20) rmse={:.4f} m\n", label(a), v);
      }
      auto meta = open_out(out + ".meta");
      write_metadata(meta, cfg, extra);
      return 0;
    }
    if (*fig3) {
      const ScenarioConfig cfg = load_or_default(config);
      const auto list = parse_algorithms(algs);
      const Fig3Result r = fig3_protocol(cfg, list, agentCounts, threads);
      auto f = open_out(out);
      write_summary_csv(f, r.points);
      std::map<std::string, std::string> extra;
      for (const auto& [key, s] : r.summaries) {
        extra[fmt::format("summary_{}_{}", key.first, label(key.second))] = summary_line(s);
      }
      auto meta = open_out(out + ".meta");
      write_metadata(meta, cfg, extra);
      for (const auto& p : r.points) {
        fmt::print("agents={} {} rmse={:.4f} m ci95={:.4f}\n", p.groupKey, label(p.algorithm),
                   p.rmse, p.ci95);
      }
      return 0;
    }
    if (*bench) {
      const ScenarioConfig cfg = load_or_default(config);
      const auto rows = bench_complexity(cfg, parse_algorithms(algs), threads);
      if (out.empty()) {
        write_bench_csv(std::cout, rows);
      } else {
        auto f = open_out(out);
        write_bench_csv(f, rows);
      }
      return 0;
    }
    if (*validate) {
      ValidationOptions options;
      options.cases = cases;
      options.seed = seed;
      const ValidationReport report = validate_messages(options);
      write_validation_report(std::cout, report, options);
      return report.ok() ? 0 : kExitValidation;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
