// pwerpi: calibrate PWER critical values, report prediction intervals for the
// true PWER, and run the coverage simulation campaigns.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "CLI11.hpp"
#include "pwerpi/pwerpi.hpp"

namespace fs = std::filesystem;
using namespace pwerpi;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Output {
 public:
  explicit Output(const Config& cfg) : dir_(cfg.directory) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << content;
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

Json manifest(const Config& cfg, const Output& out, const Json& failures) {
  char eigen[32], boost[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  std::snprintf(boost, sizeof boost, "%d.%d.%d", BOOST_VERSION / 100000, BOOST_VERSION / 100 % 1000,
                BOOST_VERSION % 100);
  auto files = out.files();
  files.push_back("manifest.json");
  return Json{{"tool", "pwerpi"},
              {"version", kVersion},
              {"mode", to_string(cfg.mode)},
              {"config_hash", config_hash(cfg)},
              {"master_seed", cfg.master_seed},
              {"threads", cfg.threads},
              {"failures", failures},
              {"files", files},
              {"libraries", {{"eigen", eigen}, {"boost", boost}}},
              {"resolved_config", resolved_json(cfg)}};
}

int run_analyze(const Config& cfg) {
  const auto report = analyze(cfg);
  const std::string text = to_text(report);
  std::cout << text;
  Output out(cfg);
  if (cfg.wants("json")) out.write("analysis.json", to_json(report).dump(2) + "\n");
  if (cfg.wants("text")) out.write("analysis.txt", text);
  out.write("resolved_config.json", resolved_json(cfg).dump(2) + "\n");
  out.write("manifest.json", manifest(cfg, out, Json::object()).dump(2) + "\n");
  return 0;
}

int run_simulate(const Config& cfg) {
  const auto result = run_scenario(scenario_of(cfg), cfg.threads);
  auto table = scenario_table();
  add_scenario_row(table, result);
  std::printf("coverage %.4f  mean length x1e3 %.3f  failures %ld/%ld\n", result.coverage, 1e3 * result.length.mean,
              result.failures, cfg.runs);
  Output out(cfg);
  if (cfg.wants("csv")) {
    out.write("scenarios.csv", table.str());
    out.write("runs.csv", runs_csv(result));
  }
  out.write("resolved_config.json", resolved_json(cfg).dump(2) + "\n");
  out.write("manifest.json", manifest(cfg, out, Json{{"runs", result.failures}}).dump(2) + "\n");
  return 0;
}

int run_studies(const Config& cfg) {
  std::vector<StudyDistribution> dists;
  Json failures = Json::object();
  for (long N : cfg.N_list) {
    auto base = scenario_of(cfg);
    base.N = N;
    dists.push_back(run_study_distribution(base, cfg.studies, cfg.threads));
    long f = 0;
    for (const auto& s : dists.back().studies) f += s.failures;
    failures["N=" + std::to_string(N)] = f;
    const auto& s = dists.back().summary;
    std::printf("N=%ld  coverage mean %.4f sd %.4f min %.3f  mean length x1e3 %.3f\n", N, s.mean, s.sd, s.min,
                1e3 * s.mean_length);
  }
  Output out(cfg);
  if (cfg.wants("csv")) {
    const auto t = study_tables(dists);
    out.write("study_summary.csv", t.summary);
    out.write("studies.csv", t.studies);
    out.write("length_distribution.csv", t.figure);
  }
  out.write("resolved_config.json", resolved_json(cfg).dump(2) + "\n");
  out.write("manifest.json", manifest(cfg, out, failures).dump(2) + "\n");
  return 0;
}

int run_grid(const Config& cfg) {
  const auto cells =
      run_min_prevalence_grid(scenario_of(cfg), cfg.N_list, cfg.m_list, cfg.pi_min_levels, cfg.transforms, cfg.threads);
  Json failures = Json::object();
  for (const auto& c : cells) {
    const std::string key = "N=" + std::to_string(c.N) + ",m=" + std::to_string(c.m) + "," + to_string(c.level) +
                            "," + to_string(c.transform);
    failures[key] = c.result.failures;
    std::printf("N=%-5ld m=%d %-8s %-6s coverage %.4f  mean length x1e3 %.3f\n", c.N, c.m, to_string(c.level),
                to_string(c.transform), c.result.coverage, 1e3 * c.result.length.mean);
  }
  Output out(cfg);
  if (cfg.wants("csv")) {
    const auto t = grid_tables(cells);
    out.write("minprev_coverage.csv", t.coverage);
    out.write("minprev_lengths.csv", t.lengths);
  }
  out.write("resolved_config.json", resolved_json(cfg).dump(2) + "\n");
  out.write("manifest.json", manifest(cfg, out, failures).dump(2) + "\n");
  return 0;
}

void report_error(const char* kind, const std::string& message, int code) {
  std::cerr << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-wise error rate calibration and prediction intervals"};
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool dry_run = false;
  app.add_option("--config", config_path, "JSON configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides engine.master_seed)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (overrides engine.threads)");
  app.add_flag("--dry-run", dry_run, "validate and print the resolved configuration; write nothing");
  app.set_version_flag("--version", kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  try {
    Config cfg = parse_config_text(read_file(config_path));
    if (*out_opt) cfg.directory = out_dir;
    if (*seed_opt) cfg.master_seed = seed;
    if (*threads_opt) cfg.threads = threads;
    validate_config(cfg);

    if (dry_run) {
      std::cout << resolved_json(cfg).dump(2) << "\n";
      std::cout << "config_hash " << config_hash(cfg) << "\n";
      return 0;
    }
    switch (cfg.mode) {
      case Mode::analyze: return run_analyze(cfg);
      case Mode::simulate: return run_simulate(cfg);
      case Mode::study_distribution: return run_studies(cfg);
      case Mode::minprev_grid: return run_grid(cfg);
    }
  } catch (const Error& e) {
    const int code = static_cast<int>(e.exit_code());
    report_error(e.kind(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    const int code = static_cast<int>(ExitCode::numerical_failure);
    report_error("internal_error", e.what(), code);
    return code;
  }
  return 0;
}
