#pragma once

// JSON configuration documents for the command-line front end: schema checks,
// defaults, the resolved dump and its campaign hash.

#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pwerpi/design.hpp"
#include "pwerpi/errors.hpp"
#include "pwerpi/sim.hpp"

namespace pwerpi {

using Json = nlohmann::json;

enum class Mode { analyze, simulate, study_distribution, minprev_grid };
enum class AnalysisMethod { bootstrap, satterthwaite };

struct Config {
  Mode mode = Mode::simulate;

  // design
  int m = 2;
  long N = 250;
  std::vector<long> counts;  // analyze
  PrevalenceScheme prevalence = PrevalenceScheme::equal;
  std::vector<double> explicit_pi;
  TreatmentScheme treatment = TreatmentScheme::pairwise_different;
  Setting setting = Setting::A;
  std::vector<double> variances;  // analyze: one per stratum
  VarianceMode variance_mode = VarianceMode::known_homogeneous;
  double sigma_E = 0.5;
  std::vector<long> N_list;
  std::vector<int> m_list;

  // interval
  double alpha = 0.025;
  double alpha_prime = 0.05;
  double pi_min = 0.0;
  Transform transform = Transform::none;
  std::vector<PiMinLevel> pi_min_levels;
  std::vector<Transform> transforms;

  // engine
  double cdf_tol = 1e-6;
  double solver_tol = 1e-8;
  long B = 2000;
  long runs = 2000;
  long studies = 100;
  int threads = 1;
  std::uint64_t master_seed = 1;
  AnalysisMethod method = AnalysisMethod::bootstrap;

  // output
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json", "text"};

  bool wants(const std::string& f) const {
    for (const auto& x : formats)
      if (x == f) return true;
    return false;
  }
};

// ---------------------------------------------------------------------------
// enum <-> string

namespace detail {

template <class E>
struct Names {
  std::vector<std::pair<E, const char*>> table;

  const char* name(E v) const {
    for (const auto& [e, s] : table)
      if (e == v) return s;
    return "?";
  }
  E parse(const std::string& s, const char* what) const {
    for (const auto& [e, n] : table)
      if (s == n) return e;
    std::string allowed;
    for (const auto& [e, n] : table) allowed += std::string(allowed.empty() ? "" : ", ") + n;
    throw ConfigError(std::string(what) + ": unknown value \"" + s + "\" (expected one of " + allowed + ")");
  }
};

inline const Names<Mode> kModes{{{Mode::analyze, "analyze"},
                                 {Mode::simulate, "simulate"},
                                 {Mode::study_distribution, "study-distribution"},
                                 {Mode::minprev_grid, "minprev-grid"}}};
inline const Names<Setting> kSettings{{{Setting::A, "A"},
                                       {Setting::B, "B"},
                                       {Setting::C, "C"},
                                       {Setting::D_satterthwaite, "D_satterthwaite"},
                                       {Setting::D_bootstrap, "D_bootstrap"},
                                       {Setting::E, "E"}}};
inline const Names<PrevalenceScheme> kSchemes{{{PrevalenceScheme::equal, "equal"},
                                               {PrevalenceScheme::one_large, "one_large"},
                                               {PrevalenceScheme::one_small, "one_small"},
                                               {PrevalenceScheme::random_biomarker, "random_biomarker"}}};
inline const Names<TreatmentScheme> kTreatments{
    {{TreatmentScheme::single, "single"}, {TreatmentScheme::pairwise_different, "pairwise_different"}}};
inline const Names<VarianceMode> kVarianceModes{{{VarianceMode::known_homogeneous, "known_homogeneous"},
                                                 {VarianceMode::known_heterogeneous, "known_heterogeneous"},
                                                 {VarianceMode::unknown_homogeneous, "unknown_homogeneous"},
                                                 {VarianceMode::unknown_heterogeneous, "unknown_heterogeneous"}}};
inline const Names<Transform> kTransforms{
    {{Transform::none, "none"}, {Transform::floor, "floor"}, {Transform::shift, "shift"}}};
inline const Names<PiMinLevel> kLevels{
    {{PiMinLevel::zero, "zero"}, {PiMinLevel::quarter, "quarter"}, {PiMinLevel::half, "half"}}};
inline const Names<AnalysisMethod> kMethods{
    {{AnalysisMethod::bootstrap, "bootstrap"}, {AnalysisMethod::satterthwaite, "satterthwaite"}}};

inline void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <class E>
void read_enum(const Json& obj, const char* key, E& out, const Names<E>& names, const std::string& where) {
  if (!obj.contains(key)) return;
  std::string s;
  read(obj, key, s, where);
  out = names.parse(s, (where + "." + key).c_str());
}

template <class E>
void read_enum_list(const Json& obj, const char* key, std::vector<E>& out, const Names<E>& names,
                    const std::string& where) {
  if (!obj.contains(key)) return;
  std::vector<std::string> v;
  read(obj, key, v, where);
  out.clear();
  for (const auto& s : v) out.push_back(names.parse(s, (where + "." + key).c_str()));
}

}  // namespace detail

inline const char* to_string(Mode v) { return detail::kModes.name(v); }
inline const char* to_string(Setting v) { return detail::kSettings.name(v); }
inline const char* to_string(TreatmentScheme v) { return detail::kTreatments.name(v); }
inline const char* to_string(VarianceMode v) { return detail::kVarianceModes.name(v); }
inline const char* to_string(Transform v) { return detail::kTransforms.name(v); }
inline const char* to_string(PiMinLevel v) { return detail::kLevels.name(v); }
inline const char* to_string(AnalysisMethod v) { return detail::kMethods.name(v); }
inline const char* to_string(PrevalenceScheme v) {
  return v == PrevalenceScheme::explicit_vector ? "explicit" : detail::kSchemes.name(v);
}

// ---------------------------------------------------------------------------

inline Config parse_config(const Json& doc) {
  using namespace detail;
  check_keys(doc, {"mode", "design", "interval", "engine", "output"}, "config");
  if (!doc.contains("mode")) throw ConfigError("config.mode is required");
  Config c;
  read_enum(doc, "mode", c.mode, kModes, "config");
  const bool runs_given = doc.contains("engine") && doc["engine"].is_object() && doc["engine"].contains("runs");

  if (doc.contains("design")) {
    const Json& d = doc["design"];
    check_keys(d,
               {"m", "N", "counts", "prevalence", "treatment", "setting", "variances", "variance_mode", "sigma_E",
                "N_list", "m_list"},
               "design");
    read(d, "m", c.m, "design");
    read(d, "N", c.N, "design");
    read(d, "counts", c.counts, "design");
    if (d.contains("prevalence")) {
      if (d["prevalence"].is_array()) {
        c.prevalence = PrevalenceScheme::explicit_vector;
        read(d, "prevalence", c.explicit_pi, "design");
      } else {
        read_enum(d, "prevalence", c.prevalence, kSchemes, "design");
      }
    }
    read_enum(d, "treatment", c.treatment, kTreatments, "design");
    read_enum(d, "setting", c.setting, kSettings, "design");
    read(d, "variances", c.variances, "design");
    read_enum(d, "variance_mode", c.variance_mode, kVarianceModes, "design");
    read(d, "sigma_E", c.sigma_E, "design");
    read(d, "N_list", c.N_list, "design");
    read(d, "m_list", c.m_list, "design");
    if (c.mode == Mode::analyze && d.contains("counts") && !d.contains("N")) {
      c.N = 0;
      for (long n : c.counts) c.N += n;
    }
  }
  if (doc.contains("interval")) {
    const Json& d = doc["interval"];
    check_keys(d, {"alpha", "alpha_prime", "pi_min", "transform", "pi_min_levels", "transforms"}, "interval");
    read(d, "alpha", c.alpha, "interval");
    read(d, "alpha_prime", c.alpha_prime, "interval");
    read(d, "pi_min", c.pi_min, "interval");
    read_enum(d, "transform", c.transform, kTransforms, "interval");
    read_enum_list(d, "pi_min_levels", c.pi_min_levels, kLevels, "interval");
    read_enum_list(d, "transforms", c.transforms, kTransforms, "interval");
  }
  if (doc.contains("engine")) {
    const Json& d = doc["engine"];
    check_keys(d, {"cdf_tol", "solver_tol", "B", "runs", "studies", "threads", "master_seed", "method"}, "engine");
    read(d, "cdf_tol", c.cdf_tol, "engine");
    read(d, "solver_tol", c.solver_tol, "engine");
    read(d, "B", c.B, "engine");
    read(d, "runs", c.runs, "engine");
    read(d, "studies", c.studies, "engine");
    read(d, "threads", c.threads, "engine");
    read(d, "master_seed", c.master_seed, "engine");
    read_enum(d, "method", c.method, kMethods, "engine");
  }
  if (doc.contains("output")) {
    const Json& d = doc["output"];
    check_keys(d, {"directory", "formats"}, "output");
    read(d, "directory", c.directory, "output");
    read(d, "formats", c.formats, "output");
  }

  // Desk-scale run counts: resampling settings are far slower per run.
  if (!runs_given) {
    const bool resampling = c.setting == Setting::D_satterthwaite || c.setting == Setting::D_bootstrap ||
                            c.setting == Setting::E;
    c.runs = c.mode == Mode::study_distribution ? 1000 : resampling ? 200 : 2000;
  }
  if (c.N_list.empty()) c.N_list = {c.N};
  if (c.m_list.empty()) c.m_list = {c.m};
  if (c.pi_min_levels.empty()) c.pi_min_levels = {PiMinLevel::zero, PiMinLevel::quarter, PiMinLevel::half};
  if (c.transforms.empty()) c.transforms = {Transform::floor, Transform::shift};
  return c;
}

inline Config parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

// Scenario of a simulate/study-distribution/minprev-grid campaign.
inline SimScenario scenario_of(const Config& c) {
  SimScenario s;
  s.N = c.N;
  s.m = c.m;
  s.setting = c.setting;
  s.prevalence = c.prevalence;
  s.explicit_pi = c.explicit_pi;
  s.treatment = c.treatment;
  s.alpha = c.alpha;
  s.alpha_prime = c.alpha_prime;
  s.runs = c.runs;
  s.B = c.B;
  s.pi_min = c.pi_min;
  s.transform = c.transform;
  s.master_seed = c.master_seed;
  s.cdf_tol = c.cdf_tol;
  s.solver_tol = c.solver_tol;
  s.sigma_E = c.sigma_E;
  return s;
}

inline void validate_config(const Config& c) {
  if (c.threads < 1) throw ConfigError("engine.threads must be at least 1");
  if (!(c.cdf_tol >= 1e-8 && c.cdf_tol <= 1e-3)) throw ConfigError("engine.cdf_tol must lie in [1e-8, 1e-3]");
  if (!(c.solver_tol > 0.0 && c.solver_tol < 1e-2)) throw ConfigError("engine.solver_tol must lie in (0, 1e-2)");
  if (!(c.sigma_E > 0.0)) throw ConfigError("design.sigma_E must be positive");
  for (const auto& f : c.formats)
    if (f != "csv" && f != "json" && f != "text") throw ConfigError("output.formats: unknown format \"" + f + "\"");
  switch (c.mode) {
    case Mode::analyze: {
      enumerate_strata(c.m);
      if (c.counts.empty()) throw ConfigError("analyze needs design.counts");
      if (static_cast<int>(c.counts.size()) != stratum_count(c.m))
        throw ConfigError("design.counts needs " + std::to_string(stratum_count(c.m)) + " entries for m=" +
                          std::to_string(c.m));
      long total = 0;
      for (long n : c.counts) {
        if (n < 0) throw ConfigError("design.counts must be nonnegative");
        total += n;
      }
      if (total != c.N)
        throw ConfigError("design.counts sum to " + std::to_string(total) + " but design.N=" + std::to_string(c.N));
      if (!c.variances.empty() && static_cast<int>(c.variances.size()) != stratum_count(c.m))
        throw ConfigError("design.variances needs one entry per stratum");
      if (!(c.alpha > 0.0 && c.alpha < 0.5)) throw ConfigError("interval.alpha must lie in (0, 0.5)");
      if (!(c.alpha_prime > 0.0 && c.alpha_prime < 1.0)) throw ConfigError("interval.alpha_prime must lie in (0, 1)");
      if (c.pi_min < 0.0) throw ConfigError("interval.pi_min must be nonnegative");
      if (c.transform == Transform::floor && c.pi_min >= 1.0 / stratum_count(c.m))
        throw ConfigError("floor transform needs pi_min < 1/n_S");
      if (c.variance_mode == VarianceMode::unknown_heterogeneous && c.method == AnalysisMethod::bootstrap &&
          static_cast<double>(c.B) * c.alpha < 20.0)
        throw ConfigError("B * alpha must be at least 20 for the bootstrap");
      break;
    }
    case Mode::simulate: validate_scenario(scenario_of(c)); break;
    case Mode::study_distribution: {
      if (c.studies < 1) throw ConfigError("engine.studies must be at least 1");
      for (long N : c.N_list) {
        auto s = scenario_of(c);
        s.N = N;
        validate_scenario(s);
      }
      break;
    }
    case Mode::minprev_grid: {
      for (long N : c.N_list)
        for (int m : c.m_list)
          for (auto level : c.pi_min_levels)
            for (auto t : c.transforms) {
              auto s = scenario_of(c);
              s.N = N;
              s.m = m;
              s.prevalence = PrevalenceScheme::one_small;
              s.pi_min = pi_min_value(level, m);
              s.transform = t;
              validate_scenario(s);
            }
      break;
    }
  }
}

// Fully explicit configuration: every setting that affects the results, with
// defaults filled in. Re-ingesting it reproduces the same campaign.
inline Json resolved_json(const Config& c) {
  Json design = Json::object(), interval = Json::object(), engine = Json::object();
  auto prevalence = [&]() -> Json {
    if (c.prevalence == PrevalenceScheme::explicit_vector) return c.explicit_pi;
    return to_string(c.prevalence);
  };
  design["treatment"] = to_string(c.treatment);
  engine["cdf_tol"] = c.cdf_tol;
  engine["solver_tol"] = c.solver_tol;
  engine["master_seed"] = c.master_seed;
  engine["threads"] = c.threads;
  interval["alpha"] = c.alpha;
  interval["alpha_prime"] = c.alpha_prime;
  const bool resampling =
      c.setting == Setting::D_satterthwaite || c.setting == Setting::D_bootstrap || c.setting == Setting::E;

  switch (c.mode) {
    case Mode::analyze:
      design["m"] = c.m;
      design["N"] = c.N;
      design["counts"] = c.counts;
      design["variance_mode"] = to_string(c.variance_mode);
      if (!c.variances.empty()) design["variances"] = c.variances;
      interval["pi_min"] = c.pi_min;
      interval["transform"] = to_string(c.transform);
      if (c.variance_mode == VarianceMode::unknown_heterogeneous) {
        engine["method"] = to_string(c.method);
        if (c.method == AnalysisMethod::bootstrap) engine["B"] = c.B;
      }
      break;
    case Mode::simulate:
    case Mode::study_distribution:
      design["m"] = c.m;
      design["setting"] = to_string(c.setting);
      if (c.mode == Mode::simulate) {
        design["N"] = c.N;
        design["prevalence"] = prevalence();
      } else {
        design["N_list"] = c.N_list;
        engine["studies"] = c.studies;
      }
      if (c.setting == Setting::E) design["sigma_E"] = c.sigma_E;
      interval["pi_min"] = c.pi_min;
      interval["transform"] = to_string(c.transform);
      engine["runs"] = c.runs;
      if (resampling) engine["B"] = c.B;
      break;
    case Mode::minprev_grid: {
      design["setting"] = to_string(c.setting);
      design["N_list"] = c.N_list;
      design["m_list"] = c.m_list;
      if (c.setting == Setting::E) design["sigma_E"] = c.sigma_E;
      std::vector<std::string> levels, transforms;
      for (auto l : c.pi_min_levels) levels.emplace_back(to_string(l));
      for (auto t : c.transforms) transforms.emplace_back(to_string(t));
      interval["pi_min_levels"] = levels;
      interval["transforms"] = transforms;
      engine["runs"] = c.runs;
      if (resampling) engine["B"] = c.B;
      break;
    }
  }
  Json formats = c.formats;
  return Json{{"mode", to_string(c.mode)},
              {"design", design},
              {"interval", interval},
              {"engine", engine},
              {"output", {{"directory", c.directory}, {"formats", formats}}}};
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Identity of the campaign: the resolved configuration without the settings
// that cannot change any result (thread count, output location).
inline std::string config_hash(const Config& c) {
  Json j = resolved_json(c);
  j.erase("output");
  j["engine"].erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace pwerpi
