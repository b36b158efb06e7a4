#pragma once

// CSV tables for simulation campaigns. Numbers are written with 17
// significant digits so files round-trip exactly.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pwerpi/config.hpp"
#include "pwerpi/sim.hpp"

namespace pwerpi {

inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_num(long x) { return std::to_string(x); }
inline std::string fmt_num(int x) { return std::to_string(x); }

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    rows_.push_back(std::move(r));
  }

  std::string str() const {
    std::string out = join(header_);
    for (const auto& r : rows_) out += join(r);
    return out;
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class T>
  static std::string cell(const T& x) {
    return fmt_num(x);
  }
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s + "\n";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string prevalence_label(const SimScenario& s) {
  if (s.prevalence != PrevalenceScheme::explicit_vector) return to_string(s.prevalence);
  std::string out;
  for (std::size_t k = 0; k < s.explicit_pi.size(); ++k) out += (k ? ";" : "") + fmt_num(s.explicit_pi[k]);
  return out;
}

inline CsvTable scenario_table() {
  return CsvTable({"N", "setting", "m", "prevalence", "treatment", "transform", "pi_min", "runs", "failures",
                   "coverage", "mean_length_e3", "sd_length_e3", "median_length_e3", "mean_true_pwer"});
}

inline void add_scenario_row(CsvTable& t, const SimResult& r) {
  const auto& s = r.scenario;
  t.row(s.N, to_string(s.setting), s.m, prevalence_label(s), to_string(s.treatment), to_string(s.transform),
        s.pi_min, s.runs, r.failures, r.coverage, 1e3 * r.length.mean, 1e3 * r.length.sd, 1e3 * r.length.median,
        r.mean_true_pwer);
}

inline std::string runs_csv(const SimResult& r) {
  CsvTable t({"run", "failed", "true_pwer", "lower", "upper", "covered", "length", "gamma", "gamma_true", "c_hat",
              "achieved", "rejected"});
  for (const auto& x : r.records) {
    if (x.failed) {
      const double nan = std::nan("");
      t.row(x.run, true, nan, nan, nan, false, nan, nan, nan, nan, nan, x.rejected);
    } else {
      t.row(x.run, false, x.true_pwer, x.lower, x.upper, x.covered, x.length, x.gamma, x.gamma_true, x.c_hat,
            x.achieved, x.rejected);
    }
  }
  return t.str();
}

struct StudyTables {
  std::string studies, summary, figure;
};

inline StudyTables study_tables(const std::vector<StudyDistribution>& dists) {
  CsvTable studies({"N", "study", "coverage", "mean_length_e3", "failures", "prevalences"});
  CsvTable summary({"N", "setting", "m", "studies", "runs", "mean", "sd", "min", "q1", "median", "q3", "max",
                    "mean_length_e3"});
  CsvTable figure({"N", "study", "mean_length_e3"});
  for (const auto& d : dists) {
    for (const auto& row : d.studies) {
      std::string pi;
      for (std::size_t k = 0; k < row.prevalences.size(); ++k) pi += (k ? ";" : "") + fmt_num(row.prevalences[k]);
      studies.row(d.base.N, row.study, row.coverage, 1e3 * row.mean_length, row.failures, pi);
      figure.row(d.base.N, row.study, 1e3 * row.mean_length);
    }
    const auto& s = d.summary;
    summary.row(d.base.N, to_string(d.base.setting), d.base.m, static_cast<long>(d.studies.size()), d.base.runs,
                s.mean, s.sd, s.min, s.q1, s.median, s.q3, s.max, 1e3 * s.mean_length);
  }
  return {studies.str(), summary.str(), figure.str()};
}

struct GridTables {
  std::string coverage, lengths;
};

inline GridTables grid_tables(const std::vector<GridCell>& cells) {
  CsvTable cov({"N", "m", "pi_min_level", "pi_min", "transform", "runs", "failures", "coverage"});
  CsvTable len({"N", "m", "pi_min_level", "pi_min", "transform", "mean_length_e3", "sd_length_e3"});
  for (const auto& c : cells) {
    cov.row(c.N, c.m, to_string(c.level), c.pi_min, to_string(c.transform), c.result.scenario.runs,
            c.result.failures, c.result.coverage);
    len.row(c.N, c.m, to_string(c.level), c.pi_min, to_string(c.transform), 1e3 * c.result.length.mean,
            1e3 * c.result.length.sd);
  }
  return {cov.str(), len.str()};
}

}  // namespace pwerpi
