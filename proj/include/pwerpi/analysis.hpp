#pragma once

// Single-study workflow: observed strata counts in, calibrated critical value
// and prediction interval for the true PWER out.

#include <cstdio>
#include <string>
#include <vector>

#include "pwerpi/boot.hpp"
#include "pwerpi/config.hpp"
#include "pwerpi/design.hpp"
#include "pwerpi/pwer.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

struct AnalysisReport {
  int m = 0;
  long N = 0;
  std::vector<std::string> strata;
  std::vector<long> counts;
  PrevalenceVector pi_hat;
  PrevalenceVector pi_tilde;
  Transform transform = Transform::none;
  std::string reference;  // "normal", "t", "bootstrap"
  double df = 0.0;
  CriticalValues c_hat;
  std::vector<double> fwer;
  std::vector<double> gradient;
  double gamma = 0.0;
  PredictionInterval interval;
};

inline AnalysisReport analyze(const Config& cfg) {
  AnalysisReport r;
  r.m = cfg.m;
  r.N = cfg.N;
  r.counts = cfg.counts;
  r.transform = cfg.transform;
  const Design d = make_design(cfg.m, cfg.treatment, cfg.counts, cfg.variances, cfg.variance_mode);
  validate_design(d);
  for (const auto& s : d.strata) r.strata.push_back(s.label());
  r.pi_hat = estimate_prevalences(cfg.counts, cfg.N);
  r.pi_tilde = apply_transform(r.pi_hat, cfg.transform, cfg.pi_min);
  const auto factors = transform_gradient_factor(r.pi_hat, cfg.pi_min, cfg.transform);

  RngStream rng = derive_stream(cfg.master_seed, 0);
  SolverOptions opt;
  opt.cdf_tol = cfg.cdf_tol;
  opt.solver_tol = cfg.solver_tol;

  if (cfg.variance_mode == VarianceMode::unknown_heterogeneous && cfg.method == AnalysisMethod::bootstrap) {
    const FwerCurve curve(bootstrap_null_D(d, cfg.B, rng), d.strata);
    r.reference = "bootstrap";
    r.c_hat = solve_critical_empirical(curve, r.pi_tilde, cfg.alpha);
    const auto ev = empirical_gradient_and_true_pwer(curve, r.c_hat, r.pi_tilde, factors);
    r.fwer = ev.fwer;
    r.gradient = ev.gradient;
  } else {
    const TestModel model =
        cfg.variance_mode == VarianceMode::unknown_heterogeneous ? satterthwaite_model(d) : build_test_model(d);
    r.reference = model.kind == ModelKind::t ? "t" : "normal";
    r.df = model.df;
    r.c_hat = solve_critical_values(r.pi_tilde, model, cfg.alpha, opt, rng);
    r.fwer = fwer_vector(r.c_hat.c, model, cfg.cdf_tol, rng);
    r.gradient.resize(r.fwer.size());
    for (std::size_t k = 0; k < r.fwer.size(); ++k) r.gradient[k] = -factors[k] * r.fwer[k];
  }
  r.gamma = delta_gamma(r.pi_hat, r.gradient);
  r.interval = prediction_interval(cfg.alpha, cfg.alpha_prime, r.gamma, cfg.N);
  return r;
}

inline Json to_json(const AnalysisReport& r) {
  Json strata = Json::array();
  for (std::size_t k = 0; k < r.strata.size(); ++k)
    strata.push_back({{"stratum", r.strata[k]},
                      {"count", r.counts[k]},
                      {"pi_hat", r.pi_hat[k]},
                      {"pi_tilde", r.pi_tilde[k]},
                      {"fwer", r.fwer[k]},
                      {"gradient", r.gradient[k]}});
  Json ref = {{"kind", r.reference}};
  if (r.reference == "t") ref["df"] = r.df;
  return Json{{"m", r.m},
              {"N", r.N},
              {"transform", to_string(r.transform)},
              {"reference", ref},
              {"strata", strata},
              {"critical_values", r.c_hat.c},
              {"achieved_pwer", r.c_hat.achieved},
              {"solver_iterations", r.c_hat.iterations},
              {"gamma", r.gamma},
              {"interval",
               {{"center", r.interval.center},
                {"half_width", r.interval.half_width},
                {"lower", r.interval.lower()},
                {"upper", r.interval.upper()},
                {"alpha_prime", r.interval.alpha_prime}}}};
}

inline std::string to_text(const AnalysisReport& r) {
  std::string out;
  char buf[256];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  line("PWER analysis: m = %d, N = %ld, reference = %s", r.m, r.N, r.reference.c_str());
  if (r.reference == "t") line(" (df = %.2f)", r.df);
  out += "\n\n";
  line("%-12s %7s %9s %9s %9s %11s\n", "stratum", "n", "pi_hat", "pi_used", "FWER_J", "gradient");
  for (std::size_t k = 0; k < r.strata.size(); ++k)
    line("%-12s %7ld %9.4f %9.4f %9.5f %11.5f\n", r.strata[k].c_str(), r.counts[k], r.pi_hat[k], r.pi_tilde[k],
         r.fwer[k], r.gradient[k]);
  out += "\n";
  line("transform           %s\n", to_string(r.transform));
  line("critical value      %.5f\n", r.c_hat.common());
  line("achieved PWER       %.6g\n", r.c_hat.achieved);
  line("gamma               %.5f\n", r.gamma);
  line("%.0f%% prediction interval for the true PWER: [%.6f, %.6f] (length %.3e)\n",
       100.0 * (1.0 - r.interval.alpha_prime), r.interval.lower(), r.interval.upper(), r.interval.length());
  return out;
}

}  // namespace pwerpi
