#pragma once

// Coverage simulations of the prediction interval: scenario catalog, the
// per-run pipeline (sample counts, estimate, calibrate, interval, truth) and
// the aggregations behind the coverage/length tables.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pwerpi/boot.hpp"
#include "pwerpi/design.hpp"
#include "pwerpi/errors.hpp"
#include "pwerpi/pwer.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

enum class Setting { A, B, C, D_satterthwaite, D_bootstrap, E };
enum class PrevalenceScheme { equal, one_large, one_small, random_biomarker, explicit_vector };

struct SimScenario {
  long N = 250;
  int m = 2;
  Setting setting = Setting::A;
  PrevalenceScheme prevalence = PrevalenceScheme::equal;
  std::vector<double> explicit_pi;  // explicit_vector only
  TreatmentScheme treatment = TreatmentScheme::pairwise_different;
  double alpha = 0.025;
  double alpha_prime = 0.05;
  long runs = 2000;
  long B = 2000;
  double pi_min = 0.0;
  Transform transform = Transform::none;
  std::uint64_t master_seed = 1;
  double cdf_tol = 1e-6;
  double solver_tol = 1e-8;
  double sigma_E = 0.5;
  double max_failure_rate = 0.01;
};

// pi_{I} of the small-intersection scheme: 1/16 of an equal stratum share.
inline double one_small_prevalence(int m) { return 1.0 / (std::ldexp(1.0, m + 4) - 16.0); }

// Minimal-prevalence levels: a quarter and a half of an equal stratum share.
inline double pi_min_quarter(int m) { return 1.0 / (std::ldexp(1.0, m + 2) - 4.0); }
inline double pi_min_half(int m) { return 1.0 / (std::ldexp(1.0, m + 1) - 2.0); }

// Prevalences from independent biomarker probabilities p_1..p_m: each
// stratum gets prod_{j in J} p_j prod_{k not in J} (1 - p_k), renormalized
// over the nonempty strata.
inline PrevalenceVector biomarker_prevalences(std::span<const double> p) {
  const int m = static_cast<int>(p.size());
  const auto strata = enumerate_strata(m);
  std::vector<double> w(strata.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < strata.size(); ++k) {
    double v = 1.0;
    for (int i = 0; i < m; ++i) v *= strata[k].contains(i) ? p[i] : 1.0 - p[i];
    w[k] = v;
    sum += v;
  }
  if (!(sum > 0.0)) throw DomainError("biomarker probabilities leave every stratum empty");
  for (double& v : w) v /= sum;
  return make_prevalences(std::move(w));
}

inline PrevalenceVector generate_random_study(int m, RngStream& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> p(m);
  while (true) {
    for (double& v : p) v = unif(rng);
    if (std::any_of(p.begin(), p.end(), [](double v) { return v > 1e-12; })) return biomarker_prevalences(p);
  }
}

inline PrevalenceVector scenario_prevalences(const SimScenario& s) {
  const int n_s = stratum_count(s.m);
  std::vector<double> pi(n_s, 1.0 / n_s);
  switch (s.prevalence) {
    case PrevalenceScheme::equal: break;
    case PrevalenceScheme::one_large:
    case PrevalenceScheme::one_small: {
      const double top = s.prevalence == PrevalenceScheme::one_large ? 0.5 : one_small_prevalence(s.m);
      std::fill(pi.begin(), pi.end(), (1.0 - top) / (n_s - 1));
      pi.back() = top;  // the full intersection is last in canonical order
      break;
    }
    case PrevalenceScheme::random_biomarker: {
      RngStream rng = derive_stream(s.master_seed, ~0ULL);
      return generate_random_study(s.m, rng);
    }
    case PrevalenceScheme::explicit_vector:
      if (static_cast<int>(s.explicit_pi.size()) != n_s)
        throw ConfigError("explicit prevalence vector needs " + std::to_string(n_s) + " entries");
      return make_prevalences(s.explicit_pi);
  }
  return make_prevalences(std::move(pi));
}

inline void validate_scenario(const SimScenario& s) {
  enumerate_strata(s.m);
  if (s.N < 1) throw ConfigError("N must be positive");
  if (s.runs < 1) throw ConfigError("runs must be positive");
  if (!(s.alpha > 0.0 && s.alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
  if (!(s.alpha_prime > 0.0 && s.alpha_prime < 1.0)) throw ConfigError("alpha_prime must lie in (0, 1)");
  if (s.setting == Setting::E && s.m != 2) throw ConfigError("setting E requires m = 2");
  if ((s.setting == Setting::D_bootstrap || s.setting == Setting::D_satterthwaite || s.setting == Setting::E) &&
      static_cast<double>(s.B) * s.alpha < 20.0)
    throw ConfigError("B * alpha must be at least 20 for the resampling settings");
  if (s.pi_min < 0.0) throw ConfigError("pi_min must be nonnegative");
  if (s.transform == Transform::floor && s.pi_min >= 1.0 / stratum_count(s.m))
    throw ConfigError("floor transform needs pi_min < 1/n_S");
}

// ---------------------------------------------------------------------------

struct RunRecord {
  long run = 0;
  bool failed = false;
  std::string failure;
  double true_pwer = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool covered = false;
  double length = 0.0;
  double gamma = 0.0;       // plug-in at the estimated prevalences
  double gamma_true = 0.0;  // same gradient, covariance at the true prevalences
  double c_hat = 0.0;
  double achieved = 0.0;
  long rejected = 0;
};

struct LengthSummary {
  double mean = 0.0, sd = 0.0, min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct SimResult {
  SimScenario scenario;
  std::vector<RunRecord> records;
  long failures = 0;
  double coverage = 0.0;
  double mean_true_pwer = 0.0;
  LengthSummary length;
};

// Sample quantile with linear interpolation between order statistics.
inline double quantile_type7(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline LengthSummary summarize(const std::vector<double>& v) {
  LengthSummary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.q1 = quantile_type7(v, 0.25);
  s.median = quantile_type7(v, 0.5);
  s.q3 = quantile_type7(v, 0.75);
  return s;
}

// Work pool over [0, n). Each index is handled exactly once; results must be
// written to index-addressed storage so the outcome is schedule independent.
template <class F>
void parallel_for(long n, int threads, F&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, std::max(1L, n)));
  if (threads == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (long i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

inline std::vector<double> draw_stratum_variances(std::size_t n, RngStream& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = 1.0 - unif(rng);  // (0, 1]
  return v;
}

// Replaces every occupied cell's variance by a sample variance
// sigma^2 chi^2_{n-1} / (n-1).
inline void draw_sample_variances(Design& d, RngStream& rng) {
  for (std::size_t k = 0; k < d.cells.size(); ++k)
    for (auto& c : d.cells[k]) {
      if (c.n == 0) continue;
      if (c.n < 2)
        throw InsufficientSampleError("cell " + d.strata[k].label() + " has a single patient; no sample variance");
      const double df = static_cast<double>(c.n - 1);
      c.variance = c.variance * std::chi_squared_distribution<double>(df)(rng) / df;
    }
}

struct Prepared {
  PrevalenceVector pi_true;
  PrevalenceVector pi_true_tilde;
};

inline RunRecord run_once(const SimScenario& s, const Prepared& prep, long run) {
  RunRecord rec;
  rec.run = run;
  RngStream rng = derive_stream(s.master_seed, static_cast<std::uint64_t>(run));
  const auto counts = sample_strata_counts(prep.pi_true, s.N, rng);
  const auto pi_hat = estimate_prevalences(counts, s.N);
  const auto pi_hat_tilde = apply_transform(pi_hat, s.transform, s.pi_min);
  const auto factors = transform_gradient_factor(pi_hat, s.pi_min, s.transform);
  const std::size_t n_s = counts.size();

  std::vector<double> gradient;
  SolverOptions opt;
  opt.cdf_tol = s.cdf_tol;
  opt.solver_tol = s.solver_tol;

  switch (s.setting) {
    case Setting::A:
    case Setting::B:
    case Setting::C: {
      std::vector<double> var;
      if (s.setting == Setting::B) var = draw_stratum_variances(n_s, rng);
      const auto mode = s.setting == Setting::A   ? VarianceMode::known_homogeneous
                        : s.setting == Setting::B ? VarianceMode::known_heterogeneous
                                                  : VarianceMode::unknown_homogeneous;
      const Design d = make_design(s.m, s.treatment, counts, var, mode);
      const TestModel model = build_test_model(d);
      const auto c_hat = solve_critical_values(pi_hat_tilde, model, s.alpha, opt, rng);
      const auto fwer = fwer_vector(c_hat.c, model, s.cdf_tol, rng);
      gradient.resize(n_s);
      rec.true_pwer = 0.0;
      for (std::size_t k = 0; k < n_s; ++k) {
        gradient[k] = -factors[k] * fwer[k];
        rec.true_pwer += prep.pi_true_tilde[k] * fwer[k];
      }
      rec.c_hat = c_hat.common();
      rec.achieved = c_hat.achieved;
      break;
    }
    case Setting::D_satterthwaite:
    case Setting::D_bootstrap: {
      Design d = make_design(s.m, s.treatment, counts, draw_stratum_variances(n_s, rng),
                             VarianceMode::unknown_heterogeneous);
      draw_sample_variances(d, rng);
      const auto null = bootstrap_null_D(d, s.B, rng);
      const FwerCurve curve(null, d.strata);
      CriticalValues c_hat;
      if (s.setting == Setting::D_bootstrap) {
        c_hat = solve_critical_empirical(curve, pi_hat_tilde, s.alpha);
      } else {
        c_hat = solve_critical_values(pi_hat_tilde, satterthwaite_model(d), s.alpha, opt, rng);
      }
      const auto ev = empirical_gradient_and_true_pwer(curve, c_hat, prep.pi_true_tilde, factors);
      gradient = ev.gradient;
      rec.true_pwer = ev.true_pwer;
      rec.c_hat = c_hat.common();
      rec.achieved = c_hat.achieved;
      break;
    }
    case Setting::E: {
      const Design d = make_design(s.m, s.treatment, counts, std::vector<double>(n_s, s.sigma_E * s.sigma_E),
                                   VarianceMode::unknown_homogeneous);
      population_variances(d);  // observed study must have nonempty population arms
      const auto study = generate_setting_E_study(prep.pi_true, d, s.sigma_E, rng);
      const auto null = bootstrap_null_E(d, pi_hat, study.observed_effects, study.pooled_variance, s.B, rng);
      const FwerCurve curve(null, d.strata);
      const auto c_hat = solve_critical_empirical(curve, pi_hat_tilde, s.alpha);
      const auto ev = empirical_gradient_and_true_pwer(curve, c_hat, prep.pi_true_tilde, factors);
      gradient = ev.gradient;
      rec.true_pwer = ev.true_pwer;
      rec.c_hat = c_hat.common();
      rec.achieved = c_hat.achieved;
      rec.rejected = null.rejected;
      break;
    }
  }

  rec.gamma = delta_gamma(pi_hat, gradient);
  rec.gamma_true = delta_gamma(prep.pi_true, gradient);
  const auto interval = prediction_interval(s.alpha, s.alpha_prime, rec.gamma, s.N);
  rec.lower = interval.lower();
  rec.upper = interval.upper();
  rec.length = interval.length();
  // The calibration residual of the exact engine is allowed as slack.
  const bool exact = s.setting == Setting::A || s.setting == Setting::B || s.setting == Setting::C;
  rec.covered = interval.contains(rec.true_pwer, exact ? s.solver_tol : 0.0);
  return rec;
}

}  // namespace detail

inline SimResult aggregate(const SimScenario& s, std::vector<RunRecord> records) {
  SimResult r;
  r.scenario = s;
  r.records = std::move(records);
  std::vector<double> lengths;
  long covered = 0;
  double truth = 0.0;
  for (const auto& rec : r.records) {
    if (rec.failed) {
      ++r.failures;
      continue;
    }
    lengths.push_back(rec.length);
    covered += rec.covered ? 1 : 0;
    truth += rec.true_pwer;
  }
  const double ok = static_cast<double>(lengths.size());
  r.coverage = ok > 0 ? covered / ok : std::nan("");
  r.mean_true_pwer = ok > 0 ? truth / ok : std::nan("");
  r.length = summarize(lengths);
  return r;
}

// Runs every simulation replicate of a scenario. Replicate i always uses the
// stream derived from (master_seed, i), so results do not depend on `threads`.
inline SimResult run_scenario(const SimScenario& s, int threads = 1) {
  validate_scenario(s);
  detail::Prepared prep{scenario_prevalences(s), {}};
  prep.pi_true_tilde = apply_transform(prep.pi_true, s.transform, s.pi_min);
  std::vector<RunRecord> records(s.runs);
  parallel_for(s.runs, threads, [&](long i) {
    try {
      records[i] = detail::run_once(s, prep, i);
    } catch (const InsufficientSampleError& e) {
      records[i] = RunRecord{i, true, e.what()};
    } catch (const NumericalError& e) {
      records[i] = RunRecord{i, true, e.what()};
    }
  });
  auto result = aggregate(s, std::move(records));
  if (static_cast<double>(result.failures) > s.max_failure_rate * static_cast<double>(s.runs)) {
    std::string first;
    for (const auto& rec : result.records)
      if (rec.failed) {
        first = rec.failure;
        break;
      }
    throw NumericalError(std::to_string(result.failures) + " of " + std::to_string(s.runs) +
                         " runs failed (first: " + first + ")");
  }
  return result;
}

// ---------------------------------------------------------------------------

struct StudyRow {
  long study = 0;
  std::vector<double> prevalences;
  double coverage = 0.0;
  double mean_length = 0.0;
  long failures = 0;
};

struct CoverageSummary {
  double mean = 0.0, sd = 0.0, min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double mean_length = 0.0;
};

struct StudyDistribution {
  SimScenario base;
  std::vector<StudyRow> studies;
  CoverageSummary summary;
};

// Coverage over `studies` random biomarker prevalence vectors, each simulated
// with `base.runs` replicates.
inline StudyDistribution run_study_distribution(SimScenario base, long studies, int threads = 1) {
  if (studies < 1) throw ConfigError("studies must be at least 1");
  StudyDistribution out;
  out.base = base;
  std::vector<double> cov, len;
  for (long j = 0; j < studies; ++j) {
    RngStream prev_rng = derive_stream(base.master_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(j));
    SimScenario s = base;
    s.prevalence = PrevalenceScheme::explicit_vector;
    s.explicit_pi = generate_random_study(base.m, prev_rng).values;
    s.master_seed = derive_seed(base.master_seed, static_cast<std::uint64_t>(j));
    const auto r = run_scenario(s, threads);
    out.studies.push_back({j, s.explicit_pi, r.coverage, r.length.mean, r.failures});
    cov.push_back(r.coverage);
    len.push_back(r.length.mean);
  }
  const auto c = summarize(cov);
  out.summary = {c.mean, c.sd, c.min, c.q1, c.median, c.q3, c.max, summarize(len).mean};
  return out;
}

enum class PiMinLevel { zero, quarter, half };

inline double pi_min_value(PiMinLevel level, int m) {
  switch (level) {
    case PiMinLevel::quarter: return pi_min_quarter(m);
    case PiMinLevel::half: return pi_min_half(m);
    case PiMinLevel::zero: break;
  }
  return 0.0;
}

struct GridCell {
  long N = 0;
  int m = 0;
  PiMinLevel level = PiMinLevel::zero;
  double pi_min = 0.0;
  Transform transform = Transform::none;
  SimResult result;
};

// Coverage and mean length under both minimal-prevalence transformations on
// the small-intersection prevalence scheme. All cells of one (N, m) pair
// share the master seed, so they see identical strata counts.
inline std::vector<GridCell> run_min_prevalence_grid(SimScenario base, const std::vector<long>& N_list,
                                                     const std::vector<int>& m_list,
                                                     const std::vector<PiMinLevel>& levels,
                                                     const std::vector<Transform>& transforms, int threads = 1) {
  base.prevalence = PrevalenceScheme::one_small;
  std::vector<GridCell> out;
  for (long N : N_list)
    for (int m : m_list)
      for (PiMinLevel level : levels)
        for (Transform t : transforms) {
          SimScenario s = base;
          s.N = N;
          s.m = m;
          s.transform = t;
          s.pi_min = pi_min_value(level, m);
          out.push_back({N, m, level, s.pi_min, t, run_scenario(s, threads)});
        }
  return out;
}

}  // namespace pwerpi
