#pragma once

// Test-statistic correlation structure, PWER evaluation and calibration, and
// the delta-method prediction interval for the true PWER.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pwerpi/design.hpp"
#include "pwerpi/errors.hpp"
#include "pwerpi/mvprob.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

enum class ModelKind { normal, t };

// Joint null distribution of the population test statistics.
struct TestModel {
  ModelKind kind = ModelKind::normal;
  double df = 0.0;  // t only
  std::vector<Stratum> strata;
  CorrelationMatrix full;
  std::vector<CorrelationMatrix> per_stratum;  // parallel to strata

  int m() const { return full.dim(); }
};

// V_i: variance of the pooled treatment-minus-control mean difference in
// population i.
inline std::vector<double> population_variances(const Design& d) {
  std::vector<double> v(d.m, 0.0);
  for (int i = 0; i < d.m; ++i) {
    const int t = d.treatment(i);
    const long n_t = d.population_arm_size(i, t);
    const long n_c = d.population_arm_size(i, kControl);
    if (n_t == 0 || n_c == 0)
      throw InsufficientSampleError("population " + std::to_string(i + 1) + " has an empty " +
                                    (n_t == 0 ? "treatment" : "control") + " arm");
    for (std::size_t k = 0; k < d.strata.size(); ++k) {
      if (!d.strata[k].contains(i)) continue;
      const auto& ct = d.cells[k][d.arm_index(k, t)];
      const auto& cc = d.cells[k][d.arm_index(k, kControl)];
      v[i] += ct.n * ct.variance / (static_cast<double>(n_t) * n_t) +
              cc.n * cc.variance / (static_cast<double>(n_c) * n_c);
    }
  }
  return v;
}

// Correlation of the population statistics: shared control patients always
// contribute, shared treatment patients only when both populations test the
// same treatment.
inline Eigen::MatrixXd population_correlation(const Design& d) {
  const auto v = population_variances(d);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d.m, d.m);
  for (int i = 0; i < d.m; ++i) {
    for (int j = i + 1; j < d.m; ++j) {
      const int ti = d.treatment(i), tj = d.treatment(j);
      const double nic = d.population_arm_size(i, kControl), njc = d.population_arm_size(j, kControl);
      const double nit = d.population_arm_size(i, ti), njt = d.population_arm_size(j, ti);
      double cov = 0.0;
      for (std::size_t k = 0; k < d.strata.size(); ++k) {
        if (!d.strata[k].contains(i) || !d.strata[k].contains(j)) continue;
        if (ti == tj) {
          const auto& ct = d.cells[k][d.arm_index(k, ti)];
          cov += ct.n * ct.variance / (nit * njt);
        }
        const auto& cc = d.cells[k][d.arm_index(k, kControl)];
        cov += cc.n * cc.variance / (nic * njc);
      }
      s(i, j) = s(j, i) = cov / std::sqrt(v[i] * v[j]);
    }
  }
  return s;
}

// Number of (stratum, arm) cells with at least one patient.
inline int occupied_cells(const Design& d) {
  int s = 0;
  for (const auto& arms : d.cells)
    for (const auto& c : arms) s += c.n > 0 ? 1 : 0;
  return s;
}

inline TestModel make_test_model(const Eigen::MatrixXd& corr, std::vector<Stratum> strata, ModelKind kind,
                                 double df = 0.0) {
  if (kind == ModelKind::t && !(df >= 1.0)) throw InsufficientSampleError("t model needs at least 1 degree of freedom");
  CorrelationMatrix full(corr);
  std::vector<CorrelationMatrix> sub;
  sub.reserve(strata.size());
  for (Stratum s : strata) {
    const auto idx = s.members();
    sub.push_back(full.submatrix(idx));
  }
  return TestModel{kind, kind == ModelKind::t ? df : 0.0, std::move(strata), std::move(full), std::move(sub)};
}

inline TestModel build_test_model(const Design& d) {
  if (d.variance_mode == VarianceMode::unknown_heterogeneous)
    throw BootstrapRequiredError("unknown heterogeneous variances have no closed-form null distribution; use the bootstrap engine");
  const auto corr = population_correlation(d);
  if (d.variance_mode == VarianceMode::unknown_homogeneous) {
    const double df = static_cast<double>(d.N - occupied_cells(d));
    if (df < 1.0) throw InsufficientSampleError("no residual degrees of freedom (N - s < 1)");
    return make_test_model(corr, d.strata, ModelKind::t, df);
  }
  return make_test_model(corr, d.strata, ModelKind::normal);
}

// Z_i from per-cell sample means (parallel to design.cells).
inline std::vector<double> test_statistics(const Design& d, const std::vector<std::vector<double>>& means) {
  const auto v = population_variances(d);
  std::vector<double> z(d.m);
  for (int i = 0; i < d.m; ++i) {
    const int t = d.treatment(i);
    const double n_t = d.population_arm_size(i, t), n_c = d.population_arm_size(i, kControl);
    double mt = 0.0, mc = 0.0;
    for (std::size_t k = 0; k < d.strata.size(); ++k) {
      if (!d.strata[k].contains(i)) continue;
      const int at = d.arm_index(k, t), ac = d.arm_index(k, kControl);
      if (d.cells[k][at].n > 0) mt += d.cells[k][at].n * means[k][at];
      if (d.cells[k][ac].n > 0) mc += d.cells[k][ac].n * means[k][ac];
    }
    z[i] = (mt / n_t - mc / n_c) / std::sqrt(v[i]);
  }
  return z;
}

// ---------------------------------------------------------------------------

struct SolverOptions {
  double solver_tol = 1e-8;  // on the PWER scale
  double cdf_tol = 1e-6;
  double verify_tol = 1e-7;
  double bracket_width = 1e-12;
  int max_iterations = 200;
};

struct CriticalValues {
  std::vector<double> c;
  double alpha = 0.0;
  double achieved = 0.0;
  int iterations = 0;

  double common() const { return c.empty() ? 0.0 : c.front(); }
};

// F_J(c_J) for stratum k.
inline ProbResult stratum_cdf(const TestModel& model, std::size_t k, std::span<const double> c, double tol,
                              RngStream& rng) {
  const auto members = model.strata[k].members();
  std::vector<double> cj;
  cj.reserve(members.size());
  for (int i : members) cj.push_back(c[i]);
  return model.kind == ModelKind::t ? mvt_cdf(cj, model.per_stratum[k], model.df, tol, rng)
                                    : mvn_cdf(cj, model.per_stratum[k], tol, rng);
}

// FWER_J = 1 - F_J(c_J) for every stratum.
inline std::vector<double> fwer_vector(std::span<const double> c, const TestModel& model, double tol, RngStream& rng) {
  std::vector<double> out(model.strata.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 1.0 - stratum_cdf(model, k, c, tol, rng).value;
  return out;
}

inline void check_dimensions(std::span<const double> c, const PrevalenceVector& pi, const TestModel& model) {
  if (static_cast<int>(c.size()) != model.m()) throw DomainError("critical value vector has wrong length");
  if (pi.size() != model.strata.size()) throw DomainError("prevalence vector has wrong length");
}

// Sum over strata of pi_J * FWER_J(c); strata with zero weight are skipped.
inline double pwer_value(std::span<const double> c, const PrevalenceVector& pi, const TestModel& model, double tol,
                         RngStream& rng) {
  check_dimensions(c, pi, model);
  double sum = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] == 0.0) continue;
    sum += pi[k] * (1.0 - stratum_cdf(model, k, c, tol, rng).value);
  }
  return sum;
}

inline double pwer_value(double c, const PrevalenceVector& pi, const TestModel& model, double tol, RngStream& rng) {
  const std::vector<double> cv(model.m(), c);
  return pwer_value(cv, pi, model, tol, rng);
}

// Equal critical values c* with PWER(c* 1) = alpha, by Illinois-safeguarded
// regula falsi on [z_alpha, z_{alpha/2^m}]. Every PWER evaluation inside one
// solve reuses the same random stream state, so a randomized CDF engine
// presents a deterministic function to the root finder.
inline CriticalValues solve_critical_values(const PrevalenceVector& pi, const TestModel& model, double alpha,
                                            const SolverOptions& opt, RngStream& rng) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("alpha must lie in (0, 0.5)");
  if (pi.size() != model.strata.size()) throw DomainError("prevalence vector has wrong length");
  if (std::none_of(pi.values.begin(), pi.values.end(), [](double v) { return v > 0.0; }))
    throw DomainError("prevalence vector has no positive weight");

  const RngStream frozen = rng;
  rng.discard(1);
  auto f = [&](double c, double tol) {
    RngStream r = frozen;
    return pwer_value(c, pi, model, tol, r) - alpha;
  };

  const double lo = std_normal_quantile(1.0 - alpha);
  const double hi = std_normal_quantile(1.0 - alpha / std::ldexp(1.0, model.m()));
  double a = lo, b = hi;
  double fa = f(a, opt.cdf_tol), fb = f(b, opt.cdf_tol);
  CriticalValues out{{}, alpha, 0.0, 0};
  auto finish = [&](double c) {
    out.c.assign(model.m(), c);
    out.achieved = f(c, std::min(opt.cdf_tol, opt.verify_tol)) + alpha;
    return out;
  };
  if (std::abs(fa) <= opt.solver_tol) return finish(a);
  if (std::abs(fb) <= opt.solver_tol) return finish(b);
  if (fa < 0.0 || fb > 0.0)
    throw NumericalError("critical value bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "] does not contain the root: PWER-alpha = " + std::to_string(fa) + ", " + std::to_string(fb));

  int side = 0;
  double best = a, fbest = fa;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    double x = (a * fb - b * fa) / (fb - fa);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    const double fx = f(x, opt.cdf_tol);
    if (std::abs(fx) < std::abs(fbest)) {
      best = x;
      fbest = fx;
    }
    if (std::abs(fx) <= opt.solver_tol) break;
    if (fx > 0.0) {
      a = x;
      fa = fx;
      if (side == 1) fb *= 0.5;
      side = 1;
    } else {
      b = x;
      fb = fx;
      if (side == -1) fa *= 0.5;
      side = -1;
    }
    if (b - a <= opt.bracket_width) break;
  }
  return finish(best);
}

// Gradient of the true PWER in the prevalences: factor_J * (F_J(c_J) - 1).
inline std::vector<double> gradient_pwer(std::span<const double> c, const TestModel& model,
                                         std::span<const double> factors, double tol, RngStream& rng) {
  if (factors.size() != model.strata.size()) throw DomainError("gradient factors have wrong length");
  auto g = fwer_vector(c, model, tol, rng);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = -factors[k] * g[k];
  return g;
}

// R = diag(pi) - pi pi^T, the covariance of sqrt(N)(pi_hat - pi).
inline Eigen::MatrixXd multinomial_covariance(const PrevalenceVector& pi) {
  const Eigen::Map<const Eigen::VectorXd> p(pi.values.data(), static_cast<Eigen::Index>(pi.size()));
  Eigen::MatrixXd r = -p * p.transpose();
  r.diagonal() += p;
  return r;
}

// gamma = sqrt(g^T R g). Computed as the pi-weighted variance of g after
// subtracting g_0, which R ignores.
inline double delta_gamma(const PrevalenceVector& pi, std::span<const double> gradient) {
  if (gradient.size() != pi.size()) throw DomainError("gradient and prevalence vector differ in length");
  if (gradient.empty()) return 0.0;
  const double ref = gradient[0];
  double mean = 0.0, second = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    const double d = gradient[k] - ref;
    mean += pi[k] * d;
    second += pi[k] * d * d;
  }
  const double q = second - mean * mean;
  if (q < -1e-14) throw NumericalError("negative delta-method variance " + std::to_string(q));
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

struct PredictionInterval {
  double center = 0.0;
  double half_width = 0.0;
  double gamma = 0.0;
  double alpha_prime = 0.05;
  long N = 0;

  double lower() const { return center - half_width; }
  double upper() const { return center + half_width; }
  double length() const { return 2.0 * half_width; }
  bool contains(double x, double slack = 0.0) const { return x >= lower() - slack && x <= upper() + slack; }
};

inline PredictionInterval prediction_interval(double alpha, double alpha_prime, double gamma, long N) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(alpha_prime > 0.0 && alpha_prime < 1.0)) throw DomainError("alpha' must lie in (0,1)");
  if (N < 1) throw DomainError("N must be at least 1");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be nonnegative");
  const double z = std_normal_quantile(1.0 - alpha_prime / 2.0);
  return {alpha, z * gamma / std::sqrt(static_cast<double>(N)), gamma, alpha_prime, N};
}

// PWER of the estimated critical values under the true prevalences.
inline double true_pwer(const CriticalValues& c_hat, const PrevalenceVector& pi_true, const TestModel& model,
                        double tol, RngStream& rng) {
  return pwer_value(c_hat.c, pi_true, model, tol, rng);
}

}  // namespace pwerpi
