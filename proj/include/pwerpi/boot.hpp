#pragma once

// Resampling engines for the cases without a closed-form null distribution:
// unknown heterogeneous variances (parametric bootstrap of cell means, plus
// the Satterthwaite t baseline) and qualitative effect heterogeneity
// (multinomial redraw of strata sizes around null-projected effects).

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pwerpi/design.hpp"
#include "pwerpi/errors.hpp"
#include "pwerpi/pwer.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

enum class NullProvenance { parametric_D, projection_E };

// B x m matrix of resampled test statistics under the global null.
struct EmpiricalNull {
  long B = 0;
  int m = 0;
  std::vector<double> statistics;  // row-major
  NullProvenance provenance = NullProvenance::parametric_D;
  long rejected = 0;               // redrawn resamples (empty population arm)

  double operator()(long b, int i) const { return statistics[static_cast<std::size_t>(b) * m + i]; }
};

// Per stratum, the sorted resampled maxima max_{j in J} Z_j^(b). FWER_J(c) is
// the share of maxima strictly above c.
class FwerCurve {
 public:
  FwerCurve(const EmpiricalNull& null, std::vector<Stratum> strata) : strata_(std::move(strata)), B_(null.B) {
    maxima_.resize(strata_.size());
    for (std::size_t k = 0; k < strata_.size(); ++k) {
      const auto members = strata_[k].members();
      auto& mx = maxima_[k];
      mx.resize(null.B);
      for (long b = 0; b < null.B; ++b) {
        double v = -std::numeric_limits<double>::infinity();
        for (int i : members) v = std::max(v, null(b, i));
        mx[b] = v;
      }
      std::sort(mx.begin(), mx.end());
    }
  }

  std::size_t size() const noexcept { return strata_.size(); }
  long resamples() const noexcept { return B_; }
  const std::vector<double>& sorted_maxima(std::size_t k) const { return maxima_[k]; }

  double fwer(std::size_t k, double c) const {
    const auto& mx = maxima_[k];
    const auto above = mx.end() - std::upper_bound(mx.begin(), mx.end(), c);
    return static_cast<double>(above) / static_cast<double>(B_);
  }

  std::vector<double> fwer_all(double c) const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = fwer(k, c);
    return out;
  }

  double pwer(double c, const PrevalenceVector& pi) const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (pi[k] > 0.0) s += pi[k] * fwer(k, c);
    return s;
  }

 private:
  std::vector<Stratum> strata_;
  long B_ = 0;
  std::vector<std::vector<double>> maxima_;
};

// ---------------------------------------------------------------------------
// Satterthwaite

struct SatterthwaiteDf {
  std::vector<double> per_population;
  double shared = 0.0;  // minimum over populations
};

// Welch-Satterthwaite degrees of freedom of each V_i, using the cell variances
// stored in the design as the observed sample variances.
inline SatterthwaiteDf satterthwaite_df(const Design& d) {
  SatterthwaiteDf out;
  out.per_population.resize(d.m);
  for (int i = 0; i < d.m; ++i) {
    double num = 0.0, den = 0.0;
    for (int arm : {d.treatment(i), kControl}) {
      const double n_pop = static_cast<double>(d.population_arm_size(i, arm));
      if (n_pop == 0.0)
        throw InsufficientSampleError("population " + std::to_string(i + 1) + " has an empty arm");
      for (std::size_t k = 0; k < d.strata.size(); ++k) {
        if (!d.strata[k].contains(i)) continue;
        const auto& c = d.cells[k][d.arm_index(k, arm)];
        if (c.n == 0) continue;
        if (c.n < 2)
          throw InsufficientSampleError("cell " + d.strata[k].label() + "/arm " + std::to_string(arm) +
                                        " has fewer than 2 patients");
        const double term = c.n * c.variance / (n_pop * n_pop);
        num += term;
        den += term * term / static_cast<double>(c.n - 1);
      }
    }
    out.per_population[i] = num * num / den;
  }
  out.shared = *std::min_element(out.per_population.begin(), out.per_population.end());
  return out;
}

// Multivariate t reference with the observed-variance correlation matrix and
// the shared Satterthwaite df.
inline TestModel satterthwaite_model(const Design& d) {
  return make_test_model(population_correlation(d), d.strata, ModelKind::t, satterthwaite_df(d).shared);
}

// ---------------------------------------------------------------------------
// Setting D: parametric bootstrap of the cell means

inline EmpiricalNull bootstrap_null_D(const Design& d, long B, RngStream& rng) {
  if (B < 1) throw DomainError("bootstrap needs B >= 1");
  population_variances(d);  // rejects empty population arms
  EmpiricalNull null{B, d.m, std::vector<double>(static_cast<std::size_t>(B) * d.m), NullProvenance::parametric_D, 0};
  const std::uint64_t base = rng();
  std::vector<std::vector<double>> means(d.cells.size());
  for (std::size_t k = 0; k < d.cells.size(); ++k) means[k].assign(d.cells[k].size(), 0.0);
  for (long b = 0; b < B; ++b) {
    RngStream r = derive_stream(base, static_cast<std::uint64_t>(b));
    std::normal_distribution<double> norm;
    for (std::size_t k = 0; k < d.cells.size(); ++k)
      for (std::size_t a = 0; a < d.cells[k].size(); ++a) {
        const auto& c = d.cells[k][a];
        means[k][a] = c.n > 0 ? norm(r) * std::sqrt(c.variance / static_cast<double>(c.n)) : 0.0;
      }
    const auto z = test_statistics(d, means);
    std::copy(z.begin(), z.end(), null.statistics.begin() + b * d.m);
  }
  return null;
}

// ---------------------------------------------------------------------------
// Empirical calibration

// Smallest equal critical value whose empirical PWER does not exceed alpha,
// reported as the midpoint of the order-statistic gap it falls in.
inline CriticalValues solve_critical_empirical(const FwerCurve& curve, const PrevalenceVector& pi, double alpha) {
  if (pi.size() != curve.size()) throw DomainError("prevalence vector has wrong length");
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (static_cast<double>(curve.resamples()) * alpha < 20.0)
    throw DomainError("too few resamples for this level (need B * alpha >= 20)");

  std::vector<double> values;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (pi[k] > 0.0) values.insert(values.end(), curve.sorted_maxima(k).begin(), curve.sorted_maxima(k).end());
  if (values.empty()) throw DomainError("prevalence vector has no positive weight");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  const int m = curve.size() > 0 ? std::bit_width(static_cast<unsigned>(curve.size())) : 0;
  CriticalValues out{{}, alpha, 0.0, 0};
  double c;
  if (curve.pwer(-std::numeric_limits<double>::infinity(), pi) <= alpha) {
    c = values.front() - 1.0;
  } else {
    if (curve.pwer(values.back(), pi) > alpha)
      throw InfeasibleLevelError("empirical PWER exceeds alpha even at the largest statistic");
    std::size_t lo = 0, hi = values.size() - 1;  // pwer(values[hi]) <= alpha
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      ++out.iterations;
      if (curve.pwer(values[mid], pi) <= alpha)
        hi = mid;
      else
        lo = mid + 1;
    }
    c = hi + 1 < values.size() ? 0.5 * (values[hi] + values[hi + 1]) : values[hi] + 1.0;
  }
  out.c.assign(m, c);
  out.achieved = curve.pwer(c, pi);
  return out;
}

inline CriticalValues solve_critical_empirical(const EmpiricalNull& null, const std::vector<Stratum>& strata,
                                               const PrevalenceVector& pi, double alpha) {
  return solve_critical_empirical(FwerCurve(null, strata), pi, alpha);
}

struct EmpiricalEvaluation {
  std::vector<double> fwer;
  std::vector<double> gradient;
  double true_pwer = 0.0;
};

inline EmpiricalEvaluation empirical_gradient_and_true_pwer(const FwerCurve& curve, const CriticalValues& c_hat,
                                                            const PrevalenceVector& pi_true,
                                                            std::span<const double> factors) {
  if (pi_true.size() != curve.size() || factors.size() != curve.size())
    throw DomainError("prevalence or factor vector has wrong length");
  EmpiricalEvaluation out;
  out.fwer = curve.fwer_all(c_hat.common());
  out.gradient.resize(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out.gradient[k] = -factors[k] * out.fwer[k];
    out.true_pwer += pi_true[k] * out.fwer[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Setting E: projection bootstrap

// Effects per (stratum, arm), parallel to Design::cells; control entries are 0.
using EffectTable = std::vector<std::vector<double>>;

// Euclidean projection of the treatment effects onto
// { theta : sum_{J contains i} pi_J theta_{J,T_i} = 0 for every population i }.
inline EffectTable project_null(const Design& d, const PrevalenceVector& pi, const EffectTable& effects) {
  std::vector<std::pair<std::size_t, std::size_t>> cols;
  for (std::size_t k = 0; k < d.cells.size(); ++k)
    for (std::size_t a = 0; a < d.cells[k].size(); ++a)
      if (d.cells[k][a].treatment != kControl) cols.emplace_back(k, a);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d.m, static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd theta(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto [k, a] = cols[c];
    theta(c) = effects[k][a];
    for (int i = 0; i < d.m; ++i)
      if (d.strata[k].contains(i) && d.cells[k][a].treatment == d.treatment(i)) A(i, c) = pi[k];
  }
  const Eigen::MatrixXd gram = A * A.transpose();
  const Eigen::VectorXd proj = theta - A.transpose() * gram.completeOrthogonalDecomposition().solve(A * theta);
  EffectTable out(d.cells.size());
  for (std::size_t k = 0; k < d.cells.size(); ++k) out[k].assign(d.cells[k].size(), 0.0);
  for (std::size_t c = 0; c < cols.size(); ++c) out[cols[c].first][cols[c].second] = proj(c);
  return out;
}

inline EmpiricalNull bootstrap_null_E(const Design& d, const PrevalenceVector& pi_hat, const EffectTable& observed,
                                      double pooled_variance, long B, RngStream& rng) {
  if (!(pooled_variance > 0.0)) throw DomainError("pooled variance must be positive");
  if (B < 1) throw DomainError("bootstrap needs B >= 1");
  const auto projected = project_null(d, pi_hat, observed);
  EmpiricalNull null{B, d.m, std::vector<double>(static_cast<std::size_t>(B) * d.m), NullProvenance::projection_E, 0};
  const std::uint64_t base = rng();
  const std::vector<double> var(d.strata.size(), pooled_variance);
  constexpr int max_attempts = 1000;
  for (long b = 0; b < B; ++b) {
    RngStream r = derive_stream(base, static_cast<std::uint64_t>(b));
    std::normal_distribution<double> norm;
    for (int attempt = 0;; ++attempt) {
      if (attempt == max_attempts)
        throw InsufficientSampleError("projection bootstrap keeps drawing empty population arms");
      const auto counts = sample_strata_counts(pi_hat, d.N, r);
      Design star = make_design(d.m, d.scheme, counts, var, d.variance_mode);
      bool empty_arm = false;
      for (int i = 0; i < d.m && !empty_arm; ++i)
        empty_arm = star.population_arm_size(i, star.treatment(i)) == 0 || star.population_arm_size(i, kControl) == 0;
      if (empty_arm) {
        ++null.rejected;
        continue;
      }
      std::vector<std::vector<double>> means(star.cells.size());
      for (std::size_t k = 0; k < star.cells.size(); ++k) {
        means[k].resize(star.cells[k].size());
        for (std::size_t a = 0; a < star.cells[k].size(); ++a) {
          const auto& c = star.cells[k][a];
          means[k][a] = c.n > 0 ? projected[k][a] + norm(r) * std::sqrt(pooled_variance / c.n) : 0.0;
        }
      }
      const auto z = test_statistics(star, means);
      std::copy(z.begin(), z.end(), null.statistics.begin() + b * d.m);
      break;
    }
  }
  return null;
}

struct SettingEStudy {
  EffectTable true_effects;
  EffectTable observed_effects;
  std::vector<std::vector<double>> cell_means;
  double pooled_variance = 0.0;
};

// One study with qualitatively heterogeneous strata effects whose
// prevalence-weighted population averages are zero (two populations).
inline SettingEStudy generate_setting_E_study(const PrevalenceVector& pi_true, const Design& d, double sigma,
                                              RngStream& rng) {
  if (d.m != 2) throw DomainError("the heterogeneous-effect generator supports m = 2 only");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  // Canonical order for m = 2: {1}, {2}, {1,2}.
  const double theta12 = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  std::vector<double> stratum_effect(3);
  stratum_effect[2] = theta12;
  for (int k = 0; k < 2; ++k) stratum_effect[k] = pi_true[k] > 0.0 ? -pi_true[2] * theta12 / pi_true[k] : 0.0;

  SettingEStudy s;
  s.true_effects.resize(d.cells.size());
  s.observed_effects.resize(d.cells.size());
  s.cell_means.resize(d.cells.size());
  std::normal_distribution<double> norm;
  for (std::size_t k = 0; k < d.cells.size(); ++k) {
    const auto& arms = d.cells[k];
    s.true_effects[k].assign(arms.size(), 0.0);
    s.observed_effects[k].assign(arms.size(), 0.0);
    s.cell_means[k].assign(arms.size(), 0.0);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      if (arms[a].treatment != kControl) s.true_effects[k][a] = stratum_effect[k];
      if (arms[a].n > 0) s.cell_means[k][a] = s.true_effects[k][a] + norm(rng) * sigma / std::sqrt(arms[a].n);
    }
    const int ac = d.arm_index(k, kControl);
    for (std::size_t a = 0; a < arms.size(); ++a)
      if (arms[a].treatment != kControl && arms[a].n > 0 && arms[ac].n > 0)
        s.observed_effects[k][a] = s.cell_means[k][a] - s.cell_means[k][ac];
  }
  const double df = static_cast<double>(d.N - occupied_cells(d));
  if (df < 1.0) throw InsufficientSampleError("no residual degrees of freedom for the pooled variance");
  s.pooled_variance = sigma * sigma * std::chi_squared_distribution<double>(df)(rng) / df;
  return s;
}

}  // namespace pwerpi
