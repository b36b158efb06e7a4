#pragma once

// Populations, strata, treatment arms and prevalences.
//
// Populations are indexed 0..m-1 internally and printed 1-based. A stratum is
// the set of patients belonging to exactly the populations in its index set;
// all 2^m - 1 nonempty sets are always present, so every vector over strata
// has the same length and ordering.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pwerpi/errors.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

inline constexpr int kMaxPopulations = 12;
inline constexpr double kSimplexTolerance = 1e-12;

// Nonempty subset of population indices, stored as a bitmask.
class Stratum {
 public:
  constexpr Stratum() = default;
  explicit constexpr Stratum(std::uint32_t mask) : mask_(mask) {}

  constexpr std::uint32_t mask() const noexcept { return mask_; }
  constexpr bool contains(int population) const noexcept { return (mask_ >> population) & 1U; }
  constexpr int size() const noexcept { return std::popcount(mask_); }

  std::vector<int> members() const {
    std::vector<int> out;
    for (int i = 0; i < 32; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }

  // "{1,2}" with 1-based population labels.
  std::string label() const {
    std::string s = "{";
    bool first = true;
    for (int i : members()) {
      if (!first) s += ",";
      s += std::to_string(i + 1);
      first = false;
    }
    return s + "}";
  }

  friend constexpr bool operator==(Stratum, Stratum) = default;

 private:
  std::uint32_t mask_ = 0;
};

// All nonempty subsets of {0..m-1}: by size, then lexicographically on the
// sorted member list.
inline std::vector<Stratum> enumerate_strata(int m) {
  if (m < 2 || m > kMaxPopulations)
    throw ConfigError("population count m=" + std::to_string(m) + " outside [2, " +
                      std::to_string(kMaxPopulations) + "]");
  std::vector<Stratum> out;
  const std::uint32_t full = (1U << m) - 1U;
  out.reserve(full);
  for (std::uint32_t mask = 1; mask <= full; ++mask) out.emplace_back(mask);
  std::sort(out.begin(), out.end(), [](Stratum a, Stratum b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.members() < b.members();
  });
  return out;
}

inline int stratum_count(int m) { return (1 << m) - 1; }

// ---------------------------------------------------------------------------
// Treatments and arms

enum class TreatmentScheme { single, pairwise_different };

// Treatment labels are 1..m; 0 denotes the shared control arm.
inline constexpr int kControl = 0;

inline int treatment_of(TreatmentScheme scheme, int population) {
  return scheme == TreatmentScheme::single ? 1 : population + 1;
}

// Arms present in a stratum: its distinct treatments in label order, control last.
inline std::vector<int> arms_of(Stratum s, TreatmentScheme scheme) {
  std::vector<int> arms;
  for (int i : s.members()) arms.push_back(treatment_of(scheme, i));
  std::sort(arms.begin(), arms.end());
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  arms.push_back(kControl);
  return arms;
}

enum class VarianceMode { known_homogeneous, known_heterogeneous, unknown_homogeneous, unknown_heterogeneous };

struct ArmCell {
  int treatment = kControl;
  long n = 0;
  double variance = 1.0;
};

// Trial layout: strata counts split into arms, with per-cell variances.
struct Design {
  int m = 0;
  TreatmentScheme scheme = TreatmentScheme::pairwise_different;
  VarianceMode variance_mode = VarianceMode::known_homogeneous;
  long N = 0;
  std::vector<Stratum> strata;
  std::vector<std::vector<ArmCell>> cells;  // parallel to strata

  int treatment(int population) const { return treatment_of(scheme, population); }

  long stratum_size(std::size_t k) const {
    long n = 0;
    for (const auto& c : cells[k]) n += c.n;
    return n;
  }

  // Index of arm `treatment` within stratum k, or -1 if the stratum has no such arm.
  int arm_index(std::size_t k, int treatment) const {
    for (std::size_t a = 0; a < cells[k].size(); ++a)
      if (cells[k][a].treatment == treatment) return static_cast<int>(a);
    return -1;
  }

  // n_{i,a} = sum over strata containing i of n_{J,a}.
  long population_arm_size(int population, int treatment) const {
    long n = 0;
    for (std::size_t k = 0; k < strata.size(); ++k) {
      if (!strata[k].contains(population)) continue;
      if (int a = arm_index(k, treatment); a >= 0) n += cells[k][a].n;
    }
    return n;
  }
};

// Deterministic split of n patients over `arm_count` arms: as even as possible,
// remainders to the earliest arms.
inline std::vector<long> split_evenly(long n, std::size_t arm_count) {
  std::vector<long> out(arm_count, n / static_cast<long>(arm_count));
  const long rem = n % static_cast<long>(arm_count);
  for (long a = 0; a < rem; ++a) ++out[a];
  return out;
}

// Arm sizes for every stratum; variances default to 1.
inline std::vector<std::vector<ArmCell>> allocate_arms(std::span<const long> counts, int m,
                                                       TreatmentScheme scheme) {
  const auto strata = enumerate_strata(m);
  if (counts.size() != strata.size())
    throw InconsistencyError("expected " + std::to_string(strata.size()) + " strata counts, got " +
                             std::to_string(counts.size()));
  std::vector<std::vector<ArmCell>> cells(strata.size());
  for (std::size_t k = 0; k < strata.size(); ++k) {
    if (counts[k] < 0) throw DomainError("negative count in stratum " + strata[k].label());
    const auto arms = arms_of(strata[k], scheme);
    const auto sizes = split_evenly(counts[k], arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) cells[k].push_back({arms[a], sizes[a], 1.0});
  }
  return cells;
}

// Builds a design from strata counts. `stratum_variances`, if nonempty, gives
// one variance per stratum shared by all its arms.
inline Design make_design(int m, TreatmentScheme scheme, std::span<const long> counts,
                          std::span<const double> stratum_variances = {},
                          VarianceMode mode = VarianceMode::known_homogeneous) {
  Design d;
  d.m = m;
  d.scheme = scheme;
  d.variance_mode = mode;
  d.strata = enumerate_strata(m);
  d.cells = allocate_arms(counts, m, scheme);
  d.N = std::accumulate(counts.begin(), counts.end(), 0L);
  if (!stratum_variances.empty()) {
    if (stratum_variances.size() != d.strata.size())
      throw InconsistencyError("expected one variance per stratum");
    for (std::size_t k = 0; k < d.strata.size(); ++k) {
      if (!(stratum_variances[k] > 0.0))
        throw DomainError("variance of stratum " + d.strata[k].label() + " must be positive");
      for (auto& c : d.cells[k]) c.variance = stratum_variances[k];
    }
  }
  return d;
}

// Checks the counting and positivity invariants of a hand-built design.
inline void validate_design(const Design& d) {
  if (static_cast<int>(d.strata.size()) != stratum_count(d.m) || d.cells.size() != d.strata.size())
    throw InconsistencyError("design does not cover all 2^m - 1 strata");
  long total = 0;
  for (std::size_t k = 0; k < d.strata.size(); ++k) {
    const auto arms = arms_of(d.strata[k], d.scheme);
    if (d.cells[k].size() != arms.size())
      throw InconsistencyError("stratum " + d.strata[k].label() + " has the wrong arm layout");
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const auto& c = d.cells[k][a];
      if (c.treatment != arms[a]) throw InconsistencyError("arm order mismatch in stratum " + d.strata[k].label());
      if (c.n < 0) throw DomainError("negative arm size in stratum " + d.strata[k].label());
      if (!(c.variance > 0.0)) throw DomainError("nonpositive variance in stratum " + d.strata[k].label());
      total += c.n;
    }
  }
  if (total != d.N) throw InconsistencyError("arm sizes do not sum to N");
}

// ---------------------------------------------------------------------------
// Prevalences

enum class PrevalenceKind { true_value, estimated, transformed_floor, transformed_shift };

struct PrevalenceVector {
  std::vector<double> values;
  PrevalenceKind kind = PrevalenceKind::true_value;
  double pi_min = 0.0;
  double scale_p = 1.0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
};

// Validates a weight vector against the simplex: negative entries or a sum
// more than 1e-12 away from 1 are rejected; otherwise the vector is
// renormalized.
inline PrevalenceVector make_prevalences(std::vector<double> values,
                                         PrevalenceKind kind = PrevalenceKind::true_value) {
  if (values.empty()) throw DomainError("empty prevalence vector");
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("prevalences must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw DomainError("prevalences sum to " + std::to_string(sum) + ", not 1");
  if (sum != 1.0)
    for (double& v : values) v /= sum;
  return PrevalenceVector{std::move(values), kind, 0.0, 1.0};
}

inline PrevalenceVector estimate_prevalences(std::span<const long> counts, long N) {
  if (N <= 0) throw DomainError("total sample size must be positive");
  long sum = 0;
  for (long n : counts) {
    if (n < 0) throw DomainError("negative stratum count");
    sum += n;
  }
  if (sum != N)
    throw InconsistencyError("strata counts sum to " + std::to_string(sum) + " but N=" + std::to_string(N));
  std::vector<double> pi(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) pi[k] = static_cast<double>(counts[k]) / static_cast<double>(N);
  return PrevalenceVector{std::move(pi), PrevalenceKind::estimated, 0.0, 1.0};
}

// Multinomial(N, pi) draw by sequential conditional binomials.
inline std::vector<long> sample_strata_counts(const PrevalenceVector& pi, long N, RngStream& rng) {
  if (N < 1) throw DomainError("sample size must be at least 1");
  std::vector<long> counts(pi.size(), 0);
  long remaining = N;
  double mass_left = 1.0;
  for (std::size_t k = 0; k + 1 < pi.size() && remaining > 0; ++k) {
    const double p = mass_left > 0.0 ? std::clamp(pi[k] / mass_left, 0.0, 1.0) : 0.0;
    if (p >= 1.0) {
      counts[k] = remaining;
      remaining = 0;
      break;
    }
    if (p > 0.0) counts[k] = std::binomial_distribution<long>(remaining, p)(rng);
    remaining -= counts[k];
    mass_left -= pi[k];
  }
  counts.back() += remaining;
  return counts;
}

// Raises strata below pi_min to pi_min and scales the rest down by p.
inline PrevalenceVector transform_floor(const PrevalenceVector& pi, double pi_min) {
  const double n_s = static_cast<double>(pi.size());
  if (!(pi_min >= 0.0) || pi_min >= 1.0 / n_s)
    throw DomainError("floor transform needs 0 <= pi_min < 1/n_S");
  double raised_mass = 0.0;
  std::size_t raised = 0;
  for (double v : pi.values)
    if (v < pi_min) {
      raised_mass += v;
      ++raised;
    }
  const double p = (1.0 - static_cast<double>(raised) * pi_min) / (1.0 - raised_mass);
  PrevalenceVector out{pi.values, PrevalenceKind::transformed_floor, pi_min, p};
  for (double& v : out.values) v = v < pi_min ? pi_min : p * v;
  return out;
}

inline PrevalenceVector transform_shift(const PrevalenceVector& pi, double pi_min) {
  if (!(pi_min >= 0.0)) throw DomainError("shift transform needs pi_min >= 0");
  const double denom = 1.0 + static_cast<double>(pi.size()) * pi_min;
  PrevalenceVector out{pi.values, PrevalenceKind::transformed_shift, pi_min, 1.0};
  for (double& v : out.values) v = (v + pi_min) / denom;
  return out;
}

enum class Transform { none, floor, shift };

inline PrevalenceVector apply_transform(const PrevalenceVector& pi, Transform t, double pi_min) {
  switch (t) {
    case Transform::floor: return transform_floor(pi, pi_min);
    case Transform::shift: return transform_shift(pi, pi_min);
    case Transform::none: break;
  }
  return pi;
}

// Chain-rule multipliers of the transform, evaluated at the untransformed pi.
// On the kink pi_J == pi_min of the floor transform the factor p is used.
inline std::vector<double> transform_gradient_factor(const PrevalenceVector& pi, double pi_min, Transform t) {
  std::vector<double> f(pi.size(), 1.0);
  if (t == Transform::floor) {
    const auto floored = transform_floor(pi, pi_min);
    for (std::size_t k = 0; k < pi.size(); ++k) f[k] = pi[k] < pi_min ? 0.0 : floored.scale_p;
  } else if (t == Transform::shift) {
    std::fill(f.begin(), f.end(), 1.0 / (1.0 + static_cast<double>(pi.size()) * pi_min));
  }
  return f;
}

}  // namespace pwerpi
