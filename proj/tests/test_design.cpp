#include <numeric>

#include "catch_amalgamated.hpp"
#include "pwerpi/design.hpp"
#include "pwerpi/rng.hpp"

using namespace pwerpi;
using Catch::Approx;

TEST_CASE("strata enumeration", "[design]") {
  const auto s2 = enumerate_strata(2);
  REQUIRE(s2.size() == 3);
  CHECK(s2[0].label() == "{1}");
  CHECK(s2[1].label() == "{2}");
  CHECK(s2[2].label() == "{1,2}");

  const auto s3 = enumerate_strata(3);
  REQUIRE(s3.size() == 7);
  for (int k = 0; k < 3; ++k) CHECK(s3[k].size() == 1);
  CHECK(s3[3].label() == "{1,2}");
  CHECK(s3[4].label() == "{1,3}");
  CHECK(s3[5].label() == "{2,3}");
  CHECK(s3[6].label() == "{1,2,3}");

  const auto s5 = enumerate_strata(5);
  CHECK(s5.size() == 31);
  for (std::size_t i = 0; i < s5.size(); ++i)
    for (std::size_t j = i + 1; j < s5.size(); ++j) CHECK(s5[i] != s5[j]);

  CHECK_THROWS_AS(enumerate_strata(1), ConfigError);
  CHECK_THROWS_AS(enumerate_strata(13), ConfigError);
  CHECK(stratum_count(4) == 15);
}

TEST_CASE("prevalence estimation", "[design]") {
  auto check = [](std::vector<long> counts, std::vector<double> expect) {
    const auto pi = estimate_prevalences(counts, 250);
    CHECK(pi.kind == PrevalenceKind::estimated);
    for (std::size_t k = 0; k < expect.size(); ++k) CHECK(pi[k] == Approx(expect[k]).margin(1e-15));
  };
  check({100, 100, 50}, {0.4, 0.4, 0.2});
  check({250, 0, 0}, {1, 0, 0});
  check({125, 75, 50}, {0.5, 0.3, 0.2});

  const std::vector<long> zeros{0, 0, 0};
  CHECK_THROWS_AS(estimate_prevalences(zeros, 0), DomainError);
  const std::vector<long> c{100, 100, 51};
  CHECK_THROWS_AS(estimate_prevalences(c, 250), InconsistencyError);
}

TEST_CASE("simplex validation", "[design]") {
  CHECK_NOTHROW(make_prevalences({0.5, 0.5 + 5e-13}));
  const auto p = make_prevalences({0.5, 0.5 + 5e-13});
  CHECK(p[0] + p[1] == Approx(1.0).margin(1e-15));
  CHECK_THROWS_AS(make_prevalences({0.5, 0.5 + 1e-9}), DomainError);
  CHECK_THROWS_AS(make_prevalences({1.1, -0.1}), DomainError);
}

TEST_CASE("multinomial strata counts", "[design]") {
  RngStream rng(42);
  const auto degenerate = make_prevalences({1, 0, 0});
  for (long N : {1L, 17L, 250L}) {
    const auto c = sample_strata_counts(degenerate, N, rng);
    CHECK(c == std::vector<long>{N, 0, 0});
  }

  SECTION("law of large numbers") {
    const auto half = make_prevalences({0.5, 0.5});
    const auto c = sample_strata_counts(half, 1000000, rng);
    CHECK(std::abs(c[0] / 1e6 - 0.5) < 0.002);
    CHECK(c[0] + c[1] == 1000000);
  }

  SECTION("marginal means") {
    const auto pi = make_prevalences({0.2, 0.3, 0.5});
    const long N = 250, reps = 10000;
    std::vector<double> mean(3, 0.0);
    for (long r = 0; r < reps; ++r) {
      const auto c = sample_strata_counts(pi, N, rng);
      CHECK(std::accumulate(c.begin(), c.end(), 0L) == N);
      for (int k = 0; k < 3; ++k) mean[k] += static_cast<double>(c[k]) / N / reps;
    }
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(mean[k] - pi[k]) <= 4.0 * std::sqrt(pi[k] * (1 - pi[k]) / (N * static_cast<double>(reps))));
  }

  SECTION("pinned draw") {
    const auto third = make_prevalences({1.0 / 3, 1.0 / 3, 1.0 / 3});
    // Pinned from the first run; tied to the standard library's binomial sampler.
    RngStream fixed = derive_stream(2024, 0);
    const auto c = sample_strata_counts(third, 250, fixed);
    CHECK(c == std::vector<long>{67, 86, 97});
  }
}

TEST_CASE("arm allocation", "[design]") {
  CHECK(split_evenly(10, 2) == std::vector<long>{5, 5});
  CHECK(split_evenly(10, 3) == std::vector<long>{4, 3, 3});
  CHECK(split_evenly(1, 2) == std::vector<long>{1, 0});

  const std::vector<long> counts{10, 11, 10};
  const auto d = make_design(2, TreatmentScheme::pairwise_different, counts);
  validate_design(d);
  // {1,2} under different treatments has arms T1, T2, C.
  REQUIRE(d.cells[2].size() == 3);
  CHECK(d.cells[2][0].treatment == 1);
  CHECK(d.cells[2][1].treatment == 2);
  CHECK(d.cells[2][2].treatment == kControl);
  CHECK(d.cells[2][0].n == 4);
  CHECK(d.cells[2][2].n == 3);
  CHECK(d.cells[1][0].n == 6);  // remainder to the treatment arm

  for (int i = 0; i < 2; ++i)
    for (int arm : {d.treatment(i), kControl}) {
      long n = 0;
      for (std::size_t k = 0; k < d.strata.size(); ++k)
        if (d.strata[k].contains(i))
          for (const auto& c : d.cells[k])
            if (c.treatment == arm) n += c.n;
      CHECK(d.population_arm_size(i, arm) == n);
    }
  for (std::size_t k = 0; k < 3; ++k) CHECK(d.stratum_size(k) == counts[k]);

  const auto single = make_design(2, TreatmentScheme::single, counts);
  CHECK(single.cells[2].size() == 2);
  CHECK(single.treatment(0) == single.treatment(1));
}

TEST_CASE("floor transform", "[design]") {
  const auto pi = make_prevalences({0.1, 0.4, 0.5});
  const auto t = transform_floor(pi, 0.2);
  CHECK(t.kind == PrevalenceKind::transformed_floor);
  CHECK(t.scale_p == Approx(0.8 / 0.9).epsilon(1e-14));
  CHECK(t[0] == Approx(0.2).epsilon(1e-14));
  CHECK(t[1] == Approx(0.4 * 0.8 / 0.9).epsilon(1e-14));
  CHECK(t[2] == Approx(0.5 * 0.8 / 0.9).epsilon(1e-14));
  CHECK(t[1] == Approx(0.3556).margin(1e-4));
  CHECK(t[2] == Approx(0.4444).margin(1e-4));

  const auto id = transform_floor(pi, 0.0);
  CHECK(id.values == pi.values);
  CHECK(id.scale_p == 1.0);

  const auto half = make_prevalences({0.5, 0.5});
  const auto inactive = transform_floor(half, 0.1);
  CHECK(inactive.values == half.values);
  CHECK(inactive.scale_p == 1.0);

  CHECK_THROWS_AS(transform_floor(pi, 1.0 / 3), DomainError);
}

TEST_CASE("floor transform is a single pass", "[design]") {
  const auto t = transform_floor(make_prevalences({0.1, 0.21, 0.69}), 0.2);
  CHECK(t[0] == 0.2);
  CHECK(t[1] == Approx(0.21 * 0.8 / 0.9).epsilon(1e-14));
  CHECK(t[1] < 0.2);
}

TEST_CASE("shift transform", "[design]") {
  const auto half = transform_shift(make_prevalences({0.5, 0.5}), 0.1);
  CHECK(half[0] == Approx(0.5).epsilon(1e-15));
  const auto t = transform_shift(make_prevalences({0.2, 0.8}), 0.1);
  CHECK(t[0] == Approx(0.25).epsilon(1e-14));
  CHECK(t[1] == Approx(0.75).epsilon(1e-14));
  const auto pi = make_prevalences({0.1, 0.4, 0.5});
  CHECK(transform_shift(pi, 0.0).values == pi.values);
}

TEST_CASE("transform properties", "[design][property]") {
  RngStream rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 3 + rep % 13;
    std::vector<double> w(n);
    double s = 0;
    for (double& v : w) s += (v = unif(rng) * unif(rng));
    for (double& v : w) v /= s;
    const auto pi = make_prevalences(w);
    const double pi_min = unif(rng) / n;

    const auto fl = transform_floor(pi, pi_min);
    const auto sh = transform_shift(pi, pi_min);
    CHECK(std::accumulate(fl.values.begin(), fl.values.end(), 0.0) == Approx(1.0).margin(1e-12));
    CHECK(std::accumulate(sh.values.begin(), sh.values.end(), 0.0) == Approx(1.0).margin(1e-12));
    double kept_min = 1.0;
    for (int k = 0; k < n; ++k) {
      if (w[k] < pi_min)
        CHECK(fl[k] == pi_min);
      else
        kept_min = std::min(kept_min, fl[k]);
    }
    // Rescaling can push a stratum that started just above the floor below it.
    if (kept_min >= pi_min) {
      const double lowest = *std::min_element(fl.values.begin(), fl.values.end());
      CHECK(lowest >= pi_min - 1e-12);
      if (std::any_of(w.begin(), w.end(), [&](double v) { return v < pi_min; })) CHECK(lowest == pi_min);
    }
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (pi[j] < pi[k]) CHECK(sh[j] < sh[k]);

    const double below = *std::min_element(w.begin(), w.end()) * 0.999;
    CHECK(transform_floor(pi, below).values == pi.values);
  }
}

TEST_CASE("transform gradient factors", "[design]") {
  const auto pi = make_prevalences({0.1, 0.4, 0.5});
  const auto fl = transform_gradient_factor(pi, 0.2, Transform::floor);
  CHECK(fl[0] == 0.0);
  CHECK(fl[1] == Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(fl[2] == Approx(8.0 / 9.0).epsilon(1e-14));

  const auto sh = transform_gradient_factor(pi, 0.1, Transform::shift);
  for (double f : sh) CHECK(f == Approx(1.0 / 1.3).epsilon(1e-14));
  for (double f : transform_gradient_factor(pi, 0.1, Transform::none)) CHECK(f == 1.0);

  // On the kink the scale factor p is used.
  const auto kink = make_prevalences({0.2, 0.3, 0.5});
  const auto fk = transform_gradient_factor(kink, 0.2, Transform::floor);
  CHECK(fk[0] == 1.0);
}
