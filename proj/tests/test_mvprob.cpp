#include "catch_amalgamated.hpp"
#include "oracles.hpp"
#include "pwerpi/mvprob.hpp"

using namespace pwerpi;
using Catch::Approx;

namespace {

Eigen::MatrixXd corr2(double r) {
  Eigen::MatrixXd m(2, 2);
  m << 1, r, r, 1;
  return m;
}

double combined(const oracle::Estimate& mc, const ProbResult& r) {
  return std::sqrt(mc.se * mc.se + r.error_estimate * r.error_estimate);
}

}  // namespace

TEST_CASE("univariate normal", "[mvprob]") {
  CHECK(std_normal_quantile(0.975) == Approx(1.959964).margin(1e-6));
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_quantile(0.5) == Approx(0.0).margin(1e-15));
  for (double q : {1e-10, 1e-6, 0.001, 0.0125, 0.025, 0.2, 0.5, 0.8, 0.975, 0.99, 0.999999})
    CHECK(std::abs(std_normal_cdf(std_normal_quantile(q)) - q) <= 1e-12);
  double prev = 0.0;
  for (double x = -8; x <= 8; x += 0.01) {
    CHECK(std_normal_cdf(x) >= prev);
    prev = std_normal_cdf(x);
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(-0.1), DomainError);
}

TEST_CASE("univariate t", "[mvprob]") {
  CHECK(student_t_cdf(2.015048, 5) == Approx(0.95).margin(1e-6));
  CHECK(student_t_quantile(0.95, 5) == Approx(2.015048).margin(1e-6));
  RngStream rng(1);
  const double x = 2.015048;
  CHECK(mvt_cdf(std::span(&x, 1), CorrelationMatrix::identity(1), 5.0, 1e-7, rng).value ==
        Approx(0.95).margin(1e-6));
}

TEST_CASE("correlation matrix validation", "[mvprob]") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(CorrelationMatrix(bad), DomainError);
  bad << 1.1, 0.5, 0.5, 1;
  CHECK_THROWS_AS(CorrelationMatrix(bad), DomainError);

  Eigen::MatrixXd neg(3, 3);
  neg << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  CHECK_THROWS_AS(CorrelationMatrix(neg), DomainError);

  // Rank-deficient matrix with rounding noise: tiny negative eigenvalue is clipped.
  Eigen::MatrixXd eq(3, 3);
  eq << 1, 1, 1, 1, 1, 1, 1, 1, 1;
  eq(0, 1) = eq(1, 0) = 1 - 1e-13;
  eq(0, 2) = eq(2, 0) = 1 + 0.0;
  const CorrelationMatrix clipped(eq);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(clipped.matrix());
  CHECK(es.eigenvalues().minCoeff() >= -1e-14);
  for (int i = 0; i < 3; ++i) CHECK(clipped(i, i) == 1.0);
}

TEST_CASE("request validation", "[mvprob]") {
  RngStream rng(1);
  const std::vector<double> u{0, 0};
  const auto c = CorrelationMatrix::identity(2);
  CHECK_THROWS_AS(mvn_cdf(u, c, 1e-9, rng), DomainError);
  CHECK_THROWS_AS(mvn_cdf(u, c, 1e-2, rng), DomainError);
  CHECK_THROWS_AS(mvn_cdf(u, CorrelationMatrix::identity(3), 1e-6, rng), DomainError);
  CHECK_THROWS_AS(mvt_cdf(u, c, 0.5, 1e-6, rng), DomainError);
}

TEST_CASE("closed-form cases", "[mvprob]") {
  RngStream rng(3);
  const std::vector<double> zero{0, 0};
  CHECK(mvn_cdf(zero, CorrelationMatrix::identity(2), 1e-8, rng).value == Approx(0.25).margin(1e-12));
  const std::vector<double> one{1, 1};
  CHECK(mvn_cdf(one, CorrelationMatrix(corr2(1.0)), 1e-8, rng).value == Approx(0.841345).margin(1e-6));
  CHECK(mvt_cdf(zero, CorrelationMatrix::identity(2), 10, 1e-8, rng).value == Approx(0.25).margin(1e-10));
  // Orthant probability of the equicorrelated normal: 1/4 + asin(r)/(2 pi).
  for (double r : {-0.9, -0.3, 0.2, 0.7, 0.99})
    CHECK(mvn_cdf(zero, CorrelationMatrix(corr2(r)), 1e-8, rng).value ==
          Approx(0.25 + std::asin(r) / (2 * std::numbers::pi)).margin(1e-12));
  // Trivariate orthant: 1/8 + (asin r12 + asin r13 + asin r23)/(4 pi).
  const std::vector<double> z3{0, 0, 0};
  Eigen::MatrixXd m3(3, 3);
  m3 << 1, 0.3, -0.2, 0.3, 1, 0.6, -0.2, 0.6, 1;
  CHECK(mvn_cdf(z3, CorrelationMatrix(m3), 1e-8, rng).value ==
        Approx(0.125 + (std::asin(0.3) + std::asin(-0.2) + std::asin(0.6)) / (4 * std::numbers::pi)).margin(1e-11));
  // Infinite limits drop out; -inf gives zero.
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> part{0.5, inf};
  CHECK(mvn_cdf(part, CorrelationMatrix(corr2(0.4)), 1e-8, rng).value == Approx(std_normal_cdf(0.5)).margin(1e-14));
  const std::vector<double> none{0.5, -inf};
  CHECK(mvn_cdf(none, CorrelationMatrix(corr2(0.4)), 1e-8, rng).value == 0.0);
}

TEST_CASE("normal trivariate against Monte Carlo", "[mvprob][oracle]") {
  RngStream rng(5);
  const std::vector<double> u{1.0, 1.2, 0.8};
  const auto corr = CorrelationMatrix::equicorrelated(3, 0.5);
  const auto r = mvn_cdf(u, corr, 1e-7, rng);
  const auto mc = oracle::mc_cdf(u, corr.matrix(), 0, 10'000'000, 11);
  CHECK(std::abs(r.value - mc.value) <= 3 * combined(mc, r));
}

TEST_CASE("t bivariate against Monte Carlo", "[mvprob][oracle]") {
  RngStream rng(5);
  const std::vector<double> u{1.5, 1.5};
  const CorrelationMatrix corr(corr2(0.5));
  const auto r = mvt_cdf(u, corr, 20, 1e-7, rng);
  const auto mc = oracle::mc_cdf(u, corr.matrix(), 20, 10'000'000, 12);
  CHECK(std::abs(r.value - mc.value) <= 3 * combined(mc, r));
}

TEST_CASE("lattice engine agrees with deterministic paths", "[mvprob]") {
  RngStream rng(9);
  const std::vector<double> u2{0.3, 1.1};
  const CorrelationMatrix c2(corr2(-0.6));
  const auto det2 = mvn_cdf(u2, c2, 1e-8, rng);
  const auto q2 = mvn_cdf_qmc(u2, c2, 1e-7, rng);
  CHECK(std::abs(det2.value - q2.value) <= std::max(q2.error_estimate, 1e-9));

  Eigen::MatrixXd m3(3, 3);
  m3 << 1, 0.35, 0.1, 0.35, 1, 0.55, 0.1, 0.55, 1;
  const CorrelationMatrix c3(m3);
  const std::vector<double> u3{0.7, -0.2, 1.9};
  const auto det3 = mvn_cdf(u3, c3, 1e-8, rng);
  const auto q3 = mvn_cdf_qmc(u3, c3, 1e-7, rng);
  CHECK(std::abs(det3.value - q3.value) <= std::max(q3.error_estimate, 1e-9));

  const auto t3 = mvt_cdf(u3, c3, 7.5, 1e-8, rng);
  const auto tq3 = mvt_cdf_qmc(u3, c3, 7.5, 1e-6, rng);
  CHECK(std::abs(t3.value - tq3.value) <= std::max(tq3.error_estimate, 1e-8));
}

TEST_CASE("higher dimensions against Monte Carlo", "[mvprob][oracle]") {
  RngStream rng(21);
  Eigen::MatrixXd m(4, 4);
  m << 1, 0.5, 0.5, 0.25, 0.5, 1, 0.25, 0.5, 0.5, 0.25, 1, 0.5, 0.25, 0.5, 0.5, 1;
  const CorrelationMatrix c(m);
  const std::vector<double> u{1.0, 0.5, 1.5, 2.0};
  const auto r = mvn_cdf(u, c, 1e-5, rng);
  const auto mc = oracle::mc_cdf(u, m, 0, 2'000'000, 31);
  CHECK(r.error_estimate <= 1e-5);
  CHECK(std::abs(r.value - mc.value) <= 3 * combined(mc, r));
  const auto t = mvt_cdf(u, c, 6, 1e-5, rng);
  const auto mct = oracle::mc_cdf(u, m, 6, 2'000'000, 32);
  CHECK(std::abs(t.value - mct.value) <= 3 * combined(mct, t));
}

TEST_CASE("t converges to normal", "[mvprob]") {
  RngStream rng(1);
  Eigen::MatrixXd m3(3, 3);
  m3 << 1, 0.4, 0.2, 0.4, 1, 0.3, 0.2, 0.3, 1;
  const CorrelationMatrix c(m3);
  const std::vector<double> u{1.1, 0.4, 2.0};
  CHECK(std::abs(mvt_cdf(u, c, 1e6, 1e-7, rng).value - mvn_cdf(u, c, 1e-7, rng).value) <= 1e-4);
  CHECK(mvt_cdf(u, c, std::numeric_limits<double>::infinity(), 1e-7, rng).value ==
        mvn_cdf(u, c, 1e-7, rng).value);
}

TEST_CASE("monotonicity", "[mvprob][property]") {
  RngStream rng(2);
  Eigen::MatrixXd m3(3, 3);
  m3 << 1, 0.5, 0.3, 0.5, 1, 0.2, 0.3, 0.2, 1;
  const CorrelationMatrix c(m3);
  const double tol = 1e-7;
  for (double a = -2; a <= 2; a += 0.5)
    for (double b = -2; b <= 2; b += 0.5) {
      std::vector<double> lo{a, b, 0.3};
      const double base = mvn_cdf(lo, c, tol, rng).value;
      for (int i = 0; i < 3; ++i) {
        auto hi = lo;
        hi[i] += 0.25;
        CHECK(mvn_cdf(hi, c, tol, rng).value >= base - 2 * tol);
        CHECK(mvt_cdf(hi, c, 9, tol, rng).value >= mvt_cdf(lo, c, 9, tol, rng).value - 2 * tol);
      }
    }
}

TEST_CASE("independence factorization and permutation invariance", "[mvprob][property]") {
  RngStream rng(4);
  const double tol = 1e-7;
  Eigen::MatrixXd block = Eigen::MatrixXd::Identity(3, 3);
  block(0, 1) = block(1, 0) = 0.6;
  const std::vector<double> u{0.4, 1.3, -0.2};
  const double joint = mvn_cdf(u, CorrelationMatrix(block), tol, rng).value;
  const std::vector<double> u01{0.4, 1.3};
  const double prod = mvn_cdf(u01, CorrelationMatrix(corr2(0.6)), tol, rng).value * std_normal_cdf(-0.2);
  CHECK(std::abs(joint - prod) <= 3 * tol);

  Eigen::MatrixXd m(3, 3);
  m << 1, 0.2, 0.7, 0.2, 1, -0.3, 0.7, -0.3, 1;
  const std::vector<double> v{0.9, -0.4, 1.6};
  const int perm[3] = {2, 0, 1};
  Eigen::MatrixXd pm(3, 3);
  std::vector<double> pv(3);
  for (int i = 0; i < 3; ++i) {
    pv[i] = v[perm[i]];
    for (int j = 0; j < 3; ++j) pm(i, j) = m(perm[i], perm[j]);
  }
  CHECK(std::abs(mvn_cdf(v, CorrelationMatrix(m), tol, rng).value -
                 mvn_cdf(pv, CorrelationMatrix(pm), tol, rng).value) <= 2 * tol);
  CHECK(std::abs(mvt_cdf(v, CorrelationMatrix(m), 4.5, tol, rng).value -
                 mvt_cdf(pv, CorrelationMatrix(pm), 4.5, tol, rng).value) <= 2 * tol);
}

TEST_CASE("determinism", "[mvprob][property]") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(5, 5, 0.3);
  m.diagonal().setOnes();
  const CorrelationMatrix c(m);
  const std::vector<double> u{1, 1.2, 0.8, 1.5, 2};
  RngStream a(77), b(77);
  CHECK(mvn_cdf(u, c, 1e-5, a) == mvn_cdf(u, c, 1e-5, b));
  RngStream x(5), y(5);
  const std::vector<double> u3{1, 1.2, 0.8};
  CHECK(mvt_cdf(u3, CorrelationMatrix::equicorrelated(3, 0.3), 12, 1e-7, x) ==
        mvt_cdf(u3, CorrelationMatrix::equicorrelated(3, 0.3), 12, 1e-7, y));
}
