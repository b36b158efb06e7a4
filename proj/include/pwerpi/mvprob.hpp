#pragma once

// Normal and Student-t distribution functions, univariate and multivariate.
//
// Multivariate probabilities P(X <= upper) are computed by
//   dim 1   closed form
//   dim 2   Drezner-Wesolowsky / Genz Gauss-Legendre bivariate normal
//   dim 3   conditioning on one coordinate + adaptive Gauss-Kronrod over
//           the bivariate normal
//   dim >=4 randomized lattice quasi-Monte Carlo over the Genz separation
//           of variables transform, with Genz-Bretz variable reordering.
// The t variants integrate the normal result over the chi scale variable
// (dims 2-3) or add it as one more QMC coordinate.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pwerpi/errors.hpp"
#include "pwerpi/rng.hpp"

namespace pwerpi {

struct ProbResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long points_used = 0;

  friend bool operator==(const ProbResult&, const ProbResult&) = default;
};

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) * kInvSqrt2 * std::numbers::inv_sqrtpi; }

namespace detail {

// Wichura's AS 241 (PPND16), relative accuracy about 1e-16.
inline double ppnd16(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

}  // namespace detail

inline double std_normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal quantile needs q in (0,1)");
  return detail::ppnd16(q);
}

inline double student_t_cdf(double x, double df) {
  if (!(df >= 1.0)) throw DomainError("degrees of freedom must be >= 1");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

inline double student_t_quantile(double q, double df) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("t quantile needs q in (0,1)");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), q);
}

// ---------------------------------------------------------------------------

// Symmetric, unit-diagonal, positive semidefinite matrix. Eigenvalues in
// [-1e-10, 0) are clipped to zero on construction; anything more negative is
// rejected.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) { validate_and_repair(); }

  static CorrelationMatrix identity(int dim) { return CorrelationMatrix(Eigen::MatrixXd::Identity(dim, dim)); }

  static CorrelationMatrix equicorrelated(int dim, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, rho);
    m.diagonal().setOnes();
    return CorrelationMatrix(std::move(m));
  }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

  // Principal submatrix; PSD is inherited so no re-check is needed.
  CorrelationMatrix submatrix(std::span<const int> idx) const {
    Eigen::MatrixXd s(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) s(a, b) = m_(idx[a], idx[b]);
    return CorrelationMatrix(std::move(s), Trusted{});
  }

 private:
  struct Trusted {};
  CorrelationMatrix(Eigen::MatrixXd m, Trusted) : m_(std::move(m)) {}

  void validate_and_repair() {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw DomainError("correlation matrix must be square and nonempty");
    if (!m_.allFinite()) throw DomainError("correlation matrix has non-finite entries");
    const auto n = m_.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(m_(i, i) - 1.0) > 1e-12) throw DomainError("correlation matrix diagonal must be 1");
      m_(i, i) = 1.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::abs(m_(i, j) - m_(j, i)) > 1e-12) throw DomainError("correlation matrix is not symmetric");
        const double v = 0.5 * (m_(i, j) + m_(j, i));
        m_(i, j) = m_(j, i) = v;
      }
    }
    if (n == 1) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m_);
    const double lowest = eig.eigenvalues().minCoeff();
    if (lowest < -1e-10)
      throw DomainError("correlation matrix is not positive semidefinite (eigenvalue " + std::to_string(lowest) + ")");
    if (lowest < 0.0) {
      Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
      Eigen::MatrixXd r = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
      Eigen::VectorXd d = r.diagonal().cwiseSqrt().cwiseInverse();
      m_ = d.asDiagonal() * r * d.asDiagonal();
      m_ = 0.5 * (m_ + m_.transpose());
      m_.diagonal().setOnes();
    }
  }

  Eigen::MatrixXd m_;
};

// ---------------------------------------------------------------------------
namespace detail {

// P(X > h, Y > k) for a standard bivariate normal with correlation r.
// Genz's BVNU: Drezner & Wesolowsky with 6/12/20-point Gauss-Legendre rules.
inline double bvn_upper(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == inf || k == inf) return 0.0;
  if (h == -inf) return k == -inf ? 1.0 : std_normal_cdf(-k);
  if (k == -inf) return std_normal_cdf(-h);
  if (r == 0.0) return std_normal_cdf(-h) * std_normal_cdf(-k);

  static constexpr std::array<double, 3> w6{0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static constexpr std::array<double, 3> x6{0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static constexpr std::array<double, 6> w12{0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                             0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
  static constexpr std::array<double, 6> x12{0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                             0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  static constexpr std::array<double, 10> w20{0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                              0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                              0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                              0.1527533871307259};
  static constexpr std::array<double, 10> x20{0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                              0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                              0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                              0.07652652113349733};
  std::span<const double> w, x;
  const double ar = std::abs(r);
  if (ar < 0.3) {
    w = w6;
    x = x6;
  } else if (ar < 0.75) {
    w = w12;
    x = x12;
  } else {
    w = w20;
    x = x20;
  }

  constexpr double tp = 2.0 * std::numbers::pi;
  double hk = h * k;
  double bvn = 0.0;
  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sgn * x[i]));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / tp + std_normal_cdf(-h) * std_normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = 1.0 - r * r;
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(tp) * std_normal_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a /= 2.0;
      double sum = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (double sgn : {-1.0, 1.0}) {
          const double xs = std::pow(a * (1.0 + sgn * x[i]), 2);
          const double asr_i = -(bs / xs + hk) / 2.0;
          if (asr_i <= -100.0) continue;
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += w[i] * std::exp(asr_i) * (sp - ep);
        }
      }
      bvn = (a * sum - bvn) / tp;
    }
    if (r > 0.0) {
      bvn += std_normal_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double l = h < 0.0 ? std_normal_cdf(k) - std_normal_cdf(h) : std_normal_cdf(-h) - std_normal_cdf(-k);
      bvn = l - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

inline double bvn_cdf(double a, double b, double r) { return bvn_upper(-a, -b, r); }

// Absolute accuracy target of the deterministic quadratures for a caller
// tolerance.
inline double quadrature_target(double tol) { return std::clamp(tol * 1e-4, 1e-14, 1e-11); }

// Limits after removing +inf coordinates and merging perfectly correlated pairs.
struct Reduced {
  bool zero = false;
  std::vector<double> upper;
  Eigen::MatrixXd corr;
};

inline Reduced reduce(std::span<const double> upper, const Eigen::MatrixXd& corr) {
  Reduced out;
  std::vector<int> keep;
  std::vector<double> b;
  for (std::size_t i = 0; i < upper.size(); ++i) {
    if (std::isnan(upper[i])) throw DomainError("NaN integration limit");
    if (upper[i] == -std::numeric_limits<double>::infinity()) {
      out.zero = true;
      return out;
    }
    if (upper[i] == std::numeric_limits<double>::infinity()) continue;
    bool merged = false;
    for (std::size_t a = 0; a < keep.size(); ++a) {
      if (corr(keep[a], static_cast<Eigen::Index>(i)) >= 1.0 - 1e-12) {
        b[a] = std::min(b[a], upper[i]);
        merged = true;
        break;
      }
    }
    if (!merged) {
      keep.push_back(static_cast<int>(i));
      b.push_back(upper[i]);
    }
  }
  out.upper = std::move(b);
  out.corr.resize(keep.size(), keep.size());
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t c = 0; c < keep.size(); ++c) out.corr(a, c) = corr(keep[a], keep[c]);
  return out;
}

template <class F>
ProbResult adaptive_integral(F&& f, double lo, double hi, double target) {
  if (!(hi > lo)) return {};
  double err = 0.0, l1 = 0.0;
  long evals = 0;
  auto counted = [&](double x) {
    ++evals;
    return f(x);
  };
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(counted, lo, hi, 15, target, &err, &l1);
  return {v, err, evals};
}

// P(X <= a) in three dimensions by conditioning on the coordinate least
// correlated with the others.
inline ProbResult tvn_cdf(std::span<const double> a, const Eigen::MatrixXd& r, double target) {
  int k = 0;
  double best = 2.0;
  for (int c = 0; c < 3; ++c) {
    double worst = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != c) worst = std::max(worst, std::abs(r(c, j)));
    if (worst < best) {
      best = worst;
      k = c;
    }
  }
  const int i = (k + 1) % 3, j = (k + 2) % 3;
  const double rki = r(k, i), rkj = r(k, j);
  const double si = std::sqrt(std::max(0.0, 1.0 - rki * rki));
  const double sj = std::sqrt(std::max(0.0, 1.0 - rkj * rkj));
  const double rho = std::clamp((r(i, j) - rki * rkj) / (si * sj), -1.0, 1.0);
  constexpr double cut = 9.0;
  if (a[k] <= -cut) return {0.0, std_normal_cdf(a[k]), 0};
  const double hi = std::min(a[k], cut);
  auto f = [&](double x) {
    return std_normal_pdf(x) * bvn_cdf((a[i] - rki * x) / si, (a[j] - rkj * x) / sj, rho);
  };
  // Relative tolerance for Boost; the integrand is positive so L1 equals the value.
  auto res = adaptive_integral(f, -cut, hi, target);
  res.value = std::clamp(res.value, 0.0, 1.0);
  res.error_estimate += 2.0 * std_normal_cdf(-cut);
  return res;
}

// Deterministic normal probability of an already reduced problem (dim <= 3).
inline ProbResult small_mvn(std::span<const double> b, const Eigen::MatrixXd& r, double target) {
  switch (b.size()) {
    case 0: return {1.0, 0.0, 0};
    case 1: return {std_normal_cdf(b[0]), 0.0, 1};
    case 2: return {bvn_cdf(b[0], b[1], std::clamp(r(0, 1), -1.0, 1.0)), 1e-15, 1};
    default: return tvn_cdf(b, r, target);
  }
}

// Integrates the normal probability at scaled limits over the distribution
// of S = sqrt(W/df), W ~ chi^2(df).
inline ProbResult small_mvt(std::span<const double> b, const Eigen::MatrixXd& r, double df, double target) {
  if (b.size() == 1) return {student_t_cdf(b[0], df), 1e-15, 1};
  const double shape = df / 2.0;
  const double w_lo = 2.0 * boost::math::gamma_p_inv(shape, 1e-16);
  const double w_hi = 2.0 * boost::math::gamma_q_inv(shape, 1e-16);
  const double s_lo = std::sqrt(w_lo / df), s_hi = std::sqrt(w_hi / df);
  const double log_norm = std::log(2.0) + shape * std::log(shape) - std::lgamma(shape);
  std::vector<double> scaled(b.size());
  long inner = 0;
  auto f = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double dens = std::exp(log_norm + (df - 1.0) * std::log(s) - shape * s * s);
    for (std::size_t i = 0; i < b.size(); ++i) scaled[i] = b[i] * s;
    const auto g = small_mvn(scaled, r, target);
    inner += g.points_used;
    return dens * g.value;
  };
  auto res = adaptive_integral(f, s_lo, s_hi, target);
  res.value = std::clamp(res.value, 0.0, 1.0);
  res.error_estimate += 2e-16;
  res.points_used += inner;
  return res;
}

inline constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Randomized Richtmyer-lattice QMC for P(X/S <= b) with X ~ N(0, r) and
// S = 1 (df <= 0) or S = sqrt(chi^2(df)/df).
inline ProbResult qmc_cdf(std::span<const double> upper, const Eigen::MatrixXd& r, double df, double tol,
                          RngStream& rng) {
  const int n = static_cast<int>(upper.size());
  const bool is_t = df > 0.0;

  // Genz-Bretz ordering with a simultaneous Cholesky factorisation.
  Eigen::MatrixXd c = r;
  std::vector<double> b(upper.begin(), upper.end());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    int pick = i;
    double best = 2.0;
    for (int j = i; j < n; ++j) {
      double mean = 0.0, var = c(j, j);
      for (int k = 0; k < i; ++k) {
        mean += l(j, k) * y[k];
        var -= l(j, k) * l(j, k);
      }
      const double p = var > 1e-14 ? std_normal_cdf((b[j] - mean) / std::sqrt(var)) : (b[j] - mean >= 0 ? 1.0 : 0.0);
      if (p < best) {
        best = p;
        pick = j;
      }
    }
    if (pick != i) {
      std::swap(b[i], b[pick]);
      c.row(i).swap(c.row(pick));
      c.col(i).swap(c.col(pick));
      l.row(i).swap(l.row(pick));
    }
    double d = c(i, i);
    for (int k = 0; k < i; ++k) d -= l(i, k) * l(i, k);
    const double lii = d > 1e-14 ? std::sqrt(d) : 0.0;
    l(i, i) = lii;
    for (int j = i + 1; j < n; ++j) {
      double v = c(j, i);
      for (int k = 0; k < i; ++k) v -= l(j, k) * l(i, k);
      l(j, i) = lii > 0.0 ? v / lii : 0.0;
    }
    double mean = 0.0;
    for (int k = 0; k < i; ++k) mean += l(i, k) * y[k];
    if (lii > 0.0) {
      const double t = (b[i] - mean) / lii;
      const double p = std_normal_cdf(t);
      y[i] = p > 1e-300 ? -std_normal_pdf(t) / p : t;
    }
  }

  const int dims = n - 1 + (is_t ? 1 : 0);
  std::vector<double> gen(std::max(dims, 1));
  for (int d = 0; d < dims; ++d) {
    const double s = std::sqrt(static_cast<double>(kPrimes[d]));
    gen[d] = s - std::floor(s);
  }

  constexpr double lo_clip = 1e-16;
  std::vector<double> yy(n);
  auto integrand = [&](std::span<const double> w) {
    double scale = 1.0;
    int off = 0;
    if (is_t) {
      const double u = std::clamp(w[0], lo_clip, 1.0 - lo_clip);
      scale = std::sqrt(2.0 * boost::math::gamma_p_inv(df / 2.0, u) / df);
      off = 1;
    }
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      double mean = 0.0;
      for (int k = 0; k < i; ++k) mean += l(i, k) * yy[k];
      const double lim = b[i] * scale - mean;
      double e;
      if (l(i, i) > 0.0) {
        e = std_normal_cdf(lim / l(i, i));
      } else {
        e = lim >= 0.0 ? 1.0 : 0.0;
      }
      prod *= e;
      if (prod == 0.0) return 0.0;
      if (i + 1 < n) {
        yy[i] = l(i, i) > 0.0 ? ppnd16(std::clamp(w[off + i] * e, lo_clip, 1.0 - lo_clip)) : 0.0;
      }
    }
    return prod;
  };

  constexpr int shifts = 12;
  constexpr long max_points = 1L << 18;
  long points = 1L << 10;
  long used = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(std::max(dims, 1)), pt(std::max(dims, 1));
  ProbResult res;
  while (true) {
    double sum = 0.0, sum_sq = 0.0;
    for (int m = 0; m < shifts; ++m) {
      for (int d = 0; d < dims; ++d) shift[d] = unif(rng);
      double acc = 0.0;
      for (long j = 1; j <= points; ++j) {
        for (int d = 0; d < dims; ++d) {
          double x = static_cast<double>(j) * gen[d] + shift[d];
          x -= std::floor(x);
          pt[d] = std::abs(2.0 * x - 1.0);
        }
        acc += integrand(pt);
      }
      const double mean = acc / static_cast<double>(points);
      sum += mean;
      sum_sq += mean * mean;
      used += points;
    }
    const double est = sum / shifts;
    const double var = std::max(0.0, (sum_sq - shifts * est * est) / (shifts - 1));
    res = {std::clamp(est, 0.0, 1.0), 3.0 * std::sqrt(var / shifts), used};
    if (res.error_estimate <= tol || points >= max_points || dims == 0) break;
    points *= 2;
  }
  return res;
}

inline void check_request(std::span<const double> upper, const CorrelationMatrix& corr, double tol) {
  if (static_cast<int>(upper.size()) != corr.dim()) throw DomainError("limit vector and correlation matrix differ in dimension");
  if (!(tol >= 1e-8 && tol <= 1e-3)) throw DomainError("CDF tolerance must lie in [1e-8, 1e-3]");
}

}  // namespace detail

// P(Z <= upper) for Z ~ N(0, corr).
inline ProbResult mvn_cdf(std::span<const double> upper, const CorrelationMatrix& corr, double tol, RngStream& rng) {
  detail::check_request(upper, corr, tol);
  auto red = detail::reduce(upper, corr.matrix());
  if (red.zero) return {};
  if (red.upper.size() <= 3) return detail::small_mvn(red.upper, red.corr, detail::quadrature_target(tol));
  return detail::qmc_cdf(red.upper, red.corr, 0.0, tol, rng);
}

// P(T <= upper) for T multivariate t with scale matrix corr and real df >= 1.
inline ProbResult mvt_cdf(std::span<const double> upper, const CorrelationMatrix& corr, double df, double tol,
                          RngStream& rng) {
  detail::check_request(upper, corr, tol);
  if (!(df >= 1.0)) throw DomainError("degrees of freedom must be >= 1");
  if (std::isinf(df)) return mvn_cdf(upper, corr, tol, rng);
  auto red = detail::reduce(upper, corr.matrix());
  if (red.zero) return {};
  if (red.upper.empty()) return {1.0, 0.0, 0};
  if (red.upper.size() <= 3) return detail::small_mvt(red.upper, red.corr, df, detail::quadrature_target(tol));
  return detail::qmc_cdf(red.upper, red.corr, df, tol, rng);
}

// Forces the lattice engine regardless of dimension; used to cross-check the
// deterministic paths.
inline ProbResult mvn_cdf_qmc(std::span<const double> upper, const CorrelationMatrix& corr, double tol, RngStream& rng) {
  detail::check_request(upper, corr, tol);
  return detail::qmc_cdf(upper, corr.matrix(), 0.0, tol, rng);
}

inline ProbResult mvt_cdf_qmc(std::span<const double> upper, const CorrelationMatrix& corr, double df, double tol,
                              RngStream& rng) {
  detail::check_request(upper, corr, tol);
  return detail::qmc_cdf(upper, corr.matrix(), df, tol, rng);
}

}  // namespace pwerpi
