#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cmpkit/distributions.hpp"
#include "cmpkit/params.hpp"
#include "cmpkit/series.hpp"

namespace cmpkit {

/// (j)_r = j (j-1) ... (j-r+1); 0 when r > j, 1 when r = 0.
inline long long falling_factorial(long long j, long long r) {
  if (j < 0 || r < 0) throw std::invalid_argument("falling_factorial: arguments must be >= 0");
  if (r > j) return 0;
  long long out = 1;
  for (long long t = 0; t < r; ++t) out *= (j - t);
  return out;
}

inline double falling_factorial_d(double j, long r) {
  if (j < static_cast<double>(r)) return 0.0;
  double out = 1.0;
  for (long t = 0; t < r; ++t) out *= (j - static_cast<double>(t));
  return out;
}

/// Stirling numbers of the second kind via S(k,r) = r S(k-1,r) + S(k-1,r-1).
inline long long stirling2(int k, int r) {
  if (r < 0 || k < 0 || r > k) throw std::invalid_argument("stirling2: need 0 <= r <= k");
  if (k == 0) return 1;  // S(0,0)
  std::vector<long long> row(static_cast<std::size_t>(k) + 1, 0);
  row[0] = 1;  // S(0,0)
  for (int kk = 1; kk <= k; ++kk) {
    for (int rr = kk; rr >= 1; --rr) {
      row[static_cast<std::size_t>(rr)] =
          static_cast<long long>(rr) * row[static_cast<std::size_t>(rr)] +
          row[static_cast<std::size_t>(rr - 1)];
    }
    row[0] = 0;
  }
  return row[static_cast<std::size_t>(r)];
}

namespace detail {

/// Generic certified weighted series mean: E h(X) = sum t_i h(i) / Z.
/// habs_deg / ref drive the weighted-tail certificate of cmp_scan.
template <class H>
SeriesEval cmp_weighted_mean(const CmpParams& p, H&& h, int deg, double ref, double center = 0.0,
                             double tol = 1e-13) {
  KahanSum acc;
  const auto scan = cmp_scan(
      p, tol, [&](long i, double w) { acc.add(w * h(i)); }, deg, center, std::max(ref, 1e-300));
  const double value = acc.value() / scan.sum;
  const double bound = scan.wtail + std::abs(value) * scan.tail_rel +
                       8.0 * std::numeric_limits<double>::epsilon() * (std::abs(value) + ref);
  return {value, bound, scan.terms};
}

}  // namespace detail

/// E[((X)_r)^nu]; equals lambda^r exactly for every admissible (lambda, nu > 0).
inline SeriesEval cmp_factorial_power_moment(const CmpParams& p, int r, double tol = 1e-13) {
  if (r < 1) throw std::invalid_argument("cmp_factorial_power_moment: r must be >= 1");
  if (p.nu == 0.0) {
    throw std::domain_error("cmp_factorial_power_moment: requires nu > 0");
  }
  const double nu = p.nu;
  const int deg = static_cast<int>(std::ceil(static_cast<double>(r) * nu));
  const double ref = std::pow(p.lambda, r);
  return detail::cmp_weighted_mean(
      p, [&](long i) { return std::pow(falling_factorial_d(static_cast<double>(i), r), nu); }, deg,
      ref, 0.0, tol);
}

/// E[((Y)_r)^nu] for Y ~ CMB(n, p, nu), via the C_{n-r}/C_n identity.
inline double cmb_factorial_power_moment(const CmbParams& p, int r) {
  if (r < 1 || r > p.n - 1) {
    throw std::invalid_argument("cmb_factorial_power_moment: need 1 <= r <= n-1");
  }
  if (p.p == 0.0) return 0.0;
  const CmbParams reduced(p.n - r, p.p, p.nu);
  const double log_ff = p.nu * (log_factorial(p.n) - log_factorial(p.n - r));
  return std::exp(cmb_log_norm_const(reduced) - cmb_log_norm_const(p) + log_ff +
                  static_cast<double>(r) * std::log(p.p));
}

/// E X^k by direct series summation.
inline SeriesEval cmp_moment(const CmpParams& p, int k, double tol = 1e-13) {
  if (k < 1) throw std::invalid_argument("cmp_moment: k must be >= 1");
  const double ref = std::pow(static_cast<double>(std::max(p.mode_index(), 1L)), k);
  return detail::cmp_weighted_mean(
      p, [&](long i) { return std::pow(static_cast<double>(i), k); }, k, ref, 0.0, tol);
}

/// E X^k through falling-factorial moments and Stirling conversion; an
/// independent cross-check path that must agree with cmp_moment.
inline SeriesEval cmp_moment_via_stirling(const CmpParams& p, int k, double tol = 1e-13) {
  if (k < 1) throw std::invalid_argument("cmp_moment_via_stirling: k must be >= 1");
  KahanSum total;
  double bound = 0.0;
  long terms = 0;
  for (int r = 1; r <= k; ++r) {
    const double ref = std::pow(static_cast<double>(std::max(p.mode_index(), 1L)), r);
    const SeriesEval fr = detail::cmp_weighted_mean(
        p, [&](long i) { return falling_factorial_d(static_cast<double>(i), r); }, r, ref, 0.0,
        tol);
    const double s2 = static_cast<double>(stirling2(k, r));
    total.add(s2 * fr.value);
    bound += s2 * fr.abs_error_bound;
    terms += fr.terms_used;
  }
  return {total.value(), bound, terms};
}

/// Leading-order asymptotic moment lambda^{k/nu}.
inline double cmp_moment_asymptotic(const CmpParams& p, int k) {
  if (p.nu == 0.0) throw std::invalid_argument("cmp_moment_asymptotic: requires nu > 0");
  return std::pow(p.lambda, static_cast<double>(k) / p.nu);
}

/// Central moments mu_2..mu_kmax (mu[0] = 1, mu[1] = 0 by construction),
/// plus the mean.  Two scans: the second is centered on the pass-one mean and
/// re-centered exactly by the shift identities, which keeps orders 3 and 4
/// usable even when the mean is ~1e12 and carries an ulp-level error.
struct CentralMoments {
  double mean = 0.0;
  std::array<double, 9> mu{};  // mu[k] about the exact mean, k <= kmax
};

inline CentralMoments cmp_central_moments(const CmpParams& p, int kmax, double tol = 1e-13) {
  if (kmax < 2 || kmax > 8) throw std::invalid_argument("cmp_central_moments: need 2 <= kmax <= 8");
  const double mode = static_cast<double>(std::max(p.mode_index(), 1L));
  KahanSum s1;
  const auto scan1 =
      detail::cmp_scan(p, tol, [&](long i, double w) { s1.add(w * static_cast<double>(i)); }, 1,
                       0.0, mode);
  const double mean0 = s1.value() / scan1.sum;

  const double sigma_ref =
      std::pow(std::sqrt(std::max(mode, 1.0) / std::max(p.nu, 0.25)) + 1.0, kmax);
  std::array<KahanSum, 9> acc{};
  const auto scan2 = detail::cmp_scan(
      p, tol,
      [&](long i, double w) {
        const double x = static_cast<double>(i) - mean0;
        double xp = 1.0;
        for (int k = 1; k <= kmax; ++k) {
          xp *= x;
          acc[static_cast<std::size_t>(k)].add(w * xp);
        }
      },
      kmax, mean0, sigma_ref);

  std::array<double, 9> m{};  // moments about mean0
  m[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) m[static_cast<std::size_t>(k)] = acc[static_cast<std::size_t>(k)].value() / scan2.sum;

  // Re-center about the exact mean mean0 + d via the binomial shift identity.
  const double d = m[1];
  CentralMoments out;
  out.mean = mean0 + d;
  out.mu[0] = 1.0;
  out.mu[1] = 0.0;
  for (int k = 2; k <= kmax; ++k) {
    double v = 0.0;
    double binom = 1.0;
    double dp = 1.0;
    // sum_{j=0}^{k} C(k,j) m_{k-j} (-d)^j
    for (int j = 0; j <= k; ++j) {
      v += binom * m[static_cast<std::size_t>(k - j)] * dp;
      binom *= static_cast<double>(k - j) / static_cast<double>(j + 1);
      dp *= -d;
    }
    out.mu[static_cast<std::size_t>(k)] = v;
  }
  return out;
}

/// Cumulants kappa_1..kappa_m from centered moments by the standard
/// moments-to-cumulants recurrence.  Capped at order 8: beyond that the
/// cancellation in double precision outruns the contracts.
struct CumulantVector {
  std::vector<double> kappas;
};

inline CumulantVector cmp_cumulants(const CmpParams& p, int m, double tol = 1e-13) {
  if (m < 1) throw std::invalid_argument("cmp_cumulants: m must be >= 1");
  if (m > 8) throw std::invalid_argument("cmp_cumulants: m > 8 rejected (cancellation)");
  CumulantVector out;
  out.kappas.resize(static_cast<std::size_t>(m));
  if (m == 1) {
    out.kappas[0] = cmp_moment(p, 1, tol).value;
    return out;
  }
  const CentralMoments cm = cmp_central_moments(p, m, tol);
  out.kappas[0] = cm.mean;
  // kappa'_n = m'_n - sum_{k=2}^{n-1} C(n-1,k-1) kappa'_k m'_{n-k}, centered.
  std::array<double, 9> kap{};
  for (int n = 2; n <= m; ++n) {
    double v = cm.mu[static_cast<std::size_t>(n)];
    for (int k = 2; k <= n - 1; ++k) {
      double binom = 1.0;
      for (int t = 0; t < k - 1; ++t) binom *= static_cast<double>(n - 1 - t) / static_cast<double>(t + 1);
      v -= binom * kap[static_cast<std::size_t>(k)] * cm.mu[static_cast<std::size_t>(n - k)];
    }
    kap[static_cast<std::size_t>(n)] = v;
    out.kappas[static_cast<std::size_t>(n - 1)] = v;
  }
  return out;
}

/// Leading asymptotic cumulant lambda^{1/nu} / nu^{n-1}.
inline double cmp_cumulant_asymptotic(const CmpParams& p, int n) {
  if (p.nu == 0.0) throw std::invalid_argument("cmp_cumulant_asymptotic: requires nu > 0");
  return std::pow(p.lambda, 1.0 / p.nu) / std::pow(p.nu, static_cast<double>(n - 1));
}

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double abs_error_bound = 0.0;
  // leading-order asymptotic companions
  double skewness_asymptotic = 0.0;
  double excess_kurtosis_asymptotic = 0.0;
};

inline MomentSummary cmp_moment_summary(const CmpParams& p, double tol = 1e-13) {
  const CentralMoments cm = cmp_central_moments(p, 4, tol);
  MomentSummary s;
  s.mean = cm.mean;
  s.variance = cm.mu[2];
  const double sigma = std::sqrt(s.variance);
  const double k3 = cm.mu[3];
  const double k4 = cm.mu[4] - 3.0 * cm.mu[2] * cm.mu[2];
  s.skewness = k3 / (sigma * sigma * sigma);
  s.excess_kurtosis = k4 / (s.variance * s.variance);
  s.abs_error_bound = tol * (1.0 + std::abs(s.mean) + s.variance);
  if (p.nu > 0.0) {
    s.skewness_asymptotic = std::pow(p.lambda, -1.0 / (2.0 * p.nu)) / std::sqrt(p.nu);
    s.excess_kurtosis_asymptotic = std::pow(p.lambda, -1.0 / p.nu) / p.nu;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Modes, median, mean deviation
// ---------------------------------------------------------------------------

/// One or two neighbouring modes; lower == upper in the single-mode case.
struct ModePair {
  long lower = 0;
  long upper = 0;
  bool dual() const { return lower != upper; }
};

namespace detail {
inline bool nearly_integer(double x, double rel_tol, double* rounded) {
  const double r = std::round(x);
  *rounded = r;
  return std::abs(x - r) <= rel_tol * std::max(1.0, std::abs(x));
}
}  // namespace detail

inline ModePair cmp_mode(const CmpParams& p) {
  if (p.nu == 0.0) return {0, 0};  // geometric
  const double M = std::pow(p.lambda, 1.0 / p.nu);
  double r = 0.0;
  if (detail::nearly_integer(M, 1e-9, &r) && r >= 1.0) {
    return {static_cast<long>(r) - 1, static_cast<long>(r)};
  }
  return {static_cast<long>(std::floor(M)), static_cast<long>(std::floor(M))};
}

inline ModePair cmb_mode(const CmbParams& p) {
  if (p.p == 0.0) return {0, 0};
  if (p.p == 1.0) return {p.n, p.n};
  const double a = static_cast<double>(p.n + 1) /
                   (1.0 + std::pow((1.0 - p.p) / p.p, 1.0 / p.nu));
  double r = 0.0;
  if (detail::nearly_integer(a, 1e-9, &r) && r >= 1.0 && r <= static_cast<double>(p.n)) {
    return {static_cast<long>(r) - 1, static_cast<long>(r)};
  }
  const long m = std::min<long>(p.n, static_cast<long>(std::floor(a)));
  return {m, m};
}

struct MedianReport {
  long median = 0;
  bool bound_holds = false;  // Mallows: |EX - median| <= sigma
  double mean = 0.0;
  double sigma = 0.0;
};

inline MedianReport cmp_median_and_bound(const CmpParams& p) {
  MedianReport r;
  r.median = cmp_quantile(p, 0.5);
  const CentralMoments cm = cmp_central_moments(p, 2);
  r.mean = cm.mean;
  r.sigma = std::sqrt(cm.mu[2]);
  r.bound_holds = std::abs(r.mean - static_cast<double>(r.median)) <= r.sigma;
  return r;
}

struct MeanDeviationReport {
  double exact_formula = 0.0;   // 2 lambda T, T the pmf maximum
  SeriesEval direct_sum;        // sum_j |j^nu - lambda| pmf(j)
};

/// E|X^nu - lambda|, both as the closed telescoping formula and by direct
/// summation.
inline MeanDeviationReport cmp_mean_deviation(const CmpParams& p, double tol = 1e-13) {
  if (p.nu == 0.0) throw std::invalid_argument("cmp_mean_deviation: requires nu > 0");
  const double M = std::pow(p.lambda, 1.0 / p.nu);
  double rounded = 0.0;
  const long m = detail::nearly_integer(M, 1e-9, &rounded) ? static_cast<long>(rounded)
                                                           : static_cast<long>(std::floor(M));
  const double log_z = cmp_log_norm_const(p, tol).value;
  const double log_t =
      static_cast<double>(m) * std::log(p.lambda) - p.nu * log_factorial(m) - log_z;
  MeanDeviationReport out;
  out.exact_formula = 2.0 * p.lambda * std::exp(log_t);
  const int deg = static_cast<int>(std::ceil(p.nu));
  out.direct_sum = detail::cmp_weighted_mean(
      p, [&](long i) { return std::abs(std::pow(static_cast<double>(i), p.nu) - p.lambda); }, deg,
      std::max(p.lambda, 1.0), 0.0, tol);
  return out;
}

}  // namespace cmpkit
