#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cmpkit/accumulators.hpp"
#include "cmpkit/params.hpp"
#include "cmpkit/series.hpp"

namespace cmpkit {

inline double log_binomial(long n, long k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

// ---------------------------------------------------------------------------
// CMP mass / distribution functions
// ---------------------------------------------------------------------------

inline double cmp_log_pmf(const CmpParams& p, long j, double tol = 1e-14) {
  if (j < 0) throw std::invalid_argument("cmp_log_pmf: j must be >= 0");
  const double log_z = cmp_log_norm_const(p, tol).value;
  return static_cast<double>(j) * std::log(p.lambda) - p.nu * log_factorial(j) - log_z;
}

inline double cmp_pmf(const CmpParams& p, long j, double tol = 1e-14) {
  return std::exp(cmp_log_pmf(p, j, tol));
}

/// Pmf window [0, K] with certified tail mass <= tail_eps.  K comes from the
/// same geometric tail criterion as the normalizing-constant scan; the probs
/// are not renormalized, the deficit sits in tail_bound.
inline FinitePmf cmp_truncated_pmf(const CmpParams& p, double tail_eps = 1e-12) {
  if (!(tail_eps > 0.0)) throw std::invalid_argument("cmp_truncated_pmf: tail_eps must be > 0");
  FinitePmf out;
  out.offset = 0;
  if (p.nu == 0.0) {
    const double lam = p.lambda;
    const long K = static_cast<long>(std::ceil(std::log(tail_eps) / std::log(lam))) + 1;
    out.probs.resize(static_cast<std::size_t>(K + 1));
    double t = 1.0 - lam;
    for (long j = 0; j <= K; ++j) {
      out.probs[static_cast<std::size_t>(j)] = t;
      t *= lam;
    }
    out.tail_bound = std::pow(lam, static_cast<double>(K) + 1.0);
    return out;
  }

  const double log_z = cmp_log_norm_const(p, 1e-14).value;
  std::vector<std::pair<long, double>> terms;
  const auto scan =
      detail::cmp_scan(p, 0.5 * tail_eps, [&](long i, double w) { terms.emplace_back(i, w); });
  const double scale = std::exp(scan.log_scale - log_z);

  out.probs.assign(static_cast<std::size_t>(scan.hi + 1), 0.0);
  for (const auto& [i, w] : terms) out.probs[static_cast<std::size_t>(i)] = w * scale;
  // The scan may certify the lower sweep early; fill the remaining window
  // down to 0 so the window is exactly [0, K].
  if (scan.lo > 0) {
    double w = out.probs[static_cast<std::size_t>(scan.lo)];
    for (long i = scan.lo - 1; i >= 0; --i) {
      w *= std::pow(static_cast<double>(i) + 1.0, p.nu) / p.lambda;
      out.probs[static_cast<std::size_t>(i)] = w;
    }
  }
  KahanSum mass;
  for (double q : out.probs) mass.add(q);
  out.tail_bound = std::max(0.0, 1.0 - mass.value());
  return out;
}

inline double cmp_cdf(const CmpParams& p, long j, double tol = 1e-14) {
  if (j < 0) return 0.0;
  const double log_z = cmp_log_norm_const(p, tol).value;
  const double log_lam = std::log(p.lambda);
  KahanSum s;
  // Direct per-index log evaluation: a ratio chain from j = 0 would
  // underflow whenever the mass near zero is below the double range.
  for (long i = 0; i <= j; ++i) {
    s.add(std::exp(static_cast<double>(i) * log_lam - p.nu * log_factorial(i) - log_z));
  }
  return std::min(s.value(), 1.0);
}

inline long cmp_quantile(const CmpParams& p, double q, double tol = 1e-14) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("cmp_quantile: q must be in (0,1)");
  const double log_z = cmp_log_norm_const(p, tol).value;
  const double log_lam = std::log(p.lambda);
  KahanSum s;
  const long cap = 10 * p.mode_index() + 10000000L;
  for (long i = 0; i <= cap; ++i) {
    s.add(std::exp(static_cast<double>(i) * log_lam - p.nu * log_factorial(i) - log_z));
    if (s.value() >= q) return i;
  }
  throw std::runtime_error("cmp_quantile: quantile not reached within window cap");
}

/// Probability generating function E s^X = Z(s lambda, nu) / Z(lambda, nu).
inline double cmp_pgf(const CmpParams& p, double s, double tol = 1e-14) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("cmp_pgf: s must be in [0,1]");
  const double log_z = cmp_log_norm_const(p, tol).value;
  if (s == 0.0) return std::exp(-log_z);  // Z(0, nu) = 1
  const CmpParams scaled(s * p.lambda, p.nu);
  return std::exp(cmp_log_norm_const(scaled, tol).value - log_z);
}

// ---------------------------------------------------------------------------
// CMB
// ---------------------------------------------------------------------------

/// log C_n.  Always finite even when C_n itself would overflow.
inline double cmb_log_norm_const(const CmbParams& p) {
  if (p.p == 0.0 || p.p == 1.0 || p.nu == 1.0) return 0.0;
  const long n = p.n;
  std::vector<double> logt(static_cast<std::size_t>(n + 1));
  double lmax = -std::numeric_limits<double>::infinity();
  for (long i = 0; i <= n; ++i) {
    const double lt = p.nu * log_binomial(n, i) + static_cast<double>(i) * std::log(p.p) +
                      static_cast<double>(n - i) * std::log1p(-p.p);
    logt[static_cast<std::size_t>(i)] = lt;
    lmax = std::max(lmax, lt);
  }
  std::vector<double> terms(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) terms[static_cast<std::size_t>(i)] = std::exp(logt[static_cast<std::size_t>(i)] - lmax);
  return lmax + std::log(sorted_compensated_sum(std::move(terms)));
}

inline double cmb_norm_const(const CmbParams& p) { return std::exp(cmb_log_norm_const(p)); }

inline FinitePmf cmb_truncated_pmf(const CmbParams& p) {
  FinitePmf out;
  out.offset = 0;
  out.tail_bound = 0.0;
  const long n = p.n;
  out.probs.assign(static_cast<std::size_t>(n + 1), 0.0);
  if (p.p == 0.0) {
    out.probs[0] = 1.0;
    return out;
  }
  if (p.p == 1.0) {
    out.probs[static_cast<std::size_t>(n)] = 1.0;
    return out;
  }
  double lmax = -std::numeric_limits<double>::infinity();
  std::vector<double> logt(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) {
    logt[static_cast<std::size_t>(i)] = p.nu * log_binomial(n, i) +
                                        static_cast<double>(i) * std::log(p.p) +
                                        static_cast<double>(n - i) * std::log1p(-p.p);
    lmax = std::max(lmax, logt[static_cast<std::size_t>(i)]);
  }
  KahanSum s;
  for (long i = 0; i <= n; ++i) {
    out.probs[static_cast<std::size_t>(i)] = std::exp(logt[static_cast<std::size_t>(i)] - lmax);
    s.add(out.probs[static_cast<std::size_t>(i)]);
  }
  for (double& q : out.probs) q /= s.value();
  return out;
}

inline double cmb_pmf(const CmbParams& p, long j) {
  if (j < 0 || j > p.n) throw std::invalid_argument("cmb_pmf: j out of range");
  if (p.p == 0.0) return j == 0 ? 1.0 : 0.0;
  if (p.p == 1.0) return j == p.n ? 1.0 : 0.0;
  const double lt = p.nu * log_binomial(p.n, j) + static_cast<double>(j) * std::log(p.p) +
                    static_cast<double>(p.n - j) * std::log1p(-p.p);
  return std::exp(lt - cmb_log_norm_const(p));
}

// ---------------------------------------------------------------------------
// CMPB
// ---------------------------------------------------------------------------

/// Mass function of the Conway-Maxwell-Poisson binomial distribution.
/// The Poisson-binomial kernel S_k is built by the standard O(n^2) one-trial-
/// at-a-time convolution, then tilted by binom(n,k)^{nu-1} and normalized.
inline FinitePmf cmpb_pmf(const CmpbParams& p) {
  const long n = p.n();
  std::vector<double> s(static_cast<std::size_t>(n + 1), 0.0);
  s[0] = 1.0;
  long filled = 0;
  for (double pi : p.p_list) {
    for (long k = filled + 1; k >= 1; --k) {
      s[static_cast<std::size_t>(k)] =
          s[static_cast<std::size_t>(k)] * (1.0 - pi) + s[static_cast<std::size_t>(k - 1)] * pi;
    }
    s[0] *= (1.0 - pi);
    ++filled;
  }
  FinitePmf out;
  out.offset = 0;
  out.tail_bound = 0.0;
  out.probs.assign(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> logw(static_cast<std::size_t>(n + 1));
  double lmax = -std::numeric_limits<double>::infinity();
  for (long k = 0; k <= n; ++k) {
    const double sk = s[static_cast<std::size_t>(k)];
    logw[static_cast<std::size_t>(k)] =
        sk > 0.0 ? std::log(sk) + (p.nu - 1.0) * log_binomial(n, k)
                 : -std::numeric_limits<double>::infinity();
    lmax = std::max(lmax, logw[static_cast<std::size_t>(k)]);
  }
  KahanSum total;
  for (long k = 0; k <= n; ++k) {
    out.probs[static_cast<std::size_t>(k)] = std::exp(logw[static_cast<std::size_t>(k)] - lmax);
    total.add(out.probs[static_cast<std::size_t>(k)]);
  }
  for (double& q : out.probs) q /= total.value();
  return out;
}

// ---------------------------------------------------------------------------
// Mixed CMP
// ---------------------------------------------------------------------------

inline double mixed_cmp_pmf(const MixingDistribution& mix, double nu, long j) {
  if (j < 0) throw std::invalid_argument("mixed_cmp_pmf: j must be >= 0");
  KahanSum s;
  for (const auto& a : mix.atoms) {
    if (a.value == 0.0) {
      if (j == 0) s.add(a.weight);
      continue;
    }
    s.add(a.weight * cmp_pmf(CmpParams(a.value, nu), j));
  }
  return s.value();
}

/// Window pmf of the mixture, wide enough that every atom's certified tail
/// is below tail_eps.
inline FinitePmf mixed_cmp_truncated_pmf(const MixingDistribution& mix, double nu,
                                         double tail_eps = 1e-12) {
  FinitePmf out;
  out.offset = 0;
  double tail = 0.0;
  for (const auto& a : mix.atoms) {
    if (a.value == 0.0) {
      if (out.probs.empty()) out.probs.assign(1, 0.0);
      out.probs[0] += a.weight;
      continue;
    }
    const FinitePmf part = cmp_truncated_pmf(CmpParams(a.value, nu), tail_eps);
    if (part.size() > static_cast<long>(out.probs.size())) {
      out.probs.resize(static_cast<std::size_t>(part.size()), 0.0);
    }
    for (long i = 0; i < part.size(); ++i) {
      out.probs[static_cast<std::size_t>(i)] += a.weight * part.probs[static_cast<std::size_t>(i)];
    }
    tail += a.weight * part.tail_bound;
  }
  out.tail_bound = tail;
  return out;
}

// ---------------------------------------------------------------------------
// CMP / CMB conditional relation
// ---------------------------------------------------------------------------

/// Max absolute deviation between P(X1 = j | X1 + X2 = n) computed by direct
/// conditioning of two independent CMPs and the CMB(n, l1/(l1+l2), nu) pmf.
inline double conditional_cmb_check(double lambda1, double lambda2, double nu, long n) {
  if (n < 1) throw std::invalid_argument("conditional_cmb_check: n must be >= 1");
  const CmpParams p1(lambda1, nu);
  const CmpParams p2(lambda2, nu);
  std::vector<double> logu(static_cast<std::size_t>(n + 1));
  double lmax = -std::numeric_limits<double>::infinity();
  for (long j = 0; j <= n; ++j) {
    logu[static_cast<std::size_t>(j)] = static_cast<double>(j) * std::log(lambda1) -
                                        nu * log_factorial(j) +
                                        static_cast<double>(n - j) * std::log(lambda2) -
                                        nu * log_factorial(n - j);
    lmax = std::max(lmax, logu[static_cast<std::size_t>(j)]);
  }
  KahanSum total;
  std::vector<double> u(static_cast<std::size_t>(n + 1));
  for (long j = 0; j <= n; ++j) {
    u[static_cast<std::size_t>(j)] = std::exp(logu[static_cast<std::size_t>(j)] - lmax);
    total.add(u[static_cast<std::size_t>(j)]);
  }
  const FinitePmf cmb = cmb_truncated_pmf(CmbParams(n, lambda1 / (lambda1 + lambda2), nu));
  double dev = 0.0;
  for (long j = 0; j <= n; ++j) {
    dev = std::max(dev, std::abs(u[static_cast<std::size_t>(j)] / total.value() -
                                 cmb.probs[static_cast<std::size_t>(j)]));
  }
  return dev;
}

// ---------------------------------------------------------------------------
// FinitePmf member helpers
// ---------------------------------------------------------------------------

inline double FinitePmf::survival(double t) const {
  KahanSum s;
  for (long k = size() - 1; k >= 0; --k) {
    const long j = offset + k;
    if (static_cast<double>(j) > t) s.add(probs[static_cast<std::size_t>(k)]);
  }
  return s.value();
}

inline double FinitePmf::mean() const {
  KahanSum s;
  for (long k = 0; k < size(); ++k) {
    s.add(static_cast<double>(offset + k) * probs[static_cast<std::size_t>(k)]);
  }
  return s.value();
}

inline double FinitePmf::moment(int k) const {
  KahanSum s;
  for (long i = 0; i < size(); ++i) {
    s.add(std::pow(static_cast<double>(offset + i), k) * probs[static_cast<std::size_t>(i)]);
  }
  return s.value();
}

}  // namespace cmpkit
