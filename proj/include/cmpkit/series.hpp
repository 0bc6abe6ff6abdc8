#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmpkit/accumulators.hpp"
#include "cmpkit/params.hpp"

namespace cmpkit {

inline double log_factorial(long j) { return std::lgamma(static_cast<double>(j) + 1.0); }

namespace detail {

constexpr double kPi = 3.14159265358979323846;

/// Result of one mode-outward scan over the CMP series lambda^i/(i!)^nu.
/// All sums are relative to the mode term: log_scale = log(lambda^m/(m!)^nu).
struct ScanResult {
  double sum = 0.0;        // sum of w_i = t_i / t_mode over the window
  double log_scale = 0.0;  // log t_mode
  double tail_rel = 0.0;   // certified bound on (mass outside window)/t_mode
  double wtail = 0.0;      // certified bound on sum of |i-c|^deg * w_i outside window
  long lo = 0, hi = 0, mode = 0, terms = 0;
};

/// Streams the series terms outward from the mode, visiting (i, w_i) for
/// every window term.  Each sweep stops once the remaining terms are
/// certified below tol * (partial sum) by the geometric tail bound; ratios
/// t_{i+1}/t_i = lambda/(i+1)^nu decrease in i, so the bound is exact
/// bookkeeping, not a heuristic.  Weights are chained by running ratio
/// products rather than lgamma differences: at mode indices ~1e12 the
/// absolute ulp of lgamma would otherwise corrupt tilt-sensitive sums.
///
/// deg > 0 additionally certifies the tail of sum |i-c|^deg w_i below
/// tol * ref * (partial sum), which is what moment evaluations need.
template <class Visit>
ScanResult cmp_scan(const CmpParams& p, double tol, Visit&& visit, int deg = 0,
                    double center = 0.0, double ref = 1.0) {
  const double lam = p.lambda;
  const double nu = p.nu;
  const long m = p.mode_index();
  ScanResult out;
  out.mode = m;
  out.log_scale = static_cast<double>(m) * std::log(lam) - nu * log_factorial(m);

  KahanSum s;
  const double degd = static_cast<double>(deg);

  // Upward sweep, i = m, m+1, ...
  long i = m;
  double w = 1.0;
  while (true) {
    s.add(w);
    visit(i, w);
    ++out.terms;
    const double wnext = w * lam / std::pow(static_cast<double>(i) + 1.0, nu);
    const double rho_t = lam / std::pow(static_cast<double>(i) + 2.0, nu);
    if (rho_t < 1.0) {
      const double tail_plain = wnext / (1.0 - rho_t);
      bool ok = tail_plain <= tol * s.value();
      if (ok && deg > 0) {
        const double rho_w =
            rho_t * std::pow((static_cast<double>(i) + 2.0) / (static_cast<double>(i) + 1.0), degd);
        ok = rho_w < 1.0 &&
             wnext * std::pow(static_cast<double>(i) + 1.0, degd) / (1.0 - rho_w) <=
                 tol * ref * s.value();
        if (ok) out.wtail += wnext * std::pow(static_cast<double>(i) + 1.0, degd) / (1.0 - rho_w);
      }
      if (ok) {
        out.tail_rel += tail_plain;
        out.hi = i;
        break;
      }
    }
    w = wnext;
    ++i;
    if (i - m > 2000000000L) throw std::runtime_error("cmp_scan: upper sweep diverged");
  }

  // Downward sweep, i = m-1, ..., 0.
  out.lo = 0;
  if (m > 0) {
    i = m - 1;
    w = std::pow(static_cast<double>(m), nu) / lam;
    while (i >= 0) {
      s.add(w);
      visit(i, w);
      ++out.terms;
      if (i == 0) break;
      const double wnext = w * std::pow(static_cast<double>(i), nu) / lam;
      const double rho_t = (i >= 2) ? std::pow(static_cast<double>(i) - 1.0, nu) / lam : 0.0;
      if (rho_t < 1.0) {
        const double tail_plain = wnext / (1.0 - rho_t);
        bool ok = tail_plain <= tol * s.value();
        if (ok && deg > 0) {
          const double cap = std::pow(std::max(center, static_cast<double>(i)), degd);
          ok = tail_plain * cap <= tol * ref * s.value();
          if (ok) out.wtail += tail_plain * cap;
        }
        if (ok) {
          out.tail_rel += tail_plain;
          out.lo = i;
          break;
        }
      }
      w = wnext;
      --i;
    }
    if (i < 0) out.lo = 0;
  }

  out.sum = s.value();
  // tail_rel is stored relative to the partial sum for the error contracts.
  out.tail_rel /= out.sum;
  out.wtail /= out.sum;
  return out;
}

inline ScanResult cmp_scan_sum(const CmpParams& p, double tol) {
  return cmp_scan(p, tol, [](long, double) {});
}

}  // namespace detail

/// log Z(lambda, nu): truncation error is held below tol by the stopping
/// rule; the reported abs_error_bound additionally covers the floating-point
/// floor of the log-scale anchor (m log lambda and nu lgamma(m+1) are formed
/// at full magnitude before cancelling), so it stays a certified bound even
/// in parameter regimes where that floor exceeds the requested tol.
/// nu = 0 uses the closed geometric form -log(1 - lambda).
inline SeriesEval cmp_log_norm_const(const CmpParams& p, double tol = 1e-12) {
  if (!(tol > 0.0)) throw std::invalid_argument("cmp_log_norm_const: tol must be > 0");
  if (p.nu == 0.0) {
    return {-std::log1p(-p.lambda), std::numeric_limits<double>::epsilon(), 1};
  }
  const auto scan = detail::cmp_scan_sum(p, 0.25 * tol);
  const double md = static_cast<double>(scan.mode);
  const double eps = std::numeric_limits<double>::epsilon();
  const double anchor_noise =
      eps * (std::abs(md * std::log(p.lambda)) + 2.0 * p.nu * log_factorial(scan.mode) + 8.0);
  // log(S + tail) - log(S) <= tail/S, plus the anchor and summation noise.
  const double bound = scan.tail_rel + anchor_noise;
  return {scan.log_scale + std::log(scan.sum), bound, scan.terms};
}

/// log of the leading asymptotic term of Z(lambda, nu) (Gillispie-Green form):
/// exp(nu lambda^{1/nu}) / (lambda^{(nu-1)/(2 nu)} (2 pi)^{(nu-1)/2} sqrt(nu)).
inline double cmp_log_norm_const_asymptotic(const CmpParams& p) {
  if (p.nu == 0.0) throw std::invalid_argument("asymptotic normalizer requires nu > 0");
  const double lam = p.lambda, nu = p.nu;
  return nu * std::pow(lam, 1.0 / nu) - (nu - 1.0) / (2.0 * nu) * std::log(lam) -
         0.5 * (nu - 1.0) * std::log(2.0 * detail::kPi) - 0.5 * std::log(nu);
}

/// The asymptotic normalizer itself; overflows to +inf once
/// nu lambda^{1/nu} exceeds ~709.
inline double cmp_norm_const_asymptotic(const CmpParams& p) {
  return std::exp(cmp_log_norm_const_asymptotic(p));
}

/// log(Z_asymptotic / Z), computed without forming either huge logarithm.
///
/// The mode term lambda^m/(m!)^nu and exp(nu lambda^{1/nu}) differ by a
/// quantity of size O(log m); grouping them through Stirling's series keeps
/// the ratio resolvable in double even when log Z itself is ~1e12 and its
/// ulp alone would swamp the answer.
inline double cmp_asymptotic_log_ratio(const CmpParams& p, double tol = 1e-13) {
  if (p.nu == 0.0) throw std::invalid_argument("asymptotic normalizer requires nu > 0");
  const double lam = p.lambda, nu = p.nu;
  const auto scan = detail::cmp_scan_sum(p, tol);
  const long m = scan.mode;
  const double common = -(nu - 1.0) / (2.0 * nu) * std::log(lam) -
                        0.5 * (nu - 1.0) * std::log(2.0 * detail::kPi) - 0.5 * std::log(nu) -
                        std::log(scan.sum);
  if (m < 20) {
    return nu * std::pow(lam, 1.0 / nu) - scan.log_scale + common;
  }
  const double M = std::pow(lam, 1.0 / nu);
  const double md = static_cast<double>(m);
  const double d = M - md;  // in [0,1)
  // Stirling: lgamma(m+1) = (m+1/2) log m - m + log(2 pi)/2 + s(m)
  const double s = 1.0 / (12.0 * md) - 1.0 / (360.0 * md * md * md) +
                   1.0 / (1260.0 * md * md * md * md * md);
  const double group =
      nu * (d - md * std::log1p(d / md) + 0.5 * std::log(md) + 0.5 * std::log(2.0 * detail::kPi) + s);
  return group + common;
}

}  // namespace cmpkit
