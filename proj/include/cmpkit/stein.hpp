#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmpkit/accumulators.hpp"
#include "cmpkit/distributions.hpp"
#include "cmpkit/params.hpp"
#include "cmpkit/transforms.hpp"

namespace cmpkit {

/// The uniform Stein-factor bound g_nu(lambda).  Branch boundaries (nu = 1,
/// lambda = 1) belong to more than one case; every case is a valid upper
/// bound, so overlaps resolve to the minimum.
inline double stein_factor_g(const CmpParams& p) {
  const double lam = p.lambda, nu = p.nu;
  double g = std::numeric_limits<double>::infinity();
  if (nu >= 1.0 && lam > 1.0) {
    const double c = std::max(1.0 + 1.0 / nu, std::pow(1.5, nu));
    const double v = c * std::pow(1.0 - std::pow(lam, -1.0 / (2.0 * nu)), 1.0 / nu - 1.0) *
                     std::pow(lam, 1.0 / (2.0 * nu) - 1.0);
    g = std::min(g, std::min(1.0, v));
  }
  if (nu <= 1.0 && nu > 0.0 && lam >= 1.0) {
    const double v = (1.0 + 1.0 / nu) *
                     std::pow(1.0 + std::pow(lam, -1.0 / (2.0 * nu)), 1.0 / nu - 1.0) *
                     std::pow(lam, 1.0 / (2.0 * nu) - 1.0);
    g = std::min(g, v);
  }
  if (nu >= 1.0 && lam <= 1.0) g = std::min(g, 1.0);
  if (nu < 1.0 && lam < 1.0) g = std::min(g, 1.0 / (1.0 - std::pow(lam, 1.0 - nu)));
  return g;
}

/// Tabulated solution f_A of the CMP Stein equation
///   1(x in A) - P(X in A) = lambda f(x+1) - x^nu f(x),  f(0) = 0.
struct SteinSolution {
  CmpParams params;
  std::vector<long> target_set;  // sorted members of A
  std::vector<double> values;    // f(0) .. f(window_end)
  long window_end = 0;
  double p_target = 0.0;  // P(X in A)

  bool in_target(long k) const {
    return std::binary_search(target_set.begin(), target_set.end(), k);
  }
};

/// Solves the Stein equation on [0, J].  The lower-sum representation is used
/// for j at or below the series mode and the complementary upper-tail sum
/// above it; the two regimes otherwise lose all precision to cancellation.
/// Within each sum, the indicator and P(X in A) parts accumulate separately
/// so the only subtraction happens once, at full magnitude.
inline SteinSolution stein_solution(const CmpParams& p, std::vector<long> target, long J) {
  if (J < 1) throw std::invalid_argument("stein_solution: J must be >= 1");
  std::sort(target.begin(), target.end());
  target.erase(std::unique(target.begin(), target.end()), target.end());
  if (!target.empty() && (target.front() < 0 || target.back() > J)) {
    throw std::invalid_argument("stein_solution: A must be a subset of {0..J}");
  }
  const double lam = p.lambda, nu = p.nu;
  const long mode = p.mode_index();
  if (J > 10000000L) {
    throw std::invalid_argument("stein_solution: window beyond the practical range");
  }

  SteinSolution sol{p, target, {}, J, 0.0};
  {
    const FinitePmf pmf = cmp_truncated_pmf(p, 1e-15);
    KahanSum pa;
    for (long a : target) pa.add(pmf.at(a));
    sol.p_target = pa.value();
  }
  const double PA = sol.p_target;

  sol.values.assign(static_cast<std::size_t>(J) + 1, 0.0);
  std::vector<char> mask(static_cast<std::size_t>(J) + 1, 0);
  for (long a : target) mask[static_cast<std::size_t>(a)] = 1;

  for (long j = 0; j < J; ++j) {
    double f = 0.0;
    if (j <= mode) {
      // f(j+1) = sum_{k=0}^{j} w_k [1(k in A) - PA], w_j = 1/lambda,
      // w_{k-1} = w_k k^nu / lambda.
      KahanSum all, ina;
      double w = 1.0 / lam;
      for (long k = j; k >= 0; --k) {
        all.add(w);
        if (mask[static_cast<std::size_t>(k)]) ina.add(w);
        if (k > 0) w *= std::pow(static_cast<double>(k), nu) / lam;
      }
      f = ina.value() - PA * all.value();
    } else {
      // f(j+1) = -sum_{k=j+1}^inf w_k [1(k in A) - PA], w_{j+1} = (j+1)^{-nu},
      // w_{k+1} = w_k lambda / (k+1)^nu, decaying above the mode.
      KahanSum all, ina;
      double w = std::pow(static_cast<double>(j) + 1.0, -nu);
      long k = j + 1;
      while (true) {
        all.add(w);
        if (k <= J && mask[static_cast<std::size_t>(k)]) ina.add(w);
        const double wnext = w * lam / std::pow(static_cast<double>(k) + 1.0, nu);
        const double rho = lam / std::pow(static_cast<double>(k) + 2.0, nu);
        if (rho < 1.0 && wnext / (1.0 - rho) < 1e-18 * (all.value() + 1.0)) break;
        w = wnext;
        ++k;
        if (k - j > 50000000L) throw std::runtime_error("stein_solution: upper sum diverged");
      }
      f = -(ina.value() - PA * all.value());
    }
    sol.values[static_cast<std::size_t>(j + 1)] = f;
  }
  return sol;
}

/// Max residual of the Stein equation over 1 <= j < window_end; a complete
/// functional test of the tabulated solution.
inline double stein_equation_residual(const SteinSolution& sol) {
  const double lam = sol.params.lambda, nu = sol.params.nu;
  double worst = 0.0;
  for (long j = 1; j < sol.window_end; ++j) {
    const double lhs = lam * sol.values[static_cast<std::size_t>(j + 1)] -
                       std::pow(static_cast<double>(j), nu) * sol.values[static_cast<std::size_t>(j)];
    const double rhs = (sol.in_target(j) ? 1.0 : 0.0) - sol.p_target;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

struct SteinFactorCheck {
  double sup_f = 0.0;      // sup_j |f_A(j)|
  double sup_delta = 0.0;  // sup_j |f_A(j+1) - f_A(j)|
};

inline SteinFactorCheck stein_bound_check(const CmpParams& p, const std::vector<long>& target,
                                          long J) {
  const SteinSolution sol = stein_solution(p, target, J);
  SteinFactorCheck out;
  for (long j = 1; j <= sol.window_end; ++j) {
    out.sup_f = std::max(out.sup_f, std::abs(sol.values[static_cast<std::size_t>(j)]));
  }
  for (long j = 0; j < sol.window_end; ++j) {
    out.sup_delta = std::max(out.sup_delta, std::abs(sol.values[static_cast<std::size_t>(j + 1)] -
                                                     sol.values[static_cast<std::size_t>(j)]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Characterising identities
// ---------------------------------------------------------------------------

/// |E[lambda f(W+1) - W^nu f(W)]| under an arbitrary window pmf.  Zero (up to
/// the truncation tail) exactly when W ~ CMP(lambda, nu).
/// f[i] is the test function at absolute index i; it must cover last+1.
inline double cmp_char_residual(const FinitePmf& pmf, const CmpParams& p,
                                std::span<const double> f) {
  if (static_cast<long>(f.size()) < pmf.last_index() + 2) {
    throw std::invalid_argument("cmp_char_residual: f must cover the window plus one");
  }
  KahanSum s;
  for (long j = std::max(pmf.offset, 0L); j <= pmf.last_index(); ++j) {
    const double w = pmf.at(j);
    if (w == 0.0) continue;
    const double jnud = j == 0 ? 0.0 : std::pow(static_cast<double>(j), p.nu);
    s.add(w * (p.lambda * f[static_cast<std::size_t>(j + 1)] -
               jnud * f[static_cast<std::size_t>(j)]));
  }
  return std::abs(s.value());
}

/// |E[p (n-Y)^nu f(Y+1) - (1-p) Y^nu f(Y)]| for the exact CMB pmf.
inline double cmb_char_residual(const CmbParams& params, std::span<const double> f) {
  if (static_cast<long>(f.size()) < params.n + 2) {
    throw std::invalid_argument("cmb_char_residual: f must cover {0..n+1}");
  }
  const FinitePmf pmf = cmb_truncated_pmf(params);
  KahanSum s;
  for (long j = 0; j <= params.n; ++j) {
    const double w = pmf.at(j);
    const double up = j == params.n ? 0.0 : std::pow(static_cast<double>(params.n - j), params.nu);
    const double down = j == 0 ? 0.0 : std::pow(static_cast<double>(j), params.nu);
    s.add(w * (params.p * up * f[static_cast<std::size_t>(j + 1)] -
               (1.0 - params.p) * down * f[static_cast<std::size_t>(j)]));
  }
  return std::abs(s.value());
}

// ---------------------------------------------------------------------------
// CMB -> CMP total variation machinery
// ---------------------------------------------------------------------------

struct TvBoundReport {
  double bound = 0.0;
  double exact_tv = 0.0;
  double exact_tv_error = 0.0;
  double moment_term = 0.0;    // first summand of the bound
  double smoothing_term = 0.0; // second summand of the bound
};

/// Stein-method bound on d_TV(CMB(n, lambda/n^nu, nu), CMP(lambda, nu)),
/// with EY and EY^2 computed exactly from the CMB pmf, plus the exact TV.
inline TvBoundReport thm31_bound(long n, double lambda, double nu) {
  const double nnu = std::pow(static_cast<double>(n), nu);
  if (!(lambda > 0.0) || !(lambda < nnu)) {
    throw std::invalid_argument("thm31_bound: need 0 < lambda < n^nu");
  }
  const CmpParams cmp(lambda, nu);
  const CmbParams cmb(n, lambda / nnu, nu);
  const FinitePmf ypmf = cmb_truncated_pmf(cmb);
  const double ey = ypmf.mean();
  const double ey2 = ypmf.moment(2);
  const double cnu = std::max(1.0, nu);
  const double m1 = std::min(1.0, 1.0 / lambda);

  TvBoundReport rep;
  rep.moment_term = lambda *
                    (lambda / (nnu - lambda) + nu * nnu * ey / (static_cast<double>(n) * (nnu - lambda))) *
                    (stein_factor_g(cmp) + (1.0 + ey) * m1);
  rep.smoothing_term = lambda * cnu / static_cast<double>(n) * (ey + ey2) * m1;
  rep.bound = rep.moment_term + rep.smoothing_term;

  const TvResult tv = tv_distance(ypmf, cmp_truncated_pmf(cmp, 1e-12));
  rep.exact_tv = tv.value;
  rep.exact_tv_error = tv.abs_error_bound;
  return rep;
}

struct SpecialLambdaReport {
  double lambda_star = 0.0;  // E Y^nu of the given CMB
  double bound = 0.0;        // min{1, lambda} (c_nu / n) (EY + EY^2)
  double exact_tv = 0.0;     // d_TV(CMB, CMP(lambda_star, nu))
  double exact_tv_error = 0.0;
};

/// The improved order-1/n bound available when the CMP rate is matched to
/// E Y^nu.
inline SpecialLambdaReport special_lambda_bound(const CmbParams& params) {
  const FinitePmf ypmf = cmb_truncated_pmf(params);
  KahanSum eynu;
  for (long j = 1; j <= params.n; ++j) {
    eynu.add(std::pow(static_cast<double>(j), params.nu) * ypmf.at(j));
  }
  SpecialLambdaReport rep;
  rep.lambda_star = eynu.value();
  const double cnu = std::max(1.0, params.nu);
  rep.bound = std::min(1.0, rep.lambda_star) * cnu / static_cast<double>(params.n) *
              (ypmf.mean() + ypmf.moment(2));
  const TvResult tv =
      tv_distance(ypmf, cmp_truncated_pmf(CmpParams(rep.lambda_star, params.nu), 1e-12));
  rep.exact_tv = tv.value;
  rep.exact_tv_error = tv.abs_error_bound;
  return rep;
}

struct LemmaMomentBounds {
  double ey_nu1_lower = 0.0;   // lower bound on E Y^{nu+1}
  double abs_dev_bound = 0.0;  // upper bound on |lambda - E Y^nu|
};

/// The two moment estimates feeding the TV bound, for Y ~ CMB(n, lambda/n^nu, nu).
inline LemmaMomentBounds lemma_moment_bounds(long n, double lambda, double nu) {
  const double nnu = std::pow(static_cast<double>(n), nu);
  if (!(lambda > 0.0) || !(lambda < nnu)) {
    throw std::invalid_argument("lemma_moment_bounds: need 0 < lambda < n^nu");
  }
  const FinitePmf ypmf = cmb_truncated_pmf(CmbParams(n, lambda / nnu, nu));
  const double ey = ypmf.mean();
  const double ey2 = ypmf.moment(2);
  const double cnu = std::max(1.0, nu);
  return {lambda * (1.0 + ey - cnu / static_cast<double>(n) * (ey + ey2)),
          lambda * (lambda / (nnu - lambda) +
                    nu * nnu * ey / (static_cast<double>(n) * (nnu - lambda)))};
}

struct MixedTvReport {
  double bound = 0.0;  // g_nu(lambda) E|xi - lambda|
  double exact_tv = 0.0;
  double exact_tv_error = 0.0;
};

/// d_TV(CMP(xi, nu), CMP(lambda, nu)) <= g_nu(lambda) E|xi - lambda| for a
/// finitely supported mixing distribution xi.
inline MixedTvReport mixed_cmp_tv_bound(const MixingDistribution& mix, double lambda, double nu) {
  const CmpParams target(lambda, nu);
  MixedTvReport rep;
  rep.bound = stein_factor_g(target) * mix.mean_abs_deviation(lambda);
  const TvResult tv =
      tv_distance(mixed_cmp_truncated_pmf(mix, nu, 1e-13), cmp_truncated_pmf(target, 1e-13));
  rep.exact_tv = tv.value;
  rep.exact_tv_error = tv.abs_error_bound;
  return rep;
}

}  // namespace cmpkit
