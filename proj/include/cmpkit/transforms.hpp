#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cmpkit/accumulators.hpp"
#include "cmpkit/distributions.hpp"
#include "cmpkit/moments.hpp"
#include "cmpkit/params.hpp"

namespace cmpkit {

/// Verdict carrier for stochastic-order checks.
struct OrderReport {
  bool holds = false;
  double max_violation = 0.0;
  std::optional<long> witness_index;
};

/// nu-power-bias of a finite pmf: P(W^(nu) = j) proportional to j^nu P(W = j).
/// nu = 0 is the identity transform.  The input tail is propagated through
/// the worst-case in-window weight ratio.
inline FinitePmf power_bias(const FinitePmf& pmf, double nu) {
  if (nu < 0.0) throw std::invalid_argument("power_bias: nu must be >= 0");
  if (nu == 0.0) return pmf;
  KahanSum ewnu;
  for (long k = 0; k < pmf.size(); ++k) {
    const long j = pmf.offset + k;
    if (j >= 1) ewnu.add(std::pow(static_cast<double>(j), nu) * pmf.probs[static_cast<std::size_t>(k)]);
  }
  if (!(ewnu.value() > 0.0)) {
    throw std::domain_error("power_bias: E W^nu = 0 (all mass at zero)");
  }
  FinitePmf out;
  out.offset = std::max(pmf.offset, 1L);
  const long count = pmf.last_index() - out.offset + 1;
  if (count <= 0) throw std::domain_error("power_bias: empty support above zero");
  out.probs.assign(static_cast<std::size_t>(count), 0.0);
  for (long j = out.offset; j <= pmf.last_index(); ++j) {
    out.probs[static_cast<std::size_t>(j - out.offset)] =
        std::pow(static_cast<double>(j), nu) * pmf.at(j) / ewnu.value();
  }
  out.tail_bound =
      pmf.tail_bound * std::pow(static_cast<double>(pmf.last_index() + 1), nu) / ewnu.value();
  return out;
}

/// Checks P <=_st Q by survival-function dominance over the union window,
/// tolerating tol plus both truncation tails.
inline OrderReport st_order_leq(const FinitePmf& P, const FinitePmf& Q, double tol = 1e-12) {
  const long lo = std::min(P.offset, Q.offset);
  const long hi = std::max(P.last_index(), Q.last_index());
  OrderReport rep;
  rep.max_violation = 0.0;
  KahanSum sp, sq;
  // Walk thresholds downward so survivals accumulate from the top.
  for (long t = hi; t >= lo - 1; --t) {
    sp.add(P.at(t + 1));
    sq.add(Q.at(t + 1));
    const double viol = sp.value() - sq.value();
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.witness_index = t;
    }
  }
  rep.holds = rep.max_violation <= tol + P.tail_bound + Q.tail_bound;
  return rep;
}

/// Negative-dependence condition: size-bias order U^(1) <=_st U + 1.
/// Only valid for nu >= 1 (the ordering reverses below 1).
inline OrderReport negative_dependence_check(const CmpParams& p, double tail_eps = 1e-12) {
  if (p.nu < 1.0) {
    throw std::invalid_argument("negative_dependence_check: requires nu >= 1");
  }
  const FinitePmf pmf = cmp_truncated_pmf(p, tail_eps);
  return st_order_leq(power_bias(pmf, 1.0), pmf.shifted(1));
}

inline OrderReport negative_dependence_check(const CmbParams& p) {
  if (p.nu < 1.0) {
    throw std::invalid_argument("negative_dependence_check: requires nu >= 1");
  }
  const FinitePmf pmf = cmb_truncated_pmf(p);
  return st_order_leq(power_bias(pmf, 1.0), pmf.shifted(1));
}

/// Total variation distance between two finite pmfs: half the L1 distance
/// over the union window.  The reported error bound is the sum of both
/// truncation tails.
struct TvResult {
  double value = 0.0;
  double abs_error_bound = 0.0;
};

inline TvResult tv_distance(const FinitePmf& P, const FinitePmf& Q) {
  const long lo = std::min(P.offset, Q.offset);
  const long hi = std::max(P.last_index(), Q.last_index());
  KahanSum s;
  for (long j = lo; j <= hi; ++j) s.add(std::abs(P.at(j) - Q.at(j)));
  return {0.5 * s.value(), P.tail_bound + Q.tail_bound};
}

/// The dispersion-based bound on d_TV(CMP(lambda,nu), Po(EX)):
/// (mu - Var)/mu for nu >= 1, (Var - mu)/mu for nu < 1.
inline double tv_poisson_bound(const CmpParams& p) {
  const CentralMoments cm = cmp_central_moments(p, 2);
  const double mu = cm.mean, var = cm.mu[2];
  return p.nu >= 1.0 ? (mu - var) / mu : (var - mu) / mu;
}

/// Poisson-style concentration bounds obtained from the convex order
/// X <=_cx Po(mu): upper tail P(X >= mu+t), lower tail P(X <= mu-t).
struct ConvexTailBounds {
  double upper = 0.0;
  std::optional<double> lower;
};

inline ConvexTailBounds convex_tail_bounds(double mu, double t) {
  if (!(mu > 0.0) || !(t > 0.0)) {
    throw std::invalid_argument("convex_tail_bounds: need mu > 0 and t > 0");
  }
  ConvexTailBounds out;
  out.upper = std::exp(t - (mu + t) * std::log1p(t / mu));
  if (t < mu) {
    out.lower = std::exp(-t + (t - mu) * std::log1p(-t / mu));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Poincare (inverse spectral gap) constant
// ---------------------------------------------------------------------------

namespace detail {

/// Smallest nonzero eigenvalue of the pencil L g = mu D g, where D = diag(pi)
/// and L is the birth-death Dirichlet form sum pi_j (g(j+1)-g(j))^2, by
/// inverse iteration on the mean-zero complement.  Returns 1/mu.
inline double poincare_from_probs(const std::vector<double>& pi, double residual_tol = 1e-10) {
  const long K = static_cast<long>(pi.size()) - 1;
  if (K < 1) throw std::invalid_argument("poincare: need at least two support points");
  double pisum = 0.0;
  for (double q : pi) pisum += q;

  auto project = [&](std::vector<double>& v) {
    double m = 0.0;
    for (long j = 0; j <= K; ++j) m += pi[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    m /= pisum;
    for (double& x : v) x -= m;
  };
  auto apply_L = [&](const std::vector<double>& v, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (long j = 0; j < K; ++j) {
      const double dv = v[static_cast<std::size_t>(j + 1)] - v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(j)] -= pi[static_cast<std::size_t>(j)] * dv;
      out[static_cast<std::size_t>(j + 1)] += pi[static_cast<std::size_t>(j)] * dv;
    }
  };
  // Thomas solve of the reduced system (row/column 0 pinned to zero).
  std::vector<double> cp(static_cast<std::size_t>(K)), dp(static_cast<std::size_t>(K));
  auto solve_L = [&](const std::vector<double>& b, std::vector<double>& x) {
    auto diag = [&](long j) {  // j = 1..K in full indexing
      return pi[static_cast<std::size_t>(j - 1)] + (j < K ? pi[static_cast<std::size_t>(j)] : 0.0);
    };
    auto off = [&](long j) { return -pi[static_cast<std::size_t>(j)]; };  // coupling j <-> j+1
    cp[0] = off(1) / diag(1);
    dp[0] = b[1] / diag(1);
    for (long j = 2; j <= K; ++j) {
      const double den = diag(j) - off(j - 1) * cp[static_cast<std::size_t>(j - 2)];
      cp[static_cast<std::size_t>(j - 1)] = (j < K) ? off(j) / den : 0.0;
      dp[static_cast<std::size_t>(j - 1)] =
          (b[static_cast<std::size_t>(j)] - off(j - 1) * dp[static_cast<std::size_t>(j - 2)]) / den;
    }
    x[0] = 0.0;
    x[static_cast<std::size_t>(K)] = dp[static_cast<std::size_t>(K - 1)];
    for (long j = K - 1; j >= 1; --j) {
      x[static_cast<std::size_t>(j)] = dp[static_cast<std::size_t>(j - 1)] -
                                       cp[static_cast<std::size_t>(j - 1)] * x[static_cast<std::size_t>(j + 1)];
    }
  };

  std::vector<double> g(static_cast<std::size_t>(K + 1));
  for (long j = 0; j <= K; ++j) g[static_cast<std::size_t>(j)] = static_cast<double>(j);
  project(g);
  std::vector<double> b(static_cast<std::size_t>(K + 1)), x(static_cast<std::size_t>(K + 1)),
      lg(static_cast<std::size_t>(K + 1));
  double mu = 0.0;
  for (int it = 0; it < 20000; ++it) {
    for (long j = 0; j <= K; ++j) b[static_cast<std::size_t>(j)] = pi[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    double bm = 0.0;
    for (double v : b) bm += v;
    bm /= static_cast<double>(K + 1);
    for (double& v : b) v -= bm;  // range of L is orthogonal to constants
    solve_L(b, x);
    project(x);
    double nrm = 0.0;
    for (long j = 0; j <= K; ++j) nrm += pi[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    nrm = std::sqrt(nrm);
    for (long j = 0; j <= K; ++j) g[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] / nrm;
    double num = 0.0, den = 0.0;
    for (long j = 0; j < K; ++j) {
      const double dv = g[static_cast<std::size_t>(j + 1)] - g[static_cast<std::size_t>(j)];
      num += pi[static_cast<std::size_t>(j)] * dv * dv;
    }
    for (long j = 0; j <= K; ++j) den += pi[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    mu = num / den;
    apply_L(g, lg);
    double res = 0.0;
    for (long j = 0; j <= K; ++j) {
      res = std::max(res, std::abs(lg[static_cast<std::size_t>(j)] -
                                   mu * pi[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)]));
    }
    if (res <= residual_tol) return 1.0 / mu;
  }
  throw std::runtime_error("poincare: inverse iteration did not reach residual tolerance");
}

}  // namespace detail

/// Poincare constant estimate for an explicit finite pmf.
inline double poincare_estimate(const FinitePmf& pmf, double residual_tol = 1e-10) {
  return detail::poincare_from_probs(pmf.probs, residual_tol);
}

/// Poincare constant of CMP(lambda, nu) on the window [0, window].
/// The window must capture all but 1e-10 of the mass.  Requires nu >= 1,
/// where the Var <= R <= mean sandwich applies.
inline double poincare_estimate(const CmpParams& p, long window, double residual_tol = 1e-10) {
  if (p.nu < 1.0) throw std::invalid_argument("poincare_estimate: requires nu >= 1");
  const FinitePmf pmf = cmp_truncated_pmf(p, 1e-12);
  if (pmf.size() > window + 1) {
    // Re-check: mass beyond the requested window must still be negligible.
    KahanSum beyond;
    for (long j = window + 1; j <= pmf.last_index(); ++j) beyond.add(pmf.at(j));
    if (beyond.value() + pmf.tail_bound > 1e-10) {
      throw std::invalid_argument("poincare_estimate: window too small for tail 1e-10");
    }
  }
  std::vector<double> probs(pmf.probs.begin(),
                            pmf.probs.begin() + std::min<long>(window + 1, pmf.size()));
  return detail::poincare_from_probs(probs, residual_tol);
}

}  // namespace cmpkit
