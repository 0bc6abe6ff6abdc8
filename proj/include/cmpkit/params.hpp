#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmpkit {

/// Parameters (lambda, nu) of a CMP distribution.
///
/// Admissible iff lambda > 0 and nu > 0, or 0 < lambda < 1 and nu == 0.
/// Construction rejects anything else, so downstream code never needs to
/// re-validate.
struct CmpParams {
  double lambda;
  double nu;

  CmpParams(double lambda_, double nu_) : lambda(lambda_), nu(nu_) {
    if (!std::isfinite(lambda) || !std::isfinite(nu)) {
      throw std::invalid_argument("CmpParams: non-finite parameter");
    }
    const bool ok = (lambda > 0.0 && nu > 0.0) || (lambda > 0.0 && lambda < 1.0 && nu == 0.0);
    if (!ok) {
      throw std::invalid_argument("CmpParams: inadmissible (lambda=" + std::to_string(lambda) +
                                  ", nu=" + std::to_string(nu) + ")");
    }
  }

  /// Location of the largest series term lambda^i/(i!)^nu.
  long mode_index() const {
    if (nu == 0.0) return 0;
    const double m = std::floor(std::pow(lambda, 1.0 / nu));
    if (m > 9e15) {
      throw std::domain_error("CmpParams: series mode exceeds the tractable range");
    }
    return static_cast<long>(m);
  }
};

/// Parameters (n, p, nu) of a CMB distribution.
struct CmbParams {
  long n;
  double p;
  double nu;

  CmbParams(long n_, double p_, double nu_) : n(n_), p(p_), nu(nu_) {
    if (n < 1) throw std::invalid_argument("CmbParams: n must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("CmbParams: p must be in [0,1]");
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("CmbParams: nu must be >= 0");
  }
};

/// Per-trial success probabilities of a CMPB distribution.
struct CmpbParams {
  std::vector<double> p_list;
  double nu;

  CmpbParams(std::vector<double> p_list_, double nu_) : p_list(std::move(p_list_)), nu(nu_) {
    if (p_list.empty()) throw std::invalid_argument("CmpbParams: empty p_list");
    for (double p : p_list) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("CmpbParams: p_i must be in [0,1]");
    }
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("CmpbParams: nu must be >= 0");
  }

  long n() const { return static_cast<long>(p_list.size()); }
};

/// Finite-support mixing distribution for the random CMP rate parameter.
struct MixingDistribution {
  struct Atom {
    double value;
    double weight;
  };
  std::vector<Atom> atoms;

  explicit MixingDistribution(std::vector<Atom> atoms_) : atoms(std::move(atoms_)) {
    if (atoms.empty()) throw std::invalid_argument("MixingDistribution: no atoms");
    double w = 0.0;
    for (const Atom& a : atoms) {
      if (!(a.value >= 0.0)) throw std::invalid_argument("MixingDistribution: negative atom value");
      if (!(a.weight > 0.0)) throw std::invalid_argument("MixingDistribution: non-positive weight");
      w += a.weight;
    }
    if (std::abs(w - 1.0) > 1e-12) {
      throw std::invalid_argument("MixingDistribution: weights sum to " + std::to_string(w));
    }
  }

  double mean() const {
    double m = 0.0;
    for (const Atom& a : atoms) m += a.weight * a.value;
    return m;
  }

  double mean_abs_deviation(double lambda) const {
    double d = 0.0;
    for (const Atom& a : atoms) d += a.weight * std::abs(a.value - lambda);
    return d;
  }
};

/// A scalar produced by series summation, with a certified absolute error
/// bound: the exact value lies in [value - abs_error_bound, value + abs_error_bound].
struct SeriesEval {
  double value = 0.0;
  double abs_error_bound = 0.0;
  long terms_used = 0;
};

/// A probability mass function on the integer window
/// [offset, offset + probs.size() - 1], plus a certified bound on the mass
/// lying outside the window.  Never renormalized: tail_bound carries the
/// deficit so that downstream error accounting stays honest.
struct FinitePmf {
  long offset = 0;
  std::vector<double> probs;
  double tail_bound = 0.0;

  long size() const { return static_cast<long>(probs.size()); }
  long last_index() const { return offset + size() - 1; }

  /// Mass at absolute index j (zero outside the window).
  double at(long j) const {
    const long k = j - offset;
    if (k < 0 || k >= size()) return 0.0;
    return probs[static_cast<std::size_t>(k)];
  }

  /// P(X > t) restricted to the window.
  double survival(double t) const;

  /// Window mean.
  double mean() const;

  /// Window raw moment E X^k.
  double moment(int k) const;

  /// Right-shift: the pmf of X + s.
  FinitePmf shifted(long s) const {
    FinitePmf out = *this;
    out.offset += s;
    return out;
  }
};

}  // namespace cmpkit
