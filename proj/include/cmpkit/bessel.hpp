#pragma once

#include <cmath>
#include <stdexcept>

#include "cmpkit/params.hpp"

namespace cmpkit {

/// Modified Bessel function of the first kind,
/// I_r(x) = sum_k (x/2)^{r+2k} / (k! Gamma(r+k+1)), with a certified tail.
///
/// Accumulated in long double and summed term-by-term from k = 0; this is the
/// independent oracle for every nu = 2 identity, so it deliberately shares no
/// machinery with the CMP series evaluator.
inline SeriesEval bessel_i(int r, double x) {
  if (r < 0) throw std::invalid_argument("bessel_i: order must be >= 0");
  if (!(x > 0.0)) throw std::invalid_argument("bessel_i: x must be > 0");
  const long double h = static_cast<long double>(x) / 2.0L;
  const long double h2 = h * h;
  long double term = std::exp(static_cast<long double>(r) * std::log(h) -
                              std::lgamma(static_cast<long double>(r) + 1.0L));
  long double sum = 0.0L;
  long terms = 0;
  long double tail = 0.0L;
  for (long k = 0;; ++k) {
    sum += term;
    ++terms;
    const long double next = term * h2 / ((static_cast<long double>(k) + 1.0L) *
                                          (static_cast<long double>(r + k) + 1.0L));
    const long double rho = h2 / ((static_cast<long double>(k) + 2.0L) *
                                  (static_cast<long double>(r + k) + 2.0L));
    if (rho < 1.0L && next / (1.0L - rho) < 1e-25L * sum) {
      tail = next / (1.0L - rho);
      break;
    }
    term = next;
    if (k > 100000) throw std::runtime_error("bessel_i: series failed to converge");
  }
  return {static_cast<double>(sum),
          static_cast<double>(tail) + 4.0 * 1.1e-19 * static_cast<double>(sum), terms};
}

}  // namespace cmpkit
