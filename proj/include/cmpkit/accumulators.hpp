#pragma once

#include <algorithm>
#include <vector>

namespace cmpkit {

/// Kahan compensated accumulator.  Drop-in for a plain double sum where the
/// 1e-12-level contracts require roundoff below the naive n*eps growth.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }

  KahanSum& operator+=(double x) {
    add(x);
    return *this;
  }

  double value() const { return sum; }
};

/// Sums terms smallest-magnitude first with compensation.  Used for the CMB
/// normalizing constant where the term spread can reach many orders of
/// magnitude.
inline double sorted_compensated_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  KahanSum s;
  for (double t : terms) s.add(t);
  return s.value();
}

}  // namespace cmpkit
