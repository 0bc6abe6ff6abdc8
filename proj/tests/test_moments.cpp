#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cmpkit/cmpkit.hpp"
#include "oracles.hpp"

using namespace cmpkit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("falling factorial") {
  CHECK(falling_factorial(5, 2) == 20);
  CHECK(falling_factorial(3, 5) == 0);
  CHECK(falling_factorial(7, 0) == 1);
  CHECK(falling_factorial(0, 0) == 1);
  CHECK_THROWS_AS(falling_factorial(-1, 2), std::invalid_argument);
}

TEST_CASE("Stirling numbers of the second kind") {
  CHECK(stirling2(4, 2) == 7);
  for (int k = 1; k <= 9; ++k) {
    CHECK(stirling2(k, k) == 1);
    CHECK(stirling2(k, 1) == 1);
  }
  CHECK(stirling2(0, 0) == 1);
  CHECK_THROWS_AS(stirling2(3, 4), std::invalid_argument);

  SECTION("matches the explicit alternating sum") {
    for (int k = 1; k <= 8; ++k) {
      for (int r = 1; r <= k; ++r) {
        double s = 0.0;
        double binom = 1.0;
        for (int j = 0; j <= r; ++j) {
          const double sign = ((r - j) % 2 == 0) ? 1.0 : -1.0;
          s += sign * binom * std::pow(static_cast<double>(j), k);
          binom *= static_cast<double>(r - j) / static_cast<double>(j + 1);
        }
        s /= std::tgamma(r + 1.0);
        CHECK_THAT(static_cast<double>(stirling2(k, r)), WithinAbs(s, 1e-6));
      }
    }
  }
}

TEST_CASE("factorial-power moments equal lambda^r") {
  CHECK_THAT(cmp_factorial_power_moment(CmpParams(2.0, 3.0), 2).value, WithinAbs(4.0, 1e-9));
  CHECK_THAT(cmp_factorial_power_moment(CmpParams(1.7, 1.0), 1).value, WithinAbs(1.7, 1e-9));
  CHECK_THAT(cmp_factorial_power_moment(CmpParams(0.7, 0.5), 3).value, WithinAbs(0.343, 1e-9));

  SECTION("full grid with certified bounds") {
    for (double lam : {0.5, 1.0, 2.0, 5.0}) {
      for (double nu : {0.3, 0.5, 1.0, 2.0, 4.0}) {
        for (int r : {1, 2, 3}) {
          const SeriesEval m = cmp_factorial_power_moment(CmpParams(lam, nu), r);
          CHECK(std::abs(m.value - std::pow(lam, r)) <= m.abs_error_bound + 1e-9);
        }
      }
    }
  }
  CHECK_THROWS_AS(cmp_factorial_power_moment(CmpParams(0.5, 0.0), 1), std::domain_error);
}

TEST_CASE("CMB factorial-power moments") {
  CHECK_THAT(cmb_factorial_power_moment(CmbParams(2, 0.5, 2.0), 1), WithinAbs(4.0 / 3.0, 1e-13));
  SECTION("nu = 1 binomial factorial moments") {
    const CmbParams p(8, 0.3, 1.0);
    for (int r = 1; r <= 7; ++r) {
      const double want = falling_factorial_d(8.0, r) * std::pow(0.3, r);
      CHECK_THAT(cmb_factorial_power_moment(p, r), WithinRel(want, 1e-11));
    }
  }
  SECTION("direct summation oracle") {
    for (long n : {5L, 10L}) {
      for (double p : {0.2, 0.6}) {
        for (double nu : {0.5, 1.0, 2.0}) {
          const CmbParams params(n, p, nu);
          const FinitePmf pmf = cmb_truncated_pmf(params);
          for (int r = 1; r < n; ++r) {
            KahanSum s;
            for (long j = 0; j <= n; ++j) {
              s.add(std::pow(falling_factorial_d(static_cast<double>(j), r), nu) * pmf.at(j));
            }
            const double got = cmb_factorial_power_moment(params, r);
            CHECK_THAT(got, WithinAbs(s.value(), 1e-11) || WithinRel(s.value(), 1e-12));
          }
        }
      }
    }
  }
  CHECK_THROWS_AS(cmb_factorial_power_moment(CmbParams(5, 0.5, 1.0), 5), std::invalid_argument);
  CHECK_THROWS_AS(cmb_factorial_power_moment(CmbParams(5, 0.5, 1.0), 0), std::invalid_argument);
}

TEST_CASE("raw moments") {
  CHECK_THAT(cmp_moment(CmpParams(1.0, 1.0), 2).value, WithinAbs(2.0, 1e-10));
  // E X^nu = lambda at nu = 2
  CHECK_THAT(cmp_moment(CmpParams(4.0, 2.0), 2).value, WithinAbs(4.0, 1e-10));
  SECTION("nu = 2 mean against the Bessel oracle") {
    const double want = bessel_i(1, 2.0).value / bessel_i(0, 2.0).value;
    CHECK_THAT(cmp_moment(CmpParams(1.0, 2.0), 1).value, WithinAbs(want, 1e-12));
  }
  SECTION("two-path agreement: direct vs Stirling conversion") {
    for (double lam : {0.5, 1.0, 3.0}) {
      for (double nu : {0.5, 1.0, 2.0}) {
        for (int k = 1; k <= 4; ++k) {
          const double direct = cmp_moment(CmpParams(lam, nu), k).value;
          const double stirl = cmp_moment_via_stirling(CmpParams(lam, nu), k).value;
          CHECK_THAT(direct, WithinAbs(stirl, 1e-8));
        }
      }
    }
  }
}

TEST_CASE("asymptotic moments") {
  CHECK_THAT(cmp_moment_asymptotic(CmpParams(1e6, 2.0), 1), WithinRel(1000.0, 1e-15));
  CHECK_THAT(cmp_moment(CmpParams(1e6, 2.0), 1).value / 1000.0, WithinAbs(1.0, 0.01));
  CHECK_THAT(cmp_moment_asymptotic(CmpParams(3.0, 1.0), 1), WithinRel(3.0, 1e-15));
  CHECK_THAT(cmp_moment_asymptotic(CmpParams(1e4, 0.5), 2), WithinRel(1e16, 1e-12));
  CHECK_THAT(cmp_moment(CmpParams(1e4, 0.5), 2).value / 1e16, WithinAbs(1.0, 0.05));
}

TEST_CASE("cumulants") {
  SECTION("Poisson cumulants all equal lambda") {
    const CumulantVector kv = cmp_cumulants(CmpParams(2.0, 1.0), 4);
    REQUIRE(kv.kappas.size() == 4);
    for (double k : kv.kappas) CHECK_THAT(k, WithinAbs(2.0, 1e-8));
  }
  SECTION("kappa_1 = mean, kappa_2 = variance") {
    for (double lam : {0.5, 2.0}) {
      for (double nu : {0.5, 1.0, 3.0}) {
        const CumulantVector kv = cmp_cumulants(CmpParams(lam, nu), 2);
        const CentralMoments cm = cmp_central_moments(CmpParams(lam, nu), 2);
        CHECK_THAT(kv.kappas[0], WithinAbs(cm.mean, 1e-10));
        CHECK_THAT(kv.kappas[1], WithinAbs(cm.mu[2], 1e-10));
      }
    }
  }
  SECTION("asymptotic third cumulant") {
    const CumulantVector kv = cmp_cumulants(CmpParams(1e4, 2.0), 3);
    const double ratio = kv.kappas[2] / cmp_cumulant_asymptotic(CmpParams(1e4, 2.0), 3);
    CHECK(ratio >= 0.9);
    CHECK(ratio <= 1.1);
  }
  SECTION("nu = 2 variance from Bessel forms") {
    const double r = bessel_i(1, 2.0).value / bessel_i(0, 2.0).value;
    const CumulantVector kv = cmp_cumulants(CmpParams(1.0, 2.0), 2);
    CHECK_THAT(kv.kappas[1], WithinAbs(1.0 - r * r, 1e-10));
  }
  CHECK_THROWS_AS(cmp_cumulants(CmpParams(1.0, 1.0), 9), std::invalid_argument);
  CHECK_THROWS_AS(cmp_cumulants(CmpParams(1.0, 1.0), 0), std::invalid_argument);
}

TEST_CASE("moment summary") {
  SECTION("Poisson skewness and kurtosis") {
    for (double lam : {1.0, 4.0, 9.0}) {
      const MomentSummary s = cmp_moment_summary(CmpParams(lam, 1.0));
      CHECK_THAT(s.skewness, WithinAbs(1.0 / std::sqrt(lam), 1e-8));
      CHECK_THAT(s.excess_kurtosis, WithinAbs(1.0 / lam, 1e-8));
    }
  }
  SECTION("asymptotic skewness at nu = 2") {
    const MomentSummary s = cmp_moment_summary(CmpParams(1e4, 2.0));
    CHECK_THAT(s.skewness / (std::pow(1e4, -0.25) / std::sqrt(2.0)), WithinAbs(1.0, 0.1));
    CHECK_THAT(s.skewness_asymptotic, WithinRel(std::pow(1e4, -0.25) / std::sqrt(2.0), 1e-13));
  }
  SECTION("nu = 2 mean and variance") {
    const double r = bessel_i(1, 2.0).value / bessel_i(0, 2.0).value;
    const MomentSummary s = cmp_moment_summary(CmpParams(1.0, 2.0));
    CHECK_THAT(s.mean, WithinAbs(r, 1e-10));
    CHECK_THAT(s.variance, WithinAbs(1.0 - r * r, 1e-10));
  }
  SECTION("dispersion direction follows nu") {
    for (double lam : {0.5, 1.0, 2.0, 5.0}) {
      const MomentSummary over = cmp_moment_summary(CmpParams(lam, 0.5));
      CHECK(over.variance > over.mean);
      const MomentSummary under = cmp_moment_summary(CmpParams(lam, 2.0));
      CHECK(under.variance < under.mean);
    }
  }
}

TEST_CASE("variance identity Var X = lambda d(EX)/dlambda") {
  for (double lam : {0.5, 1.0, 2.0, 5.0}) {
    for (double nu : {0.3, 0.5, 1.0, 2.0, 4.0}) {
      const double h = lam * 1e-5;
      const double up = cmp_moment(CmpParams(lam + h, nu), 1).value;
      const double dn = cmp_moment(CmpParams(lam - h, nu), 1).value;
      const double lhs = lam * (up - dn) / (2.0 * h);
      const double var = cmp_central_moments(CmpParams(lam, nu), 2).mu[2];
      CHECK_THAT(lhs / var, WithinAbs(1.0, 1e-4));
    }
  }
}

TEST_CASE("nu = 2 closed forms for falling-factorial moments") {
  for (double lam : {0.5, 1.0, 4.0}) {
    const double x = 2.0 * std::sqrt(lam);
    const double i0 = bessel_i(0, x).value;
    const FinitePmf pmf = cmp_truncated_pmf(CmpParams(lam, 2.0), 1e-14);
    for (int m = 1; m <= 3; ++m) {
      KahanSum s;
      for (long j = 0; j < pmf.size(); ++j) {
        s.add(falling_factorial_d(static_cast<double>(j), m) * pmf.at(j));
      }
      const double want = std::pow(lam, 0.5 * m) * bessel_i(m, x).value / i0;
      CHECK_THAT(s.value(), WithinAbs(want, 1e-9));
    }
  }
}

TEST_CASE("modes") {
  SECTION("CMP formula cases") {
    const ModePair single = cmp_mode(CmpParams(6.25, 2.0));
    CHECK(single.lower == 2);
    CHECK_FALSE(single.dual());
    const ModePair dual = cmp_mode(CmpParams(9.0, 2.0));
    CHECK(dual.lower == 2);
    CHECK(dual.upper == 3);
  }
  SECTION("CMP argmax oracle across the grid") {
    for (double lam : {0.5, 1.0, 2.5, 9.0, 16.0}) {
      for (double nu : {0.5, 1.0, 2.0, 3.0}) {
        const ModePair m = cmp_mode(CmpParams(lam, nu));
        const std::vector<long> am = oracles::pmf_argmax(cmp_truncated_pmf(CmpParams(lam, nu)));
        CHECK(std::find(am.begin(), am.end(), m.lower) != am.end());
        CHECK(std::find(am.begin(), am.end(), m.upper) != am.end());
        if (m.dual()) CHECK(am.size() >= 2);
      }
    }
  }
  SECTION("CMB formula and argmax") {
    for (double nu : {0.5, 1.0, 2.0}) {
      const ModePair m = cmb_mode(CmbParams(5, 0.5, nu));
      CHECK(m.lower == 2);
      CHECK(m.upper == 3);
    }
    CHECK(cmb_mode(CmbParams(10, 0.3, 1.0)).lower == 3);
    CHECK_FALSE(cmb_mode(CmbParams(10, 0.3, 1.0)).dual());
    for (long n : {5L, 10L, 17L}) {
      for (double p : {0.2, 0.5, 0.8}) {
        for (double nu : {0.5, 1.0, 2.0, 3.0}) {
          const ModePair m = cmb_mode(CmbParams(n, p, nu));
          const std::vector<long> am = oracles::pmf_argmax(cmb_truncated_pmf(CmbParams(n, p, nu)));
          CHECK(std::find(am.begin(), am.end(), m.lower) != am.end());
          CHECK(std::find(am.begin(), am.end(), m.upper) != am.end());
        }
      }
    }
    CHECK(cmb_mode(CmbParams(6, 0.0, 2.0)).upper == 0);
    CHECK(cmb_mode(CmbParams(6, 1.0, 2.0)).lower == 6);
  }
}

TEST_CASE("median and the Mallows bound") {
  const MedianReport r1 = cmp_median_and_bound(CmpParams(1.0, 1.0));
  CHECK(r1.median == 1);
  CHECK(r1.bound_holds);

  const MedianReport r2 = cmp_median_and_bound(CmpParams(1e4, 2.0));
  CHECK(std::abs(r2.mean - static_cast<double>(r2.median)) <= r2.sigma);
  CHECK(std::abs(static_cast<double>(r2.median) - 100.0) <= 2.0 * 10.0);

  for (double lam : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    for (double nu : {0.3, 0.5, 1.0, 2.0, 4.0}) {
      CHECK(cmp_median_and_bound(CmpParams(lam, nu)).bound_holds);
    }
  }
}

TEST_CASE("mean deviation E|X^nu - lambda|") {
  SECTION("Poisson closed form at lambda = 1") {
    const MeanDeviationReport r = cmp_mean_deviation(CmpParams(1.0, 1.0));
    CHECK_THAT(r.exact_formula, WithinAbs(2.0 / std::exp(1.0), 1e-10));
  }
  SECTION("nu = 2 Bessel value") {
    const MeanDeviationReport r = cmp_mean_deviation(CmpParams(1.0, 2.0));
    CHECK_THAT(r.exact_formula, WithinAbs(2.0 / bessel_i(0, 2.0).value, 1e-10));
  }
  SECTION("closed form equals the direct sum on the grid") {
    for (double lam : {0.5, 1.0, 2.0, 5.0}) {
      for (double nu : {0.3, 0.5, 1.0, 2.0, 4.0}) {
        const MeanDeviationReport r = cmp_mean_deviation(CmpParams(lam, nu));
        CHECK_THAT(r.exact_formula, WithinAbs(r.direct_sum.value, 1e-9));
      }
    }
  }
  CHECK_THROWS_AS(cmp_mean_deviation(CmpParams(0.5, 0.0)), std::invalid_argument);
}

TEST_CASE("Bessel oracle") {
  CHECK_THAT(bessel_i(0, 2.0).value, WithinAbs(2.2795853023360673, 1e-15));
  CHECK_THAT(bessel_i(1, 2.0).value, WithinAbs(1.5906368546373291, 1e-15));
  SECTION("cross-check against std::cyl_bessel_i") {
    for (int r : {0, 1, 2, 3}) {
      for (double x : {0.5, 1.0, 2.0, 4.0, 10.0}) {
        CHECK_THAT(bessel_i(r, x).value, WithinRel(std::cyl_bessel_i(r, x), 1e-12));
      }
    }
  }
  SECTION("Turan inequality") {
    for (double x : {0.5, 2.0, 10.0}) {
      const double i0 = bessel_i(0, x).value;
      const double i1 = bessel_i(1, x).value;
      const double i2 = bessel_i(2, x).value;
      CHECK(i1 * i1 > i0 * i2);
    }
  }
  CHECK_THROWS_AS(bessel_i(-1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bessel_i(0, 0.0), std::invalid_argument);
}

TEST_CASE("small-p power moment sign") {
  for (long n : {5L, 10L}) {
    for (double p : {0.001, 0.01}) {
      for (double nu : {2.0, 3.0}) {
        const FinitePmf pmf = cmb_truncated_pmf(CmbParams(n, p, nu));
        KahanSum s;
        for (long j = 1; j <= n; ++j) s.add(std::pow(static_cast<double>(j), nu) * pmf.at(j));
        CHECK(s.value() <= std::pow(static_cast<double>(n), nu) * p);
      }
      for (double nu : {0.3, 0.7}) {
        const FinitePmf pmf = cmb_truncated_pmf(CmbParams(n, p, nu));
        KahanSum s;
        for (long j = 1; j <= n; ++j) s.add(std::pow(static_cast<double>(j), nu) * pmf.at(j));
        CHECK(s.value() >= std::pow(static_cast<double>(n), nu) * p);
      }
    }
  }
}
