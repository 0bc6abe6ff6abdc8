// cmpkit command-line front end: single-point evaluations, bound tables,
// and the CMB -> CMP convergence-rate study with CSV output.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmpkit/cmpkit.hpp"

namespace {

using namespace cmpkit;

void print_kv(const std::string& key, double v) {
  std::cout << key << "=" << format_double(v) << "\n";
}

void print_kv(const std::string& key, long v) { std::cout << key << "=" << v << "\n"; }

void print_kv(const std::string& key, bool v) {
  std::cout << key << "=" << (v ? "true" : "false") << "\n";
}

double default_tol() {
  if (const char* env = std::getenv("CMPKIT_TOL")) {
    return parse_double(env);
  }
  return 1e-12;
}

void run_norm(double lambda, double nu, double tol) {
  const CmpParams p(lambda, nu);
  const SeriesEval z = cmp_log_norm_const(p, tol);
  print_kv("logZ", z.value);
  print_kv("Z", std::exp(z.value));
  print_kv("abs_error_bound", z.abs_error_bound);
  print_kv("terms", z.terms_used);
}

void run_pmf(double lambda, double nu, long j, double tol) {
  const CmpParams p(lambda, nu);
  const double lp = cmp_log_pmf(p, j, std::min(tol, 1e-13));
  print_kv("pmf", std::exp(lp));
  print_kv("log_pmf", lp);
  print_kv("cdf", cmp_cdf(p, j));
}

void run_moments(double lambda, double nu) {
  const MomentSummary s = cmp_moment_summary(CmpParams(lambda, nu));
  print_kv("mean", s.mean);
  print_kv("variance", s.variance);
  print_kv("skewness", s.skewness);
  print_kv("excess_kurtosis", s.excess_kurtosis);
  if (nu > 0.0) {
    print_kv("skewness_asymptotic", s.skewness_asymptotic);
    print_kv("excess_kurtosis_asymptotic", s.excess_kurtosis_asymptotic);
  }
}

void run_mode(double lambda, double nu) {
  const CmpParams p(lambda, nu);
  const ModePair m = cmp_mode(p);
  if (m.dual()) {
    std::cout << "modes=" << m.lower << "," << m.upper << "\n";
  } else {
    print_kv("mode", m.lower);
  }
  const MedianReport med = cmp_median_and_bound(p);
  print_kv("median", med.median);
  print_kv("mallows_holds", med.bound_holds);
}

void run_meandev(double lambda, double nu) {
  const MeanDeviationReport r = cmp_mean_deviation(CmpParams(lambda, nu));
  print_kv("exact", r.exact_formula);
  print_kv("direct", r.direct_sum.value);
  print_kv("direct_error_bound", r.direct_sum.abs_error_bound);
}

void run_ordering(double lambda, double nu) {
  const CmpParams p(lambda, nu);
  print_kv("tv_poisson_bound", tv_poisson_bound(p));
  const CentralMoments cm = cmp_central_moments(p, 2);
  print_kv("mean", cm.mean);
  print_kv("variance", cm.mu[2]);
  if (nu >= 1.0) {
    const long window = 4 * std::max(p.mode_index(), 8L) + 200;
    print_kv("poincare", poincare_estimate(p, window));
    print_kv("negative_dependence_holds", negative_dependence_check(p).holds);
  } else {
    const FinitePmf pmf = cmp_truncated_pmf(p, 1e-12);
    print_kv("reversed_order_holds",
             st_order_leq(pmf.shifted(1), power_bias(pmf, 1.0), 1e-12).holds);
  }
}

void run_stein(double lambda, double nu) {
  const CmpParams p(lambda, nu);
  print_kv("g", stein_factor_g(p));
  print_kv("delta_bound", std::min(1.0, 1.0 / lambda));
  const long J = std::max(40L, 4 * p.mode_index() + 40);
  const SteinSolution sol = stein_solution(p, {1}, J);
  print_kv("delta_attained", sol.values[2] - sol.values[1]);
  print_kv("residual_max", stein_equation_residual(sol));
}

int run_table(double lambda, double nu, const std::vector<long>& ns, const std::string& out) {
  const ConvergenceTable t = convergence_table(lambda, nu, ns);
  for (long skipped : t.skipped) {
    std::cerr << "warning: n=" << skipped << " skipped (lambda >= n^nu)\n";
  }
  if (out.empty()) {
    write_convergence_csv(std::cout, t.rows);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + out);
    write_convergence_csv(os, t.rows);
  }
  return 0;
}

int run_fit(const std::string& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open input file: " + in);
  const SlopeFit fit = loglog_fit(read_convergence_csv(is));
  print_kv("slope", fit.slope);
  print_kv("intercept", fit.intercept);
  print_kv("r_squared", fit.r_squared);
  print_kv("n_points", fit.n_points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmpkit: Conway-Maxwell-Poisson distribution toolkit"};
  app.require_subcommand(1);

  double lambda = 0.0, nu = 0.0, tol = 1e-12;
  long j = 0;
  std::vector<long> ns;
  std::string out_path, in_path;

  auto* eval = app.add_subcommand("eval", "single-point evaluations (key=value lines)");
  eval->require_subcommand(1);
  auto add_params = [&](CLI::App* cmd, bool with_j = false) {
    cmd->add_option("--lambda", lambda, "rate-like parameter")->required();
    cmd->add_option("--nu", nu, "dispersion parameter")->required();
    cmd->add_option("--tol", tol, "absolute tolerance");
    if (with_j) cmd->add_option("--j", j, "support point")->required();
  };
  auto* c_norm = eval->add_subcommand("norm", "normalizing constant");
  add_params(c_norm);
  auto* c_pmf = eval->add_subcommand("pmf", "mass function at j");
  add_params(c_pmf, true);
  auto* c_mom = eval->add_subcommand("moments", "mean/variance/skewness/kurtosis");
  add_params(c_mom);
  auto* c_mode = eval->add_subcommand("mode", "mode(s) and median");
  add_params(c_mode);
  auto* c_mdev = eval->add_subcommand("meandev", "mean deviation E|X^nu - lambda|");
  add_params(c_mdev);
  auto* c_ord = eval->add_subcommand("ordering", "dispersion bound, Poincare, orderings");
  add_params(c_ord);
  auto* c_stein = eval->add_subcommand("stein", "Stein factors and equation residual");
  add_params(c_stein);

  auto* table = app.add_subcommand("table", "bound tables as CSV");
  auto* t_conv = table->add_subcommand("convergence", "CMB -> CMP convergence study");
  t_conv->add_option("--lambda", lambda, "CMP rate")->required();
  t_conv->add_option("--nu", nu, "dispersion parameter")->required();
  t_conv->add_option("--n", ns, "comma-separated trial counts")->required()->delimiter(',');
  t_conv->add_option("--out", out_path, "output CSV path (default stdout)");
  table->require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "least-squares slope of a convergence CSV");
  fit->add_option("--in", in_path, "input CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // prints help or the parse error; keep 0 for --help, 2 for usage errors
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    tol = c_norm->count("--tol") || c_pmf->count("--tol") ? tol : default_tol();
    if (c_norm->parsed()) {
      run_norm(lambda, nu, tol);
    } else if (c_pmf->parsed()) {
      run_pmf(lambda, nu, j, tol);
    } else if (c_mom->parsed()) {
      run_moments(lambda, nu);
    } else if (c_mode->parsed()) {
      run_mode(lambda, nu);
    } else if (c_mdev->parsed()) {
      run_meandev(lambda, nu);
    } else if (c_ord->parsed()) {
      run_ordering(lambda, nu);
    } else if (c_stein->parsed()) {
      run_stein(lambda, nu);
    } else if (t_conv->parsed()) {
      return run_table(lambda, nu, ns, out_path);
    } else if (fit->parsed()) {
      return run_fit(in_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
