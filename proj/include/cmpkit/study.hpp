#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cmpkit/stein.hpp"

namespace cmpkit {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: bad field '" + std::string(s) + "'");
  }
  return v;
}

struct ConvergenceRow {
  long n = 0;
  double exact_tv = 0.0;
  double tv_error = 0.0;
  double thm31_bound = 0.0;
  double special_bound = 0.0;  // matched-rate O(1/n) bound at the CMB's own E Y^nu
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<long> skipped;  // n values with lambda >= n^nu
};

/// One row per admissible n: exact d_TV(CMB(n, lambda/n^nu, nu), CMP(lambda, nu)),
/// the theorem bound, and the matched-rate special bound.
inline ConvergenceTable convergence_table(double lambda, double nu, std::vector<long> n_list) {
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  ConvergenceTable table;
  for (long n : n_list) {
    if (n < 1 || !(lambda < std::pow(static_cast<double>(n), nu))) {
      table.skipped.push_back(n);
      continue;
    }
    const TvBoundReport rep = thm31_bound(n, lambda, nu);
    const SpecialLambdaReport special =
        special_lambda_bound(CmbParams(n, lambda / std::pow(static_cast<double>(n), nu), nu));
    table.rows.push_back({n, rep.exact_tv, rep.exact_tv_error, rep.bound, special.bound});
  }
  return table;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long n_points = 0;
};

/// Ordinary least squares of log(exact_tv) against log(n).
inline SlopeFit loglog_fit(const std::vector<ConvergenceRow>& rows) {
  std::vector<double> xs, ys;
  for (const ConvergenceRow& r : rows) {
    if (r.exact_tv > 0.0 && r.n >= 1) {
      xs.push_back(std::log(static_cast<double>(r.n)));
      ys.push_back(std::log(r.exact_tv));
    }
  }
  const long m = static_cast<long>(xs.size());
  if (m < 2) throw std::invalid_argument("loglog_fit: need at least 2 usable rows");
  double sx = 0.0, sy = 0.0;
  for (long i = 0; i < m; ++i) {
    sx += xs[static_cast<std::size_t>(i)];
    sy += ys[static_cast<std::size_t>(i)];
  }
  const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (long i = 0; i < m; ++i) {
    const double dx = xs[static_cast<std::size_t>(i)] - mx;
    const double dy = ys[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  SlopeFit fit;
  fit.n_points = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (long i = 0; i < m; ++i) {
    const double e = ys[static_cast<std::size_t>(i)] -
                     (fit.intercept + fit.slope * xs[static_cast<std::size_t>(i)]);
    ss_res += e * e;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

// ---------------------------------------------------------------------------
// CSV: header `n,exact_tv,tv_error,thm31_bound,special_bound`, UNIX newlines.
// ---------------------------------------------------------------------------

inline constexpr const char* kConvergenceCsvHeader = "n,exact_tv,tv_error,thm31_bound,special_bound";

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << kConvergenceCsvHeader << "\n";
  for (const ConvergenceRow& r : rows) {
    os << r.n << ',' << format_double(r.exact_tv) << ',' << format_double(r.tv_error) << ','
       << format_double(r.thm31_bound) << ',' << format_double(r.special_bound) << "\n";
  }
}

inline std::vector<ConvergenceRow> read_convergence_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("convergence csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kConvergenceCsvHeader) {
    throw std::invalid_argument("convergence csv: unexpected header '" + line + "'");
  }
  std::vector<ConvergenceRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view sv(line);
    while (true) {
      const auto pos = sv.find(',');
      if (pos == std::string_view::npos) {
        fields.push_back(sv);
        break;
      }
      fields.push_back(sv.substr(0, pos));
      sv.remove_prefix(pos + 1);
    }
    if (fields.size() != 5) throw std::invalid_argument("convergence csv: bad row '" + line + "'");
    ConvergenceRow r;
    r.n = static_cast<long>(parse_double(fields[0]));
    r.exact_tv = parse_double(fields[1]);
    r.tv_error = parse_double(fields[2]);
    r.thm31_bound = parse_double(fields[3]);
    r.special_bound = parse_double(fields[4]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace cmpkit
