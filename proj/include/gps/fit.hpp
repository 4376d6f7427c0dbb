#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "gps/kernel.hpp"

namespace gps {

// Least-squares slope of log y against log x with a standard-error half width.
struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_half_width = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  int64_t n_points = 0;
};

// Points with nonpositive x or y are skipped (log undefined); at least three
// surviving points are required for a meaningful residual estimate.
inline ExponentFit fit_log_log(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> l;
  double xmin = 0.0, xmax = 0.0;
  for (auto [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(y)) continue;
    if (l.empty() || x < xmin) xmin = x;
    if (l.empty() || x > xmax) xmax = x;
    l.emplace_back(std::log(x), std::log(y));
  }
  if (l.size() < 3)
    throw RangeError("exponent fit: fewer than three usable points");
  double n = static_cast<double>(l.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : l) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw RangeError("exponent fit: degenerate abscissae");
  ExponentFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (auto [x, y] : l) {
    double r = y - (f.intercept + f.slope * x);
    ss += r * r;
  }
  double se = std::sqrt(std::max(0.0, ss / (n - 2.0)) * (n / denom));
  f.ci_half_width = 2.0 * se;
  f.window = {xmin, xmax};
  f.n_points = static_cast<int64_t>(l.size());
  return f;
}

}  // namespace gps
