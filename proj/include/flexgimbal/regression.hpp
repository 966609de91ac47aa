#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "flexgimbal/error.hpp"

namespace flexgimbal {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;

  double operator()(double x) const { return slope * x + intercept; }
};

/// Coefficient of determination, 1 − SS_res/SS_tot, confined to [0, 1].
/// A constant response that is fitted exactly counts as R² = 1.
inline double coefficient_of_determination(double ss_res, double ss_tot) {
  if (!(ss_tot > 0.0)) return ss_res > 0.0 ? 0.0 : 1.0;
  return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

/// Ordinary least squares y = slope·x + intercept, uniform weights.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidParameter("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw RankDeficiency("a line fit needs at least two points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, syy = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    scale = std::max(scale, std::abs(x[i]));
  }
  if (!(sxx > 1e-24 * scale * scale * static_cast<double>(n)) || sxx == 0.0)
    throw RankDeficiency("all abscissae are identical; the slope is undetermined");

  LineFit fit;
  fit.n_points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit(x[i]);
    ss_res += r * r;
  }
  fit.r_squared = coefficient_of_determination(ss_res, syy);
  return fit;
}

}  // namespace flexgimbal
