#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "smdp/dynamics.hpp"

namespace smdp {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for a binomial proportion. The estimate is hits/n.
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = kZ95);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept; needs two distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace smdp
