#include "smdp/stats.hpp"

#include <cmath>

#include "smdp/errors.hpp"

namespace smdp {

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
  if (trials == 0) throw DomainError("Wilson interval needs at least one trial");
  if (hits > trials) throw DomainError("more hits than trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  Interval out;
  out.estimate = p;
  out.lower = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  out.upper = hits == trials ? 1.0 : std::min(1.0, centre + half);
  return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("fit_line: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("fit_line needs at least two points");
  double mx = 0;
  double my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0;
  double sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw DomainError("fit_line needs two distinct abscissae");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      sse += r * r;
    }
    fit.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace smdp
