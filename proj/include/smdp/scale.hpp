#pragma once

#include <cmath>
#include <string>

namespace smdp {

/// Largest epsilon allowed in iterated-logarithm mode, 10^(-sqrt(10)).
inline const double kLilEpsilonMax = std::pow(10.0, -std::sqrt(10.0));

/// a(eps) = 1 / sqrt(2 log log(1/eps)); needs eps < 1/10.
double lil_scale(double epsilon);

/// sqrt(2 eps log log(1/eps)), the normalisation of the centred process.
double lil_normalisation(double epsilon);

/// exp(-2 R log log(1/eps)), the right-hand side of the deviation
/// inequalities. Equals (log(1/eps))^(-2R).
double loglog_bound(double epsilon, double rate);

enum class ScaleMode { lil, generic };

/// The deviation scale (eps, a(eps)). Construction enforces
/// 0 < eps, a < 1 and eps / a^2 < 1.
class DeviationScale {
 public:
  /// a(eps) = 1/sqrt(2 log log(1/eps)); eps must lie below kLilEpsilonMax.
  static DeviationScale lil(double epsilon);
  /// Any admissible a(eps).
  static DeviationScale generic(double epsilon, double a);
  /// a(eps) = eps^exponent with 0 < exponent < 1/2.
  static DeviationScale power(double epsilon, double exponent = 0.25);

  ScaleMode mode() const noexcept { return mode_; }
  double epsilon() const noexcept { return epsilon_; }
  double a() const noexcept { return a_; }
  /// Prefactor in front of the stochastic integral of the rescaled process.
  double noise_prefactor() const noexcept { return a_; }
  /// sqrt(eps)/a(eps): how the rescaled process re-enters g.
  double shift() const noexcept { return std::sqrt(epsilon_) / a_; }
  /// Deviation speed 1/a(eps)^2.
  double speed() const noexcept { return 1.0 / (a_ * a_); }

  std::string describe() const;

 private:
  DeviationScale(ScaleMode mode, double epsilon, double a);
  ScaleMode mode_;
  double epsilon_;
  double a_;
};

}  // namespace smdp
