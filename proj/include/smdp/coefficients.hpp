#pragma once

// The potential U(t,x), the noise coefficient g(t,u) : H0 -> H and its
// shifted forms, plus the audit of the growth/Lipschitz constants.

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "smdp/noise.hpp"
#include "smdp/scale.hpp"
#include "smdp/spectral.hpp"
#include "smdp/trajectory.hpp"

namespace smdp {

using Complex = std::complex<double>;

class Potential {
 public:
  using Evaluator = std::function<Complex(double t, double x)>;

  static Potential zero();
  static Potential constant(Complex value);
  /// U(t,x) = amplitude * sin(pi x).
  static Potential sine(Complex amplitude);

  Potential(std::string kind, Evaluator value, Evaluator dx, double k0, bool time_independent);

  Complex operator()(double t, double x) const { return value_(t, x); }
  Complex dx(double t, double x) const { return dx_(t, x); }
  /// Declared bound: |U|^2 + |dU/dx|^2 <= k0.
  double k0() const noexcept { return k0_; }
  bool time_independent() const noexcept { return time_independent_; }
  bool is_zero() const noexcept { return kind_ == "zero"; }
  const std::string& kind() const noexcept { return kind_; }

  Eigen::VectorXcd on_grid(const Basis& basis, double t) const;
  /// J x J Galerkin matrix of multiplication by U(t, .).
  Eigen::MatrixXcd matrix(const Basis& basis, double t) const;

 private:
  std::string kind_;
  Evaluator value_;
  Evaluator dx_;
  double k0_;
  bool time_independent_;
};

/// Dealiased product U(t,.) u.
SpectralField apply_potential(const Basis& basis, const Potential& potential, double t,
                              const SpectralField& u);

/// Affine multiplicative noise coefficient (g(t,u)k)(x) = (alpha(x) + beta u(x)) k(x),
/// with every product truncated back to the basis.
class NoiseCoefficient {
 public:
  using Profile = std::function<Complex(double x)>;

  NoiseCoefficient(const Basis& basis, Profile alpha, Complex beta);
  static NoiseCoefficient constant(const Basis& basis, Complex alpha, Complex beta);

  const Basis& basis() const noexcept { return basis_; }
  Complex beta() const noexcept { return beta_; }
  const Eigen::VectorXcd& alpha_on_grid() const noexcept { return alpha_; }
  bool is_zero() const noexcept { return alpha_.isZero(0.0) && beta_ == Complex(0.0); }

  /// alpha + beta u on the quadrature grid.
  Eigen::VectorXcd multiplier(const SpectralField& u) const;
  /// g(t,u) k.
  SpectralField apply(double t, const SpectralField& u, const SpectralField& k) const;
  /// g(t,u) as a J x J matrix acting on coefficient vectors.
  Eigen::MatrixXcd matrix(double t, const SpectralField& u) const;
  /// ||g(t,u)||^2 in L2(H0, H): sum_j lambda_j ||g(t,u) e_j||^2.
  double hs_norm_sq(double t, const SpectralField& u, const CovarianceSpectrum& spectrum) const;
  /// ||g(t,u)||^2 in L2(H0, V).
  double hs_norm_v_sq(double t, const SpectralField& u, const CovarianceSpectrum& spectrum) const;

 private:
  Basis basis_;
  Profile profile_;
  Eigen::VectorXcd alpha_;
  Complex beta_;
  Eigen::MatrixXcd frozen_;  // g itself when beta == 0
};

/// Everything that defines the equation apart from the initial datum.
struct Model {
  Basis basis;
  CovarianceSpectrum spectrum;
  Potential potential;
  NoiseCoefficient noise;
};

/// g evaluated along a shifted argument: g(t, shift * z + u0(t)).
/// In mdp mode shift = sqrt(eps)/a(eps); in lil mode it is computed as
/// sqrt(2 eps log log(1/eps)) directly.
class ShiftedCoefficient {
 public:
  enum class Mode { mdp, lil };
  ShiftedCoefficient(const NoiseCoefficient& base, const Trajectory& u0, DeviationScale scale,
                     Mode mode);

  double shift() const noexcept { return shift_; }
  const DeviationScale& scale() const noexcept { return scale_; }
  SpectralField argument(double t, const SpectralField& z) const;
  SpectralField apply(double t, const SpectralField& z, const SpectralField& k) const;
  Eigen::MatrixXcd matrix(double t, const SpectralField& z) const;

 private:
  const NoiseCoefficient& base_;
  const Trajectory& u0_;
  DeviationScale scale_;
  double shift_;
};

ShiftedCoefficient make_shifted(const NoiseCoefficient& base, const Trajectory& u0,
                                const DeviationScale& scale, ShiftedCoefficient::Mode mode);

/// Constants k0..k5 of the potential bound and the growth/Lipschitz/Hoelder
/// conditions on g. Derived constants are valid discrete bounds for the
/// retained modes; k2 and k4 grow with J through mu_J.
struct CoefficientConstants {
  double k0 = 0;
  double k1 = 0;
  double k2 = 0;
  double k3 = 0;
  double k4 = 0;
  double k5 = 0;
};

CoefficientConstants derive_constants(const Model& model);

struct ConditionCheck {
  std::string name;
  double min_slack = 0;  ///< min over samples of (rhs - lhs); >= 0 on pass
  double worst_ratio = 0;  ///< max over samples of lhs / rhs
  bool passed = true;
};

struct ConditionAudit {
  CoefficientConstants constants;
  std::vector<ConditionCheck> checks;
  std::size_t samples = 0;
  bool passed = true;
};

/// Randomised check of the potential bound and conditions on g with the
/// given constants; time-Hoelder is read as |t1 - t2|^2.
ConditionAudit audit_conditions(const Model& model, const CoefficientConstants& constants,
                                std::size_t samples = 1000, std::uint64_t seed = 20240917,
                                double horizon = 1.0);

}  // namespace smdp
