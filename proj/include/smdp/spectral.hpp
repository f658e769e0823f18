#pragma once

// Dirichlet sine basis on the unit interval. A field is stored as its
// coefficients c_j against e_j(x) = sqrt(2) sin(j pi x), j = 1..J; pointwise
// work happens on a composite-midpoint grid of P points and is projected
// straight back onto the J retained modes.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "smdp/errors.hpp"

namespace smdp {

template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using RealMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

/// (j pi)^2, the j-th eigenvalue of -d^2/dx^2 with Dirichlet conditions on
/// (0,1). `j` is 1-based and must not exceed `mode_count`.
template <typename Real = double>
Real dirichlet_eigenvalue(Eigen::Index j, Eigen::Index mode_count) {
  if (j < 1 || j > mode_count) {
    throw ModeIndexError("mode index " + std::to_string(j) + " outside [1, " +
                         std::to_string(mode_count) + "]");
  }
  const Real w = static_cast<Real>(j) * std::numbers::pi_v<Real>;
  return w * w;
}

template <typename Real>
class SpectralBasis {
 public:
  using Scalar = std::complex<Real>;
  using Coefficients = ComplexVector<Real>;
  using GridValues = ComplexVector<Real>;

  /// `grid_points == 0` selects the default P = 4J.
  explicit SpectralBasis(Eigen::Index modes, Eigen::Index grid_points = 0)
      : modes_(modes), points_(grid_points == 0 ? 4 * modes : grid_points) {
    if (modes_ < 1) throw DomainError("basis needs at least one mode");
    if (points_ < 2 * modes_ + 1) {
      throw DomainError("quadrature grid needs P >= 2J+1 points, got P=" +
                        std::to_string(points_) + " for J=" + std::to_string(modes_));
    }
    const Real pi = std::numbers::pi_v<Real>;
    const Real root2 = std::sqrt(Real(2));
    eigenvalues_.resize(modes_);
    for (Eigen::Index j = 0; j < modes_; ++j) {
      eigenvalues_[j] = dirichlet_eigenvalue<Real>(j + 1, modes_);
    }
    grid_.resize(points_);
    synthesis_.resize(points_, modes_);
    for (Eigen::Index p = 0; p < points_; ++p) {
      grid_[p] = (Real(p) + Real(0.5)) / Real(points_);
      for (Eigen::Index j = 0; j < modes_; ++j) {
        synthesis_(p, j) = root2 * std::sin(Real(j + 1) * pi * grid_[p]);
      }
    }
    analysis_ = synthesis_.transpose() / Real(points_);
    synthesis_c_ = synthesis_.template cast<Scalar>();
    analysis_c_ = analysis_.template cast<Scalar>();
  }

  Eigen::Index modes() const noexcept { return modes_; }
  Eigen::Index grid_points() const noexcept { return points_; }
  Real eigenvalue(Eigen::Index j) const { return dirichlet_eigenvalue<Real>(j, modes_); }
  const RealVector<Real>& eigenvalues() const noexcept { return eigenvalues_; }
  const RealVector<Real>& grid() const noexcept { return grid_; }
  /// P x J matrix of e_j(x_p).
  const RealMatrix<Real>& synthesis() const noexcept { return synthesis_; }
  /// J x P quadrature projection, the left inverse of synthesis().
  const RealMatrix<Real>& analysis() const noexcept { return analysis_; }

  template <typename Derived>
  Coefficients to_coefficients(const Eigen::MatrixBase<Derived>& samples) const {
    if (samples.size() != points_) {
      throw ShapeError("expected " + std::to_string(points_) + " grid samples, got " +
                       std::to_string(samples.size()));
    }
    return analysis_c_ * samples;
  }

  template <typename Derived>
  GridValues from_coefficients(const Eigen::MatrixBase<Derived>& coefficients) const {
    if (coefficients.size() != modes_) {
      throw ShapeError("expected " + std::to_string(modes_) + " coefficients, got " +
                       std::to_string(coefficients.size()));
    }
    return synthesis_c_ * coefficients;
  }

  /// Dealiased product m(x) * u(x): multiply on the grid, truncate to J modes.
  template <typename DerivedM, typename DerivedU>
  Coefficients multiply(const Eigen::MatrixBase<DerivedM>& multiplier_on_grid,
                        const Eigen::MatrixBase<DerivedU>& coefficients) const {
    GridValues values = from_coefficients(coefficients);
    values.array() *= multiplier_on_grid.array();
    return to_coefficients(values);
  }

  /// J x J Galerkin matrix of "multiply by m, then truncate".
  template <typename DerivedM>
  ComplexMatrix<Real> multiplication_operator(
      const Eigen::MatrixBase<DerivedM>& multiplier_on_grid) const {
    if (multiplier_on_grid.size() != points_) {
      throw ShapeError("multiplier must be sampled on the quadrature grid");
    }
    return analysis_c_ * multiplier_on_grid.asDiagonal() * synthesis_c_;
  }

 private:
  Eigen::Index modes_;
  Eigen::Index points_;
  RealVector<Real> eigenvalues_;
  RealVector<Real> grid_;
  RealMatrix<Real> synthesis_;
  RealMatrix<Real> analysis_;
  ComplexMatrix<Real> synthesis_c_;  // complex copies for the transforms
  ComplexMatrix<Real> analysis_c_;
};

using Basis = SpectralBasis<double>;
using SpectralField = ComplexVector<double>;

template <typename Real>
struct FieldNorms {
  Real h = 0;  ///< L2 norm
  Real v = 0;  ///< H^1_0 seminorm, sqrt(sum mu_j |c_j|^2)
};

template <typename Derived>
auto h_norm(const Eigen::MatrixBase<Derived>& coefficients) {
  return coefficients.norm();
}

template <typename Real, typename Derived>
Real v_norm(const SpectralBasis<Real>& basis, const Eigen::MatrixBase<Derived>& coefficients) {
  if (coefficients.size() != basis.modes()) throw ShapeError("field/basis mode count mismatch");
  return std::sqrt((basis.eigenvalues().array() * coefficients.array().abs2()).sum());
}

template <typename Real, typename Derived>
FieldNorms<Real> norms(const SpectralBasis<Real>& basis,
                       const Eigen::MatrixBase<Derived>& coefficients) {
  return {static_cast<Real>(h_norm(coefficients)), v_norm(basis, coefficients)};
}

/// Unit coefficient vector for mode j (1-based).
inline SpectralField basis_vector(Eigen::Index modes, Eigen::Index j) {
  if (j < 1 || j > modes) throw ModeIndexError("basis vector index out of range");
  SpectralField e = SpectralField::Zero(modes);
  e[j - 1] = 1.0;
  return e;
}

}  // namespace smdp
