#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "smdp/scale.hpp"
#include "smdp/spectral.hpp"

namespace smdp {

enum class EquationTag { original, deterministic, moderate, shifted, skeleton };

std::string to_string(EquationTag tag);

/// States on the uniform grid t_k = k dt, k = 0..steps; column k of states()
/// holds the coefficients at t_k.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double dt, Eigen::MatrixXcd states, EquationTag tag,
             std::optional<DeviationScale> scale = std::nullopt);

  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return static_cast<std::size_t>(states_.cols()) - 1; }
  Eigen::Index modes() const noexcept { return states_.rows(); }
  double horizon() const noexcept { return dt_ * static_cast<double>(steps()); }
  double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }
  EquationTag tag() const noexcept { return tag_; }
  const std::optional<DeviationScale>& scale() const noexcept { return scale_; }

  const Eigen::MatrixXcd& states() const noexcept { return states_; }
  Eigen::MatrixXcd& states() noexcept { return states_; }
  auto state(std::size_t k) const { return states_.col(static_cast<Eigen::Index>(k)); }

  /// Linear interpolation in time; grid times are returned exactly.
  SpectralField at(double t) const;

  /// max_k ||state_k||
  double sup_norm() const;

 private:
  double dt_ = 0;
  Eigen::MatrixXcd states_;
  EquationTag tag_ = EquationTag::deterministic;
  std::optional<DeviationScale> scale_;
};

/// max_k ||a_k - b_k|| for trajectories on the same grid.
double sup_distance(const Trajectory& a, const Trajectory& b);

}  // namespace smdp
