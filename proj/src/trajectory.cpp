#include "smdp/trajectory.hpp"

#include <cmath>

namespace smdp {

std::string to_string(EquationTag tag) {
  switch (tag) {
    case EquationTag::original: return "original";
    case EquationTag::deterministic: return "deterministic";
    case EquationTag::moderate: return "moderate";
    case EquationTag::shifted: return "shifted";
    case EquationTag::skeleton: return "skeleton";
  }
  return "unknown";
}

Trajectory::Trajectory(double dt, Eigen::MatrixXcd states, EquationTag tag,
                       std::optional<DeviationScale> scale)
    : dt_(dt), states_(std::move(states)), tag_(tag), scale_(scale) {
  if (!(dt > 0.0)) throw DomainError("trajectory time step must be positive");
  if (states_.cols() < 1) throw ShapeError("trajectory needs at least the initial state");
}

SpectralField Trajectory::at(double t) const {
  const double position = t / dt_;
  const double nearest = std::round(position);
  const auto last = static_cast<double>(steps());
  if (position < -1e-9 || position > last + 1e-9) {
    throw DomainError("time " + std::to_string(t) + " outside the trajectory horizon");
  }
  if (std::abs(position - nearest) <= 1e-9 * std::max(1.0, position)) {
    return states_.col(static_cast<Eigen::Index>(nearest));
  }
  const auto left = static_cast<Eigen::Index>(std::floor(position));
  const double w = position - static_cast<double>(left);
  return (1.0 - w) * states_.col(left) + w * states_.col(left + 1);
}

double Trajectory::sup_norm() const { return states_.colwise().norm().maxCoeff(); }

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.states().rows() != b.states().rows() || a.states().cols() != b.states().cols()) {
    throw ShapeError("trajectories live on different grids");
  }
  return (a.states() - b.states()).colwise().norm().maxCoeff();
}

}  // namespace smdp
