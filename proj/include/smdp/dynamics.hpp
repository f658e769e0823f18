#pragma once

// Time integration of the linear Schroedinger problems on the sine basis.
//
// Every equation here has the form
//
//   dX = -i A X dt + U(t) X dt + c(t, X) dt + sigma G(t, X) dW,
//
// and all of them share one step: exact half-step rotation of each mode by
// exp(-i mu_j dt/2), an explicit-midpoint step of the non-stiff drift
// U X + c, the second half rotation, then the Ito increment
// sigma G(t_k, X_k) dW_k evaluated at the left endpoint.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smdp/coefficients.hpp"
#include "smdp/noise.hpp"
#include "smdp/trajectory.hpp"

namespace smdp {

struct IntegratorConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  double linear_tolerance = 1e-12;
  /// Paths whose H norm exceeds this are aborted with BlowUpError.
  double blow_up_threshold = 1e6;

  /// Number of steps; throws DomainError unless dt divides the horizon.
  std::size_t steps() const;
};

/// Called once per grid time with the state and the increment that produced
/// it (zero at step 0).
using StepObserver =
    std::function<void(std::size_t step, const SpectralField& state, const SpectralField& dw)>;

struct ShiftedOptions {
  /// Drop the stochastic integral, keeping only the control drift.
  bool suppress_noise = false;
};

// Streaming drivers: nothing is stored, the observer sees every state.
void run_original(const Model& model, const SpectralField& initial, double epsilon,
                  const IntegratorConfig& config, const IncrementSource* noise,
                  const StepObserver& observe);
void run_moderate(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                  const IntegratorConfig& config, const IncrementSource& noise,
                  const StepObserver& observe);
void run_shifted(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                 const ControlPath& control, const IntegratorConfig& config,
                 const IncrementSource& noise, const StepObserver& observe,
                 const ShiftedOptions& options = {});
void run_skeleton(const Model& model, const Trajectory& u0, const ControlPath& control,
                  const IntegratorConfig& config, const StepObserver& observe);

/// One path of du = i Lap u dt + U u dt + sqrt(eps) g(t,u) dW, u(0) = initial.
/// `noise` may be null when epsilon == 0.
Trajectory evolve_original(const Model& model, const SpectralField& initial, double epsilon,
                           const IntegratorConfig& config, const IncrementSource* noise);
/// The noiseless limit u0.
Trajectory evolve_deterministic(const Model& model, const SpectralField& initial,
                                const IntegratorConfig& config);
/// Rescaled centred process: Z = (u^eps - u0) / (sqrt(eps)/a(eps)), driven by
/// a(eps) g(t, shift Z + u0) dW. The scale's mode picks the lil or generic form.
Trajectory evolve_moderate(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                           const IntegratorConfig& config, const IncrementSource& noise);
/// The rescaled process with the additional control drift g~(t, Z) h'(t).
Trajectory evolve_shifted(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                          const ControlPath& control, const IntegratorConfig& config,
                          const IncrementSource& noise, const ShiftedOptions& options = {});
/// Skeleton X^h: X(0) = 0, control operator B(t) = g(t, u0(t)).
Trajectory evolve_skeleton(const Model& model, const Trajectory& u0, const ControlPath& control,
                           const IntegratorConfig& config);

/// Step map s -> i T 2^-n on [i T 2^-n, (i+1) T 2^-n), with T -> T.
class DyadicMap {
 public:
  DyadicMap(int level, double horizon);
  double operator()(double s) const;
  double block_length() const noexcept { return block_; }
  int level() const noexcept { return level_; }

 private:
  int level_;
  double horizon_;
  double block_;
};

/// Streaming sup_s ||Z(s) - Z(psi_n(s))||. Each block is taken closed on the
/// right (the path is continuous), so with one step per block the value is
/// the largest single-step increment.
class DyadicModulusAccumulator {
 public:
  DyadicModulusAccumulator(std::size_t steps, int level);
  void push(std::size_t step, const SpectralField& state);
  double value() const noexcept { return value_; }

 private:
  std::size_t block_steps_;
  SpectralField anchor_;
  double value_ = 0;
};

/// Throws ResolutionError unless 2^level divides the number of steps.
double dyadic_modulus(const Trajectory& trajectory, int level);

struct Interval {
  double estimate = 0;
  double lower = 0;
  double upper = 0;
};

struct MomentReport {
  std::size_t paths = 0;
  double p = 1;
  Interval sup_h_moment;  ///< E sup_t ||X(t)||^{2p}
  Interval sup_v_square;  ///< E sup_t ||X(t)||_V^2
};

/// Bootstrap (percentile, 95%) moments from per-path suprema.
MomentReport moment_summary(std::span<const double> sup_h, std::span<const double> sup_v,
                            double p, std::uint64_t seed = 1, std::size_t resamples = 1000);
/// Needs at least 30 paths.
MomentReport moment_monitor(const Basis& basis, std::span<const Trajectory> trajectories,
                            double p, std::uint64_t seed = 1, std::size_t resamples = 1000);

struct UniformityCheck {
  double spread = 0;  ///< max/min - 1 of the sup_h_moment estimates
  bool uniform = true;
};
UniformityCheck moment_uniformity(std::span<const MomentReport> reports, double tolerance = 0.5);

}  // namespace smdp
