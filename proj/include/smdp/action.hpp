#pragma once

// Rate functional of the rescaled process and the limit set {I <= M/2}.
//
// I(v) is half the least Cameron-Martin energy of a control whose skeleton
// path is v. On the grid the skeleton step is affine in the control,
//
//   X_{k+1} = S_k X_k + M_k h'_k,   S_k = R D_k R,   M_k = dt R Beff_k,
//
// with R the half-step mode rotation, so path_rate inverts each step for the
// minimum-H0-norm control and min_action_to_terminal solves the normal
// equations of h' -> X_K by conjugate gradients.

#include <limits>
#include <vector>

#include "smdp/coefficients.hpp"
#include "smdp/dynamics.hpp"
#include "smdp/noise.hpp"
#include "smdp/trajectory.hpp"

namespace smdp {

struct ActionOptions {
  /// Per-step defect above feasibility_tolerance * ||r_k|| means no control
  /// reproduces the path.
  double feasibility_tolerance = 1e-6;
  /// Singular values below this fraction of the largest are dropped.
  double singular_cutoff = 1e-10;
  double cg_tolerance = 1e-13;
  std::size_t max_iterations = 0;  ///< 0: 10 J + 10
};

struct ActionResult {
  double value = 0;  ///< +inf when infeasible
  bool finite = true;
  ControlPath control;
  double residual = 0;
  std::size_t iterations = 0;
  bool converged = true;
};

class SkeletonOperator {
 public:
  SkeletonOperator(const Model& model, const Trajectory& u0, const IntegratorConfig& config,
                   const ActionOptions& options = {});

  const Model& model() const noexcept { return model_; }
  const Trajectory& reference() const noexcept { return u0_; }
  const IntegratorConfig& config() const noexcept { return config_; }
  const ActionOptions& options() const noexcept { return options_; }
  std::size_t steps() const noexcept { return steps_; }
  Eigen::Index modes() const noexcept { return model_.basis.modes(); }
  double dt() const noexcept { return config_.dt; }

  /// S_k X without forming S_k.
  SpectralField propagate(std::size_t k, const SpectralField& x) const;
  /// S_k^H p.
  SpectralField propagate_adjoint(std::size_t k, const SpectralField& p) const;
  /// M_k w.
  SpectralField gain(std::size_t k, const SpectralField& w) const;
  /// M_k^H p.
  SpectralField gain_adjoint(std::size_t k, const SpectralField& p) const;

  /// X^h at step `upto` (default: the horizon), by the matrix recursion.
  SpectralField terminal(const ControlPath& control, std::size_t upto = 0) const;
  /// Adjoint of terminal() from H into the controls with the H0-weighted
  /// inner product dt * sum_k <a_k, b_k>_0. Rates past `upto` are zero.
  ControlPath adjoint(const SpectralField& mu, std::size_t upto = 0) const;
  /// Reachability Gramians G_k = L_k L_k^* for k = 0..steps.
  std::vector<Eigen::MatrixXcd> gramians() const;

  /// Discrete drift residual r_k with X_{k+1} = S_k X_k + M_k h' iff
  /// Beff_k h' = r_k.
  SpectralField step_residual(std::size_t k, const SpectralField& from,
                              const SpectralField& to) const;
  const Eigen::MatrixXcd& effective_gain(std::size_t k) const { return beff_[k]; }
  /// Q^{1/2} pinv(Beff_k Q^{1/2}) with singular-value truncation.
  const Eigen::MatrixXcd& min_norm_inverse(std::size_t k) const { return pinv_[k]; }

 private:
  const Eigen::MatrixXcd& drift(std::size_t k) const {
    return drift_.size() == 1 ? drift_.front() : drift_[k];
  }

  const Model& model_;
  const Trajectory& u0_;
  IntegratorConfig config_;
  ActionOptions options_;
  std::size_t steps_;
  Eigen::VectorXcd half_;
  std::vector<Eigen::MatrixXcd> drift_;  // D_k
  std::vector<Eigen::MatrixXcd> beff_;
  std::vector<Eigen::MatrixXcd> pinv_;
};

/// I(v) for a path on the operator's grid. Throws DomainError if v(0) != 0
/// and ShapeError on a grid mismatch.
ActionResult path_rate(const SkeletonOperator& op, const Trajectory& v);

/// Convenience: builds the operator on v's grid. u0 must share the modes and
/// its step must divide v's step.
ActionResult path_rate(const Model& model, const Trajectory& v, const Trajectory& u0,
                       const ActionOptions& options = {});

/// min 1/2 int |h'|_0^2 subject to X^h(t_upto) = z, by CG on the normal
/// equations L L^* mu = z; the minimiser is h' = L^* mu. A run that stalls
/// is reported with converged = false and carries the best iterate.
ActionResult min_action_to_terminal(const SkeletonOperator& op, const SpectralField& z,
                                    std::size_t upto = 0);

/// Dual objective 1/2 |L^* mu|_0^2 - Re <z, mu> minimised by the CG above,
/// and its gradient L L^* mu - z.
double terminal_dual_objective(const SkeletonOperator& op, const SpectralField& z,
                               const SpectralField& mu, std::size_t upto = 0);
SpectralField terminal_dual_gradient(const SkeletonOperator& op, const SpectralField& z,
                                     const SpectralField& mu, std::size_t upto = 0);

/// inf { I(v) : sup_t ||v(t)|| >= rho } = rho^2 / (2 max_k lambda_max(G_k)).
struct ExitRate {
  double rate = 0;
  std::size_t step = 0;  ///< where the top Gramian eigenvalue is reached
  double top_eigenvalue = 0;
  SpectralField direction;  ///< unit eigenvector at that step
  ActionResult check;       ///< min_action_to_terminal at rho * direction
};
ExitRate sup_norm_exit_rate(const SkeletonOperator& op, double rho);

struct LimitSetSpec {
  double budget = 1.0;  ///< M
  double tolerance = 1e-9;
  double threshold() const noexcept { return 0.5 * budget; }
};

struct Membership {
  bool member = false;
  double margin = 0;  ///< M/2 - I(v); -inf when infeasible
  double value = 0;
};

Membership limit_set_membership(const SkeletonOperator& op, const Trajectory& v,
                                const LimitSetSpec& spec);

struct Certificate {
  ControlPath control;
  Trajectory path;  ///< X^h
  double declared_value = 0;  ///< 1/2 int |h'|_0^2 by construction
};

/// Deterministic controls with half-energies drawn from {0, M/4, M/2 (1 - 1e-6)},
/// cycling over the first few modes with resonant phase exp(-i mu_j t); entry 0
/// is always the zero control.
std::vector<Certificate> certificate_dictionary(const SkeletonOperator& op,
                                                const LimitSetSpec& spec, std::size_t count);

}  // namespace smdp
