#include "smdp/action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXcd potential_matrix(const Model& model, double t) {
  return model.potential.matrix(model.basis, t);
}

}  // namespace

SkeletonOperator::SkeletonOperator(const Model& model, const Trajectory& u0,
                                   const IntegratorConfig& config, const ActionOptions& options)
    : model_(model), u0_(u0), config_(config), options_(options), steps_(config.steps()) {
  const Eigen::Index J = model.basis.modes();
  if (u0.modes() != J) throw ShapeError("reference path has wrong mode count");
  if (u0.horizon() + 1e-12 < config.horizon) {
    throw ShapeError("reference path does not cover the horizon");
  }
  if (options_.max_iterations == 0) options_.max_iterations = 10 * static_cast<std::size_t>(J) + 10;

  const double dt = config.dt;
  half_ = (model.basis.eigenvalues() * (-0.5 * dt)).unaryExpr([](double phase) {
    return std::polar(1.0, phase);
  });

  const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(J, J);
  const bool frozen_potential = model.potential.time_independent();
  const Eigen::VectorXcd root_lambda =
      model.spectrum.eigenvalues().array().sqrt().matrix().cast<std::complex<double>>();

  beff_.reserve(steps_);
  pinv_.reserve(steps_);
  Eigen::MatrixXcd u_frozen;
  if (frozen_potential) {
    u_frozen = potential_matrix(model, 0.0);
    drift_.push_back(identity + dt * u_frozen + (0.5 * dt * dt) * u_frozen * u_frozen);
  }
  for (std::size_t k = 0; k < steps_; ++k) {
    const double t = dt * static_cast<double>(k);
    const double mid = t + 0.5 * dt;
    const Eigen::MatrixXcd u_left = frozen_potential ? u_frozen : potential_matrix(model, t);
    const Eigen::MatrixXcd u_mid = frozen_potential ? u_frozen : potential_matrix(model, mid);
    if (!frozen_potential) drift_.push_back(identity + dt * u_mid + (0.5 * dt * dt) * u_mid * u_left);

    const Eigen::MatrixXcd b_left = model.noise.matrix(t, u0.at(t));
    const Eigen::MatrixXcd b_mid = model.noise.matrix(mid, u0.at(mid));
    beff_.push_back(b_mid + (0.5 * dt) * u_mid * b_left);

    const Eigen::MatrixXcd weighted = beff_.back() * root_lambda.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(weighted, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const double cutoff = options_.singular_cutoff * (sigma.size() ? sigma[0] : 0.0);
    Eigen::VectorXcd inverse_sigma = Eigen::VectorXcd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      if (sigma[i] > cutoff && sigma[i] > 0.0) inverse_sigma[i] = 1.0 / sigma[i];
    }
    pinv_.push_back(root_lambda.asDiagonal() * svd.matrixV() * inverse_sigma.asDiagonal() *
                    svd.matrixU().adjoint());
  }
}

SpectralField SkeletonOperator::propagate(std::size_t k, const SpectralField& x) const {
  SpectralField y = half_.cwiseProduct(x);
  y = drift(k) * y;
  return half_.cwiseProduct(y);
}

SpectralField SkeletonOperator::propagate_adjoint(std::size_t k, const SpectralField& p) const {
  SpectralField y = half_.conjugate().cwiseProduct(p);
  y = drift(k).adjoint() * y;
  return half_.conjugate().cwiseProduct(y);
}

SpectralField SkeletonOperator::gain(std::size_t k, const SpectralField& w) const {
  return config_.dt * half_.cwiseProduct(beff_[k] * w);
}

SpectralField SkeletonOperator::gain_adjoint(std::size_t k, const SpectralField& p) const {
  return config_.dt * (beff_[k].adjoint() * half_.conjugate().cwiseProduct(p));
}

SpectralField SkeletonOperator::terminal(const ControlPath& control, std::size_t upto) const {
  if (upto == 0) upto = steps_;
  if (upto > steps_) throw DomainError("terminal step beyond the horizon");
  if (control.modes() != modes() || control.steps() < upto) {
    throw ShapeError("control does not match the skeleton grid");
  }
  SpectralField x = SpectralField::Zero(modes());
  for (std::size_t k = 0; k < upto; ++k) {
    x = propagate(k, x) + gain(k, SpectralField(control.rate(k)));
  }
  return x;
}

ControlPath SkeletonOperator::adjoint(const SpectralField& mu, std::size_t upto) const {
  if (upto == 0) upto = steps_;
  if (upto > steps_) throw DomainError("terminal step beyond the horizon");
  if (mu.size() != modes()) throw ShapeError("adjoint seed has wrong mode count");
  ControlPath rates = ControlPath::zero(modes(), steps_, config_.dt);
  const Eigen::VectorXcd lambda =
      model_.spectrum.eigenvalues().cast<std::complex<double>>() / config_.dt;
  SpectralField p = mu;
  for (std::size_t k = upto; k-- > 0;) {
    rates.rates().col(static_cast<Eigen::Index>(k)) = lambda.cwiseProduct(gain_adjoint(k, p));
    p = propagate_adjoint(k, p);
  }
  return rates;
}

std::vector<Eigen::MatrixXcd> SkeletonOperator::gramians() const {
  const Eigen::Index J = modes();
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(steps_ + 1);
  out.push_back(Eigen::MatrixXcd::Zero(J, J));
  const Eigen::VectorXd lambda = model_.spectrum.eigenvalues() / config_.dt;
  for (std::size_t k = 0; k < steps_; ++k) {
    const Eigen::MatrixXcd s = half_.asDiagonal() * drift(k) * half_.asDiagonal();
    const Eigen::MatrixXcd m = config_.dt * (half_.asDiagonal() * beff_[k]);
    Eigen::MatrixXcd next = s * out.back() * s.adjoint() +
                            m * lambda.cast<std::complex<double>>().asDiagonal() * m.adjoint();
    out.push_back(0.5 * (next + next.adjoint()));
  }
  return out;
}

SpectralField SkeletonOperator::step_residual(std::size_t k, const SpectralField& from,
                                              const SpectralField& to) const {
  const SpectralField back = half_.conjugate().cwiseProduct(to);
  const SpectralField forward = drift(k) * half_.cwiseProduct(from);
  return (back - forward) / config_.dt;
}

ActionResult path_rate(const SkeletonOperator& op, const Trajectory& v) {
  if (v.modes() != op.modes()) throw ShapeError("path has wrong mode count");
  if (v.steps() != op.steps() || std::abs(v.dt() - op.dt()) > 1e-12 * op.dt()) {
    throw ShapeError("path grid differs from the skeleton grid");
  }
  const double scale = 1.0 + v.sup_norm();
  if (v.state(0).norm() > 1e-14 * scale) {
    throw DomainError("rate functional needs v(0) = 0");
  }
  ActionResult result;
  result.control = ControlPath::zero(op.modes(), op.steps(), op.dt());
  const double tolerance = op.options().feasibility_tolerance;
  for (std::size_t k = 0; k < op.steps(); ++k) {
    const SpectralField r = op.step_residual(k, v.state(k), v.state(k + 1));
    const double size = r.norm();
    if (size == 0.0) continue;
    const SpectralField rate = op.min_norm_inverse(k) * r;
    const double defect = (op.effective_gain(k) * rate - r).norm();
    result.residual = std::max(result.residual, defect / size);
    if (defect > tolerance * size) result.finite = false;
    result.control.rates().col(static_cast<Eigen::Index>(k)) = rate;
  }
  result.value = result.finite
                     ? 0.5 * cameron_martin_energy(result.control, op.model().spectrum)
                     : kInf;
  return result;
}

ActionResult path_rate(const Model& model, const Trajectory& v, const Trajectory& u0,
                       const ActionOptions& options) {
  if (u0.modes() != v.modes()) throw ShapeError("reference and path differ in mode count");
  const double ratio = v.dt() / u0.dt();
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ShapeError("reference step must divide the path step");
  }
  if (u0.horizon() + 1e-12 < v.horizon()) throw ShapeError("reference path is too short");
  IntegratorConfig config;
  config.dt = v.dt();
  config.horizon = v.horizon();
  const SkeletonOperator op(model, u0, config, options);
  return path_rate(op, v);
}

namespace {

SpectralField normal_operator(const SkeletonOperator& op, const SpectralField& mu,
                              std::size_t upto) {
  return op.terminal(op.adjoint(mu, upto), upto);
}

}  // namespace

double terminal_dual_objective(const SkeletonOperator& op, const SpectralField& z,
                               const SpectralField& mu, std::size_t upto) {
  const ControlPath rates = op.adjoint(mu, upto);
  return 0.5 * cameron_martin_energy(rates, op.model().spectrum) - z.dot(mu).real();
}

SpectralField terminal_dual_gradient(const SkeletonOperator& op, const SpectralField& z,
                                     const SpectralField& mu, std::size_t upto) {
  return normal_operator(op, mu, upto) - z;
}

ActionResult min_action_to_terminal(const SkeletonOperator& op, const SpectralField& z,
                                    std::size_t upto) {
  if (upto == 0) upto = op.steps();
  if (z.size() != op.modes()) throw ShapeError("target has wrong mode count");
  ActionResult result;
  const double target = z.norm();
  if (target == 0.0) {
    result.control = ControlPath::zero(op.modes(), op.steps(), op.dt());
    return result;
  }
  const double tolerance = op.options().cg_tolerance * target;
  SpectralField mu = SpectralField::Zero(op.modes());
  SpectralField r = z;
  SpectralField p = r;
  double rs = r.squaredNorm();
  SpectralField best = mu;
  double best_norm = std::sqrt(rs);
  result.converged = false;
  for (std::size_t it = 0; it < op.options().max_iterations; ++it) {
    const SpectralField ap = normal_operator(op, p, upto);
    const double curvature = p.dot(ap).real();
    result.iterations = it + 1;
    if (!(curvature > 0.0)) break;  // Gramian singular along p: z not reachable
    const double step = rs / curvature;
    mu += step * p;
    r -= step * ap;
    const double rs_next = r.squaredNorm();
    if (std::sqrt(rs_next) < best_norm) {
      best_norm = std::sqrt(rs_next);
      best = mu;
    }
    if (std::sqrt(rs_next) <= tolerance) {
      result.converged = true;
      break;
    }
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  result.control = op.adjoint(best, upto);
  result.value = 0.5 * cameron_martin_energy(result.control, op.model().spectrum);
  result.residual = (op.terminal(result.control, upto) - z).norm() / target;
  return result;
}

ExitRate sup_norm_exit_rate(const SkeletonOperator& op, double rho) {
  if (!(rho > 0.0)) throw DomainError("exit radius must be positive");
  ExitRate out;
  const auto grams = op.gramians();
  out.direction = SpectralField::Zero(op.modes());
  for (std::size_t k = 1; k < grams.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(grams[k]);
    const Eigen::Index top = eig.eigenvalues().size() - 1;
    if (eig.eigenvalues()[top] > out.top_eigenvalue) {
      out.top_eigenvalue = eig.eigenvalues()[top];
      out.step = k;
      out.direction = eig.eigenvectors().col(top);
    }
  }
  if (out.top_eigenvalue <= 0.0) {
    out.rate = kInf;
    out.check.value = kInf;
    out.check.finite = false;
    return out;
  }
  out.rate = rho * rho / (2.0 * out.top_eigenvalue);
  out.check = min_action_to_terminal(op, rho * out.direction, out.step);
  return out;
}

Membership limit_set_membership(const SkeletonOperator& op, const Trajectory& v,
                                const LimitSetSpec& spec) {
  const ActionResult rate = path_rate(op, v);
  Membership m;
  m.value = rate.value;
  if (!rate.finite) {
    m.member = false;
    m.margin = -kInf;
    return m;
  }
  m.margin = spec.threshold() - rate.value;
  m.member = rate.value <= spec.threshold() + spec.tolerance;
  return m;
}

std::vector<Certificate> certificate_dictionary(const SkeletonOperator& op,
                                                const LimitSetSpec& spec, std::size_t count) {
  if (count < 1) throw DomainError("certificate dictionary needs count >= 1");
  if (!(spec.budget > 0.0)) throw DomainError("Cameron-Martin budget M must be positive");
  const Eigen::Index J = op.modes();
  const auto& lambda = op.model().spectrum.eigenvalues();
  const auto& mu = op.model().basis.eigenvalues();
  std::vector<Eigen::Index> excited;
  for (Eigen::Index j = 0; j < J && excited.size() < 3; ++j) {
    if (lambda[j] > 0.0) excited.push_back(j);
  }
  const std::size_t steps = op.steps();
  const double dt = op.dt();
  const double horizon = dt * static_cast<double>(steps);

  std::vector<Certificate> out;
  out.reserve(count);
  {
    Certificate zero;
    zero.control = ControlPath::zero(J, steps, dt);
    zero.path = evolve_skeleton(op.model(), op.reference(), zero.control, op.config());
    out.push_back(std::move(zero));
  }
  for (std::size_t n = 1; n < count && !excited.empty(); ++n) {
    const std::size_t m = n - 1;
    const double value = (m % 2 == 0) ? 0.25 * spec.budget : 0.5 * spec.budget * (1.0 - 1e-6);
    const Eigen::Index j = excited[(m / 2) % excited.size()];
    const double phase = 0.5 * std::numbers::pi * static_cast<double>((m / 6) % 4);
    const double amplitude = std::sqrt(2.0 * value * lambda[j] / horizon);
    Certificate c;
    c.declared_value = value;
    c.control = ControlPath::zero(J, steps, dt);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = (static_cast<double>(k) + 0.5) * dt;
      c.control.rates()(j, static_cast<Eigen::Index>(k)) =
          std::polar(amplitude, phase - mu[j] * t);
    }
    c.path = evolve_skeleton(op.model(), op.reference(), c.control, op.config());
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace smdp
