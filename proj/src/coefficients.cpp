#include "smdp/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace smdp {

Potential::Potential(std::string kind, Evaluator value, Evaluator dx, double k0,
                     bool time_independent)
    : kind_(std::move(kind)),
      value_(std::move(value)),
      dx_(std::move(dx)),
      k0_(k0),
      time_independent_(time_independent) {}

Potential Potential::zero() {
  auto nil = [](double, double) { return Complex(0.0); };
  return Potential("zero", nil, nil, 0.0, true);
}

Potential Potential::constant(Complex value) {
  return Potential(
      "constant", [value](double, double) { return value; },
      [](double, double) { return Complex(0.0); }, std::norm(value), true);
}

Potential Potential::sine(Complex amplitude) {
  constexpr static double pi = std::numbers::pi;
  return Potential(
      "sine", [amplitude](double, double x) { return amplitude * std::sin(pi * x); },
      [amplitude](double, double x) { return amplitude * pi * std::cos(pi * x); },
      std::norm(amplitude) * (1.0 + pi * pi), true);
}

Eigen::VectorXcd Potential::on_grid(const Basis& basis, double t) const {
  Eigen::VectorXcd values(basis.grid_points());
  for (Eigen::Index p = 0; p < values.size(); ++p) values[p] = value_(t, basis.grid()[p]);
  return values;
}

Eigen::MatrixXcd Potential::matrix(const Basis& basis, double t) const {
  if (is_zero()) return Eigen::MatrixXcd::Zero(basis.modes(), basis.modes());
  return basis.multiplication_operator(on_grid(basis, t));
}

SpectralField apply_potential(const Basis& basis, const Potential& potential, double t,
                              const SpectralField& u) {
  if (potential.is_zero()) return SpectralField::Zero(u.size());
  return basis.multiply(potential.on_grid(basis, t), u);
}

NoiseCoefficient::NoiseCoefficient(const Basis& basis, Profile alpha, Complex beta)
    : basis_(basis), profile_(std::move(alpha)), beta_(beta) {
  alpha_.resize(basis_.grid_points());
  for (Eigen::Index p = 0; p < alpha_.size(); ++p) alpha_[p] = profile_(basis_.grid()[p]);
  if (beta_ == Complex(0.0)) frozen_ = basis_.multiplication_operator(alpha_);
}

NoiseCoefficient NoiseCoefficient::constant(const Basis& basis, Complex alpha, Complex beta) {
  return NoiseCoefficient(basis, [alpha](double) { return alpha; }, beta);
}

Eigen::VectorXcd NoiseCoefficient::multiplier(const SpectralField& u) const {
  return alpha_ + beta_ * basis_.from_coefficients(u);
}

SpectralField NoiseCoefficient::apply(double, const SpectralField& u,
                                      const SpectralField& k) const {
  if (frozen_.size() > 0) return frozen_ * k;
  return basis_.multiply(multiplier(u), k);
}

Eigen::MatrixXcd NoiseCoefficient::matrix(double, const SpectralField& u) const {
  if (frozen_.size() > 0) return frozen_;
  return basis_.multiplication_operator(multiplier(u));
}

double NoiseCoefficient::hs_norm_sq(double t, const SpectralField& u,
                                    const CovarianceSpectrum& spectrum) const {
  const Eigen::MatrixXcd g = matrix(t, u);
  return (g.cwiseAbs2().colwise().sum().transpose().array() * spectrum.eigenvalues().array())
      .sum();
}

double NoiseCoefficient::hs_norm_v_sq(double t, const SpectralField& u,
                                      const CovarianceSpectrum& spectrum) const {
  const Eigen::MatrixXcd g = matrix(t, u);
  const Eigen::VectorXd column_v =
      (basis_.eigenvalues().asDiagonal() * g.cwiseAbs2()).colwise().sum().transpose();
  return (column_v.array() * spectrum.eigenvalues().array()).sum();
}

ShiftedCoefficient::ShiftedCoefficient(const NoiseCoefficient& base, const Trajectory& u0,
                                       DeviationScale scale, Mode mode)
    : base_(base), u0_(u0), scale_(scale) {
  if (u0.modes() != base.basis().modes()) throw ShapeError("reference path has wrong mode count");
  if (mode == Mode::lil) {
    if (scale.mode() != ScaleMode::lil) {
      throw ScaleError("lil-mode shift requires an iterated-logarithm deviation scale");
    }
    shift_ = lil_normalisation(scale.epsilon());
  } else {
    shift_ = scale.shift();
  }
}

SpectralField ShiftedCoefficient::argument(double t, const SpectralField& z) const {
  return shift_ * z + u0_.at(t);
}

SpectralField ShiftedCoefficient::apply(double t, const SpectralField& z,
                                        const SpectralField& k) const {
  return base_.apply(t, argument(t, z), k);
}

Eigen::MatrixXcd ShiftedCoefficient::matrix(double t, const SpectralField& z) const {
  return base_.matrix(t, argument(t, z));
}

ShiftedCoefficient make_shifted(const NoiseCoefficient& base, const Trajectory& u0,
                                const DeviationScale& scale, ShiftedCoefficient::Mode mode) {
  return ShiftedCoefficient(base, u0, scale, mode);
}

CoefficientConstants derive_constants(const Model& model) {
  const double tr = trace(model.spectrum);
  const double alpha_sq = model.noise.alpha_on_grid().squaredNorm() /
                          static_cast<double>(model.basis.grid_points());
  const double beta_sq = std::norm(model.noise.beta());
  const double mu_max = model.basis.eigenvalues().maxCoeff();
  const double pi_sq = std::numbers::pi * std::numbers::pi;
  CoefficientConstants k;
  k.k0 = model.potential.k0();
  // |e_j|^2 <= 2 on the grid and the truncation is a discrete orthogonal
  // projection, so ||P(m e_j)||^2 <= 2 ||m||_P^2.
  k.k1 = 4.0 * tr * std::max(alpha_sq, beta_sq);
  k.k3 = 2.0 * tr * beta_sq;
  k.k2 = mu_max * k.k1;
  k.k4 = mu_max * k.k3 / pi_sq;
  k.k5 = 0.0;  // coefficients are time independent
  return k;
}

namespace {

SpectralField random_field(Eigen::Index modes, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
  SpectralField u(modes);
  for (Eigen::Index j = 0; j < modes; ++j) {
    const double decay = 1.0 / static_cast<double>(j + 1);
    u[j] = decay * Complex(normal(rng), normal(rng));
  }
  return u * std::pow(10.0, log_scale(rng));
}

void record(ConditionCheck& check, double lhs, double rhs) {
  const double slack = rhs - lhs;
  check.min_slack = std::min(check.min_slack, slack);
  if (rhs > 0) check.worst_ratio = std::max(check.worst_ratio, lhs / rhs);
  if (lhs > rhs * (1.0 + 1e-12) + 1e-14) check.passed = false;
}

}  // namespace

ConditionAudit audit_conditions(const Model& model, const CoefficientConstants& constants,
                                std::size_t samples, std::uint64_t seed, double horizon) {
  ConditionAudit audit;
  audit.constants = constants;
  audit.samples = samples;
  const auto inf = std::numeric_limits<double>::infinity();
  std::vector<ConditionCheck> checks{{"potential_bound", inf, 0, true},
                                     {"growth_H", inf, 0, true},
                                     {"growth_V", inf, 0, true},
                                     {"lipschitz_H", inf, 0, true},
                                     {"lipschitz_V", inf, 0, true},
                                     {"time_hoelder", inf, 0, true}};

  for (int it = 0; it <= 16; ++it) {
    const double t = horizon * it / 16.0;
    for (int ix = 0; ix <= 512; ++ix) {
      const double x = ix / 512.0;
      const double lhs = std::norm(model.potential(t, x)) + std::norm(model.potential.dx(t, x));
      record(checks[0], lhs, constants.k0);
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> time(0.0, horizon);
  const Eigen::Index J = model.basis.modes();
  const auto& g = model.noise;
  const auto& q = model.spectrum;
  for (std::size_t s = 0; s < samples; ++s) {
    const double t1 = time(rng);
    const double t2 = time(rng);
    const SpectralField u = random_field(J, rng);
    const SpectralField v = random_field(J, rng);
    const auto nu = norms(model.basis, u);
    const auto nd = norms(model.basis, SpectralField(u - v));

    record(checks[1], g.hs_norm_sq(t1, u, q), constants.k1 * (1 + nu.h * nu.h));
    record(checks[2], g.hs_norm_v_sq(t1, u, q), constants.k2 * (1 + nu.v * nu.v));

    const Eigen::MatrixXcd diff = g.matrix(t1, u) - g.matrix(t1, v);
    const Eigen::VectorXd col_h = diff.cwiseAbs2().colwise().sum().transpose();
    const Eigen::VectorXd col_v =
        (model.basis.eigenvalues().asDiagonal() * diff.cwiseAbs2()).colwise().sum().transpose();
    record(checks[3], col_h.dot(q.eigenvalues()), constants.k3 * nd.h * nd.h);
    record(checks[4], col_v.dot(q.eigenvalues()), constants.k4 * nd.v * nd.v);

    const Eigen::MatrixXcd dt_diff = g.matrix(t1, u) - g.matrix(t2, u);
    const Eigen::VectorXd col_t = dt_diff.cwiseAbs2().colwise().sum().transpose();
    record(checks[5], col_t.dot(q.eigenvalues()), constants.k5 * (t1 - t2) * (t1 - t2));
  }
  for (const auto& c : checks) audit.passed = audit.passed && c.passed;
  audit.checks = std::move(checks);
  return audit;
}

}  // namespace smdp
