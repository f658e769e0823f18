#include "smdp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace smdp {

std::size_t IntegratorConfig::steps() const {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw DomainError("dt and horizon must be positive");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw DomainError("dt must divide the horizon");
  }
  if (linear_tolerance > 1e-10) throw DomainError("linear-solve tolerance must be <= 1e-10");
  return static_cast<std::size_t>(rounded);
}

namespace {

struct NoControl {};
struct NoNoise {};

// Linear part shared by every equation: the mode rotation and the potential.
class LinearPart {
 public:
  LinearPart(const Model& model, double dt) : model_(model), dt_(dt) {
    const Eigen::VectorXd& mu = model.basis.eigenvalues();
    half_ = (mu * (-0.5 * dt)).unaryExpr([](double phase) {
      return std::polar(1.0, phase);
    });
    if (!model.potential.is_zero() && model.potential.time_independent()) {
      frozen_ = model.potential.matrix(model.basis, 0.0);
    }
  }

  void rotate_half(SpectralField& x) const { x.array() *= half_.array(); }

  SpectralField potential(double t, const SpectralField& y) const {
    if (model_.potential.is_zero()) return SpectralField::Zero(y.size());
    if (frozen_.size() > 0) return frozen_ * y;
    return model_.potential.matrix(model_.basis, t) * y;
  }

  double dt() const noexcept { return dt_; }

 private:
  const Model& model_;
  double dt_;
  Eigen::VectorXcd half_;
  Eigen::MatrixXcd frozen_;
};

template <class Control, class Noise>
void integrate(const Model& model, const IntegratorConfig& config, SpectralField x,
               const Control& control, const Noise& noise, const IncrementSource* source,
               const StepObserver& observe) {
  const std::size_t steps = config.steps();
  const double dt = config.dt;
  const Eigen::Index modes = model.basis.modes();
  if (x.size() != modes) throw ShapeError("initial state has wrong mode count");
  if (!x.allFinite()) throw DomainError("initial state is not finite");
  if (source != nullptr) {
    if (source->modes() != modes) throw ShapeError("noise source has wrong mode count");
    if (std::abs(source->dt() - dt) > 1e-12 * dt) {
      throw ShapeError("noise source time step differs from the integrator's");
    }
  }
  constexpr bool has_control = !std::is_same_v<Control, NoControl>;
  constexpr bool has_noise = !std::is_same_v<Noise, NoNoise>;

  const LinearPart linear(model, dt);
  SpectralField dw = SpectralField::Zero(modes);
  SpectralField y(modes);
  SpectralField stage(modes);
  SpectralField kick(modes);
  if (observe) observe(0, x, dw);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = dt * static_cast<double>(k);
    const double mid = t + 0.5 * dt;
    if constexpr (has_noise) {
      source->draw(k, dw);
      kick = noise(t, x, dw);
    }
    y = x;
    linear.rotate_half(y);
    SpectralField drift = linear.potential(t, y);
    if constexpr (has_control) drift += control(t, k, y);
    stage = y + (0.5 * dt) * drift;
    drift = linear.potential(mid, stage);
    if constexpr (has_control) drift += control(mid, k, stage);
    y += dt * drift;
    linear.rotate_half(y);
    x = y;
    if constexpr (has_noise) x += kick;

    const double size = x.norm();
    if (!std::isfinite(size)) throw BlowUpError("state became non-finite", k + 1);
    if (size > config.blow_up_threshold) throw BlowUpError("state norm exceeded threshold", k + 1);
    if (observe) observe(k + 1, x, dw);
  }
}

void check_reference(const Trajectory& u0, const Model& model, const IntegratorConfig& config) {
  if (u0.modes() != model.basis.modes()) throw ShapeError("reference path has wrong mode count");
  if (u0.horizon() + 1e-12 < config.horizon) {
    throw ShapeError("reference path does not cover the horizon");
  }
}

void check_control(const ControlPath& control, const Model& model,
                   const IntegratorConfig& config) {
  if (control.modes() != model.basis.modes()) throw ShapeError("control has wrong mode count");
  if (control.steps() != config.steps() || std::abs(control.dt() - config.dt) > 1e-12 * config.dt) {
    throw ShapeError("control grid differs from the integrator grid");
  }
}

ShiftedCoefficient::Mode shift_mode(const DeviationScale& scale) {
  return scale.mode() == ScaleMode::lil ? ShiftedCoefficient::Mode::lil
                                        : ShiftedCoefficient::Mode::mdp;
}

class Recorder {
 public:
  Recorder(Eigen::Index modes, std::size_t steps)
      : states_(modes, static_cast<Eigen::Index>(steps) + 1) {}
  StepObserver observer() {
    return [this](std::size_t k, const SpectralField& x, const SpectralField&) {
      states_.col(static_cast<Eigen::Index>(k)) = x;
    };
  }
  Eigen::MatrixXcd take() { return std::move(states_); }

 private:
  Eigen::MatrixXcd states_;
};

}  // namespace

void run_original(const Model& model, const SpectralField& initial, double epsilon,
                  const IntegratorConfig& config, const IncrementSource* noise,
                  const StepObserver& observe) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("need 0 <= eps < 1");
  if (epsilon == 0.0) {
    integrate(model, config, initial, NoControl{}, NoNoise{}, nullptr, observe);
    return;
  }
  if (noise == nullptr) throw DomainError("eps > 0 needs a noise source");
  const double prefactor = std::sqrt(epsilon);
  const NoiseCoefficient& g = model.noise;
  auto kick = [&](double t, const SpectralField& x, const SpectralField& dw) {
    return SpectralField(prefactor * g.apply(t, x, dw));
  };
  integrate(model, config, initial, NoControl{}, kick, noise, observe);
}

void run_moderate(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                  const IntegratorConfig& config, const IncrementSource& noise,
                  const StepObserver& observe) {
  check_reference(u0, model, config);
  const ShiftedCoefficient g = make_shifted(model.noise, u0, scale, shift_mode(scale));
  const double prefactor = scale.noise_prefactor();
  auto kick = [&](double t, const SpectralField& z, const SpectralField& dw) {
    return SpectralField(prefactor * g.apply(t, z, dw));
  };
  integrate(model, config, SpectralField::Zero(model.basis.modes()), NoControl{}, kick, &noise,
            observe);
}

void run_shifted(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                 const ControlPath& control, const IntegratorConfig& config,
                 const IncrementSource& noise, const StepObserver& observe,
                 const ShiftedOptions& options) {
  check_reference(u0, model, config);
  check_control(control, model, config);
  const ShiftedCoefficient g = make_shifted(model.noise, u0, scale, shift_mode(scale));
  const double prefactor = scale.noise_prefactor();
  auto drift = [&](double t, std::size_t k, const SpectralField& z) {
    return g.apply(t, z, control.rate(k));
  };
  const SpectralField start = SpectralField::Zero(model.basis.modes());
  if (options.suppress_noise) {
    integrate(model, config, start, drift, NoNoise{}, nullptr, observe);
    return;
  }
  auto kick = [&](double t, const SpectralField& z, const SpectralField& dw) {
    return SpectralField(prefactor * g.apply(t, z, dw));
  };
  integrate(model, config, start, drift, kick, &noise, observe);
}

void run_skeleton(const Model& model, const Trajectory& u0, const ControlPath& control,
                  const IntegratorConfig& config, const StepObserver& observe) {
  check_reference(u0, model, config);
  check_control(control, model, config);
  auto drift = [&](double t, std::size_t k, const SpectralField&) {
    return model.noise.apply(t, u0.at(t), control.rate(k));
  };
  integrate(model, config, SpectralField::Zero(model.basis.modes()), drift, NoNoise{}, nullptr,
            observe);
}

Trajectory evolve_original(const Model& model, const SpectralField& initial, double epsilon,
                           const IntegratorConfig& config, const IncrementSource* noise) {
  Recorder rec(model.basis.modes(), config.steps());
  run_original(model, initial, epsilon, config, noise, rec.observer());
  return Trajectory(config.dt, rec.take(),
                    epsilon == 0.0 ? EquationTag::deterministic : EquationTag::original);
}

Trajectory evolve_deterministic(const Model& model, const SpectralField& initial,
                                const IntegratorConfig& config) {
  return evolve_original(model, initial, 0.0, config, nullptr);
}

Trajectory evolve_moderate(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                           const IntegratorConfig& config, const IncrementSource& noise) {
  Recorder rec(model.basis.modes(), config.steps());
  run_moderate(model, u0, scale, config, noise, rec.observer());
  return Trajectory(config.dt, rec.take(), EquationTag::moderate, scale);
}

Trajectory evolve_shifted(const Model& model, const Trajectory& u0, const DeviationScale& scale,
                          const ControlPath& control, const IntegratorConfig& config,
                          const IncrementSource& noise, const ShiftedOptions& options) {
  Recorder rec(model.basis.modes(), config.steps());
  run_shifted(model, u0, scale, control, config, noise, rec.observer(), options);
  return Trajectory(config.dt, rec.take(), EquationTag::shifted, scale);
}

Trajectory evolve_skeleton(const Model& model, const Trajectory& u0, const ControlPath& control,
                           const IntegratorConfig& config) {
  Recorder rec(model.basis.modes(), config.steps());
  run_skeleton(model, u0, control, config, rec.observer());
  return Trajectory(config.dt, rec.take(), EquationTag::skeleton);
}

DyadicMap::DyadicMap(int level, double horizon)
    : level_(level), horizon_(horizon), block_(horizon / std::ldexp(1.0, level)) {
  if (level < 0) throw DomainError("dyadic level must be nonnegative");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
}

double DyadicMap::operator()(double s) const {
  if (s < 0.0 || s > horizon_) throw DomainError("dyadic map evaluated outside [0, T]");
  if (s == horizon_) return horizon_;
  const double blocks = std::ldexp(1.0, level_);
  const double index = std::min(std::floor(s / block_), blocks - 1.0);
  return index * block_;
}

DyadicModulusAccumulator::DyadicModulusAccumulator(std::size_t steps, int level) {
  if (level < 0) throw ResolutionError("dyadic level must be nonnegative");
  if (level >= 63) throw ResolutionError("dyadic level too fine for any grid");
  const std::size_t blocks = std::size_t{1} << level;
  if (blocks > steps) {
    throw ResolutionError("2^n = " + std::to_string(blocks) + " blocks exceed the " +
                          std::to_string(steps) + " grid steps");
  }
  if (steps % blocks != 0) {
    throw ResolutionError("dyadic blocks do not fall on grid points (" + std::to_string(steps) +
                          " steps, " + std::to_string(blocks) + " blocks)");
  }
  block_steps_ = steps / blocks;
}

void DyadicModulusAccumulator::push(std::size_t step, const SpectralField& state) {
  if (step % block_steps_ == 0) {
    if (step > 0) value_ = std::max(value_, (state - anchor_).norm());
    anchor_ = state;
    return;
  }
  value_ = std::max(value_, (state - anchor_).norm());
}

double dyadic_modulus(const Trajectory& trajectory, int level) {
  DyadicModulusAccumulator acc(trajectory.steps(), level);
  for (std::size_t k = 0; k <= trajectory.steps(); ++k) acc.push(k, trajectory.state(k));
  return acc.value();
}

namespace {

Interval bootstrap_mean(std::span<const double> values, std::mt19937_64& rng,
                        std::size_t resamples) {
  Interval out;
  const auto n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  out.estimate = n ? sum / static_cast<double>(n) : 0.0;
  if (n == 0) return out;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += values[pick(rng)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(resamples - 1));
    return means[idx];
  };
  out.lower = at(0.025);
  out.upper = at(0.975);
  return out;
}

}  // namespace

MomentReport moment_summary(std::span<const double> sup_h, std::span<const double> sup_v,
                            double p, std::uint64_t seed, std::size_t resamples) {
  if (sup_h.size() != sup_v.size()) throw ShapeError("per-path suprema lists differ in length");
  if (sup_h.size() < 30) throw DomainError("moment monitor needs at least 30 paths");
  if (!(p >= 1.0)) throw DomainError("moment order p must be >= 1");
  if (resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  std::vector<double> h_moment(sup_h.size());
  std::vector<double> v_square(sup_v.size());
  for (std::size_t i = 0; i < sup_h.size(); ++i) {
    h_moment[i] = std::pow(sup_h[i], 2.0 * p);
    v_square[i] = sup_v[i] * sup_v[i];
  }
  std::mt19937_64 rng(seed);
  MomentReport report;
  report.paths = sup_h.size();
  report.p = p;
  report.sup_h_moment = bootstrap_mean(h_moment, rng, resamples);
  report.sup_v_square = bootstrap_mean(v_square, rng, resamples);
  return report;
}

MomentReport moment_monitor(const Basis& basis, std::span<const Trajectory> trajectories,
                            double p, std::uint64_t seed, std::size_t resamples) {
  std::vector<double> sup_h;
  std::vector<double> sup_v;
  sup_h.reserve(trajectories.size());
  sup_v.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    double h = 0;
    double v = 0;
    for (std::size_t k = 0; k <= traj.steps(); ++k) {
      const auto n = norms(basis, traj.state(k));
      h = std::max(h, n.h);
      v = std::max(v, n.v);
    }
    sup_h.push_back(h);
    sup_v.push_back(v);
  }
  return moment_summary(sup_h, sup_v, p, seed, resamples);
}

UniformityCheck moment_uniformity(std::span<const MomentReport> reports, double tolerance) {
  UniformityCheck check;
  if (reports.empty()) return check;
  double lo = reports.front().sup_h_moment.estimate;
  double hi = lo;
  for (const auto& r : reports) {
    lo = std::min(lo, r.sup_h_moment.estimate);
    hi = std::max(hi, r.sup_h_moment.estimate);
  }
  check.spread = lo > 0 ? hi / lo - 1.0 : (hi > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  check.uniform = check.spread < tolerance;
  return check;
}

}  // namespace smdp
