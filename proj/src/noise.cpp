#include "smdp/noise.hpp"

#include <cmath>
#include <random>

namespace smdp {

CovarianceSpectrum CovarianceSpectrum::power_law(Eigen::Index modes, double exponent,
                                                 double scale) {
  if (modes < 1) throw DomainError("spectrum needs at least one mode");
  if (!(exponent > 1.0)) throw DomainError("power-law exponent must exceed 1 (trace class)");
  if (!(scale > 0.0)) throw DomainError("power-law scale must be positive");
  CovarianceSpectrum s;
  s.eigenvalues_.resize(modes);
  for (Eigen::Index j = 0; j < modes; ++j) {
    s.eigenvalues_[j] = scale * std::pow(static_cast<double>(j + 1), -exponent);
  }
  s.law_ = "power";
  s.exponent_ = exponent;
  s.scale_ = scale;
  return s;
}

CovarianceSpectrum CovarianceSpectrum::from_values(Eigen::VectorXd eigenvalues) {
  if (eigenvalues.size() < 1) throw DomainError("spectrum needs at least one mode");
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
    if (!(eigenvalues[j] >= 0.0) || !std::isfinite(eigenvalues[j])) {
      throw DomainError("covariance eigenvalues must be finite and nonnegative");
    }
  }
  CovarianceSpectrum s;
  s.eigenvalues_ = std::move(eigenvalues);
  return s;
}

double trace(const CovarianceSpectrum& spectrum) { return spectrum.eigenvalues().sum(); }

double h0_norm_sq(const SpectralField& direction, const CovarianceSpectrum& spectrum) {
  if (direction.size() != spectrum.modes()) throw ShapeError("direction/spectrum mode mismatch");
  double total = 0;
  for (Eigen::Index j = 0; j < direction.size(); ++j) {
    const double mass = std::norm(direction[j]);
    if (mass == 0.0) continue;
    if (spectrum[j] == 0.0) {
      throw InfeasibleDirectionError("direction has mass on mode " + std::to_string(j + 1) +
                                     " where the covariance vanishes");
    }
    total += mass / spectrum[j];
  }
  return total;
}

SpectralField apply_sqrt_covariance(const SpectralField& k, const CovarianceSpectrum& spectrum) {
  if (k.size() != spectrum.modes()) throw ShapeError("direction/spectrum mode mismatch");
  return spectrum.eigenvalues().array().sqrt().matrix().cast<std::complex<double>>().asDiagonal() *
         k;
}

std::uint64_t substream_key(std::uint64_t master_seed, std::uint64_t path_index) noexcept {
  return SplitMix64::mix(SplitMix64::mix(master_seed) ^
                         SplitMix64::mix(path_index + 0x632BE59BD9B4E019ULL));
}

WienerIncrementStream::WienerIncrementStream(std::uint64_t master_seed, std::uint64_t path_index,
                                             double dt, CovarianceSpectrum spectrum)
    : seed_(master_seed),
      path_(path_index),
      key_(substream_key(master_seed, path_index)),
      dt_(dt),
      spectrum_(std::move(spectrum)) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  scale_ = (spectrum_.eigenvalues() * dt_).array().sqrt();
}

void WienerIncrementStream::draw(std::size_t step, Eigen::Ref<SpectralField> out) const {
  if (out.size() != modes()) throw ShapeError("increment buffer has wrong mode count");
  SplitMix64 engine(SplitMix64::mix(key_ + 0x9E3779B97F4A7C15ULL * (step + 1)));
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double re = normal(engine);
    const double im = normal(engine);
    out[j] = scale_[j] * std::complex<double>(re, im);
  }
}

CoarsenedIncrements::CoarsenedIncrements(const IncrementSource& fine, std::size_t factor)
    : fine_(fine), factor_(factor) {
  if (factor == 0) throw DomainError("coarsening factor must be positive");
}

void CoarsenedIncrements::draw(std::size_t step, Eigen::Ref<SpectralField> out) const {
  SpectralField piece(out.size());
  out.setZero();
  for (std::size_t r = 0; r < factor_; ++r) {
    fine_.draw(step * factor_ + r, piece);
    out += piece;
  }
}

ControlPath::ControlPath(double dt, Eigen::MatrixXcd rates) : dt_(dt), rates_(std::move(rates)) {
  if (!(dt > 0.0)) throw DomainError("control time step must be positive");
}

ControlPath ControlPath::zero(Eigen::Index modes, std::size_t steps, double dt) {
  return ControlPath(dt, Eigen::MatrixXcd::Zero(modes, static_cast<Eigen::Index>(steps)));
}

ControlPath ControlPath::from_function(Eigen::Index modes, std::size_t steps, double dt,
                                       const std::function<SpectralField(double)>& rate) {
  ControlPath h = zero(modes, steps, dt);
  for (std::size_t k = 0; k < steps; ++k) {
    const SpectralField value = rate((static_cast<double>(k) + 0.5) * dt);
    if (value.size() != modes) throw ShapeError("control function returned wrong mode count");
    h.rates_.col(static_cast<Eigen::Index>(k)) = value;
  }
  return h;
}

SpectralField ControlPath::integrated(std::size_t step) const {
  if (step > steps()) throw DomainError("control integrated past its horizon");
  if (step == 0) return SpectralField::Zero(modes());
  return rates_.leftCols(static_cast<Eigen::Index>(step)).rowwise().sum() * dt_;
}

ControlPath& ControlPath::operator+=(const ControlPath& other) {
  if (other.rates_.rows() != rates_.rows() || other.rates_.cols() != rates_.cols() ||
      other.dt_ != dt_) {
    throw ShapeError("control paths live on different grids");
  }
  rates_ += other.rates_;
  return *this;
}

ControlPath& ControlPath::operator*=(std::complex<double> factor) {
  rates_ *= factor;
  return *this;
}

ControlPath operator+(ControlPath a, const ControlPath& b) { return a += b; }
ControlPath operator*(std::complex<double> factor, ControlPath h) { return h *= factor; }

double cameron_martin_energy(const ControlPath& h, const CovarianceSpectrum& spectrum) {
  double total = 0;
  for (std::size_t k = 0; k < h.steps(); ++k) total += h0_norm_sq(h.rate(k), spectrum);
  return total * h.dt();
}

}  // namespace smdp
