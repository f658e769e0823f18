#pragma once

// Q-Wiener noise on the retained sine modes, the H0 (Cameron-Martin)
// geometry induced by Q, and piecewise-constant control paths.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "smdp/spectral.hpp"

namespace smdp {

/// Eigenvalues lambda_j of the covariance Q on the retained modes.
class CovarianceSpectrum {
 public:
  /// lambda_j = scale * j^(-exponent); exponent > 1 keeps Q trace class.
  static CovarianceSpectrum power_law(Eigen::Index modes, double exponent, double scale = 1.0);
  /// Explicit eigenvalues; zeros are allowed and mark modes the noise never
  /// excites.
  static CovarianceSpectrum from_values(Eigen::VectorXd eigenvalues);

  Eigen::Index modes() const noexcept { return eigenvalues_.size(); }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  double operator[](Eigen::Index i) const { return eigenvalues_[i]; }
  const std::string& law() const noexcept { return law_; }
  double exponent() const noexcept { return exponent_; }
  double scale() const noexcept { return scale_; }

 private:
  Eigen::VectorXd eigenvalues_;
  std::string law_ = "explicit";
  double exponent_ = 0;
  double scale_ = 0;
};

/// Sum of eigenvalues.
double trace(const CovarianceSpectrum& spectrum);

/// |k|_0^2 = sum_j |k_j|^2 / lambda_j. Throws InfeasibleDirectionError when k
/// has mass on a mode with lambda_j = 0.
double h0_norm_sq(const SpectralField& direction, const CovarianceSpectrum& spectrum);

/// Q^{1/2} k, coefficientwise.
SpectralField apply_sqrt_covariance(const SpectralField& k, const CovarianceSpectrum& spectrum);

// SplitMix64: used both as the seed-splitting hash and as the per-step
// generator. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Frozen substream key for (master seed, path index).
std::uint64_t substream_key(std::uint64_t master_seed, std::uint64_t path_index) noexcept;

/// Anything that can hand out the noise increment of step k. Implementations
/// must be pure in k so that paths can be replayed.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  virtual Eigen::Index modes() const = 0;
  virtual double dt() const = 0;
  virtual void draw(std::size_t step, Eigen::Ref<SpectralField> out) const = 0;
  SpectralField increment(std::size_t step) const {
    SpectralField out(modes());
    draw(step, out);
    return out;
  }
};

/// Increments of W = W1 + i W2 with W1, W2 independent Q-Wiener processes:
/// Re and Im of dW_j are independent N(0, lambda_j dt). Step k is generated
/// from (seed, path, k) alone, so any step can be regenerated on demand.
class WienerIncrementStream final : public IncrementSource {
 public:
  WienerIncrementStream(std::uint64_t master_seed, std::uint64_t path_index, double dt,
                        CovarianceSpectrum spectrum);

  Eigen::Index modes() const override { return spectrum_.modes(); }
  double dt() const override { return dt_; }
  void draw(std::size_t step, Eigen::Ref<SpectralField> out) const override;

  std::uint64_t master_seed() const noexcept { return seed_; }
  std::uint64_t path_index() const noexcept { return path_; }

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
  std::uint64_t key_;
  double dt_;
  CovarianceSpectrum spectrum_;
  Eigen::VectorXd scale_;
};

/// Sums `factor` consecutive increments of a finer source, so coarse and fine
/// runs see the same Brownian path.
class CoarsenedIncrements final : public IncrementSource {
 public:
  CoarsenedIncrements(const IncrementSource& fine, std::size_t factor);
  Eigen::Index modes() const override { return fine_.modes(); }
  double dt() const override { return fine_.dt() * static_cast<double>(factor_); }
  void draw(std::size_t step, Eigen::Ref<SpectralField> out) const override;

 private:
  const IncrementSource& fine_;
  std::size_t factor_;
};

/// Source that always returns zero; used for the deterministic equations.
class ZeroIncrements final : public IncrementSource {
 public:
  ZeroIncrements(Eigen::Index modes, double dt) : modes_(modes), dt_(dt) {}
  Eigen::Index modes() const override { return modes_; }
  double dt() const override { return dt_; }
  void draw(std::size_t, Eigen::Ref<SpectralField> out) const override { out.setZero(); }

 private:
  Eigen::Index modes_;
  double dt_;
};

/// Control derivative h'(t), piecewise constant on the steps [t_k, t_{k+1}).
/// Column k of rates() holds the mode coefficients on step k.
class ControlPath {
 public:
  ControlPath() = default;
  ControlPath(double dt, Eigen::MatrixXcd rates);

  static ControlPath zero(Eigen::Index modes, std::size_t steps, double dt);
  /// Samples `rate(t)` at the step midpoints.
  static ControlPath from_function(Eigen::Index modes, std::size_t steps, double dt,
                                   const std::function<SpectralField(double)>& rate);

  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return static_cast<std::size_t>(rates_.cols()); }
  Eigen::Index modes() const noexcept { return rates_.rows(); }
  double horizon() const noexcept { return dt_ * static_cast<double>(steps()); }
  const Eigen::MatrixXcd& rates() const noexcept { return rates_; }
  Eigen::MatrixXcd& rates() noexcept { return rates_; }
  auto rate(std::size_t step) const { return rates_.col(static_cast<Eigen::Index>(step)); }

  /// h(t_k) = int_0^{t_k} h'(s) ds for k = 0..steps.
  SpectralField integrated(std::size_t step) const;

  ControlPath& operator+=(const ControlPath& other);
  ControlPath& operator*=(std::complex<double> factor);

 private:
  double dt_ = 0;
  Eigen::MatrixXcd rates_;
};

ControlPath operator+(ControlPath a, const ControlPath& b);
ControlPath operator*(std::complex<double> factor, ControlPath h);

/// int_0^T |h'(s)|_0^2 ds; exact for the piecewise-constant representation.
double cameron_martin_energy(const ControlPath& h, const CovarianceSpectrum& spectrum);

}  // namespace smdp
