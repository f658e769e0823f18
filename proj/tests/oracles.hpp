#pragma once

// Reference values computed independently of the library: closed forms,
// brute-force sums and dense linear algebra built from unit impulses.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "smdp/action.hpp"
#include "smdp/coefficients.hpp"
#include "smdp/dynamics.hpp"

namespace oracle {

using cd = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline double sine_mode(int j, double x) { return std::sqrt(2.0) * std::sin(j * pi * x); }

/// int_0^t exp(-i mu (t - s)) ds
inline cd rotated_integral(double mu, double t) {
  return (1.0 - std::exp(cd(0, -mu * t))) / cd(0, mu);
}

inline smdp::Model model(Eigen::Index modes, double alpha, double beta,
                         smdp::Potential potential = smdp::Potential::zero(),
                         double exponent = 2.0, double scale = 1.0) {
  smdp::Basis basis(modes);
  auto spectrum = smdp::CovarianceSpectrum::power_law(modes, exponent, scale);
  auto noise = smdp::NoiseCoefficient::constant(basis, alpha, beta);
  return smdp::Model{basis, spectrum, std::move(potential), std::move(noise)};
}

inline smdp::Model default_model(Eigen::Index modes) {
  return model(modes, 1.0, 0.25, smdp::Potential::sine(cd(0, 0.5)));
}

inline smdp::SpectralField random_field(Eigen::Index modes, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  smdp::SpectralField f(modes);
  for (Eigen::Index j = 0; j < modes; ++j) f[j] = cd(n(rng), n(rng));
  return f;
}

inline smdp::ControlPath random_control(Eigen::Index modes, std::size_t steps, double dt,
                                        std::mt19937_64& rng) {
  smdp::ControlPath h = smdp::ControlPath::zero(modes, steps, dt);
  std::normal_distribution<double> n;
  // smooth in time: a few random Fourier components per mode
  for (Eigen::Index j = 0; j < modes; ++j) {
    const cd c0(n(rng), n(rng));
    const cd c1(n(rng), n(rng));
    const double w = 2 * pi * (1 + (j % 3));
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = (k + 0.5) * dt;
      h.rates()(j, static_cast<Eigen::Index>(k)) = (c0 + c1 * std::cos(w * t)) / double(j + 1);
    }
  }
  return h;
}

/// Dense matrix of h' -> X^h(T), assembled column by column from skeleton runs
/// driven by unit impulses (real and imaginary parts separately, since the map
/// is complex linear this is redundant but keeps the oracle blind to that).
/// Columns are indexed (k, j).
inline Eigen::MatrixXcd terminal_matrix(const smdp::Model& m, const smdp::Trajectory& u0,
                                        const smdp::IntegratorConfig& cfg) {
  const auto J = m.basis.modes();
  const auto K = static_cast<Eigen::Index>(cfg.steps());
  Eigen::MatrixXcd L(J, J * K);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index j = 0; j < J; ++j) {
      auto h = smdp::ControlPath::zero(J, static_cast<std::size_t>(K), cfg.dt);
      h.rates()(j, k) = 1.0;
      const auto x = smdp::evolve_skeleton(m, u0, h, cfg);
      L.col(k * J + j) = x.state(static_cast<std::size_t>(K));
    }
  }
  return L;
}

/// min 1/2 dt sum_k |h_k|_0^2 subject to L h = z, by the dense normal
/// equations with weight W = diag(lambda)/dt.
inline double dense_min_action(const Eigen::MatrixXcd& L, const Eigen::VectorXd& lambda,
                               double dt, const smdp::SpectralField& z) {
  const auto J = lambda.size();
  const auto K = L.cols() / J;
  Eigen::VectorXcd w(L.cols());
  for (Eigen::Index k = 0; k < K; ++k) w.segment(k * J, J) = lambda.cast<cd>() / dt;
  const Eigen::MatrixXcd G = L * w.asDiagonal() * L.adjoint();
  const Eigen::VectorXcd y = G.ldlt().solve(z);
  return 0.5 * z.dot(y).real();
}

/// Two-sided z-score of a sample mean against `mean`.
inline double z_score(double sample_mean, double mean, double sample_var, std::size_t n) {
  return std::abs(sample_mean - mean) / std::sqrt(sample_var / static_cast<double>(n));
}

}  // namespace oracle
