#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "smdp/dynamics.hpp"

using smdp::ControlPath;
using smdp::IntegratorConfig;
using smdp::SpectralField;
using smdp::Trajectory;
using cd = std::complex<double>;

namespace {

IntegratorConfig grid(double dt, double horizon = 1.0) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.horizon = horizon;
  return cfg;
}

}  // namespace

TEST_CASE("integrator config validation") {
  CHECK(grid(1e-3).steps() == 1000);
  CHECK(grid(0.1, 0.3).steps() == 3);
  CHECK_THROWS_AS(grid(0.3, 1.0).steps(), smdp::DomainError);
  CHECK_THROWS_AS(grid(-1.0).steps(), smdp::DomainError);
  auto loose = grid(1e-3);
  loose.linear_tolerance = 1e-8;
  CHECK_THROWS_AS(loose.steps(), smdp::DomainError);
}

TEST_CASE("free evolution is exact and unitary") {
  const auto model = oracle::model(4, 1.0, 0.0);
  const auto u = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), grid(1e-3));
  const cd exact = std::exp(cd(0, -oracle::pi * oracle::pi));
  CHECK(std::abs(u.state(1000)[0] - exact) < 1e-10);
  CHECK(u.state(1000).tail(3).norm() < 1e-15);
  CHECK(u.tag() == smdp::EquationTag::deterministic);

  CHECK(smdp::evolve_deterministic(model, SpectralField::Zero(4), grid(1e-3)).sup_norm() == 0.0);

  SpectralField two = SpectralField::Zero(4);
  two[0] = 1.0;
  two[1] = 1.0;
  const auto w = smdp::evolve_deterministic(model, two, grid(1e-3));
  const double v0 = smdp::v_norm(model.basis, two);
  for (std::size_t k = 0; k <= 1000; k += 37) {
    const double t = w.time(k);
    CHECK(std::abs(w.state(k)[0] - std::exp(cd(0, -oracle::pi * oracle::pi * t))) < 1e-10);
    CHECK(std::abs(w.state(k)[1] - std::exp(cd(0, -4 * oracle::pi * oracle::pi * t))) < 1e-10);
    CHECK(std::abs(smdp::v_norm(model.basis, SpectralField(w.state(k))) - v0) < 1e-9);
  }
}

TEST_CASE("unitarity holds at every step for J = 32") {
  const auto model = oracle::model(32, 1.0, 0.0);
  std::mt19937_64 rng(8);
  const SpectralField gamma = oracle::random_field(32, rng);
  double worst = 0;
  smdp::run_original(model, gamma, 0.0, grid(1e-3), nullptr,
                     [&](std::size_t, const SpectralField& x, const SpectralField&) {
                       worst = std::max(worst, std::abs(x.norm() - gamma.norm()));
                     });
  CHECK(worst < 1e-12);
}

TEST_CASE("blow-up guard and grid checks") {
  const auto model = oracle::model(2, 1.0, 0.0, smdp::Potential::constant(5.0));
  auto cfg = grid(1e-2);
  cfg.blow_up_threshold = 10.0;
  try {
    smdp::evolve_deterministic(model, smdp::basis_vector(2, 1), cfg);
    FAIL("expected a blow-up");
  } catch (const smdp::BlowUpError& e) {
    CHECK(e.step() == 47);  // e^{5 t} > 10 first at t = 0.47
  }
  const smdp::WienerIncrementStream wrong_dt(1, 0, 2e-3, model.spectrum);
  CHECK_THROWS_AS(smdp::evolve_original(model, smdp::basis_vector(2, 1), 0.1, grid(1e-3), &wrong_dt),
                  smdp::ShapeError);
  CHECK_THROWS_AS(smdp::evolve_original(model, smdp::basis_vector(2, 1), 0.1, grid(1e-3), nullptr),
                  smdp::DomainError);
  CHECK_THROWS_AS(smdp::evolve_deterministic(model, SpectralField::Zero(3), grid(1e-3)),
                  smdp::ShapeError);
}

TEST_CASE("moderate process") {
  const auto cfg = grid(1e-3);
  SUBCASE("vanishes without noise") {
    const auto model = oracle::model(4, 0.0, 0.0, smdp::Potential::sine(cd(0, 0.5)));
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    const smdp::WienerIncrementStream stream(1, 0, cfg.dt, model.spectrum);
    const auto z = smdp::evolve_moderate(model, u0, smdp::DeviationScale::lil(1e-4), cfg, stream);
    CHECK(z.sup_norm() == 0.0);
  }
  SUBCASE("matches coupled runs of the original equation") {
    const auto model = oracle::default_model(8);
    const SpectralField gamma = smdp::basis_vector(8, 1);
    const auto u0 = smdp::evolve_deterministic(model, gamma, cfg);
    for (const auto& scale : {smdp::DeviationScale::power(1e-3), smdp::DeviationScale::lil(1e-4)}) {
      const smdp::WienerIncrementStream stream(77, 4, cfg.dt, model.spectrum);
      const auto u = smdp::evolve_original(model, gamma, scale.epsilon(), cfg, &stream);
      const auto z = smdp::evolve_moderate(model, u0, scale, cfg, stream);
      const double shift = scale.shift();
      const Eigen::MatrixXcd coupled = (u.states() - u0.states()) / shift;
      const double gap = (coupled - z.states()).colwise().norm().maxCoeff();
      CHECK(gap < 5e-2);
      CHECK(gap < 1e-9);  // the coupling is exact up to rounding
      CHECK(z.sup_norm() > 0.1);
    }
  }
}

TEST_CASE("single-mode moderate process is the closed-form Gaussian") {
  const auto model = oracle::model(1, 1.0, 0.0);
  const auto cfg = grid(1e-3);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(1, 1), cfg);
  const auto scale = smdp::DeviationScale::lil(1e-4);
  const double variance = scale.a() * scale.a() * 1.0 * cfg.horizon;  // per component
  const std::size_t n = 10000;
  std::vector<cd> terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const smdp::WienerIncrementStream stream(5, i, cfg.dt, model.spectrum);
    smdp::run_moderate(model, u0, scale, cfg, stream,
                       [&](std::size_t k, const SpectralField& z, const SpectralField&) {
                         if (k == 1000) terminal[i] = z[0];
                       });
  }
  for (auto part : {+[](cd z) { return z.real(); }, +[](cd z) { return z.imag(); }}) {
    double m = 0, s = 0;
    for (cd z : terminal) m += part(z);
    m /= n;
    for (cd z : terminal) s += std::pow(part(z) - m, 2);
    s /= (n - 1);
    CHECK(oracle::z_score(m, 0.0, s, n) < 3.0);
    const double var_se = variance * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(s - variance) < 3.0 * var_se);
  }
}

TEST_CASE("shifted process") {
  const auto cfg = grid(1e-3);
  const auto model = oracle::default_model(6);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(6, 1), cfg);
  const auto scale = smdp::DeviationScale::lil(1e-5);
  const smdp::WienerIncrementStream stream(3, 9, cfg.dt, model.spectrum);

  SUBCASE("h = 0 is bit-identical to the moderate process") {
    const auto zero = ControlPath::zero(6, 1000, cfg.dt);
    const auto shifted = smdp::evolve_shifted(model, u0, scale, zero, cfg, stream);
    const auto moderate = smdp::evolve_moderate(model, u0, scale, cfg, stream);
    CHECK(shifted.states() == moderate.states());
  }
  SUBCASE("without noise and with beta = 0 it is the skeleton") {
    const auto additive = oracle::model(6, 1.0, 0.0, smdp::Potential::sine(cd(0, 0.5)));
    const auto v0 = smdp::evolve_deterministic(additive, smdp::basis_vector(6, 1), cfg);
    std::mt19937_64 rng(2);
    const auto h = oracle::random_control(6, 1000, cfg.dt, rng);
    const auto quiet = smdp::evolve_shifted(additive, v0, scale, h, cfg, stream, {true});
    const auto skeleton = smdp::evolve_skeleton(additive, v0, h, cfg);
    CHECK(quiet.states() == skeleton.states());
  }
  SUBCASE("control grid must match") {
    CHECK_THROWS_AS(smdp::evolve_shifted(model, u0, scale, ControlPath::zero(6, 500, 2e-3), cfg, stream),
                    smdp::ShapeError);
  }
}

TEST_CASE("single-mode shifted mean follows the scalar ODE") {
  const auto model = oracle::model(1, 1.0, 0.0);
  const auto cfg = grid(1e-3);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(1, 1), cfg);
  const auto scale = smdp::DeviationScale::lil(1e-6);
  const cd c(0.8, -0.3);
  auto h = ControlPath::zero(1, 1000, cfg.dt);
  h.rates().setConstant(c);
  const cd mean = c * oracle::rotated_integral(oracle::pi * oracle::pi, 1.0);
  const std::size_t n = 10000;
  cd sum = 0;
  double ss_re = 0, ss_im = 0;
  std::vector<cd> terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const smdp::WienerIncrementStream stream(6, i, cfg.dt, model.spectrum);
    smdp::run_shifted(model, u0, scale, h, cfg, stream,
                      [&](std::size_t k, const SpectralField& z, const SpectralField&) {
                        if (k == 1000) terminal[i] = z[0];
                      });
    sum += terminal[i];
  }
  const cd m = sum / double(n);
  for (cd z : terminal) {
    ss_re += std::pow(z.real() - m.real(), 2);
    ss_im += std::pow(z.imag() - m.imag(), 2);
  }
  CHECK(oracle::z_score(m.real(), mean.real(), ss_re / (n - 1), n) < 3.0);
  CHECK(oracle::z_score(m.imag(), mean.imag(), ss_im / (n - 1), n) < 3.0);
}

TEST_CASE("skeleton") {
  const auto cfg = grid(1e-3);
  SUBCASE("zero control, linearity") {
    const auto model = oracle::default_model(6);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(6, 1), cfg);
    CHECK(smdp::evolve_skeleton(model, u0, ControlPath::zero(6, 1000, cfg.dt), cfg).sup_norm() == 0.0);
    std::mt19937_64 rng(12);
    const auto h = oracle::random_control(6, 1000, cfg.dt, rng);
    const auto k = oracle::random_control(6, 1000, cfg.dt, rng);
    const auto xh = smdp::evolve_skeleton(model, u0, h, cfg);
    const auto xk = smdp::evolve_skeleton(model, u0, k, cfg);
    const auto xhk = smdp::evolve_skeleton(model, u0, h + k, cfg);
    CHECK((xhk.states() - xh.states() - xk.states()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("single-mode closed form, second order") {
    const auto model = oracle::model(1, 1.0, 0.0);
    const double mu = oracle::pi * oracle::pi;
    double previous = 0;
    for (double dt : {2e-3, 1e-3, 5e-4}) {
      const auto c = grid(dt);
      const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(1, 1), c);
      auto h = ControlPath::zero(1, c.steps(), dt);
      h.rates().setOnes();
      const auto x = smdp::evolve_skeleton(model, u0, h, c);
      double worst = 0;
      for (std::size_t k = 0; k <= c.steps(); k += c.steps() / 10) {
        worst = std::max(worst, std::abs(x.state(k)[0] - oracle::rotated_integral(mu, x.time(k))));
      }
      const double err = std::abs(x.state(c.steps())[0] - oracle::rotated_integral(mu, 1.0));
      if (dt == 1e-3) CHECK(err <= 1e-6);
      if (previous > 0) CHECK(previous / err >= 3.5);
      previous = err;
      CHECK(worst < 1e-5);
    }
  }
}

TEST_CASE("strong self-convergence under grid refinement") {
  const double horizon = 0.25;
  const double fine_dt = 1.0 / 8192;
  const auto order = [&](const smdp::Model& model) {
    const SpectralField gamma = smdp::basis_vector(model.basis.modes(), 1);
    const std::size_t paths = 40;
    std::vector<double> err(3, 0.0);
    for (std::size_t i = 0; i < paths; ++i) {
      const smdp::WienerIncrementStream fine(31, i, fine_dt, model.spectrum);
      const auto ref = smdp::evolve_original(model, gamma, 0.01, grid(fine_dt, horizon), &fine);
      for (std::size_t level = 0; level < 3; ++level) {
        const std::size_t factor = std::size_t{8} >> level;  // dt = 8, 4, 2 fine steps
        const smdp::CoarsenedIncrements coarse(fine, factor);
        const auto x = smdp::evolve_original(model, gamma, 0.01, grid(fine_dt * factor, horizon), &coarse);
        double sup = 0;
        for (std::size_t k = 0; k <= x.steps(); k += (x.steps() / 256)) {
          sup = std::max(sup, (x.state(k) - ref.state(k * factor)).norm());
        }
        err[level] += sup / paths;
      }
    }
    return std::log2(err[0] / err[2]) / 2.0;
  };
  const double additive = order(oracle::model(4, 1.0, 0.0, smdp::Potential::sine(cd(0, 0.5))));
  const double multiplicative = order(oracle::default_model(4));
  MESSAGE("observed orders: additive " << additive << ", multiplicative " << multiplicative);
  CHECK(additive >= 1.0);
  CHECK(multiplicative >= 0.5);
}

TEST_CASE("dyadic map and modulus") {
  const smdp::DyadicMap map(3, 1.0);
  for (double s : {0.0, 0.1, 0.125, 0.49, 0.99}) {
    CHECK(map(s) <= s);
    CHECK(s < map(s) + map.block_length());
  }
  CHECK(map(1.0) == 1.0);
  CHECK(map(0.3) == 0.25);

  Eigen::MatrixXcd flat = Eigen::MatrixXcd::Constant(2, 17, cd(1, 2));
  CHECK(smdp::dyadic_modulus(Trajectory(1.0 / 16, flat, smdp::EquationTag::moderate), 2) == 0.0);

  Eigen::MatrixXcd ramp(1, 17);
  for (int k = 0; k <= 16; ++k) ramp(0, k) = k / 16.0;
  const Trajectory line(1.0 / 16, ramp, smdp::EquationTag::moderate);
  for (int n = 0; n <= 4; ++n) {
    CHECK(smdp::dyadic_modulus(line, n) == doctest::Approx(std::ldexp(1.0, -n)).epsilon(1e-15));
  }
  Eigen::MatrixXcd bumpy(1, 9);
  bumpy << 0, 1, 1, 4, 4, 4, 4, 5, 5;
  const Trajectory steps(0.125, bumpy, smdp::EquationTag::moderate);
  CHECK(smdp::dyadic_modulus(steps, 3) == 3.0);  // one step per block: largest increment
  CHECK_THROWS_AS(smdp::dyadic_modulus(steps, 4), smdp::ResolutionError);
  Eigen::MatrixXcd twelve = Eigen::MatrixXcd::Zero(1, 13);
  CHECK_THROWS_AS(smdp::dyadic_modulus(Trajectory(1.0 / 12, twelve, smdp::EquationTag::moderate), 3),
                  smdp::ResolutionError);
}

TEST_CASE("moment monitor") {
  const auto cfg = grid(1e-3);
  const Eigen::MatrixXcd zeros = Eigen::MatrixXcd::Zero(3, 11);
  std::vector<Trajectory> flat(30, Trajectory(0.1, zeros, smdp::EquationTag::skeleton));
  const smdp::Basis b3(3);
  const auto report = smdp::moment_monitor(b3, flat, 2.0);
  CHECK(report.sup_h_moment.estimate == 0.0);
  CHECK(report.sup_v_square.upper == 0.0);
  CHECK_THROWS_AS(smdp::moment_monitor(b3, std::span(flat).first(29), 1.0), smdp::DomainError);

  const auto model = oracle::default_model(8);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(8, 1), cfg);
  std::vector<smdp::MomentReport> reports;
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    std::vector<Trajectory> paths;
    for (std::size_t i = 0; i < 200; ++i) {
      const smdp::WienerIncrementStream stream(10, i, cfg.dt, model.spectrum);
      paths.push_back(smdp::evolve_moderate(model, u0, smdp::DeviationScale::lil(eps), cfg, stream));
    }
    reports.push_back(smdp::moment_monitor(model.basis, paths, 1.0));
    CHECK(reports.back().sup_h_moment.lower <= reports.back().sup_h_moment.estimate);
    CHECK(reports.back().sup_h_moment.estimate <= reports.back().sup_h_moment.upper);
  }
  const auto uniform = smdp::moment_uniformity(reports);
  MESSAGE("moment spread " << uniform.spread);
  CHECK(uniform.uniform);
  CHECK(uniform.spread < 0.5);
}
