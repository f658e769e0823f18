#include <doctest.h>

#include <random>
#include <stdexcept>

#include "oracles.hpp"
#include "smdp/harness.hpp"

using smdp::IntegratorConfig;
using cd = std::complex<double>;

namespace {

IntegratorConfig grid(double dt, double horizon = 1.0) {
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.horizon = horizon;
  return cfg;
}

// Wilson bounds written out from the score equation.
std::pair<double, double> wilson_oracle(double k, double n, double z) {
  const double p = k / n;
  const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double half = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return {centre - half, centre + half};
}

}  // namespace

TEST_CASE("wilson interval") {
  const auto none = smdp::wilson_interval(0, 100);
  CHECK(none.estimate == 0.0);
  CHECK(none.lower == 0.0);
  CHECK(none.upper == doctest::Approx(smdp::kZ95 * smdp::kZ95 / (100 + smdp::kZ95 * smdp::kZ95)));
  CHECK(smdp::wilson_interval(50, 50).upper == 1.0);
  const auto mid = smdp::wilson_interval(37, 200);
  const auto [lo, hi] = wilson_oracle(37, 200, smdp::kZ95);
  CHECK(mid.estimate == doctest::Approx(0.185));
  CHECK(mid.lower == doctest::Approx(lo).epsilon(1e-12));
  CHECK(mid.upper == doctest::Approx(hi).epsilon(1e-12));
  CHECK_THROWS_AS(smdp::wilson_interval(1, 0), smdp::DomainError);
  CHECK_THROWS_AS(smdp::wilson_interval(3, 2), smdp::DomainError);

  // Doubling n at a fixed proportion narrows the interval by about sqrt 2.
  const auto a = smdp::wilson_interval(400, 2000);
  const auto b = smdp::wilson_interval(800, 4000);
  CHECK((a.upper - a.lower) / (b.upper - b.lower) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));

  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.1);
  int covered = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    std::size_t hits = 0;
    for (int i = 0; i < 200; ++i) hits += coin(rng);
    const auto ci = smdp::wilson_interval(hits, 200);
    covered += (ci.lower <= 0.1 && 0.1 <= ci.upper);
  }
  CHECK(covered / double(reps) == doctest::Approx(0.95).epsilon(0.02));
}

TEST_CASE("line fit") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> exact{1.5, 3.5, 5.5, 7.5};
  const auto f = smdp::fit_line(x, exact);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(f.slope_se < 1e-12);
  CHECK(f.points == 4);
  // y = 0, 1, 1, 3: slope = Sxy/Sxx = 4.5/5, residual variance 0.7 / 2, se = sqrt(0.35 / 5)
  const auto g = smdp::fit_line(x, std::vector<double>{0, 1, 1, 3});
  CHECK(g.slope == doctest::Approx(0.9));
  CHECK(g.intercept == doctest::Approx(-1.0));
  CHECK(g.slope_se == doctest::Approx(std::sqrt(0.35 / 5.0)));
  CHECK_THROWS_AS(smdp::fit_line(std::vector<double>{1, 1}, std::vector<double>{0, 1}), smdp::DomainError);
  CHECK_THROWS_AS(smdp::fit_line(std::vector<double>{1, 2}, std::vector<double>{0}), smdp::ShapeError);
}

TEST_CASE("executor") {
  for (unsigned workers : {1u, 3u, 8u}) {
    const smdp::Executor ex(workers);
    std::vector<std::size_t> out(100, 0);
    ex.for_each(out.size(), [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
    try {
      ex.for_each(50, [](std::size_t i) {
        if (i % 7 == 3) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "3");
    }
  }
}

TEST_CASE("tail scan") {
  const auto cfg = grid(1.0 / 64);
  smdp::TailScanSpec spec;
  spec.epsilons = {1e-2, 1e-3, 1e-4, 1e-5};
  spec.paths = 200;
  spec.rho = 0.4;

  SUBCASE("g = 0 is reported as deterministic") {
    const auto model = oracle::model(4, 0.0, 0.0);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    const auto r = smdp::mdp_tail_scan(model, u0, cfg, spec, 1);
    CHECK(r.status == smdp::FitStatus::deterministic);
    CHECK(r.passed);
    for (const auto& c : r.cells) CHECK(c.hits == 0);
  }
  SUBCASE("grid, radius and censoring") {
    const auto model = oracle::default_model(4);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    auto short_grid = spec;
    short_grid.epsilons.pop_back();
    CHECK_THROWS_AS(smdp::mdp_tail_scan(model, u0, cfg, short_grid, 1), smdp::DomainError);
    auto far = spec;
    far.rho = 50.0;
    const auto r = smdp::mdp_tail_scan(model, u0, cfg, far, 1);
    CHECK(r.status == smdp::FitStatus::insufficient);
    CHECK_FALSE(r.passed);
    CHECK(r.cells.front().censored);
  }
  SUBCASE("reports are independent of the worker count") {
    const auto model = oracle::default_model(4);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    const auto serial = smdp::mdp_tail_scan(model, u0, cfg, spec, 7, smdp::Executor(1));
    const auto threaded = smdp::mdp_tail_scan(model, u0, cfg, spec, 7, smdp::Executor(4));
    REQUIRE(serial.cells.size() == threaded.cells.size());
    for (std::size_t i = 0; i < serial.cells.size(); ++i) {
      CHECK(serial.cells[i].hits == threaded.cells[i].hits);
    }
    CHECK(serial.fit.slope == threaded.fit.slope);
    // hit frequency falls as the speed grows
    CHECK(serial.cells.front().hits >= serial.cells.back().hits);
  }
}

TEST_CASE("freidlin-wentzell check") {
  const auto f = smdp::loglog_formula_check(std::exp(1.0), 10, 1.0);
  CHECK(f.passed);
  CHECK(f.value == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(smdp::loglog_formula_check(3.0, 12, 0.5).passed);

  const auto cfg = grid(1.0 / 64);
  const auto model = oracle::default_model(4);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
  smdp::FwSpec spec;
  spec.epsilons = {1e-4, 1e-8};
  spec.rhos = {0.3, 0.6, 1.2};
  spec.eta = 0.5;
  spec.paths = 200;
  const auto r = smdp::fw_check(model, u0, cfg, spec, 3);
  REQUIRE(r.cells.size() == 6);
  CHECK(r.monotone);
  for (const auto& c : r.cells) {
    CHECK(c.hits <= c.qualifying);
    CHECK(c.qualifying <= c.paths);
    CHECK(c.bound == doctest::Approx(1.0 / std::log(1.0 / c.epsilon)));
  }
  // A tight noise condition starves the conditioning and says so.
  spec.eta = 1e-3;
  CHECK_FALSE(smdp::fw_check(model, u0, cfg, spec, 3).warnings.empty());
  spec.eta = -1.0;
  CHECK_THROWS_AS(smdp::fw_check(model, u0, cfg, spec, 3), smdp::DomainError);
}

TEST_CASE("lil clustering") {
  const auto cfg = grid(1.0 / 64);
  const auto model = oracle::default_model(4);
  const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
  smdp::LilSpec spec;
  spec.j_min = 3;
  CHECK_THROWS_AS(smdp::lil_cluster_check(model, u0, cfg, spec, 1), smdp::ScaleError);
  spec.j_min = 8;
  spec.j_max = 11;
  const auto r = smdp::lil_cluster_check(model, u0, cfg, spec, 1);
  CHECK(r.rows.size() == 4);
  CHECK(r.certificates_valid);
  CHECK(r.certificate_values.front() == 0.0);
  for (double v : r.certificate_values) CHECK(v <= spec.limit.threshold() * (1 + 1e-9));
  for (const auto& row : r.rows) {
    CHECK(row.distances.front() == doctest::Approx(row.sup_norm));
    CHECK(row.epsilon == doctest::Approx(std::pow(3.0, -row.j)));
  }
  CHECK(r.delta_escape == doctest::Approx(0.25 * r.hull_scale));
}

TEST_CASE("modulus tail") {
  const auto cfg = grid(1.0 / 64);
  smdp::ModulusSpec spec;
  spec.epsilons = {1e-4, 1e-6};
  spec.paths = 100;
  SUBCASE("no noise, no control: nothing moves") {
    const auto model = oracle::model(4, 0.0, 0.0);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    const auto r = smdp::modulus_tail_check(model, u0, cfg, spec, 1);
    CHECK(r.passed);
    CHECK(std::isinf(r.sustained));
    for (const auto& c : r.cells) CHECK(c.exceed == 0);
  }
  SUBCASE("level must resolve the grid") {
    const auto model = oracle::default_model(4);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    spec.level = 7;
    CHECK_THROWS_AS(smdp::modulus_tail_check(model, u0, cfg, spec, 1), smdp::ResolutionError);
  }
  SUBCASE("small beta is exceeded often") {
    const auto model = oracle::default_model(4);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    spec.beta = 1e-3;
    const auto r = smdp::modulus_tail_check(model, u0, cfg, spec, 1);
    for (const auto& c : r.cells) CHECK(c.exceed == c.paths);
    CHECK_FALSE(r.passed);
  }
}

TEST_CASE("lil clustering: degenerate cases") {
  const auto cfg = grid(1.0 / 64);
  smdp::LilSpec spec;
  spec.j_min = 8;
  spec.j_max = 13;
  SUBCASE("g = 0 recurs to the zero certificate at every j") {
    const auto model = oracle::model(3, 0.0, 0.0);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(3, 1), cfg);
    spec.delta_recurrence = 1e-12;
    spec.delta_escape = 1e-12;
    const auto r = smdp::lil_cluster_check(model, u0, cfg, spec, 1);
    CHECK(r.recurrence.front() == 6);
    CHECK(r.zero_recurrence_frequency == 1.0);
  }
  SUBCASE("a single zero certificate: escapes are the large sup norms") {
    const auto model = oracle::default_model(3);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(3, 1), cfg);
    spec.certificates = 1;
    spec.limit.budget = 1e-12;
    spec.delta_escape = 0.5;
    const auto r = smdp::lil_cluster_check(model, u0, cfg, spec, 4);
    std::size_t large = 0;
    for (const auto& row : r.rows) large += row.sup_norm >= 0.5;
    CHECK(r.escapes == large);
    CHECK(large > 0);
    CHECK(large < r.rows.size());
  }
}

TEST_CASE("modulus tail: wide beta and the single-mode oracle") {
  const auto cfg = grid(1.0 / 64);
  SUBCASE("beta above twice the largest sup norm is never exceeded") {
    const auto model = oracle::default_model(4);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(4, 1), cfg);
    smdp::ModulusSpec spec;
    spec.epsilons = {1e-5};
    spec.paths = 200;
    spec.beta = 1e3;
    const auto probe = smdp::modulus_tail_check(model, u0, cfg, spec, 2);
    spec.beta = 2.0 * probe.cells.front().max_sup_norm + 1e-9;
    const auto r = smdp::modulus_tail_check(model, u0, cfg, spec, 2);
    CHECK(r.cells.front().exceed == 0);
    CHECK(std::isinf(r.sustained));
  }
  SUBCASE("single additive mode against a direct block-maximum simulation") {
    // z_{k+1} = exp(-i mu dt) z_k + a dW_k, simulated here with its own RNG.
    const auto model = oracle::model(1, 1.0, 0.0);
    const auto u0 = smdp::evolve_deterministic(model, smdp::basis_vector(1, 1), cfg);
    const double eps = 1e-6;
    const double a = smdp::lil_scale(eps);
    const int level = 3;
    const double beta = 0.6;
    const std::size_t n = 4000;
    smdp::ModulusSpec spec;
    spec.epsilons = {eps};
    spec.level = level;
    spec.beta = beta;
    spec.paths = n;
    const auto lib = smdp::modulus_tail_check(model, u0, cfg, spec, 8).cells.front();

    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, std::sqrt(cfg.dt));
    const cd rotate = std::exp(cd(0, -oracle::pi * oracle::pi * cfg.dt));
    const std::size_t block = 64 >> level;
    std::size_t exceed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cd z = 0;
      cd anchor = 0;
      double worst = 0;
      for (std::size_t k = 1; k <= 64; ++k) {
        z = rotate * z + a * cd(normal(rng), normal(rng));
        worst = std::max(worst, std::abs(z - anchor));
        if (k % block == 0) anchor = z;
      }
      exceed += worst > beta;
    }
    const double p_lib = lib.probability.estimate;
    const double p_ref = double(exceed) / n;
    const double se = std::sqrt(p_lib * (1 - p_lib) / n + p_ref * (1 - p_ref) / n);
    MESSAGE("modulus exceedance: library " << p_lib << ", oracle " << p_ref);
    CHECK(p_ref > 0.05);
    CHECK(p_ref < 0.95);
    CHECK(std::abs(p_lib - p_ref) <= 3.0 * se);
  }
}
