#include "smdp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smdp/errors.hpp"

namespace smdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathOutcome {
  double sup = 0;
  double noise_distance = 0;
  double modulus = 0;
  bool blew_up = false;
};

std::uint64_t path_index(std::size_t cell, std::size_t paths, std::size_t i) {
  return static_cast<std::uint64_t>(cell) * static_cast<std::uint64_t>(paths) + i;
}

void require_grid(const std::vector<double>& epsilons, std::size_t minimum, const char* what) {
  if (epsilons.size() < minimum) {
    throw DomainError(std::string(what) + " needs at least " + std::to_string(minimum) +
                      " epsilon values");
  }
  for (double e : epsilons) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError(std::string(what) + ": epsilon outside (0, 1)");
  }
}

ControlPath control_or_zero(const ControlPath& control, const Model& model,
                            const IntegratorConfig& config) {
  if (control.steps() == 0) return ControlPath::zero(model.basis.modes(), config.steps(), config.dt);
  return control;
}

double weighted_distance(const SpectralField& diff, const CovarianceSpectrum& spectrum) {
  double sum = 0;
  for (Eigen::Index j = 0; j < diff.size(); ++j) {
    const double mass = std::norm(diff[j]);
    if (mass == 0.0) continue;
    if (spectrum[j] == 0.0) return kInf;
    sum += mass / spectrum[j];
  }
  return std::sqrt(sum);
}

}  // namespace

DeviationScale ScaleChoice::at(double epsilon) const {
  if (mode == ScaleMode::lil) return DeviationScale::lil(epsilon);
  return DeviationScale::power(epsilon, exponent);
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::fitted: return "fitted";
    case FitStatus::deterministic: return "deterministic";
    case FitStatus::insufficient: return "insufficient";
  }
  return "unknown";
}

TailScanReport mdp_tail_scan(const Model& model, const Trajectory& u0,
                             const IntegratorConfig& config, const TailScanSpec& spec,
                             std::uint64_t seed, const Executor& executor) {
  require_grid(spec.epsilons, 4, "tail scan");
  if (!(spec.rho > 0.0)) throw DomainError("tail scan radius must be positive");
  if (spec.paths == 0) throw DomainError("tail scan needs at least one path per cell");
  if (spec.min_points < 2) throw DomainError("slope fit needs at least two points");
  TailScanReport report;
  const std::size_t n = spec.paths;

  for (std::size_t cell = 0; cell < spec.epsilons.size(); ++cell) {
    const double epsilon = spec.epsilons[cell];
    const DeviationScale scale = spec.scale.at(epsilon);
    std::vector<PathOutcome> out(n);
    executor.for_each(n, [&](std::size_t i) {
      const WienerIncrementStream stream(seed, path_index(cell, n, i), config.dt, model.spectrum);
      double sup = 0;
      try {
        run_moderate(model, u0, scale, config, stream,
                     [&](std::size_t, const SpectralField& z, const SpectralField&) {
                       sup = std::max(sup, z.norm());
                     });
      } catch (const BlowUpError&) {
        out[i].blew_up = true;
      }
      out[i].sup = sup;
    });
    TailEstimate est;
    est.epsilon = epsilon;
    est.rho = spec.rho;
    est.speed = scale.speed();
    for (const auto& o : out) {
      if (o.blew_up) {
        ++est.blow_ups;
        continue;
      }
      ++est.paths;
      if (o.sup >= spec.rho) ++est.hits;
    }
    if (est.paths == 0) throw BlowUpError("every path of the cell blew up", 0);
    est.probability = wilson_interval(est.hits, est.paths);
    est.censored = est.hits == 0;
    report.cells.push_back(est);
  }

  const SkeletonOperator op(model, u0, config);
  report.oracle = sup_norm_exit_rate(op, spec.rho);

  if (model.noise.is_zero()) {
    report.status = FitStatus::deterministic;
    report.diagnostic = "g = 0: the rescaled process is identically zero, no fit";
    report.passed = true;
    return report;
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& c : report.cells) {
    if (c.censored) continue;
    x.push_back(-c.speed);
    y.push_back(std::log(c.probability.estimate));
  }
  if (x.size() < spec.min_points) {
    report.status = FitStatus::insufficient;
    std::ostringstream msg;
    msg << "only " << x.size() << " uncensored cells, the fit needs " << spec.min_points;
    report.diagnostic = msg.str();
    report.passed = false;
    return report;
  }
  report.status = FitStatus::fitted;
  report.fit = fit_line(x, y);
  report.relative_error = std::abs(report.fit.slope - report.oracle.rate) / report.oracle.rate;
  report.passed = report.relative_error <= spec.tolerance;
  return report;
}

FormulaCheck loglog_formula_check(double c, int j, double rate) {
  if (!(c > 1.0) || j < 1) throw DomainError("formula check needs c > 1 and j >= 1");
  FormulaCheck f;
  f.c = c;
  f.j = j;
  f.rate = rate;
  f.value = loglog_bound(std::pow(c, -j), rate);
  f.expected = std::pow(static_cast<double>(j) * std::log(c), -2.0 * rate);
  f.passed = std::abs(f.value - f.expected) <= 1e-12 * f.expected;
  return f;
}

FwReport fw_check(const Model& model, const Trajectory& u0, const IntegratorConfig& config,
                  const FwSpec& spec, std::uint64_t seed, const Executor& executor) {
  require_grid(spec.epsilons, 1, "FW check");
  if (spec.rhos.empty()) throw DomainError("FW check needs at least one radius");
  if (!(spec.eta > 0.0)) throw DomainError("FW check needs eta > 0");
  if (spec.paths == 0) throw DomainError("FW check needs at least one path");
  std::vector<double> rhos = spec.rhos;
  std::sort(rhos.begin(), rhos.end());
  if (!(rhos.front() > 0.0)) throw DomainError("FW radii must be positive");

  const std::size_t steps = config.steps();
  const ControlPath control = control_or_zero(spec.control, model, config);
  const Trajectory skeleton = evolve_skeleton(model, u0, control, config);
  Eigen::MatrixXcd h(model.basis.modes(), static_cast<Eigen::Index>(steps) + 1);
  for (std::size_t k = 0; k <= steps; ++k) h.col(static_cast<Eigen::Index>(k)) = control.integrated(k);

  FwReport report;
  report.formula = loglog_formula_check(std::exp(1.0), 10, 1.0);
  const std::size_t n = spec.paths;
  for (std::size_t cell = 0; cell < spec.epsilons.size(); ++cell) {
    const double epsilon = spec.epsilons[cell];
    const DeviationScale scale = DeviationScale::lil(epsilon);
    const double a = scale.a();
    std::vector<PathOutcome> out(n);
    executor.for_each(n, [&](std::size_t i) {
      const WienerIncrementStream stream(seed, path_index(cell, n, i), config.dt, model.spectrum);
      SpectralField w = SpectralField::Zero(model.basis.modes());
      double sup = 0;
      double noise = 0;
      try {
        run_moderate(model, u0, scale, config, stream,
                     [&](std::size_t k, const SpectralField& z, const SpectralField& dw) {
                       const auto col = static_cast<Eigen::Index>(k);
                       w += dw;
                       sup = std::max(sup, (z - skeleton.states().col(col)).norm());
                       noise = std::max(noise, weighted_distance(a * w - h.col(col), model.spectrum));
                     });
      } catch (const BlowUpError&) {
        out[i].blew_up = true;
      }
      out[i].sup = sup;
      out[i].noise_distance = noise;
    });
    const double bound = loglog_bound(epsilon, spec.rate);
    std::size_t previous = n + 1;
    for (double rho : rhos) {
      FwCell c;
      c.epsilon = epsilon;
      c.rho = rho;
      c.bound = bound;
      for (const auto& o : out) {
        if (o.blew_up) {
          ++c.blow_ups;
          continue;
        }
        ++c.paths;
        const bool quiet = o.noise_distance < spec.eta;
        if (quiet) ++c.qualifying;
        if (quiet && o.sup >= rho) ++c.hits;
      }
      if (c.paths == 0) throw BlowUpError("every path of the cell blew up", 0);
      c.probability = wilson_interval(c.hits, c.paths);
      c.passed = c.probability.upper <= bound;
      if (c.hits > previous) report.monotone = false;
      previous = c.hits;
      if (rho == rhos.front() && c.qualifying < spec.min_qualifying) {
        std::ostringstream msg;
        msg << "conditioning starved at eps=" << epsilon << ": only " << c.qualifying
            << " of " << c.paths << " paths satisfy the noise condition (eta=" << spec.eta << ")";
        report.warnings.push_back(msg.str());
      }
      report.cells.push_back(c);
    }
  }
  report.passed = report.monotone && report.formula.passed &&
                  std::all_of(report.cells.begin(), report.cells.end(),
                              [](const FwCell& c) { return c.passed; });
  return report;
}

LilReport lil_cluster_check(const Model& model, const Trajectory& u0,
                            const IntegratorConfig& config, const LilSpec& spec,
                            std::uint64_t seed, const Executor& executor) {
  if (!(spec.c > 1.0)) throw DomainError("LIL check needs c > 1");
  if (spec.j_min > spec.j_max || spec.j_min < 1) throw DomainError("LIL check needs 1 <= j_min <= j_max");
  if (!(std::pow(spec.c, -spec.j_min) < kLilEpsilonMax)) {
    std::ostringstream msg;
    msg << "eps = " << spec.c << "^-" << spec.j_min << " is not below 10^(-sqrt 10)";
    throw ScaleError(msg.str());
  }
  if (spec.certificates < 1) throw DomainError("LIL check needs at least one certificate");

  const SkeletonOperator op(model, u0, config);
  const auto certificates = certificate_dictionary(op, spec.limit, spec.certificates);

  LilReport report;
  report.c = spec.c;
  for (const auto& cert : certificates) {
    const Membership m = limit_set_membership(op, cert.path, spec.limit);
    report.certificate_values.push_back(m.value);
    report.certificates_valid = report.certificates_valid && m.member;
    report.hull_scale = std::max(report.hull_scale, cert.path.sup_norm());
  }
  report.delta_recurrence = spec.delta_recurrence.value_or(spec.delta_fraction * report.hull_scale);
  report.delta_escape = spec.delta_escape.value_or(spec.delta_fraction * report.hull_scale);

  const std::size_t count = static_cast<std::size_t>(spec.j_max - spec.j_min + 1);
  report.rows.resize(count);
  executor.for_each(count, [&](std::size_t i) {
    const int j = spec.j_min + static_cast<int>(i);
    const double epsilon = std::pow(spec.c, -j);
    const WienerIncrementStream stream(seed, static_cast<std::uint64_t>(j), config.dt,
                                       model.spectrum);
    const Trajectory z = evolve_moderate(model, u0, DeviationScale::lil(epsilon), config, stream);
    LilRow& row = report.rows[i];
    row.j = j;
    row.epsilon = epsilon;
    row.sup_norm = z.sup_norm();
    row.hull_distance = kInf;
    for (const auto& cert : certificates) {
      row.distances.push_back(sup_distance(z, cert.path));
      row.hull_distance = std::min(row.hull_distance, row.distances.back());
    }
  });

  report.recurrence.assign(certificates.size(), 0);
  for (auto& row : report.rows) {
    for (std::size_t m = 0; m < certificates.size(); ++m) {
      if (row.distances[m] <= report.delta_recurrence) ++report.recurrence[m];
    }
    row.escaped = row.hull_distance >= report.delta_escape;
    if (row.escaped) ++report.escapes;
  }
  report.zero_recurrence_frequency =
      static_cast<double>(report.recurrence.front()) / static_cast<double>(count);
  report.escape_frequency = static_cast<double>(report.escapes) / static_cast<double>(count);
  report.passed = report.certificates_valid &&
                  report.zero_recurrence_frequency >= spec.recurrence_min &&
                  report.escape_frequency <= spec.escape_max;
  return report;
}

ModulusReport modulus_tail_check(const Model& model, const Trajectory& u0,
                                 const IntegratorConfig& config, const ModulusSpec& spec,
                                 std::uint64_t seed, const Executor& executor) {
  require_grid(spec.epsilons, 1, "modulus check");
  if (spec.paths == 0) throw DomainError("modulus check needs at least one path");
  const std::size_t steps = config.steps();
  DyadicModulusAccumulator probe(steps, spec.level);  // validates the level up front
  (void)probe;
  const ControlPath control = control_or_zero(spec.control, model, config);

  ModulusReport report;
  const std::size_t n = spec.paths;
  for (std::size_t cell = 0; cell < spec.epsilons.size(); ++cell) {
    const double epsilon = spec.epsilons[cell];
    const DeviationScale scale = DeviationScale::lil(epsilon);
    std::vector<PathOutcome> out(n);
    executor.for_each(n, [&](std::size_t i) {
      const WienerIncrementStream stream(seed, path_index(cell, n, i), config.dt, model.spectrum);
      DyadicModulusAccumulator acc(steps, spec.level);
      double sup = 0;
      try {
        run_shifted(model, u0, scale, control, config, stream,
                    [&](std::size_t k, const SpectralField& z, const SpectralField&) {
                      acc.push(k, z);
                      sup = std::max(sup, z.norm());
                    });
      } catch (const BlowUpError&) {
        out[i].blew_up = true;
      }
      out[i].modulus = acc.value();
      out[i].sup = sup;
    });
    ModulusCell c;
    c.epsilon = epsilon;
    c.bound = loglog_bound(epsilon, spec.rate);
    for (const auto& o : out) {
      if (o.blew_up) {
        ++c.blow_ups;
        continue;
      }
      ++c.paths;
      c.max_sup_norm = std::max(c.max_sup_norm, o.sup);
      if (o.modulus > spec.beta) ++c.exceed;
    }
    if (c.paths == 0) throw BlowUpError("every path of the cell blew up", 0);
    c.probability = wilson_interval(c.exceed, c.paths);
    const double loglog = std::log(std::log(1.0 / epsilon));
    c.sustained = c.exceed > 0 ? -std::log(c.probability.estimate) / (2.0 * loglog) : kInf;
    c.passed = c.probability.upper <= c.bound;
    report.sustained = std::min(report.sustained, c.sustained);
    report.cells.push_back(c);
  }
  report.passed = std::all_of(report.cells.begin(), report.cells.end(),
                              [](const ModulusCell& c) { return c.passed; });
  return report;
}

}  // namespace smdp
