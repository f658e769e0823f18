#include "smdp/runner.hpp"

#include <Eigen/Core>

#include <cmath>
#include <fstream>

#include "smdp/errors.hpp"
#include "smdp/io.hpp"

#ifndef SMDP_VERSION
#define SMDP_VERSION "0.0.0"
#endif

namespace smdp {

namespace {

using nlohmann::json;

json interval_json(const Interval& i) {
  return {{"estimate", json_number(i.estimate)},
          {"lower", json_number(i.lower)},
          {"upper", json_number(i.upper)}};
}

json audit_json(const ConditionAudit& audit) {
  json checks = json::array();
  for (const auto& c : audit.checks) {
    checks.push_back({{"name", c.name},
                      {"min_slack", json_number(c.min_slack)},
                      {"worst_ratio", json_number(c.worst_ratio)},
                      {"passed", c.passed}});
  }
  const auto& k = audit.constants;
  return {{"passed", audit.passed},
          {"samples", audit.samples},
          {"constants",
           {{"k0", json_number(k.k0)},
            {"k1", json_number(k.k1)},
            {"k2", json_number(k.k2)},
            {"k3", json_number(k.k3)},
            {"k4", json_number(k.k4)},
            {"k5", json_number(k.k5)}}},
          {"checks", checks}};
}

std::string equation_name(EquationTag tag) { return to_string(tag); }

std::vector<double> norms_over_time(const Trajectory& traj, std::vector<double>& times) {
  std::vector<double> values;
  for (std::size_t k = 0; k <= traj.steps(); ++k) {
    times.push_back(traj.time(k));
    values.push_back(traj.state(k).norm());
  }
  return values;
}

void trajectory_outputs(RunResult& out, const Trajectory& traj, const RunConfig& config,
                        const std::string& hash) {
  out.results_csv = trajectory_csv(traj);
  json sidecar{{"config_hash", hash},
               {"seed", config.seed},
               {"equation", equation_name(traj.tag())},
               {"dt", traj.dt()},
               {"steps", traj.steps()},
               {"modes", traj.modes()},
               {"columns", "t, then re_j, im_j for j = 1..J"}};
  if (traj.scale()) {
    sidecar["scale"] = {{"epsilon", traj.scale()->epsilon()}, {"a", traj.scale()->a()}};
  }
  out.extra.push_back({"results.json", sidecar.dump(2) + "\n"});
  std::vector<double> t;
  const std::vector<double> n = norms_over_time(traj, t);
  out.extra.push_back({"norm.dat", plot_data("t", "norm", t, n)});
}

struct Context {
  const RunConfig& config;
  const Model& model;
  const Trajectory& u0;
  const Executor& executor;
  std::string hash;
};

void run_simulate(const SimulateExperiment& e, const Context& ctx, RunResult& out) {
  const auto& cfg = ctx.config.integrator;
  const ControlPath control = materialize_control(e.control, ctx.model, ctx.u0, cfg);
  const WienerIncrementStream stream(ctx.config.seed, e.path, cfg.dt, ctx.model.spectrum);
  Trajectory traj;
  switch (e.equation) {
    case EquationTag::original:
      traj = evolve_original(ctx.model, initial_state(ctx.config), e.epsilon, cfg, &stream);
      break;
    case EquationTag::deterministic:
      traj = ctx.u0;
      break;
    case EquationTag::moderate:
      traj = evolve_moderate(ctx.model, ctx.u0, e.scale.at(e.epsilon), cfg, stream);
      break;
    case EquationTag::shifted:
      traj = evolve_shifted(ctx.model, ctx.u0, e.scale.at(e.epsilon), control, cfg, stream);
      break;
    case EquationTag::skeleton:
      traj = evolve_skeleton(ctx.model, ctx.u0, control, cfg);
      break;
  }
  trajectory_outputs(out, traj, ctx.config, ctx.hash);
  out.report = {{"equation", equation_name(e.equation)},
                {"epsilon", e.epsilon},
                {"path", e.path},
                {"steps", traj.steps()},
                {"sup_norm", json_number(traj.sup_norm())},
                {"terminal_norm", json_number(traj.state(traj.steps()).norm())}};
  out.passed = true;
}

void run_skeleton_experiment(const SkeletonExperiment& e, const Context& ctx, RunResult& out) {
  const auto& cfg = ctx.config.integrator;
  const ControlPath control = materialize_control(e.control, ctx.model, ctx.u0, cfg);
  const Trajectory traj = evolve_skeleton(ctx.model, ctx.u0, control, cfg);
  trajectory_outputs(out, traj, ctx.config, ctx.hash);
  out.report = {{"half_energy", json_number(0.5 * cameron_martin_energy(control, ctx.model.spectrum))},
                {"sup_norm", json_number(traj.sup_norm())},
                {"terminal_norm", json_number(traj.state(traj.steps()).norm())}};
  out.passed = true;
}

void run_rate(const RateExperiment& e, const Context& ctx, RunResult& out) {
  const auto& cfg = ctx.config.integrator;
  const ControlPath control = materialize_control(e.control, ctx.model, ctx.u0, cfg);
  const SkeletonOperator op(ctx.model, ctx.u0, cfg);
  const Trajectory v = evolve_skeleton(ctx.model, ctx.u0, control, cfg);
  const ActionResult rate = path_rate(op, v);
  const double half_energy = 0.5 * cameron_martin_energy(control, ctx.model.spectrum);
  const ExitRate exit = sup_norm_exit_rate(op, e.rho);
  const Membership member = limit_set_membership(op, v, LimitSetSpec{e.budget});

  CsvWriter csv({"step", "t", "recovered_h0_sq", "given_h0_sq"});
  std::vector<double> t;
  std::vector<double> recovered;
  for (std::size_t k = 0; k < op.steps(); ++k) {
    const double mid = (static_cast<double>(k) + 0.5) * cfg.dt;
    const double r = h0_norm_sq(SpectralField(rate.control.rate(k)), ctx.model.spectrum);
    const double g = h0_norm_sq(SpectralField(control.rate(k)), ctx.model.spectrum);
    csv.field(k).field(mid).field(r).field(g);
    csv.end_row();
    t.push_back(mid);
    recovered.push_back(r);
  }
  out.results_csv = csv.str();
  out.extra.push_back({"control.dat", plot_data("t", "recovered_h0_sq", t, recovered)});
  out.report = {{"value", json_number(rate.value)},
                {"finite", rate.finite},
                {"residual", json_number(rate.residual)},
                {"half_energy", json_number(half_energy)},
                {"exit_rate",
                 {{"rho", e.rho},
                  {"rate", json_number(exit.rate)},
                  {"step", exit.step},
                  {"top_eigenvalue", json_number(exit.top_eigenvalue)},
                  {"check_value", json_number(exit.check.value)},
                  {"check_residual", json_number(exit.check.residual)},
                  {"check_converged", exit.check.converged}}},
                {"membership",
                 {{"M", e.budget}, {"member", member.member}, {"margin", json_number(member.margin)}}}};
  out.passed = rate.finite && rate.value <= half_energy + 1e-6;
}

void run_tail_scan(const TailScanExperiment& e, const Context& ctx, RunResult& out) {
  const TailScanReport r = mdp_tail_scan(ctx.model, ctx.u0, ctx.config.integrator, e.spec,
                                         ctx.config.seed, ctx.executor);
  CsvWriter csv({"epsilon", "speed", "rho", "paths", "hits", "blow_ups", "p_hat", "ci_lower",
                 "ci_upper", "censored"});
  json cells = json::array();
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& c : r.cells) {
    csv.field(c.epsilon).field(c.speed).field(c.rho).field(c.paths).field(c.hits)
        .field(c.blow_ups).field(c.probability.estimate).field(c.probability.lower)
        .field(c.probability.upper).field(c.censored);
    csv.end_row();
    cells.push_back({{"epsilon", c.epsilon},
                     {"speed", c.speed},
                     {"paths", c.paths},
                     {"hits", c.hits},
                     {"blow_ups", c.blow_ups},
                     {"probability", interval_json(c.probability)},
                     {"censored", c.censored}});
    if (!c.censored) {
      xs.push_back(c.speed);
      ys.push_back(std::log(c.probability.estimate));
    }
  }
  out.results_csv = csv.str();
  out.extra.push_back({"tail.dat", plot_data("speed", "log_p_hat", xs, ys)});
  out.report = {{"rho", e.spec.rho},
                {"scale", e.spec.scale.mode == ScaleMode::lil ? "lil" : "generic"},
                {"cells", cells},
                {"status", to_string(r.status)},
                {"diagnostic", r.diagnostic},
                {"fitted_rate", r.status == FitStatus::fitted ? json_number(r.fit.slope) : json(nullptr)},
                {"fitted_rate_se", r.status == FitStatus::fitted ? json_number(r.fit.slope_se) : json(nullptr)},
                {"fit_points", r.fit.points},
                {"oracle_rate", json_number(r.oracle.rate)},
                {"oracle_step", r.oracle.step},
                {"oracle_check_value", json_number(r.oracle.check.value)},
                {"relative_error", json_number(r.relative_error)},
                {"tolerance", e.spec.tolerance}};
  out.passed = r.passed;
}

void run_fw(const FwExperiment& e, const Context& ctx, RunResult& out) {
  FwSpec spec = e.spec;
  spec.control = materialize_control(e.control, ctx.model, ctx.u0, ctx.config.integrator);
  const FwReport r = fw_check(ctx.model, ctx.u0, ctx.config.integrator, spec, ctx.config.seed,
                              ctx.executor);
  CsvWriter csv({"epsilon", "rho", "bound", "paths", "qualifying", "hits", "blow_ups", "p_hat",
                 "ci_lower", "ci_upper", "passed"});
  json cells = json::array();
  std::vector<double> eps;
  std::vector<double> upper;
  std::vector<double> bound;
  for (const auto& c : r.cells) {
    csv.field(c.epsilon).field(c.rho).field(c.bound).field(c.paths).field(c.qualifying)
        .field(c.hits).field(c.blow_ups).field(c.probability.estimate)
        .field(c.probability.lower).field(c.probability.upper).field(c.passed);
    csv.end_row();
    cells.push_back({{"epsilon", c.epsilon},
                     {"rho", c.rho},
                     {"bound", c.bound},
                     {"paths", c.paths},
                     {"qualifying", c.qualifying},
                     {"hits", c.hits},
                     {"probability", interval_json(c.probability)},
                     {"passed", c.passed}});
    if (c.rho == r.cells.front().rho) {
      eps.push_back(c.epsilon);
      upper.push_back(c.probability.upper);
      bound.push_back(c.bound);
    }
  }
  out.results_csv = csv.str();
  out.extra.push_back({"fw_upper.dat", plot_data("epsilon", "ci_upper", eps, upper)});
  out.extra.push_back({"fw_bound.dat", plot_data("epsilon", "bound", eps, bound)});
  out.report = {{"eta", json_number(spec.eta)},
                {"R", spec.rate},
                {"cells", cells},
                {"monotone", r.monotone},
                {"warnings", r.warnings},
                {"formula_check",
                 {{"c", r.formula.c},
                  {"j", r.formula.j},
                  {"R", r.formula.rate},
                  {"value", r.formula.value},
                  {"expected", r.formula.expected},
                  {"passed", r.formula.passed}}}};
  out.passed = r.passed;
}

void run_lil(const LilExperiment& e, const Context& ctx, RunResult& out) {
  const LilReport r = lil_cluster_check(ctx.model, ctx.u0, ctx.config.integrator, e.spec,
                                        ctx.config.seed, ctx.executor);
  std::vector<std::string> header{"j", "epsilon", "sup_norm", "hull_distance", "escaped"};
  for (std::size_t m = 0; m < r.certificate_values.size(); ++m) {
    header.push_back("distance_" + std::to_string(m));
  }
  CsvWriter csv(header);
  std::vector<double> js;
  std::vector<double> dist;
  json rows = json::array();
  for (const auto& row : r.rows) {
    csv.field(row.j).field(row.epsilon).field(row.sup_norm).field(row.hull_distance)
        .field(row.escaped);
    for (double d : row.distances) csv.field(d);
    csv.end_row();
    js.push_back(row.j);
    dist.push_back(row.hull_distance);
    rows.push_back({{"j", row.j},
                    {"epsilon", row.epsilon},
                    {"sup_norm", row.sup_norm},
                    {"hull_distance", row.hull_distance},
                    {"escaped", row.escaped}});
  }
  out.results_csv = csv.str();
  out.extra.push_back({"lil.dat", plot_data("j", "hull_distance", js, dist)});
  json values = json::array();
  for (double v : r.certificate_values) values.push_back(json_number(v));
  out.report = {{"c", r.c},
                {"M", e.spec.limit.budget},
                {"rows", rows},
                {"certificate_values", values},
                {"certificates_valid", r.certificates_valid},
                {"recurrence", r.recurrence},
                {"escapes", r.escapes},
                {"hull_scale", r.hull_scale},
                {"delta_recurrence", r.delta_recurrence},
                {"delta_escape", r.delta_escape},
                {"zero_recurrence_frequency", r.zero_recurrence_frequency},
                {"escape_frequency", r.escape_frequency},
                {"recurrence_min", e.spec.recurrence_min},
                {"escape_max", e.spec.escape_max}};
  out.passed = r.passed;
}

void run_modulus(const ModulusExperiment& e, const Context& ctx, RunResult& out) {
  ModulusSpec spec = e.spec;
  spec.control = materialize_control(e.control, ctx.model, ctx.u0, ctx.config.integrator);
  const ModulusReport r = modulus_tail_check(ctx.model, ctx.u0, ctx.config.integrator, spec,
                                             ctx.config.seed, ctx.executor);
  CsvWriter csv({"epsilon", "bound", "paths", "exceed", "blow_ups", "p_hat", "ci_lower",
                 "ci_upper", "max_sup_norm", "sustained_R", "passed"});
  std::vector<double> eps;
  std::vector<double> p;
  json cells = json::array();
  for (const auto& c : r.cells) {
    csv.field(c.epsilon).field(c.bound).field(c.paths).field(c.exceed).field(c.blow_ups)
        .field(c.probability.estimate).field(c.probability.lower).field(c.probability.upper)
        .field(c.max_sup_norm).field(c.sustained).field(c.passed);
    csv.end_row();
    eps.push_back(c.epsilon);
    p.push_back(c.probability.estimate);
    cells.push_back({{"epsilon", c.epsilon},
                     {"bound", c.bound},
                     {"paths", c.paths},
                     {"exceed", c.exceed},
                     {"probability", interval_json(c.probability)},
                     {"sustained_R", json_number(c.sustained)},
                     {"passed", c.passed}});
  }
  out.results_csv = csv.str();
  out.extra.push_back({"modulus.dat", plot_data("epsilon", "p_hat", eps, p)});
  out.report = {{"level", spec.level},
                {"beta", spec.beta},
                {"R", spec.rate},
                {"cells", cells},
                {"sustained_R", json_number(r.sustained)}};
  out.passed = r.passed;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string library_version() { return SMDP_VERSION; }

RunResult run_experiment(const RunConfig& config, const Executor& executor) {
  const Model model = build_model(config);
  const CoefficientConstants constants =
      config.declared_constants.value_or(derive_constants(model));
  const ConditionAudit audit =
      audit_conditions(model, constants, 1000, 20240917, config.integrator.horizon);
  const Trajectory u0 = evolve_deterministic(model, initial_state(config), config.integrator);

  RunResult out;
  const Context ctx{config, model, u0, executor, config_hash(config)};
  std::visit(Overloaded{
                 [&](const SimulateExperiment& e) { run_simulate(e, ctx, out); },
                 [&](const SkeletonExperiment& e) { run_skeleton_experiment(e, ctx, out); },
                 [&](const RateExperiment& e) { run_rate(e, ctx, out); },
                 [&](const TailScanExperiment& e) { run_tail_scan(e, ctx, out); },
                 [&](const FwExperiment& e) { run_fw(e, ctx, out); },
                 [&](const LilExperiment& e) { run_lil(e, ctx, out); },
                 [&](const ModulusExperiment& e) { run_modulus(e, ctx, out); },
             },
             config.experiment);

  const bool experiment_passed = out.passed;
  out.passed = experiment_passed && audit.passed;
  out.report["kind"] = config.kind;
  out.report["config_hash"] = ctx.hash;
  out.report["seed"] = config.seed;
  out.report["audit"] = audit_json(audit);
  out.report["experiment_passed"] = experiment_passed;
  out.report["status"] = out.passed ? "PASS" : "FAIL";

  out.manifest = {{"config_hash", ctx.hash},
                  {"seed", config.seed},
                  {"kind", config.kind},
                  {"versions",
                   {{"smdp", library_version()},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"compiler", __VERSION__}}},
                  {"audit", audit_json(audit)},
                  {"status", out.passed ? "PASS" : "FAIL"}};
  json files = json::array({"manifest.json", "results.csv", "report.json"});
  for (const auto& f : out.extra) files.push_back(f.name);
  out.manifest["files"] = files;
  return out;
}

void write_outputs(const RunResult& result, const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  std::vector<OutputFile> files{{"results.csv", result.results_csv},
                                {"report.json", result.report.dump(2) + "\n"},
                                {"manifest.json", result.manifest.dump(2) + "\n"}};
  files.insert(files.end(), result.extra.begin(), result.extra.end());
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto& f : files) {
    const fs::path final_path = directory / f.name;
    const fs::path temp = directory / ("." + f.name + ".tmp");
    std::ofstream os(temp, std::ios::binary | std::ios::trunc);
    os << f.content;
    os.close();
    if (!os) {
      for (const auto& [t, _] : staged) fs::remove(t);
      fs::remove(temp);
      throw Error("cannot write " + temp.string());
    }
    staged.emplace_back(temp, final_path);
  }
  for (const auto& [temp, final_path] : staged) fs::rename(temp, final_path);
}

}  // namespace smdp
