#pragma once

// Experiment drivers: MDP tail scans, the Freidlin-Wentzell inequality check,
// LIL clustering and the dyadic-modulus tail. Paths are fanned out over an
// Executor; path i of a cell always uses the substream (seed, path index), so
// every number reported here is independent of the worker count.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smdp/action.hpp"
#include "smdp/coefficients.hpp"
#include "smdp/dynamics.hpp"
#include "smdp/parallel.hpp"
#include "smdp/stats.hpp"

namespace smdp {

/// How a(eps) is chosen for a given eps.
struct ScaleChoice {
  ScaleMode mode = ScaleMode::generic;
  double exponent = 0.25;  ///< a = eps^exponent in generic mode
  DeviationScale at(double epsilon) const;
};

// ---------------------------------------------------------------- tail scan

struct TailEstimate {
  double epsilon = 0;
  double rho = 0;
  double speed = 0;
  std::size_t paths = 0;  ///< completed paths (blow-ups excluded)
  std::size_t hits = 0;
  std::size_t blow_ups = 0;
  Interval probability;
  bool censored = false;  ///< no hits: only the upper bound is informative
};

struct TailScanSpec {
  std::vector<double> epsilons;
  double rho = 0.3;
  std::size_t paths = 10000;
  ScaleChoice scale;
  double tolerance = 0.25;  ///< allowed relative error of the fitted rate
  std::size_t min_points = 3;
};

enum class FitStatus { fitted, deterministic, insufficient };
std::string to_string(FitStatus status);

struct TailScanReport {
  std::vector<TailEstimate> cells;
  FitStatus status = FitStatus::insufficient;
  LineFit fit;  ///< log p against -speed; the slope estimates the rate
  ExitRate oracle;
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  std::string diagnostic;
  bool passed = false;
};

TailScanReport mdp_tail_scan(const Model& model, const Trajectory& u0,
                             const IntegratorConfig& config, const TailScanSpec& spec,
                             std::uint64_t seed, const Executor& executor = Executor{});

// ------------------------------------------------------------ FW inequality

struct FwSpec {
  std::vector<double> epsilons;
  std::vector<double> rhos{0.5};
  double eta = std::numeric_limits<double>::infinity();  ///< inf drops the noise condition
  double rate = 0.5;  ///< R
  std::size_t paths = 2000;
  ControlPath control;  ///< empty: h = 0
  std::size_t min_qualifying = 30;
};

struct FwCell {
  double epsilon = 0;
  double rho = 0;
  double bound = 0;
  std::size_t paths = 0;
  std::size_t qualifying = 0;  ///< paths meeting the noise condition
  std::size_t hits = 0;        ///< paths in the joint event
  std::size_t blow_ups = 0;
  Interval probability;
  bool passed = false;
};

struct FormulaCheck {
  double c = 0;
  int j = 0;
  double rate = 0;
  double value = 0;
  double expected = 0;
  bool passed = false;
};

/// exp(-2R log log(1/eps)) at eps = c^-j against (j log c)^(-2R).
FormulaCheck loglog_formula_check(double c, int j, double rate);

struct FwReport {
  std::vector<FwCell> cells;  ///< epsilon-major, rho ascending
  bool monotone = true;
  std::vector<std::string> warnings;
  FormulaCheck formula;
  bool passed = false;
};

FwReport fw_check(const Model& model, const Trajectory& u0, const IntegratorConfig& config,
                  const FwSpec& spec, std::uint64_t seed, const Executor& executor = Executor{});

// ------------------------------------------------------------ LIL clustering

struct LilSpec {
  double c = 3.0;
  int j_min = 8;
  int j_max = 20;
  LimitSetSpec limit{60.0};
  std::size_t certificates = 7;
  double delta_fraction = 0.25;  ///< default deltas as a fraction of the hull scale
  std::optional<double> delta_recurrence;
  std::optional<double> delta_escape;
  double recurrence_min = 0.6;
  double escape_max = 0.2;
};

struct LilRow {
  int j = 0;
  double epsilon = 0;
  double sup_norm = 0;
  std::vector<double> distances;  ///< sup distance to each certificate path
  double hull_distance = 0;       ///< min over certificates
  bool escaped = false;
};

struct LilReport {
  double c = 0;
  std::vector<LilRow> rows;
  std::vector<double> certificate_values;
  bool certificates_valid = true;
  std::vector<std::size_t> recurrence;  ///< per certificate
  std::size_t escapes = 0;
  double hull_scale = 0;
  double delta_recurrence = 0;
  double delta_escape = 0;
  double zero_recurrence_frequency = 0;
  double escape_frequency = 0;
  bool passed = false;
};

LilReport lil_cluster_check(const Model& model, const Trajectory& u0,
                            const IntegratorConfig& config, const LilSpec& spec,
                            std::uint64_t seed, const Executor& executor = Executor{});

// ------------------------------------------------------------ modulus tail

struct ModulusSpec {
  std::vector<double> epsilons;
  int level = 4;
  double beta = 0.5;
  double rate = 0.5;
  std::size_t paths = 2000;
  ControlPath control;  ///< empty: h = 0
};

struct ModulusCell {
  double epsilon = 0;
  double bound = 0;
  std::size_t paths = 0;
  std::size_t exceed = 0;
  std::size_t blow_ups = 0;
  Interval probability;
  double max_sup_norm = 0;
  /// Largest R with p_hat <= exp(-2R log log(1/eps)); inf when nothing
  /// exceeded beta.
  double sustained = 0;
  bool passed = false;
};

struct ModulusReport {
  std::vector<ModulusCell> cells;
  double sustained = std::numeric_limits<double>::infinity();
  bool passed = false;
};

ModulusReport modulus_tail_check(const Model& model, const Trajectory& u0,
                                 const IntegratorConfig& config, const ModulusSpec& spec,
                                 std::uint64_t seed, const Executor& executor = Executor{});

}  // namespace smdp
