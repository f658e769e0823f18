#pragma once

// Run configuration: a single JSON document. Parsing is strict; unknown keys
// and bad values raise ConfigError carrying the JSON pointer of the offender.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "smdp/coefficients.hpp"
#include "smdp/dynamics.hpp"
#include "smdp/harness.hpp"

namespace smdp {

/// A control h' named in a config, materialised once the model is known.
struct ControlSpec {
  std::string kind = "zero";  ///< zero | constant | certificate
  Eigen::Index mode = 1;
  Complex value{0.0, 0.0};
  std::size_t index = 0;       ///< certificate entry
  double budget = 1.0;         ///< certificate M
};

struct SimulateExperiment {
  EquationTag equation = EquationTag::original;
  double epsilon = 1e-3;
  ScaleChoice scale;
  ControlSpec control;
  std::uint64_t path = 0;
};

struct SkeletonExperiment {
  ControlSpec control;
};

struct RateExperiment {
  ControlSpec control;
  double rho = 0.3;
  double budget = 1.0;
};

struct TailScanExperiment {
  TailScanSpec spec;
};

struct FwExperiment {
  FwSpec spec;
  ControlSpec control;
};

struct LilExperiment {
  LilSpec spec;
};

struct ModulusExperiment {
  ModulusSpec spec;
  ControlSpec control;
};

using Experiment = std::variant<SimulateExperiment, SkeletonExperiment, RateExperiment,
                                TailScanExperiment, FwExperiment, LilExperiment,
                                ModulusExperiment>;

struct RunConfig {
  Eigen::Index modes = 8;
  Eigen::Index grid_points = 0;  ///< 0: 4 J
  double spectrum_exponent = 2.0;
  double spectrum_scale = 1.0;
  Complex alpha{1.0, 0.0};
  Complex beta{0.25, 0.0};
  std::string potential_kind = "sine";
  Complex potential_amplitude{0.0, 0.5};
  std::optional<CoefficientConstants> declared_constants;
  IntegratorConfig integrator;
  SpectralField initial;  ///< empty: e_1
  std::string kind;
  Experiment experiment;
  std::uint64_t seed = 1;
  std::string output = "out";
  std::string canonical;  ///< compact dump of the parsed document
};

/// Experiment kinds accepted under /experiment/kind.
const std::vector<std::string>& experiment_kinds();

RunConfig parse_config(const nlohmann::json& document);
/// Reads and parses a file; I/O and syntax errors become ConfigError with
/// pointer "".
RunConfig load_config(const std::filesystem::path& path);

Model build_model(const RunConfig& config);
SpectralField initial_state(const RunConfig& config);
ControlPath materialize_control(const ControlSpec& spec, const Model& model,
                                const Trajectory& u0, const IntegratorConfig& integrator);

/// 64-bit FNV-1a of the canonical document, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace smdp
