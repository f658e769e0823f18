#include "smdp/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "smdp/errors.hpp"

namespace smdp {

namespace {

using nlohmann::json;

std::string escape_token(const std::string& key) {
  std::string out;
  for (char ch : key) {
    if (ch == '~') {
      out += "~0";
    } else if (ch == '/') {
      out += "~1";
    } else {
      out += ch;
    }
  }
  return out;
}

double as_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ConfigError(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(ptr, "expected a finite number");
  return x;
}

double as_positive(const json& v, const std::string& ptr) {
  const double x = as_number(v, ptr);
  if (!(x > 0.0)) throw ConfigError(ptr, "must be positive");
  return x;
}

std::int64_t as_integer(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw ConfigError(ptr, "expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw ConfigError(ptr, "integer out of range");
  }
  return v.get<std::int64_t>();
}

std::uint64_t as_unsigned(const json& v, const std::string& ptr) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw ConfigError(ptr, "expected a nonnegative integer");
}

std::string as_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) throw ConfigError(ptr, "expected a string");
  return v.get<std::string>();
}

/// A number or a two-element array [re, im].
Complex as_complex(const json& v, const std::string& ptr) {
  if (v.is_number()) return {as_number(v, ptr), 0.0};
  if (v.is_array() && v.size() == 2) {
    return {as_number(v[0], ptr + "/0"), as_number(v[1], ptr + "/1")};
  }
  throw ConfigError(ptr, "expected a number or [re, im]");
}

class Object {
 public:
  Object(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {
    if (!value_.is_object()) throw ConfigError(pointer_, "expected an object");
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + escape_token(key); }
  const std::string& pointer() const noexcept { return pointer_; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = value_.find(key);
    return it == value_.end() ? nullptr : &*it;
  }
  const json& require(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) throw ConfigError(at(key), "required key is missing");
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_number(*v, at(key)) : fallback;
  }
  double positive(const std::string& key, double fallback) {
    const json* v = find(key);
    return v ? as_positive(*v, at(key)) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback, std::size_t minimum = 1) {
    const json* v = find(key);
    if (!v) return fallback;
    const std::uint64_t n = as_unsigned(*v, at(key));
    if (n < minimum) throw ConfigError(at(key), "must be at least " + std::to_string(minimum));
    return static_cast<std::size_t>(n);
  }
  Complex complex(const std::string& key, Complex fallback) {
    const json* v = find(key);
    return v ? as_complex(*v, at(key)) : fallback;
  }

  void close() const {
    for (const auto& item : value_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(at(item.key()), "unknown key");
    }
  }

 private:
  const json& value_;
  std::string pointer_;
  std::set<std::string> seen_;
};

std::vector<double> epsilon_list(Object& obj, const std::string& key, std::size_t minimum) {
  const json& v = obj.require(key);
  const std::string ptr = obj.at(key);
  if (!v.is_array()) throw ConfigError(ptr, "expected an array of numbers");
  if (v.size() < minimum) {
    throw ConfigError(ptr, "needs at least " + std::to_string(minimum) + " values");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = ptr + "/" + std::to_string(i);
    const double e = as_number(v[i], item);
    if (!(e > 0.0 && e < 1.0)) throw ConfigError(item, "epsilon must lie in (0, 1)");
    out.push_back(e);
  }
  return out;
}

void require_lil(const std::vector<double>& epsilons, const std::string& ptr) {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] < kLilEpsilonMax)) {
      throw ConfigError(ptr + "/" + std::to_string(i),
                        "iterated-logarithm scale needs eps < 10^(-sqrt 10)");
    }
  }
}

ScaleChoice parse_scale(Object& parent, const std::string& key, ScaleChoice fallback) {
  const json* v = parent.find(key);
  if (!v) return fallback;
  Object obj(*v, parent.at(key));
  ScaleChoice s;
  const std::string mode = as_string(obj.require("mode"), obj.at("mode"));
  if (mode == "lil") {
    s.mode = ScaleMode::lil;
  } else if (mode == "generic") {
    s.mode = ScaleMode::generic;
    s.exponent = obj.positive("exponent", 0.25);
    if (!(s.exponent < 0.5)) throw ConfigError(obj.at("exponent"), "need 0 < exponent < 1/2");
  } else {
    throw ConfigError(obj.at("mode"), "expected \"lil\" or \"generic\"");
  }
  obj.close();
  return s;
}

ControlSpec parse_control(Object& parent, const std::string& key, Eigen::Index modes) {
  ControlSpec c;
  const json* v = parent.find(key);
  if (!v) return c;
  Object obj(*v, parent.at(key));
  c.kind = as_string(obj.require("kind"), obj.at("kind"));
  if (c.kind == "zero") {
  } else if (c.kind == "constant") {
    const std::int64_t mode = as_integer(obj.require("mode"), obj.at("mode"));
    if (mode < 1 || mode > modes) {
      throw ConfigError(obj.at("mode"), "mode must lie in 1.." + std::to_string(modes));
    }
    c.mode = static_cast<Eigen::Index>(mode);
    c.value = as_complex(obj.require("value"), obj.at("value"));
  } else if (c.kind == "certificate") {
    c.index = static_cast<std::size_t>(as_unsigned(obj.require("index"), obj.at("index")));
    c.budget = obj.positive("M", 1.0);
  } else {
    throw ConfigError(obj.at("kind"), "expected zero, constant or certificate");
  }
  obj.close();
  return c;
}

Experiment parse_experiment(Object& obj, const std::string& kind, Eigen::Index modes) {
  if (kind == "simulate") {
    SimulateExperiment e;
    const json* eq = obj.find("equation");
    const std::string name = eq ? as_string(*eq, obj.at("equation")) : "original";
    if (name == "original") {
      e.equation = EquationTag::original;
    } else if (name == "deterministic") {
      e.equation = EquationTag::deterministic;
    } else if (name == "moderate") {
      e.equation = EquationTag::moderate;
    } else if (name == "shifted") {
      e.equation = EquationTag::shifted;
    } else if (name == "skeleton") {
      e.equation = EquationTag::skeleton;
    } else {
      throw ConfigError(obj.at("equation"),
                        "expected original, deterministic, moderate, shifted or skeleton");
    }
    e.epsilon = obj.number("epsilon", e.epsilon);
    if (!(e.epsilon >= 0.0 && e.epsilon < 1.0)) throw ConfigError(obj.at("epsilon"), "need 0 <= eps < 1");
    e.scale = parse_scale(obj, "scale", e.scale);
    if (e.equation == EquationTag::moderate || e.equation == EquationTag::shifted) {
      try {
        (void)e.scale.at(e.epsilon);
      } catch (const Error& err) {
        throw ConfigError(obj.at("epsilon"), err.what());
      }
    }
    e.control = parse_control(obj, "control", modes);
    if (const json* p = obj.find("path")) e.path = as_unsigned(*p, obj.at("path"));
    return e;
  }
  if (kind == "skeleton") {
    SkeletonExperiment e;
    e.control = parse_control(obj, "control", modes);
    return e;
  }
  if (kind == "rate") {
    RateExperiment e;
    e.control = parse_control(obj, "control", modes);
    e.rho = obj.positive("rho", e.rho);
    e.budget = obj.positive("M", e.budget);
    return e;
  }
  if (kind == "tail_scan") {
    TailScanExperiment e;
    e.spec.epsilons = epsilon_list(obj, "epsilons", 4);
    e.spec.rho = obj.positive("rho", e.spec.rho);
    e.spec.paths = obj.count("paths", e.spec.paths);
    e.spec.scale = parse_scale(obj, "scale", e.spec.scale);
    if (e.spec.scale.mode == ScaleMode::lil) require_lil(e.spec.epsilons, obj.at("epsilons"));
    e.spec.tolerance = obj.positive("tolerance", e.spec.tolerance);
    e.spec.min_points = obj.count("min_points", e.spec.min_points, 2);
    return e;
  }
  if (kind == "fw_check") {
    FwExperiment e;
    e.spec.epsilons = epsilon_list(obj, "epsilons", 1);
    require_lil(e.spec.epsilons, obj.at("epsilons"));
    if (const json* r = obj.find("rho")) {
      e.spec.rhos.clear();
      if (r->is_array()) {
        if (r->empty()) throw ConfigError(obj.at("rho"), "needs at least one radius");
        for (std::size_t i = 0; i < r->size(); ++i) {
          e.spec.rhos.push_back(as_positive((*r)[i], obj.at("rho") + "/" + std::to_string(i)));
        }
      } else {
        e.spec.rhos.push_back(as_positive(*r, obj.at("rho")));
      }
    }
    if (const json* eta = obj.find("eta")) {
      if (eta->is_string() && eta->get<std::string>() == "inf") {
        e.spec.eta = std::numeric_limits<double>::infinity();
      } else {
        e.spec.eta = as_positive(*eta, obj.at("eta"));
      }
    }
    e.spec.rate = obj.positive("R", e.spec.rate);
    e.spec.paths = obj.count("paths", e.spec.paths);
    e.spec.min_qualifying = obj.count("min_qualifying", e.spec.min_qualifying, 0);
    e.control = parse_control(obj, "control", modes);
    return e;
  }
  if (kind == "lil") {
    LilExperiment e;
    e.spec.c = obj.number("c", e.spec.c);
    if (!(e.spec.c > 1.0)) throw ConfigError(obj.at("c"), "need c > 1");
    if (const json* v = obj.find("j_min")) e.spec.j_min = static_cast<int>(as_integer(*v, obj.at("j_min")));
    if (const json* v = obj.find("j_max")) e.spec.j_max = static_cast<int>(as_integer(*v, obj.at("j_max")));
    if (e.spec.j_min < 1) throw ConfigError(obj.at("j_min"), "need j_min >= 1");
    if (e.spec.j_max < e.spec.j_min) throw ConfigError(obj.at("j_max"), "need j_max >= j_min");
    if (!(std::pow(e.spec.c, -e.spec.j_min) < kLilEpsilonMax)) {
      throw ConfigError(obj.at("j_min"), "c^-j_min must lie below 10^(-sqrt 10)");
    }
    e.spec.limit.budget = obj.positive("M", e.spec.limit.budget);
    e.spec.certificates = obj.count("certificates", e.spec.certificates);
    e.spec.delta_fraction = obj.positive("delta_fraction", e.spec.delta_fraction);
    if (const json* v = obj.find("delta_recurrence")) {
      e.spec.delta_recurrence = as_positive(*v, obj.at("delta_recurrence"));
    }
    if (const json* v = obj.find("delta_escape")) {
      e.spec.delta_escape = as_positive(*v, obj.at("delta_escape"));
    }
    e.spec.recurrence_min = obj.number("recurrence_min", e.spec.recurrence_min);
    e.spec.escape_max = obj.number("escape_max", e.spec.escape_max);
    return e;
  }
  if (kind == "modulus") {
    ModulusExperiment e;
    e.spec.epsilons = epsilon_list(obj, "epsilons", 1);
    require_lil(e.spec.epsilons, obj.at("epsilons"));
    if (const json* v = obj.find("level")) {
      const std::int64_t level = as_integer(*v, obj.at("level"));
      if (level < 0 || level > 62) throw ConfigError(obj.at("level"), "level must lie in 0..62");
      e.spec.level = static_cast<int>(level);
    }
    e.spec.beta = obj.positive("beta", e.spec.beta);
    e.spec.rate = obj.positive("R", e.spec.rate);
    e.spec.paths = obj.count("paths", e.spec.paths);
    e.control = parse_control(obj, "control", modes);
    return e;
  }
  throw ConfigError(obj.at("kind"), "unknown experiment kind \"" + kind + "\"");
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate", "skeleton", "rate",   "tail_scan",
                                              "fw_check", "lil",      "modulus"};
  return kinds;
}

RunConfig parse_config(const json& document) {
  RunConfig cfg;
  Object root(document, "");

  if (const json* v = root.find("basis")) {
    Object basis(*v, root.at("basis"));
    if (const json* j = basis.find("J")) {
      const std::int64_t modes = as_integer(*j, basis.at("J"));
      if (modes < 1 || modes > 4096) throw ConfigError(basis.at("J"), "J must lie in 1..4096");
      cfg.modes = static_cast<Eigen::Index>(modes);
    }
    if (const json* p = basis.find("P")) {
      const std::int64_t points = as_integer(*p, basis.at("P"));
      if (points < 2 * cfg.modes + 1) throw ConfigError(basis.at("P"), "P must be at least 2J+1");
      cfg.grid_points = static_cast<Eigen::Index>(points);
    }
    basis.close();
  }

  if (const json* v = root.find("spectrum")) {
    Object spectrum(*v, root.at("spectrum"));
    if (const json* law = spectrum.find("law")) {
      if (as_string(*law, spectrum.at("law")) != "power") {
        throw ConfigError(spectrum.at("law"), "only the \"power\" law is supported");
      }
    }
    cfg.spectrum_exponent = spectrum.number("exponent", cfg.spectrum_exponent);
    if (!(cfg.spectrum_exponent > 1.0)) {
      throw ConfigError(spectrum.at("exponent"), "exponent must exceed 1 (trace class)");
    }
    cfg.spectrum_scale = spectrum.positive("scale", cfg.spectrum_scale);
    spectrum.close();
  }

  if (const json* v = root.find("coefficients")) {
    Object coeff(*v, root.at("coefficients"));
    cfg.alpha = coeff.complex("alpha", cfg.alpha);
    cfg.beta = coeff.complex("beta", cfg.beta);
    if (const json* p = coeff.find("potential")) {
      Object pot(*p, coeff.at("potential"));
      cfg.potential_kind = as_string(pot.require("kind"), pot.at("kind"));
      if (cfg.potential_kind != "zero" && cfg.potential_kind != "constant" &&
          cfg.potential_kind != "sine") {
        throw ConfigError(pot.at("kind"), "expected zero, constant or sine");
      }
      cfg.potential_amplitude = pot.complex("amplitude", cfg.potential_amplitude);
      pot.close();
    }
    if (const json* d = coeff.find("declared_constants")) {
      Object dc(*d, coeff.at("declared_constants"));
      CoefficientConstants k;
      const auto read = [&](const char* name) {
        const double x = dc.number(name, 0.0);
        if (x < 0.0) throw ConfigError(dc.at(name), "constants must be nonnegative");
        return x;
      };
      k.k0 = read("k0");
      k.k1 = read("k1");
      k.k2 = read("k2");
      k.k3 = read("k3");
      k.k4 = read("k4");
      k.k5 = read("k5");
      dc.close();
      cfg.declared_constants = k;
    }
    coeff.close();
  }

  if (const json* v = root.find("integrator")) {
    Object integ(*v, root.at("integrator"));
    cfg.integrator.dt = integ.positive("dt", cfg.integrator.dt);
    cfg.integrator.horizon = integ.positive("T", cfg.integrator.horizon);
    integ.close();
    try {
      (void)cfg.integrator.steps();
    } catch (const Error& err) {
      throw ConfigError(integ.at("dt"), err.what());
    }
  }

  if (const json* v = root.find("initial")) {
    Object init(*v, root.at("initial"));
    const json& c = init.require("coefficients");
    const std::string ptr = init.at("coefficients");
    if (!c.is_array() || c.empty()) throw ConfigError(ptr, "expected a nonempty array");
    if (static_cast<Eigen::Index>(c.size()) > cfg.modes) {
      throw ConfigError(ptr, "more coefficients than retained modes");
    }
    cfg.initial = SpectralField::Zero(cfg.modes);
    for (std::size_t i = 0; i < c.size(); ++i) {
      cfg.initial[static_cast<Eigen::Index>(i)] = as_complex(c[i], ptr + "/" + std::to_string(i));
    }
    init.close();
  }

  {
    Object exp(root.require("experiment"), root.at("experiment"));
    cfg.kind = as_string(exp.require("kind"), exp.at("kind"));
    cfg.experiment = parse_experiment(exp, cfg.kind, cfg.modes);
    exp.close();
  }

  if (const json* v = root.find("seed")) cfg.seed = as_unsigned(*v, root.at("seed"));
  if (const json* v = root.find("output")) cfg.output = as_string(*v, root.at("output"));
  root.close();
  cfg.canonical = document.dump();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  json document;
  try {
    document = json::parse(text.str());
  } catch (const json::parse_error& err) {
    throw ConfigError("", std::string("malformed JSON: ") + err.what());
  }
  return parse_config(document);
}

Model build_model(const RunConfig& config) {
  Basis basis(config.modes, config.grid_points);
  auto spectrum =
      CovarianceSpectrum::power_law(config.modes, config.spectrum_exponent, config.spectrum_scale);
  Potential potential = config.potential_kind == "zero"       ? Potential::zero()
                        : config.potential_kind == "constant" ? Potential::constant(config.potential_amplitude)
                                                              : Potential::sine(config.potential_amplitude);
  NoiseCoefficient noise = NoiseCoefficient::constant(basis, config.alpha, config.beta);
  return Model{std::move(basis), std::move(spectrum), std::move(potential), std::move(noise)};
}

SpectralField initial_state(const RunConfig& config) {
  if (config.initial.size() > 0) return config.initial;
  return basis_vector(config.modes, 1);
}

ControlPath materialize_control(const ControlSpec& spec, const Model& model,
                                const Trajectory& u0, const IntegratorConfig& integrator) {
  const Eigen::Index modes = model.basis.modes();
  const std::size_t steps = integrator.steps();
  if (spec.kind == "zero") return ControlPath::zero(modes, steps, integrator.dt);
  if (spec.kind == "constant") {
    ControlPath h = ControlPath::zero(modes, steps, integrator.dt);
    h.rates().row(spec.mode - 1).setConstant(spec.value);
    return h;
  }
  const SkeletonOperator op(model, u0, integrator);
  const auto dictionary = certificate_dictionary(op, LimitSetSpec{spec.budget}, spec.index + 1);
  if (spec.index >= dictionary.size()) {
    throw ConfigError("/experiment/control/index", "certificate index beyond the dictionary");
  }
  return dictionary[spec.index].control;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace smdp
