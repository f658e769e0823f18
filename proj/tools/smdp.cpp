// smdp: run one configured experiment and write its artifacts.
//
//   smdp tail-scan --config configs/tail_scan.json --out runs/tail --threads 4
//
// Exit status: 0 complete/PASS, 2 a check failed, 1 error (nothing written).

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "smdp/errors.hpp"
#include "smdp/runner.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned threads = 1;
};

std::string kind_for(const std::string& command) {
  if (command == "tail-scan") return "tail_scan";
  if (command == "fw-check") return "fw_check";
  return command;
}

int execute(const std::string& command, const Options& opt) {
  smdp::RunConfig config = smdp::load_config(opt.config);
  if (config.kind != kind_for(command)) {
    throw smdp::ConfigError("/experiment/kind", "config describes \"" + config.kind +
                                                    "\" but the command is " + command);
  }
  if (opt.seed) config.seed = *opt.seed;
  const std::string out = opt.out.value_or(config.output);
  const smdp::RunResult result = smdp::run_experiment(config, smdp::Executor(opt.threads));
  smdp::write_outputs(result, out);
  std::cout << config.kind << ": " << (result.passed ? "PASS" : "FAIL") << " -> " << out << "\n";
  return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moderate deviations of the stochastic linear Schroedinger equation"};
  app.set_version_flag("--version", smdp::library_version());
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate one path of a chosen equation"},
      {"skeleton", "solve the skeleton equation for a control"},
      {"rate", "rate functional, exit rate and limit-set membership"},
      {"tail-scan", "MDP tail probabilities and fitted rate"},
      {"fw-check", "Freidlin-Wentzell inequality check"},
      {"lil", "LIL clustering check"},
      {"modulus", "dyadic modulus tail check"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "run configuration (JSON)")->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_option("--threads", opt.threads, "worker threads")
        ->check(CLI::Range(1u, 1024u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, opt);
  } catch (const smdp::ConfigError& e) {
    std::cerr << "config error at " << (e.pointer().empty() ? "/" : e.pointer()) << ": "
              << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
