#pragma once

// Executes one configured experiment and assembles every artifact in memory;
// nothing touches the disk until write_outputs.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "smdp/config.hpp"
#include "smdp/parallel.hpp"

namespace smdp {

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunResult {
  nlohmann::json manifest;
  nlohmann::json report;
  std::string results_csv;
  std::vector<OutputFile> extra;  ///< plot data and sidecars
  bool passed = false;
  int exit_code() const noexcept { return passed ? 0 : 2; }
};

RunResult run_experiment(const RunConfig& config, const Executor& executor = Executor{});

/// Writes manifest.json, results.csv, report.json and the extra files. Files
/// are first written under temporary names and then renamed.
void write_outputs(const RunResult& result, const std::filesystem::path& directory);

std::string library_version();

}  // namespace smdp
