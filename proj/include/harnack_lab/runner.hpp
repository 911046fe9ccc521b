#pragma once

// Experiment runner behind the command line: config -> report -> files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harnack_lab/report.hpp"

namespace hlab {

const std::vector<std::string>& experiment_names();

/// Runs one experiment on a parsed config. Throws ConfigError for bad configs and
/// std::invalid_argument / std::runtime_error for rejected inputs.
ReportDocument run_experiment(const std::string& name, const nlohmann::json& config);

struct RunOptions {
  /// Empty: taken from the config's "experiment" field.
  std::string experiment;
  std::string config_path;
  /// Empty: the config's output.dir, else ".".
  std::string out_dir;
  /// Empty: the config's output.format, else csv.
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct RunOutcome {
  /// 0 ok, 2 a FAIL-tagged check, 1 error.
  int status = 1;
  ReportDocument report;
  std::vector<std::string> files;
  std::string message;
};

/// Never throws.
RunOutcome run(const RunOptions& opt);

}  // namespace hlab
