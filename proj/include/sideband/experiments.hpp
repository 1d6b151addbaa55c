#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sideband/analytics.hpp"
#include "sideband/io.hpp"

namespace sideband {

inline constexpr const char* kVersion = "1.0.0";

const std::vector<std::string>& experiment_kinds();
const std::vector<std::string>& figure_ids();

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<DriveVariant> variant;
  std::optional<Interaction> interaction;
  int threads = 0;
  std::filesystem::path config_dir;  // base for relative data paths
};

enum class RunStatus { Success, TotalFailure, Partial };

int exit_code(RunStatus status);

struct RunReport {
  RunStatus status = RunStatus::Success;
  json manifest;
  std::vector<std::string> outputs;  // file names inside out_dir
};

// Checks kind-specific required blocks; throws a config error naming the field path.
void validate_config(const json& config);

// Runs one experiment and writes its CSV/JSON outputs plus manifest.json into out_dir.
RunReport run_experiment(const json& config, const RunOptions& options);

// Canned configuration for a figure id; throws an unknown-figure error.
json figure_config(const std::string& id);

RunReport reproduce(const std::string& id, const RunOptions& options);

}  // namespace sideband
