#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "latefuse/config.hpp"

namespace latefuse::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kPartialFailure = 2 };

/// Environment variables consulted after the config file and before flags.
inline constexpr const char* kEnvOutputDir = "LATEFUSE_OUTPUT_DIR";
inline constexpr const char* kEnvParallelism = "LATEFUSE_PARALLELISM";

/// Config file (optional) -> env overrides -> `--set` assignments -> parse.
ExperimentConfig resolve_config(const std::string& config_path, const std::vector<std::string>& assignments);

/// Writes synth CSVs and manifest.json to output_dir.
int cmd_generate(const ExperimentConfig& cfg, std::ostream& out);
/// report.json, records.csv and signature_<method>.csv.
int cmd_run(const ExperimentConfig& cfg, std::ostream& out);
/// trace.csv, best_subset.txt, comparison.csv and incremental.json.
int cmd_incremental(const ExperimentConfig& cfg, std::ostream& out);
/// Human-readable summary of an existing report.json.
int cmd_report(const std::filesystem::path& report, std::ostream& out);

/// Runs `fn`, mapping exceptions to a diagnostic on `err` and exit code 1.
int guarded(const std::function<int()>& fn, std::ostream& err);

}  // namespace latefuse::cli
