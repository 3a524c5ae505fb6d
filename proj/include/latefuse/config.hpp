#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "latefuse/dataset.hpp"
#include "latefuse/evaluation.hpp"
#include "latefuse/synth.hpp"

namespace latefuse {

/// Invalid or unreadable configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a command needs. Every random stream derives from `seed`
/// unless a section sets its own.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "latefuse_out";
  int parallelism = 1;

  // data: either files or a synthetic spec
  std::vector<ModalityFile> modalities;
  std::filesystem::path labels;
  std::optional<SynthSpec> synth;

  PreprocessConfig preprocess;
  bool boruta = false;
  BorutaParams boruta_params;
  SignatureThresholds signature;

  int repeats = 5;
  int folds = 5;
  std::uint64_t fold_seed = 0;

  GbmParams base_learner;
  std::vector<IntegratorSpec> methods;

  double incremental_margin = 0.01;
  IntegratorSpec incremental_ensemble;

  BenchmarkOptions benchmark_options() const;
};

/// Parses and validates a config document. Unknown keys are errors.
/// Relative data paths are resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});

/// The resolved config with every default filled in; parse_config of the
/// result gives the same config back.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

nlohmann::ordered_json read_json_file(const std::filesystem::path& path);

/// `key.path=value`: value is parsed as JSON, falling back to a plain string.
/// Missing intermediate objects are created.
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);

/// Files from `modalities`/`labels`, or the generated synthetic cohort.
MultiModalDataset load_experiment_data(const ExperimentConfig& cfg);

}  // namespace latefuse
