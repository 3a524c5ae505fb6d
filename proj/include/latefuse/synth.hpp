#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latefuse/dataset.hpp"
#include "latefuse/feature_selection.hpp"

namespace latefuse {

/// One generated modality.
struct SynthModality {
  std::string name;
  std::size_t n_features = 50;
  std::size_t n_informative = 5;
  /// Scale of the class-mean offsets relative to unit noise. 0 = no signal.
  double snr = 1.0;
  double missing_fraction = 0.0;
  double zero_fraction = 0.0;
  /// Poisson counts instead of Gaussian values (exercises cpm_log).
  bool count_valued = false;
  /// Classes this modality can tell apart; every other class shares the
  /// baseline mean. Empty = all classes.
  std::vector<int> signal_classes;
};

struct SynthSpec {
  std::size_t n_samples = 100;
  std::size_t n_classes = 3;
  /// Relative class sizes; empty = balanced.
  std::vector<double> class_weights;
  std::vector<SynthModality> modalities;
  /// Share of the informative-feature noise that is common to every
  /// modality (0 = independent views, 1 = identical noise).
  double signal_overlap = 0.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for an infeasible spec.
  void validate() const;
};

struct SynthManifest {
  std::vector<FeatureKey> informative;
  /// Sum over informative features of the between-class variance of the
  /// class means (noise variance is 1), per modality.
  std::vector<double> separability;
  /// 1 = most separable modality.
  std::vector<int> separability_rank;
};

struct SynthResult {
  MultiModalDataset dataset;
  SynthManifest manifest;
};

/// Pure function of the spec.
SynthResult generate(const SynthSpec& spec);

/// Writes `<modality>.csv` per modality, `labels.csv` and `manifest.json`.
/// Returns the modality file list in spec order.
std::vector<ModalityFile> write_synth(const SynthSpec& spec, const SynthResult& result, const std::filesystem::path& dir);

// Named specs used by the examples and the acceptance suite.

/// 4 classes, 3 modalities; each modality separates a different pair of classes.
SynthSpec complementary_spec(std::uint64_t seed);
/// 3 modalities, the last one pure noise.
SynthSpec planted_noise_spec(std::uint64_t seed);
/// 100 samples, 3 modalities of 2000 features.
SynthSpec high_dimensional_spec(std::uint64_t seed);

}  // namespace latefuse
