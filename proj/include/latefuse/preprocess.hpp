#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latefuse/dataset.hpp"
#include "latefuse/matrix.hpp"

namespace latefuse {

enum class Normalization { Standardize, CpmLog };

const char* to_string(Normalization kind);
Normalization parse_normalization(const std::string& s);

struct PreprocessConfig {
  double max_missing_fraction = 0.5;
  double max_zero_fraction = 0.9;
  double correlation_threshold = 0.9;
  std::size_t variance_cap = 500;
  double dimensionality_ratio_trigger = 10.0;
  int knn_k = 5;
  int smote_k = 5;
  bool smote_enabled = true;
  // individual filter switches; each filter is optional per dataset
  bool sparsity_filter = true;
  bool correlation_filter = true;
  bool variance_filter = true;
  /// Per-modality normalization; modalities not listed are standardized.
  std::map<std::string, Normalization> normalization;

  Normalization normalization_for(const std::string& modality) const;
  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

// --- filters. Each returns surviving column indices in original order. ---

std::vector<std::size_t> sparse_keep(const Matrix& x, const PreprocessConfig& cfg);
std::vector<std::size_t> correlation_keep(const Matrix& x, const PreprocessConfig& cfg);
std::vector<std::size_t> variance_keep(const Matrix& x, std::size_t n_samples, const PreprocessConfig& cfg);

/// Drops features with too many missing cells or too many zeros among the
/// observed cells (both strict '>'). Throws DataError if nothing survives.
ModalityTable filter_sparse(const ModalityTable& table, const PreprocessConfig& cfg);

/// Greedy pass in column order over pairwise-complete Pearson correlations;
/// for |r| > threshold the later column is dropped.
ModalityTable prune_correlated(const ModalityTable& table, const PreprocessConfig& cfg);

/// Keeps the `variance_cap` highest-variance columns when
/// features / n_samples exceeds the trigger ratio.
ModalityTable variance_topk(const ModalityTable& table, std::size_t n_samples, const PreprocessConfig& cfg);

/// Fills missing cells of `apply_to` from the knn_k nearest rows of `train`
/// (Euclidean over mutually observed, sd-scaled features) that observe the
/// feature; falls back to the training mean when no donor exists.
Matrix impute_knn(const Matrix& train, const Matrix& apply_to, const PreprocessConfig& cfg);
ModalityTable impute_knn(const ModalityTable& train, const ModalityTable& apply_to, const PreprocessConfig& cfg);

/// standardize: (x - train mean) / train sd, sd 0 -> 0.
/// cpm_log: per row log2(1e6 * x / row_sum + 1), zero-sum rows -> 0.
Matrix normalize(const Matrix& train, const Matrix& apply_to, Normalization kind);
ModalityTable normalize(const ModalityTable& train, const ModalityTable& apply_to, Normalization kind);

struct LabeledRows {
  Matrix x;
  std::vector<int> y;
};

/// SMOTE, one non-majority class at a time against the majority count.
/// Original rows come first, synthetic rows follow in class order.
LabeledRows smote_balance(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                          const PreprocessConfig& cfg, std::uint64_t seed);

/// Same as smote_balance over the column-wise concatenation of several
/// views, so every synthetic sample is interpolated consistently in all of
/// them. Views are replaced in place; returns the extended labels.
std::vector<int> smote_balance_views(std::vector<Matrix>& views, std::span<const int> y, std::size_t n_classes,
                                     const PreprocessConfig& cfg, std::uint64_t seed);

/// Fold-local fit of the whole filter -> impute -> normalize chain.
class FittedPreprocessor {
 public:
  static FittedPreprocessor fit(const ModalityTable& train, const PreprocessConfig& cfg);

  ModalityTable transform(const ModalityTable& table) const;

  const std::vector<std::size_t>& kept_features() const { return kept_; }
  const std::vector<std::string>& kept_feature_names() const { return kept_names_; }
  Normalization kind() const { return kind_; }
  std::span<const double> means() const { return means_; }
  std::span<const double> sds() const { return sds_; }

 private:
  std::string modality_;
  std::size_t source_width_ = 0;
  std::vector<std::size_t> kept_;
  std::vector<std::string> kept_names_;
  Normalization kind_ = Normalization::Standardize;
  PreprocessConfig cfg_;
  Matrix donors_;  // filtered, un-imputed training rows
  Matrix imputed_train_;
  std::vector<double> means_;
  std::vector<double> sds_;
};

}  // namespace latefuse
