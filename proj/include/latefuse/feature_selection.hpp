#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latefuse/gbm.hpp"
#include "latefuse/matrix.hpp"

namespace latefuse {

// ---------------------------------------------------------------- Boruta

enum class FeatureStatus { Tentative, Confirmed, Rejected };

const char* to_string(FeatureStatus s);

struct BorutaParams {
  int max_iter = 50;
  double alpha = 0.05;
  GbmParams learner{50, 0.1, 3, 2, 1.0, 0};
};

struct BorutaResult {
  std::vector<FeatureStatus> status;
  std::vector<int> hits;
  int n_iterations = 0;

  std::vector<std::size_t> confirmed() const;
};

/// All-relevant selection. Every iteration appends one freshly shuffled
/// shadow per undecided/confirmed feature, fits the GBM learner, and scores
/// a hit for each real feature whose importance beats the best shadow.
/// Hit counts are tested against Binomial(iterations, 1/2), two-sided with
/// a Bonferroni correction over the features. Rejected features are
/// dropped from later iterations.
BorutaResult boruta_select(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                           const BorutaParams& params, std::uint64_t seed);

// --------------------------------------------------- importance aggregation

struct WeightedScores {
  double weight = 0.0;
  std::vector<double> scores;
};

/// score_f = sum_t w_t s_tf / sum_t w_t. Throws if the weights sum to zero.
std::vector<double> aggregate_boosted_importance(std::span<const WeightedScores> rounds);

/// (modality, feature) key used for provenance throughout reporting.
using FeatureKey = std::pair<std::string, std::string>;

/// Raw importance scores of one method in one CV iteration.
using FoldScores = std::map<FeatureKey, double>;

struct SignatureEntry {
  std::string modality;
  std::string feature;
  double score = 0.0;      // mean max-scaled score over selecting folds
  double frequency = 0.0;  // fraction of folds with raw score > 0
};

struct SignatureThresholds {
  double min_frequency = 0.75;
  double min_score = 0.5;
};

/// Max-scales every (fold, modality) block to [0,1], then keeps features
/// selected in at least min_frequency of the folds with a mean scaled
/// score of at least min_score. Entries are sorted by modality then feature.
std::vector<SignatureEntry> select_signature(std::span<const FoldScores> per_fold, std::size_t n_folds,
                                             const SignatureThresholds& thresholds = {});

// ------------------------------------------------------------- stability

struct StabilityReport {
  double cw_rel = 0.0;
  std::size_t n_subsets = 0;
  std::size_t union_size = 0;
  std::size_t universe_size = 0;
  std::map<std::string, std::size_t> frequencies;
};

/// Relative weighted consistency of a collection of feature subsets drawn
/// from a universe of `universe_size` features: the weighted consistency
/// rescaled between its minimum and maximum for the same number of subsets
/// and total feature occurrences. Identical non-empty subsets give 1.
/// Throws std::invalid_argument for fewer than 2 subsets or when the
/// subsets mention more distinct features than the universe holds.
StabilityReport stability_cwrel(std::span<const std::set<std::string>> subsets, std::size_t universe_size);

/// Same, but every subset element must belong to `universe`.
StabilityReport stability_cwrel(std::span<const std::set<std::string>> subsets, const std::set<std::string>& universe);

}  // namespace latefuse
