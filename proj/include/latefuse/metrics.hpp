#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latefuse/matrix.hpp"
#include "latefuse/prediction.hpp"

namespace latefuse {

/// One-vs-rest confusion counts and the derived per-class metrics.
struct ClassMetrics {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  bool auc_defined = false;
  /// Set when a ratio had a zero denominator and was reported as 0.
  bool zero_division = false;
};

/// Macro averages (unweighted over classes) plus the per-class breakdown.
/// `accuracy` is the mean one-vs-rest accuracy (tp+tn)/n; the share of
/// correctly labelled samples is `overall_accuracy`. UNKNOWN predictions
/// count as wrong for every class.
struct MetricSet {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double overall_accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_correct = 0;
  std::size_t n_unknown = 0;
  std::size_t auc_skipped_classes = 0;

  double unknown_rate() const { return n_samples ? static_cast<double>(n_unknown) / static_cast<double>(n_samples) : 0.0; }
};

struct AucResult {
  double macro = 0.0;
  std::vector<double> per_class;
  std::vector<bool> defined;
  std::size_t skipped = 0;
};

/// One-vs-rest AUC per class from the Mann-Whitney rank sum with average
/// ranks for ties; the macro mean covers classes with at least one positive
/// and one negative sample.
AucResult roc_auc_ovr(const Matrix& probabilities, std::span<const int> truth);

/// Binary AUC of `scores` against `positive` flags (rank-sum, tie-corrected).
double rank_sum_auc(std::span<const double> scores, const std::vector<bool>& positive);

/// Throws std::invalid_argument on length mismatch or invalid truth labels.
MetricSet compute_metrics(const PredictionSet& predictions, std::span<const int> truth, std::size_t n_classes);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
  bool degenerate = false;
};

/// Nadeau-Bengio corrected resampled paired t-test on per-fold scores:
/// variance term scaled by (1/J + n_test/n_train), J-1 degrees of freedom.
TTestResult corrected_ttest(std::span<const double> a, std::span<const double> b, double n_train, double n_test);

/// The uncorrected paired t-test, for comparison.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace latefuse
