#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "latefuse/dataset.hpp"
#include "latefuse/feature_selection.hpp"
#include "latefuse/folds.hpp"
#include "latefuse/integrators.hpp"
#include "latefuse/metrics.hpp"
#include "latefuse/preprocess.hpp"

namespace latefuse {

struct BenchmarkOptions {
  PreprocessConfig preprocess;
  /// Boruta on every preprocessed training modality; only confirmed
  /// features are passed on. A modality with nothing confirmed is kept whole.
  bool boruta = false;
  BorutaParams boruta_params;
  SignatureThresholds thresholds;
  std::uint64_t seed = 0;
  /// (repeat, fold) cells evaluated concurrently.
  int threads = 1;
};

/// Per (method, repeat, fold, class) metrics.
struct MetricRecord {
  std::string method;
  int repeat = 0;
  int fold = 0;
  int cls = 0;
  ClassMetrics metrics;
};

/// Per (method, repeat, fold) macro values; the series the t-tests compare.
struct FoldSummary {
  std::string method;
  int repeat = 0;
  int fold = 0;
  double f1 = 0.0;
  double auc = 0.0;
  double accuracy = 0.0;
  double overall_accuracy = 0.0;
  double unknown_rate = 0.0;
};

struct MethodFailure {
  std::string method;
  int repeat = 0;
  int fold = 0;
  std::string message;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

struct MethodReport {
  std::string name;
  IntegratorKind kind = IntegratorKind::EnsSoft;
  std::vector<std::string> modalities;
  std::size_t completed_folds = 0;
  std::size_t failed_folds = 0;
  /// Mean over the stored per-class records (AUC over defined ones); sd over
  /// the per-fold macro values.
  std::map<std::string, MeanSd> aggregates;
  double unknown_rate = 0.0;
  SelectionLevel selection_level = SelectionLevel::Feature;
  std::optional<StabilityReport> stability;
  std::string stability_note;
  std::vector<SignatureEntry> signature;
  std::vector<std::string> warnings;
};

struct PairwiseTest {
  std::string a, b;
  TTestResult result;
};

struct EvaluationReport {
  std::uint64_t seed = 0;
  int repeats = 0;
  int folds = 0;
  double mean_train_size = 0.0;
  double mean_test_size = 0.0;
  std::vector<std::string> class_names;
  std::vector<std::pair<std::string, std::size_t>> modality_sizes;
  std::vector<MethodReport> methods;
  std::vector<MetricRecord> records;
  std::vector<FoldSummary> folds_summary;
  std::vector<MethodFailure> failures;
  /// metric ("f1", "auc") -> tests over every method pair with complete folds
  std::map<std::string, std::vector<PairwiseTest>> significance;

  const MethodReport& method(const std::string& name) const;
  /// Per-fold values of one method for "f1", "auc", "accuracy", ... in plan order.
  std::vector<double> fold_series(const std::string& name, const std::string& metric) const;
  const PairwiseTest* test(const std::string& metric, const std::string& a, const std::string& b) const;
};

/// Metric names carried in MethodReport::aggregates, in report order.
const std::vector<std::string>& aggregate_metric_names();

/// Repeated-CV benchmark. For every cell: preprocessing fitted on the
/// training rows, optional Boruta, joint SMOTE of the training views, then
/// every method is fitted and scored on the test rows. Method failures are
/// recorded and the other methods continue.
EvaluationReport run_cv_benchmark(const MultiModalDataset& dataset, const FoldPlan& plan,
                                  const std::vector<IntegratorSpec>& methods, const BenchmarkOptions& options);

/// Mean macro-F1 of one method restricted to `subset`, over the plan.
double cv_subset_f1(const MultiModalDataset& dataset, const FoldPlan& plan, const IntegratorSpec& method,
                    const BenchmarkOptions& options, const std::vector<std::string>& subset);

/// Backward elimination with a soft-vote ensemble scored by cv_subset_f1.
IncrementalResult incremental_cv_select(const MultiModalDataset& dataset, const FoldPlan& plan, const IntegratorSpec& ensemble,
                                        const BenchmarkOptions& options, double margin = 0.01);

// ---------------------------------------------------------------- output

/// `config` is echoed verbatim under "config".
nlohmann::ordered_json report_to_json(const EvaluationReport& report, const nlohmann::ordered_json& config);

void write_records_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_signature_csv(const std::vector<SignatureEntry>& signature, const std::filesystem::path& path);
void write_trace_csv(const IncrementalResult& result, const std::filesystem::path& path);

/// File-system friendly form of a method label.
std::string file_stem(const std::string& label);

}  // namespace latefuse
