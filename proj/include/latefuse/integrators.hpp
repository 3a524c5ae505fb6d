#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latefuse/feature_selection.hpp"
#include "latefuse/forest.hpp"
#include "latefuse/gbm.hpp"
#include "latefuse/matrix.hpp"
#include "latefuse/prediction.hpp"

namespace latefuse {

/// The nine late-integration strategies.
enum class IntegratorKind { Concat, EnsHard, EnsSoft, MetaLearner, AdaHard, AdaSoft, AdaMeta, Pbmv, MoeCombn };

const char* to_string(IntegratorKind kind);
IntegratorKind parse_integrator_kind(const std::string& s);

struct IntegratorSpec {
  std::string name;                      // report label; defaults to the kind string
  IntegratorKind kind = IntegratorKind::EnsSoft;
  std::vector<std::string> modalities;   // empty = every modality
  GbmParams base;                        // base learner for every modality
  std::map<std::string, GbmParams> base_overrides;
  int boosting_rounds = 20;
  double soft_confidence_ratio = 2.0;
  int inner_folds = 5;
  ForestParams meta{100, 0, 5, 0, true, 0};
  int pbmv_max_steps = 200;
  double pbmv_tolerance = 1e-6;
  int smote_k = 5;   // expert balancing in MOE-COMBN
  int threads = 1;   // per-modality / per-expert fits

  std::string label() const;
  const GbmParams& base_for(const std::string& modality) const;
  /// Throws std::invalid_argument.
  void validate() const;
};

/// One preprocessed modality.
struct View {
  std::string name;
  std::vector<std::string> feature_names;
  Matrix x;
};

struct TrainingData {
  std::vector<View> views;
  std::vector<int> labels;
  std::size_t n_classes = 0;

  std::size_t n_samples() const { return labels.size(); }
};

/// Granularity at which a method "selects" inputs for stability scoring.
enum class SelectionLevel { Feature, Modality };

class TrainedIntegrator {
 public:
  virtual ~TrainedIntegrator() = default;

  IntegratorKind kind() const { return kind_; }
  std::size_t n_classes() const { return n_classes_; }
  const std::vector<std::string>& modalities() const { return modalities_; }

  /// `views` may hold extra modalities; the model picks its own by name.
  virtual PredictionSet predict(std::span<const View> views) const = 0;
  /// Raw per-(modality, feature) importance of the fitted model.
  virtual FoldScores feature_scores() const = 0;
  virtual SelectionLevel selection_level() const { return SelectionLevel::Feature; }
  /// Non-empty when the fit fell back to a degraded mode.
  virtual std::vector<std::string> warnings() const { return {}; }

 protected:
  TrainedIntegrator(IntegratorKind kind, std::size_t k, std::vector<std::string> mods)
      : kind_(kind), n_classes_(k), modalities_(std::move(mods)) {}
  const Matrix& view_matrix(std::span<const View> views, std::size_t modality) const;

 private:
  IntegratorKind kind_;
  std::size_t n_classes_;
  std::vector<std::string> modalities_;
};

/// Fits the strategy named by `spec` on the views it selects.
std::unique_ptr<TrainedIntegrator> fit_integrator(const IntegratorSpec& spec, const TrainingData& data, std::uint64_t seed);

// ------------------------------------------------------------- voting rules

/// Majority vote. Ties go to the class voted by the earliest modality among
/// the tied classes. Probabilities are vote fractions.
PredictionSet vote_hard(std::span<const PredictionSet> per_modality);

/// Mean of the modality probability rows; argmax with lower-index ties.
/// Throws std::invalid_argument if a row does not sum to 1 within 1e-6.
PredictionSet vote_soft(std::span<const PredictionSet> per_modality);

enum class Aggregator { Hard, Soft, Meta };

/// High-confidence correctness rule of multi-modal boosting. Hard/meta: at
/// least ceil(M/2) modalities predict the aggregated class. Soft: the top
/// aggregated probability is at least `ratio` times the runner-up. A sample
/// is correct only when it is high-confidence and the aggregate is right.
std::vector<bool> adaboost_high_confidence(std::span<const PredictionSet> per_modality, const PredictionSet& aggregated,
                                           std::span<const int> truth, Aggregator kind, double soft_confidence_ratio);

/// Convenience form that aggregates hard/soft votes itself.
std::vector<bool> adaboost_high_confidence(std::span<const PredictionSet> per_modality, std::span<const int> truth,
                                           Aggregator kind, double soft_confidence_ratio);

/// SAMME round weight ln((1-eps)/eps) + ln(K-1); eps <= 0 gives the cap.
double samme_alpha(double weighted_error, std::size_t n_classes);

/// Multiplies misclassified weights by exp(alpha) and renormalizes to sum 1.
void samme_reweight(std::vector<double>& weights, const std::vector<bool>& correct, double alpha);

// ---------------------------------------------------------- mixture gating

struct ExpertVote {
  double own_probability = 0.0;
  bool claims = false;  // predicted its own class rather than REST
};

struct GateDecision {
  int label = kUnknownLabel;
  double confidence = 0.0;
};

/// One vote per class in class order. Sole claimant wins; several claimants
/// go to the highest own-class probability (lower class on ties); no
/// claimant gives UNKNOWN.
GateDecision moe_gate(std::span<const ExpertVote> votes);

// ------------------------------------------------------- concrete models

class ConcatModel final : public TrainedIntegrator {
 public:
  ConcatModel(std::size_t k, std::vector<std::string> mods, GbmModel model, std::vector<FeatureKey> provenance)
      : TrainedIntegrator(IntegratorKind::Concat, k, std::move(mods)), model_(std::move(model)), provenance_(std::move(provenance)) {}
  PredictionSet predict(std::span<const View> views) const override;
  FoldScores feature_scores() const override;
  const GbmModel& model() const { return model_; }
  const std::vector<FeatureKey>& provenance() const { return provenance_; }

 private:
  GbmModel model_;
  std::vector<FeatureKey> provenance_;
};

struct ModalityModel {
  std::string modality;
  std::vector<std::string> feature_names;
  GbmModel model;
};

class VotingModel final : public TrainedIntegrator {
 public:
  VotingModel(IntegratorKind kind, std::size_t k, std::vector<std::string> mods, std::vector<ModalityModel> models)
      : TrainedIntegrator(kind, k, std::move(mods)), models_(std::move(models)) {}
  PredictionSet predict(std::span<const View> views) const override;
  FoldScores feature_scores() const override;
  std::vector<PredictionSet> predict_each(std::span<const View> views) const;
  const std::vector<ModalityModel>& models() const { return models_; }

 private:
  std::vector<ModalityModel> models_;
};

class MetaLearnerModel final : public TrainedIntegrator {
 public:
  MetaLearnerModel(std::size_t k, std::vector<std::string> mods, std::vector<ModalityModel> base, RandomForestModel meta)
      : TrainedIntegrator(IntegratorKind::MetaLearner, k, std::move(mods)), base_(std::move(base)), meta_(std::move(meta)) {}
  PredictionSet predict(std::span<const View> views) const override;
  /// Meta-feature importances keyed (modality, "modality:class").
  FoldScores feature_scores() const override;
  SelectionLevel selection_level() const override { return SelectionLevel::Modality; }
  /// Forest importance mass per modality (sums to 1 when any split exists).
  std::vector<double> modality_relevance() const;
  const RandomForestModel& meta() const { return meta_; }

 private:
  std::vector<ModalityModel> base_;
  RandomForestModel meta_;
};

struct BoostRound {
  double alpha = 0.0;
  std::vector<ModalityModel> models;
  std::optional<RandomForestModel> meta;
};

class AdaboostModel final : public TrainedIntegrator {
 public:
  AdaboostModel(IntegratorKind kind, std::size_t k, std::vector<std::string> mods, std::vector<BoostRound> rounds,
                int discarded)
      : TrainedIntegrator(kind, k, std::move(mods)), rounds_(std::move(rounds)), discarded_(discarded) {}
  PredictionSet predict(std::span<const View> views) const override;
  FoldScores feature_scores() const override;
  Aggregator aggregator() const;
  const std::vector<BoostRound>& rounds() const { return rounds_; }
  int discarded_rounds() const { return discarded_; }
  /// Aggregated prediction of a single round.
  PredictionSet predict_round(std::size_t round, std::span<const View> views) const;

 private:
  std::vector<BoostRound> rounds_;
  int discarded_ = 0;
};

class PbmvModel final : public TrainedIntegrator {
 public:
  PbmvModel(std::size_t k, std::vector<std::string> mods, std::vector<std::vector<ModalityModel>> voters,
            std::vector<std::vector<double>> q, std::vector<double> rho, bool fallback, std::vector<std::vector<double>> rho_trace)
      : TrainedIntegrator(IntegratorKind::Pbmv, k, std::move(mods)),
        voters_(std::move(voters)),
        q_(std::move(q)),
        rho_(std::move(rho)),
        fallback_(fallback),
        rho_trace_(std::move(rho_trace)) {}
  PredictionSet predict(std::span<const View> views) const override;
  FoldScores feature_scores() const override;
  std::vector<std::string> warnings() const override;

  std::span<const double> view_weights() const { return rho_; }
  /// classifier_weights()[iteration][view]
  const std::vector<std::vector<double>>& classifier_weights() const { return q_; }
  bool used_uniform_fallback() const { return fallback_; }
  const std::vector<std::vector<double>>& view_weight_trace() const { return rho_trace_; }
  std::size_t n_iterations() const { return voters_.size(); }

 private:
  std::vector<std::vector<ModalityModel>> voters_;  // [iteration][view]
  std::vector<std::vector<double>> q_;
  std::vector<double> rho_;
  bool fallback_ = false;
  std::vector<std::vector<double>> rho_trace_;
};

class MoeModel final : public TrainedIntegrator {
 public:
  MoeModel(std::size_t k, std::vector<std::string> mods, std::vector<std::vector<ModalityModel>> experts)
      : TrainedIntegrator(IntegratorKind::MoeCombn, k, std::move(mods)), experts_(std::move(experts)) {}
  /// Labels are gate decisions (kUnknownLabel when nobody claims); rows are
  /// the experts' own-class probabilities normalized to sum 1.
  PredictionSet predict(std::span<const View> views) const override;
  FoldScores feature_scores() const override;
  /// Per-sample expert votes, [sample][class].
  std::vector<std::vector<ExpertVote>> expert_votes(std::span<const View> views) const;
  std::size_t n_experts() const { return experts_.size(); }
  /// Importances of one expert (the features relevant to that class).
  FoldScores expert_scores(std::size_t cls) const;

 private:
  std::vector<std::vector<ModalityModel>> experts_;  // [class][modality]
};

// --------------------------------------------------- PB-MVBoost internals

struct ViewWeightSolution {
  std::vector<double> rho;
  double objective = 0.0;  // C-bound value at rho
  int steps = 0;
  bool converged = false;
};

/// Minimizes the C-bound 1 - E[m]^2 / E[m^2] of the rho-weighted vote over
/// the simplex, where margin m_i = sum_v rho_v b_vi and b_vi in [-1, 1] is
/// view v's Q-weighted correctness margin on sample i. Projected gradient
/// with backtracking, starting from uniform.
ViewWeightSolution minimize_view_cbound(const std::vector<std::vector<double>>& margins, std::span<const double> sample_weights,
                                        int max_steps, double tolerance);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

// ------------------------------------------------------ incremental selection

struct RemovalStep {
  std::string removed;  // "None" for the starting row
  double f1_after = 0.0;
};

struct IncrementalResult {
  std::vector<RemovalStep> trace;
  std::vector<std::string> best_subset;
  double best_f1 = 0.0;
};

using SubsetEvaluator = std::function<double(const std::vector<std::string>&)>;

/// Backward elimination: each iteration drops the modality whose exclusion
/// scores highest, as long as that score stays within `margin` of the best
/// score seen so far. Ties go to the earlier modality.
IncrementalResult incremental_select(const std::vector<std::string>& modalities, const SubsetEvaluator& evaluate,
                                     double margin = 0.01);

// ------------------------------------------------------------------ helpers

/// Out-of-fold class-probability rows from a stratified inner CV.
Matrix out_of_fold_probabilities(const Matrix& x, std::span<const int> y, std::size_t n_classes, const GbmParams& params,
                                 int inner_folds, std::span<const double> weights, std::uint64_t seed);

}  // namespace latefuse
