#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latefuse/matrix.hpp"
#include "latefuse/prediction.hpp"
#include "latefuse/tree.hpp"

namespace latefuse {

struct GbmParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 2;
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

/// Multi-class softmax gradient boosting. Each round fits one regression
/// tree per class to the negative gradient (one-hot minus softmax); leaf
/// values are the weighted mean residual scaled by the learning rate.
class GbmModel {
 public:
  std::size_t n_classes() const { return init_scores_.size(); }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_rounds() const { return trees_.size(); }
  const GbmParams& params() const { return params_; }
  std::span<const double> init_scores() const { return init_scores_; }
  /// trees()[round][class]
  const std::vector<std::vector<Tree>>& trees() const { return trees_; }
  /// Normalized total impurity decrease per feature (all zero if no split).
  std::span<const double> feature_importances() const { return importances_; }
  /// Mean weighted training log-loss after each round (index 0 = prior only).
  std::span<const double> training_loss() const { return loss_trace_; }

  PredictionSet predict_proba(const Matrix& x) const;
  /// Raw additive scores (pre-softmax), n x K.
  Matrix decision_function(const Matrix& x) const;

 private:
  friend GbmModel fit_gbm(const Matrix&, std::span<const int>, std::size_t, std::span<const double>, const GbmParams&);

  GbmParams params_;
  std::size_t n_features_ = 0;
  std::vector<double> init_scores_;
  std::vector<std::vector<Tree>> trees_;
  std::vector<double> importances_;
  std::vector<double> loss_trace_;
};

/// Empty `weights` means uniform. Throws std::invalid_argument on
/// non-finite features, bad labels, or a weight-length mismatch.
GbmModel fit_gbm(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                 std::span<const double> weights, const GbmParams& params);

/// Row-wise softmax in place.
void softmax_rows(Matrix& scores);

/// Weighted mean multinomial log-loss of softmax(scores).
double multiclass_log_loss(const Matrix& scores, std::span<const int> y, std::span<const double> weights);

/// Analytic gradient of multiclass_log_loss with respect to the scores
/// (n x K), i.e. w_i (softmax - onehot) / sum(w).
Matrix log_loss_gradient(const Matrix& scores, std::span<const int> y, std::span<const double> weights);

}  // namespace latefuse
