#include "latefuse/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latefuse/random.hpp"

namespace latefuse {

void softmax_rows(Matrix& scores) {
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : row) v /= s;
  }
}

double multiclass_log_loss(const Matrix& scores, std::span<const int> y, std::span<const double> weights) {
  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w * (lse - row[static_cast<std::size_t>(y[i])]);
    wsum += w;
  }
  return total / wsum;
}

Matrix log_loss_gradient(const Matrix& scores, std::span<const int> y, std::span<const double> weights) {
  Matrix g = scores;
  softmax_rows(g);
  double wsum = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) wsum += weights.empty() ? 1.0 : weights[i];
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    g(i, static_cast<std::size_t>(y[i])) -= 1.0;
    for (double& v : g.row(i)) v *= w / wsum;
  }
  return g;
}

GbmModel fit_gbm(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                 std::span<const double> weights, const GbmParams& params) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_gbm: empty input");
  if (n_classes < 2) throw std::invalid_argument("fit_gbm: need at least 2 classes");
  if (y.size() != n) throw std::invalid_argument("fit_gbm: label length mismatch");
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("fit_gbm: weight vector length mismatch");
  if (params.n_rounds < 0 || params.learning_rate <= 0.0 || params.subsample <= 0.0 || params.subsample > 1.0)
    throw std::invalid_argument("fit_gbm: invalid parameters");
  for (double v : x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gbm: non-finite feature value");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw std::invalid_argument("fit_gbm: label out of range");

  std::vector<double> w(n, 1.0);
  if (!weights.empty()) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("fit_gbm: weights sum to zero");
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] < 0.0 || !std::isfinite(weights[i])) throw std::invalid_argument("fit_gbm: invalid weight");
      w[i] = weights[i] * static_cast<double>(n) / total;
    }
  }

  GbmModel model;
  model.params_ = params;
  model.n_features_ = x.cols();
  model.importances_.assign(x.cols(), 0.0);

  std::vector<double> prior(n_classes, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prior[static_cast<std::size_t>(y[i])] += w[i];
    wsum += w[i];
  }
  for (double& p : prior) p = std::log(std::max(p / wsum, 1e-12));
  model.init_scores_ = prior;

  Matrix scores(n, n_classes);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n_classes; ++k) scores(i, k) = prior[k];
  model.loss_trace_.push_back(multiclass_log_loss(scores, y, w));
  if (params.n_rounds == 0) {
    return model;
  }

  const SortedColumns cols(x);
  const TreeParams tp{params.max_depth, params.min_leaf};
  const std::size_t n_sub = params.subsample < 1.0
                                ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))))
                                : n;
  std::vector<double> round_w(n);
  std::vector<double> residual(n);
  std::vector<std::size_t> perm(n);
  Matrix probs;

  for (int round = 0; round < params.n_rounds; ++round) {
    if (n_sub < n) {
      Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(round)}));
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      std::fill(round_w.begin(), round_w.end(), 0.0);
      for (std::size_t j = 0; j < n_sub; ++j) round_w[perm[j]] = w[perm[j]];
      if (std::all_of(round_w.begin(), round_w.end(), [](double v) { return v == 0.0; })) round_w = w;
    } else {
      round_w = w;
    }

    probs = scores;
    softmax_rows(probs);
    std::vector<Tree> round_trees;
    round_trees.reserve(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = (y[i] == static_cast<int>(k) ? 1.0 : 0.0) - probs(i, k);
      Tree t = fit_regression_tree(cols, residual, round_w, tp, &model.importances_);
      for (double& v : t.values) v *= params.learning_rate;
      round_trees.push_back(std::move(t));
    }
    for (std::size_t k = 0; k < n_classes; ++k)
      for (std::size_t i = 0; i < n; ++i) scores(i, k) += round_trees[k].leaf_value(x.row(i))[0];
    model.trees_.push_back(std::move(round_trees));
    model.loss_trace_.push_back(multiclass_log_loss(scores, y, w));
  }

  const double imp_total = std::accumulate(model.importances_.begin(), model.importances_.end(), 0.0);
  if (imp_total > 0.0)
    for (double& v : model.importances_) v /= imp_total;
  else
    std::fill(model.importances_.begin(), model.importances_.end(), 0.0);
  return model;
}

Matrix GbmModel::decision_function(const Matrix& x) const {
  if (x.cols() != n_features_) throw std::invalid_argument("GbmModel::predict: column count mismatch");
  Matrix scores(x.rows(), n_classes());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t k = 0; k < n_classes(); ++k) scores(i, k) = init_scores_[k];
    for (const auto& round : trees_)
      for (std::size_t k = 0; k < n_classes(); ++k) scores(i, k) += round[k].leaf_value(row)[0];
  }
  return scores;
}

PredictionSet GbmModel::predict_proba(const Matrix& x) const {
  Matrix scores = decision_function(x);
  softmax_rows(scores);
  return from_probabilities(std::move(scores));
}

}  // namespace latefuse
