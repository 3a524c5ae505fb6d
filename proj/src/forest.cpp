#include "latefuse/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latefuse/random.hpp"

namespace latefuse {

RandomForestModel fit_random_forest(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                    const ForestParams& params, std::span<const double> weights) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_random_forest: empty input");
  if (y.size() != n) throw std::invalid_argument("fit_random_forest: label length mismatch");
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("fit_random_forest: weight length mismatch");
  if (params.n_trees < 1) throw std::invalid_argument("fit_random_forest: n_trees must be >= 1");
  for (double v : x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("fit_random_forest: non-finite feature value");

  RandomForestModel model;
  model.n_classes_ = n_classes;
  model.n_features_ = x.cols();
  model.importances_.assign(x.cols(), 0.0);

  ClassificationTreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_leaf = params.min_leaf;
  tp.max_features = params.max_features > 0
                        ? params.max_features
                        : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));

  std::vector<double> base(n, 1.0);
  if (!weights.empty()) base.assign(weights.begin(), weights.end());

  std::vector<double> w(n);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(t)}));
    if (params.bootstrap) {
      std::fill(w.begin(), w.end(), 0.0);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = pick(rng);
        w[i] += base[i];
      }
      if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w = base;
    } else {
      w = base;
    }
    model.trees_.push_back(fit_classification_tree(x, y, n_classes, w, tp, rng, &model.importances_));
  }

  const double total = std::accumulate(model.importances_.begin(), model.importances_.end(), 0.0);
  if (total > 0.0)
    for (double& v : model.importances_) v /= total;
  return model;
}

PredictionSet RandomForestModel::predict_proba(const Matrix& x) const {
  if (x.cols() != n_features_) throw std::invalid_argument("RandomForestModel::predict: column count mismatch");
  Matrix probs(x.rows(), n_classes_);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto out = probs.row(i);
    for (const auto& tree : trees_) {
      auto leaf = tree.leaf_value(x.row(i));
      for (std::size_t k = 0; k < n_classes_; ++k) out[k] += leaf[k];
    }
    for (double& v : out) v /= static_cast<double>(trees_.size());
  }
  return from_probabilities(std::move(probs));
}

}  // namespace latefuse
