#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latefuse/matrix.hpp"
#include "latefuse/prediction.hpp"
#include "latefuse/tree.hpp"

namespace latefuse {

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;
  int min_leaf = 1;
  int max_features = 0;  // 0 = floor(sqrt(p)), at least 1
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Bagged Gini CART trees; probability output is the mean of per-tree leaf
/// class frequencies.
class RandomForestModel {
 public:
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::span<const double> feature_importances() const { return importances_; }

  PredictionSet predict_proba(const Matrix& x) const;

 private:
  friend RandomForestModel fit_random_forest(const Matrix&, std::span<const int>, std::size_t,
                                             const ForestParams&, std::span<const double>);
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<Tree> trees_;
  std::vector<double> importances_;
};

/// Each tree draws its bootstrap and split features from its own seed, so
/// the forest does not depend on fitting order. Empty `weights` is uniform.
RandomForestModel fit_random_forest(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                    const ForestParams& params, std::span<const double> weights = {});

}  // namespace latefuse
