#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "latefuse/matrix.hpp"
#include "latefuse/random.hpp"

namespace latefuse {

struct TreeParams {
  int max_depth = 3;  // 0 means unlimited
  int min_leaf = 2;   // minimum positive-weight samples per child
};

/// Flat node array; node 0 is the root. Leaves have feature == -1.
/// Samples with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t value_offset = 0;  // into Tree::values
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<double> values;  // one value per leaf (regression) or K per leaf
  std::size_t value_width = 1;

  std::size_t leaf_of(std::span<const double> x) const;
  std::span<const double> leaf_value(std::span<const double> x) const {
    return {values.data() + nodes[leaf_of(x)].value_offset, value_width};
  }
  std::size_t n_splits() const;
};

/// Column-major copy of a feature matrix with every column's row order
/// sorted by value, shared by all trees grown on the same data.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double value(std::size_t col, std::size_t row) const { return data_[col * rows_ + row]; }
  std::span<const std::uint32_t> order(std::size_t col) const { return {order_.data() + col * rows_, rows_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  std::vector<std::uint32_t> order_;
};

/// Greedy weighted-variance regression tree, grown level by level. Samples
/// with zero weight are ignored. Split ties go to the lower feature index,
/// then the lower threshold. Zero-gain splits are taken on impure nodes.
/// Each split's impurity decrease is added to `importances` when given.
Tree fit_regression_tree(const SortedColumns& x, std::span<const double> targets,
                         std::span<const double> weights, const TreeParams& params,
                         std::vector<double>* importances = nullptr);

/// Convenience overload that presorts `x` itself.
Tree fit_tree(const Matrix& x, std::span<const double> targets, std::span<const double> weights,
              const TreeParams& params, std::vector<double>* importances = nullptr);

struct ClassificationTreeParams {
  int max_depth = 0;
  int min_leaf = 1;
  int max_features = 0;  // features tried per split; 0 = all
};

/// Weighted-Gini CART tree. Leaves store class-frequency rows of width K.
Tree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                             std::span<const double> weights, const ClassificationTreeParams& params,
                             Rng& rng, std::vector<double>* importances = nullptr);

}  // namespace latefuse
