#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace latefuse {

/// Stratified repeated k-fold assignment. Test sets within one repeat
/// partition the sample indices; each is sorted ascending.
struct FoldPlan {
  int repeats = 0;
  int folds_per_repeat = 0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  /// test_sets[repeat][fold] -> sample indices
  std::vector<std::vector<std::vector<std::size_t>>> test_sets;

  std::size_t n_cells() const { return static_cast<std::size_t>(repeats) * folds_per_repeat; }
  const std::vector<std::size_t>& test_indices(int repeat, int fold) const;
  std::vector<std::size_t> train_indices(int repeat, int fold) const;

  /// Mean train/test sizes across cells (for the corrected t-test).
  double mean_train_size() const;
  double mean_test_size() const;
};

/// Throws std::invalid_argument when a class has fewer than `folds` members.
FoldPlan make_fold_plan(std::span<const int> labels, int repeats, int folds, std::uint64_t seed);

}  // namespace latefuse
