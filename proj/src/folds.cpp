#include "latefuse/folds.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "latefuse/random.hpp"

namespace latefuse {

const std::vector<std::size_t>& FoldPlan::test_indices(int repeat, int fold) const {
  return test_sets.at(static_cast<std::size_t>(repeat)).at(static_cast<std::size_t>(fold));
}

std::vector<std::size_t> FoldPlan::train_indices(int repeat, int fold) const {
  const auto& test = test_indices(repeat, fold);
  std::vector<std::size_t> train;
  train.reserve(n_samples - test.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (t < test.size() && test[t] == i) {
      ++t;
      continue;
    }
    train.push_back(i);
  }
  return train;
}

double FoldPlan::mean_test_size() const {
  double total = 0.0;
  for (const auto& rep : test_sets)
    for (const auto& f : rep) total += static_cast<double>(f.size());
  return n_cells() == 0 ? 0.0 : total / static_cast<double>(n_cells());
}

double FoldPlan::mean_train_size() const { return static_cast<double>(n_samples) - mean_test_size(); }

FoldPlan make_fold_plan(std::span<const int> labels, int repeats, int folds, std::uint64_t seed) {
  if (repeats < 1 || folds < 2) throw std::invalid_argument("fold plan needs repeats >= 1 and folds >= 2");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (const auto& [cls, idx] : members)
    if (idx.size() < static_cast<std::size_t>(folds))
      throw std::invalid_argument("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
                                  " samples, fewer than " + std::to_string(folds) + " folds");

  FoldPlan plan;
  plan.repeats = repeats;
  plan.folds_per_repeat = folds;
  plan.seed = seed;
  plan.n_samples = labels.size();
  plan.test_sets.resize(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    auto& rep = plan.test_sets[static_cast<std::size_t>(r)];
    rep.resize(static_cast<std::size_t>(folds));
    // Deal each shuffled class round-robin, continuing the cursor across
    // classes so fold sizes also stay within one of each other.
    std::size_t cursor = 0;
    for (const auto& [cls, idx] : members) {
      auto shuffled = idx;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t i : shuffled) {
        rep[cursor % static_cast<std::size_t>(folds)].push_back(i);
        ++cursor;
      }
    }
    for (auto& f : rep) std::sort(f.begin(), f.end());
  }
  return plan;
}

}  // namespace latefuse
