#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latefuse/matrix.hpp"

namespace latefuse {

/// Label reported by the mixture-of-experts gate when no expert claims a sample.
inline constexpr int kUnknownLabel = -1;

/// Universal classifier output: one label and one probability row per sample.
/// labels[i] is the argmax of probabilities.row(i) (ties to the lower class),
/// except for kUnknownLabel entries produced by the gate.
struct PredictionSet {
  std::vector<int> labels;
  Matrix probabilities;  // n x K

  std::size_t size() const { return labels.size(); }
  std::size_t n_classes() const { return probabilities.cols(); }
};

/// Index of the largest entry; ties resolve to the lowest index.
inline int argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return static_cast<int>(best);
}

/// Builds a PredictionSet from probability rows, labelling by argmax.
inline PredictionSet from_probabilities(Matrix probs) {
  PredictionSet out;
  out.labels.resize(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out.labels[i] = argmax(probs.row(i));
  out.probabilities = std::move(probs);
  return out;
}

/// Rescales each row to sum to one; all-zero rows become uniform.
inline void normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    double s = 0.0;
    for (double v : row) s += v;
    if (s > 0.0) {
      for (double& v : row) v /= s;
    } else {
      for (double& v : row) v = 1.0 / static_cast<double>(row.size());
    }
  }
}

}  // namespace latefuse
