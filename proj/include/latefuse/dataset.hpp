#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latefuse/matrix.hpp"

namespace latefuse {

/// Raised for malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One coherent feature table (a "view") over a list of samples.
struct ModalityTable {
  std::string name;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  Matrix values;

  std::size_t n_samples() const { return values.rows(); }
  std::size_t n_features() const { return values.cols(); }

  /// Shape agreement, unique feature names, no infinities.
  void validate() const;

  ModalityTable select_rows(std::span<const std::size_t> rows) const;
  ModalityTable select_features(std::span<const std::size_t> cols) const;
};

/// Aligned per-modality tables plus one class index per sample. Class
/// indices are dense in [0, K); class order is the first-appearance order in
/// the labels source and is never reordered (hard-vote ties depend on it).
struct MultiModalDataset {
  std::vector<ModalityTable> modalities;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> sample_ids;

  std::size_t n_samples() const { return sample_ids.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  std::size_t n_modalities() const { return modalities.size(); }
  std::size_t total_features() const;

  void validate() const;

  /// Index of the named modality, or throws DataError.
  std::size_t modality_index(const std::string& name) const;

  MultiModalDataset select_rows(std::span<const std::size_t> rows) const;
  MultiModalDataset select_modalities(std::span<const std::string> names) const;
};

struct LoadOptions {
  std::vector<std::string> missing_tokens{"", "NA", "NaN", "null"};
};

struct ModalityFile {
  std::string name;
  std::filesystem::path path;
};

/// Reads one modality CSV (first column sample_id, header row).
ModalityTable read_modality_csv(const std::string& name, const std::filesystem::path& path,
                                const LoadOptions& opts = {});

/// Loads modality CSVs plus a `sample_id,class` labels CSV and restricts all
/// tables to the samples present everywhere, in labels-file order.
MultiModalDataset load_dataset(std::span<const ModalityFile> files,
                               const std::filesystem::path& labels_file,
                               const LoadOptions& opts = {});

/// Aligns in-memory tables against a labels list (same semantics as load_dataset).
MultiModalDataset align_dataset(std::vector<ModalityTable> tables,
                                std::span<const std::string> label_sample_ids,
                                std::span<const std::string> label_tokens);

void write_modality_csv(const ModalityTable& table, const std::filesystem::path& path);
void write_labels_csv(const MultiModalDataset& ds, const std::filesystem::path& path);

}  // namespace latefuse
