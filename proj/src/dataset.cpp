#include "latefuse/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "latefuse/csv.hpp"

namespace latefuse {

namespace {

template <typename Range>
void require_unique(const Range& names, const std::string& what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw DataError("duplicate " + what + ": '" + n + "'");
}

std::vector<std::vector<std::string>> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(csv::split_line(line));
  }
  if (rows.empty()) throw DataError("empty file '" + path.string() + "'");
  return rows;
}

}  // namespace

void ModalityTable::validate() const {
  if (values.rows() != sample_ids.size())
    throw DataError("modality '" + name + "': row count does not match sample ids");
  if (values.cols() != feature_names.size())
    throw DataError("modality '" + name + "': column count does not match feature names");
  require_unique(feature_names, "feature name in modality '" + name + "'");
  require_unique(sample_ids, "sample id in modality '" + name + "'");
  for (double v : values.data())
    if (std::isinf(v)) throw DataError("modality '" + name + "' contains an infinite value");
}

ModalityTable ModalityTable::select_rows(std::span<const std::size_t> rows) const {
  ModalityTable out{name, {}, feature_names, values.select_rows(rows)};
  out.sample_ids.reserve(rows.size());
  for (std::size_t r : rows) out.sample_ids.push_back(sample_ids[r]);
  return out;
}

ModalityTable ModalityTable::select_features(std::span<const std::size_t> cols) const {
  ModalityTable out{name, sample_ids, {}, values.select_cols(cols)};
  out.feature_names.reserve(cols.size());
  for (std::size_t c : cols) out.feature_names.push_back(feature_names[c]);
  return out;
}

std::size_t MultiModalDataset::total_features() const {
  std::size_t n = 0;
  for (const auto& m : modalities) n += m.n_features();
  return n;
}

void MultiModalDataset::validate() const {
  if (labels.size() != sample_ids.size()) throw DataError("labels length differs from sample count");
  if (class_names.size() < 2) throw DataError("fewer than 2 classes");
  std::vector<int> counts(class_names.size(), 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_names.size())
      throw DataError("label index out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] == 0) throw DataError("class '" + class_names[k] + "' has no samples");
  std::vector<std::string> modality_names;
  for (const auto& m : modalities) {
    m.validate();
    if (m.sample_ids != sample_ids)
      throw DataError("modality '" + m.name + "' is not aligned with the sample list");
    modality_names.push_back(m.name);
  }
  require_unique(modality_names, "modality name");
}

std::size_t MultiModalDataset::modality_index(const std::string& name) const {
  for (std::size_t i = 0; i < modalities.size(); ++i)
    if (modalities[i].name == name) return i;
  throw DataError("unknown modality '" + name + "'");
}

MultiModalDataset MultiModalDataset::select_rows(std::span<const std::size_t> rows) const {
  MultiModalDataset out;
  out.class_names = class_names;
  for (const auto& m : modalities) out.modalities.push_back(m.select_rows(rows));
  for (std::size_t r : rows) {
    out.labels.push_back(labels[r]);
    out.sample_ids.push_back(sample_ids[r]);
  }
  return out;
}

MultiModalDataset MultiModalDataset::select_modalities(std::span<const std::string> names) const {
  MultiModalDataset out;
  out.labels = labels;
  out.class_names = class_names;
  out.sample_ids = sample_ids;
  for (const auto& n : names) out.modalities.push_back(modalities[modality_index(n)]);
  return out;
}

ModalityTable read_modality_csv(const std::string& name, const std::filesystem::path& path,
                                const LoadOptions& opts) {
  auto rows = read_records(path);
  const auto& header = rows.front();
  if (header.size() < 2) throw DataError("'" + path.string() + "' has no feature columns");
  ModalityTable t;
  t.name = name;
  t.feature_names.assign(header.begin() + 1, header.end());
  require_unique(t.feature_names, "feature name in modality '" + name + "'");

  const std::unordered_set<std::string> missing(opts.missing_tokens.begin(), opts.missing_tokens.end());
  const std::size_t width = t.feature_names.size();
  t.values = Matrix(rows.size() - 1, width);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& rec = rows[r];
    if (rec.size() != width + 1)
      throw DataError("'" + path.string() + "' line " + std::to_string(r + 1) + ": expected " +
                      std::to_string(width + 1) + " fields, got " + std::to_string(rec.size()));
    t.sample_ids.push_back(rec[0]);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& tok = rec[c + 1];
      double v = 0.0;
      if (missing.contains(tok)) {
        v = kMissing;
      } else if (!csv::parse_double(tok, v)) {
        throw DataError("'" + path.string() + "' line " + std::to_string(r + 1) +
                        ": non-numeric token '" + tok + "'");
      }
      t.values(r - 1, c) = v;
    }
  }
  require_unique(t.sample_ids, "sample id in '" + path.string() + "'");
  t.validate();
  return t;
}

MultiModalDataset align_dataset(std::vector<ModalityTable> tables,
                                std::span<const std::string> label_sample_ids,
                                std::span<const std::string> label_tokens) {
  if (label_sample_ids.size() != label_tokens.size())
    throw DataError("labels: id/token length mismatch");
  require_unique(label_sample_ids, "sample id in labels");
  std::vector<std::string> modality_names;
  for (const auto& t : tables) {
    t.validate();
    modality_names.push_back(t.name);
  }
  require_unique(modality_names, "modality name");

  std::vector<std::unordered_map<std::string, std::size_t>> positions(tables.size());
  for (std::size_t m = 0; m < tables.size(); ++m)
    for (std::size_t i = 0; i < tables[m].sample_ids.size(); ++i)
      positions[m].emplace(tables[m].sample_ids[i], i);

  MultiModalDataset ds;
  std::vector<std::vector<std::size_t>> rows(tables.size());
  std::unordered_map<std::string, int> class_index;
  for (std::size_t s = 0; s < label_sample_ids.size(); ++s) {
    const auto& id = label_sample_ids[s];
    bool everywhere = true;
    for (const auto& pos : positions) everywhere = everywhere && pos.contains(id);
    if (!everywhere) continue;
    for (std::size_t m = 0; m < tables.size(); ++m) rows[m].push_back(positions[m].at(id));
    auto [it, inserted] = class_index.emplace(label_tokens[s], static_cast<int>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(label_tokens[s]);
    ds.labels.push_back(it->second);
    ds.sample_ids.push_back(id);
  }
  if (ds.sample_ids.empty()) throw DataError("empty sample intersection across modalities and labels");
  if (ds.class_names.size() < 2) throw DataError("fewer than 2 classes after intersection");
  for (std::size_t m = 0; m < tables.size(); ++m) ds.modalities.push_back(tables[m].select_rows(rows[m]));
  ds.validate();
  return ds;
}

MultiModalDataset load_dataset(std::span<const ModalityFile> files,
                               const std::filesystem::path& labels_file, const LoadOptions& opts) {
  if (files.empty()) throw DataError("no modality files given");
  std::vector<ModalityTable> tables;
  for (const auto& f : files) tables.push_back(read_modality_csv(f.name, f.path, opts));

  auto rows = read_records(labels_file);
  std::vector<std::string> ids, tokens;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2)
      throw DataError("labels file line " + std::to_string(r + 1) + ": expected sample_id,class");
    ids.push_back(rows[r][0]);
    tokens.push_back(rows[r][1]);
  }
  return align_dataset(std::move(tables), ids, tokens);
}

void write_modality_csv(const ModalityTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "sample_id";
  for (const auto& f : table.feature_names) out << ',' << csv::escape(f);
  out << '\n';
  for (std::size_t r = 0; r < table.n_samples(); ++r) {
    out << csv::escape(table.sample_ids[r]);
    for (std::size_t c = 0; c < table.n_features(); ++c) {
      const double v = table.values(r, c);
      out << ',';
      if (!is_missing(v)) out << csv::format_double(v);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_labels_csv(const MultiModalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "sample_id,class\n";
  for (std::size_t i = 0; i < ds.n_samples(); ++i)
    out << csv::escape(ds.sample_ids[i]) << ',' << csv::escape(ds.class_names[static_cast<std::size_t>(ds.labels[i])])
        << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace latefuse
