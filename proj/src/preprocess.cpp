#include "latefuse/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "latefuse/random.hpp"

namespace latefuse {

namespace {

struct ColumnMoments {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t observed = 0;
};

ColumnMoments moments(const Matrix& x, std::size_t c) {
  ColumnMoments m;
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double v = x(r, c);
    if (is_missing(v)) continue;
    s += v;
    ++m.observed;
  }
  if (m.observed == 0) return m;
  m.mean = s / static_cast<double>(m.observed);
  if (m.observed < 2) return m;
  double ss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double v = x(r, c);
    if (!is_missing(v)) ss += (v - m.mean) * (v - m.mean);
  }
  m.sd = std::sqrt(ss / static_cast<double>(m.observed - 1));
  return m;
}

bool has_missing_column(const Matrix& x, std::size_t c) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    if (is_missing(x(r, c))) return true;
  return false;
}

double pairwise_complete_r(const Matrix& x, std::size_t a, std::size_t b) {
  double sa = 0, sb = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double va = x(r, a), vb = x(r, b);
    if (is_missing(va) || is_missing(vb)) continue;
    sa += va;
    sb += vb;
    ++n;
  }
  if (n < 2) return 0.0;
  const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double va = x(r, a), vb = x(r, b);
    if (is_missing(va) || is_missing(vb)) continue;
    saa += (va - ma) * (va - ma);
    sbb += (vb - mb) * (vb - mb);
    sab += (va - ma) * (vb - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

const char* to_string(Normalization kind) { return kind == Normalization::CpmLog ? "cpm_log" : "standardize"; }

Normalization parse_normalization(const std::string& s) {
  if (s == "standardize") return Normalization::Standardize;
  if (s == "cpm_log") return Normalization::CpmLog;
  throw std::invalid_argument("unknown normalization '" + s + "'");
}

Normalization PreprocessConfig::normalization_for(const std::string& modality) const {
  auto it = normalization.find(modality);
  return it == normalization.end() ? Normalization::Standardize : it->second;
}

void PreprocessConfig::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  };
  fraction(max_missing_fraction, "max_missing_fraction");
  fraction(max_zero_fraction, "max_zero_fraction");
  if (!(correlation_threshold > 0.0 && correlation_threshold <= 1.0))
    throw std::invalid_argument("correlation_threshold must lie in (0,1]");
  if (variance_cap < 1) throw std::invalid_argument("variance_cap must be >= 1");
  if (!(dimensionality_ratio_trigger > 0.0)) throw std::invalid_argument("dimensionality_ratio_trigger must be > 0");
  if (knn_k < 1) throw std::invalid_argument("knn_k must be >= 1");
  if (smote_k < 1) throw std::invalid_argument("smote_k must be >= 1");
}

std::vector<std::size_t> sparse_keep(const Matrix& x, const PreprocessConfig& cfg) {
  std::vector<std::size_t> keep;
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    std::size_t missing = 0, zeros = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double v = x(r, c);
      if (is_missing(v))
        ++missing;
      else if (v == 0.0)
        ++zeros;
    }
    const std::size_t observed = x.rows() - missing;
    const double missing_frac = n > 0 ? static_cast<double>(missing) / n : 1.0;
    const double zero_frac = observed > 0 ? static_cast<double>(zeros) / static_cast<double>(observed) : 0.0;
    if (missing_frac > cfg.max_missing_fraction || zero_frac > cfg.max_zero_fraction) continue;
    keep.push_back(c);
  }
  return keep;
}

std::vector<std::size_t> correlation_keep(const Matrix& x, const PreprocessConfig& cfg) {
  const std::size_t p = x.cols(), n = x.rows();
  // Complete columns are centred and unit-scaled once so their correlation
  // is a plain dot product; columns with gaps take the pairwise path.
  std::vector<bool> complete(p);
  std::vector<double> z(p * n, 0.0);
  std::vector<bool> constant(p, false);
  for (std::size_t c = 0; c < p; ++c) {
    complete[c] = !has_missing_column(x, c);
    if (!complete[c]) continue;
    const auto m = moments(x, c);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (x(r, c) - m.mean) * (x(r, c) - m.mean);
    if (ss <= 0.0) {
      constant[c] = true;
      continue;
    }
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t r = 0; r < n; ++r) z[c * n + r] = (x(r, c) - m.mean) * inv;
  }

  std::vector<bool> dropped(p, false);
  for (std::size_t i = 0; i < p; ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (dropped[j]) continue;
      double r = 0.0;
      if (complete[i] && complete[j]) {
        if (constant[i] || constant[j]) continue;
        const double* a = z.data() + i * n;
        const double* b = z.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) r += a[k] * b[k];
      } else {
        r = pairwise_complete_r(x, i, j);
      }
      if (std::fabs(r) > cfg.correlation_threshold) dropped[j] = true;
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < p; ++c)
    if (!dropped[c]) keep.push_back(c);
  return keep;
}

std::vector<std::size_t> variance_keep(const Matrix& x, std::size_t n_samples, const PreprocessConfig& cfg) {
  std::vector<std::size_t> all(x.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (n_samples == 0 ||
      static_cast<double>(x.cols()) / static_cast<double>(n_samples) <= cfg.dimensionality_ratio_trigger ||
      x.cols() <= cfg.variance_cap)
    return all;
  std::vector<double> var(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto m = moments(x, c);
    var[c] = m.sd * m.sd;
  }
  std::stable_sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
  all.resize(cfg.variance_cap);
  std::sort(all.begin(), all.end());
  return all;
}

ModalityTable filter_sparse(const ModalityTable& table, const PreprocessConfig& cfg) {
  auto keep = sparse_keep(table.values, cfg);
  if (keep.empty()) throw DataError("empty modality after sparsity filter: '" + table.name + "'");
  return table.select_features(keep);
}

ModalityTable prune_correlated(const ModalityTable& table, const PreprocessConfig& cfg) {
  return table.select_features(correlation_keep(table.values, cfg));
}

ModalityTable variance_topk(const ModalityTable& table, std::size_t n_samples, const PreprocessConfig& cfg) {
  return table.select_features(variance_keep(table.values, n_samples, cfg));
}

Matrix impute_knn(const Matrix& train, const Matrix& apply_to, const PreprocessConfig& cfg) {
  if (train.cols() != apply_to.cols()) throw std::invalid_argument("impute_knn: column count mismatch");
  const std::size_t p = train.cols();
  std::vector<ColumnMoments> mom(p);
  for (std::size_t c = 0; c < p; ++c) {
    mom[c] = moments(train, c);
    if (mom[c].observed == 0)
      throw DataError("impute_knn: feature " + std::to_string(c) + " is missing in every training row");
  }
  Matrix out = apply_to;
  bool any_missing = std::any_of(apply_to.data().begin(), apply_to.data().end(), is_missing);
  if (!any_missing) return out;
  if (train.rows() < static_cast<std::size_t>(cfg.knn_k) + 1)
    throw std::invalid_argument("impute_knn: training set needs at least knn_k + 1 rows");

  std::vector<double> scale(p);
  for (std::size_t c = 0; c < p; ++c) scale[c] = mom[c].sd > 0.0 ? 1.0 / mom[c].sd : 1.0;

  std::vector<double> dist(train.rows());
  std::vector<std::size_t> donors;
  for (std::size_t a = 0; a < apply_to.rows(); ++a) {
    auto row = apply_to.row(a);
    if (std::none_of(row.begin(), row.end(), is_missing)) continue;
    for (std::size_t t = 0; t < train.rows(); ++t) {
      double d2 = 0.0;
      std::size_t shared = 0;
      for (std::size_t c = 0; c < p; ++c) {
        const double va = row[c], vt = train(t, c);
        if (is_missing(va) || is_missing(vt)) continue;
        const double d = (va - vt) * scale[c];
        d2 += d * d;
        ++shared;
      }
      dist[t] = shared > 0 ? std::sqrt(d2) : std::numeric_limits<double>::infinity();
    }
    for (std::size_t c = 0; c < p; ++c) {
      if (!is_missing(row[c])) continue;
      donors.clear();
      for (std::size_t t = 0; t < train.rows(); ++t)
        if (!is_missing(train(t, c)) && std::isfinite(dist[t])) donors.push_back(t);
      if (donors.empty()) {
        out(a, c) = mom[c].mean;
        continue;
      }
      const std::size_t k = std::min(donors.size(), static_cast<std::size_t>(cfg.knn_k));
      std::partial_sort(donors.begin(), donors.begin() + static_cast<std::ptrdiff_t>(k), donors.end(),
                        [&](std::size_t l, std::size_t r) { return dist[l] < dist[r] || (dist[l] == dist[r] && l < r); });
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += train(donors[j], c);
      out(a, c) = s / static_cast<double>(k);
    }
  }
  return out;
}

ModalityTable impute_knn(const ModalityTable& train, const ModalityTable& apply_to, const PreprocessConfig& cfg) {
  ModalityTable out = apply_to;
  out.values = impute_knn(train.values, apply_to.values, cfg);
  return out;
}

Matrix normalize(const Matrix& train, const Matrix& apply_to, Normalization kind) {
  if (train.cols() != apply_to.cols()) throw std::invalid_argument("normalize: column count mismatch");
  Matrix out = apply_to;
  if (kind == Normalization::Standardize) {
    for (std::size_t c = 0; c < train.cols(); ++c) {
      const auto m = moments(train, c);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        double& v = out(r, c);
        if (is_missing(v)) continue;
        v = m.sd > 0.0 ? (v - m.mean) / m.sd : 0.0;
      }
    }
    return out;
  }
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double sum = 0.0;
    for (double v : row) {
      if (is_missing(v)) continue;
      if (v < 0.0) throw std::invalid_argument("cpm_log normalization requires nonnegative values");
      sum += v;
    }
    for (double& v : row) {
      if (is_missing(v)) continue;
      v = sum > 0.0 ? std::log2(1e6 * v / sum + 1.0) : 0.0;
    }
  }
  return out;
}

ModalityTable normalize(const ModalityTable& train, const ModalityTable& apply_to, Normalization kind) {
  ModalityTable out = apply_to;
  out.values = normalize(train.values, apply_to.values, kind);
  return out;
}

LabeledRows smote_balance(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                          const PreprocessConfig& cfg, std::uint64_t seed) {
  if (y.size() != x.rows()) throw std::invalid_argument("smote_balance: label length mismatch");
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= n_classes) throw std::invalid_argument("smote_balance: bad label");
    members[static_cast<std::size_t>(y[i])].push_back(i);
  }
  std::size_t majority = 0;
  for (const auto& m : members) majority = std::max(majority, m.size());

  LabeledRows out{x, std::vector<int>(y.begin(), y.end())};
  std::vector<double> synth(x.cols());
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto& mem = members[c];
    if (mem.empty() || mem.size() >= majority) continue;
    if (mem.size() < 2) throw std::invalid_argument("SMOTE requires >=2 samples per class");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.smote_k), mem.size() - 1);

    // k nearest same-class neighbours for every member
    std::vector<std::vector<std::size_t>> nn(mem.size());
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t a = 0; a < mem.size(); ++a) {
      cand.clear();
      for (std::size_t b = 0; b < mem.size(); ++b) {
        if (a == b) continue;
        double d2 = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
          const double d = x(mem[a], j) - x(mem[b], j);
          d2 += d * d;
        }
        cand.emplace_back(d2, b);
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
      for (std::size_t j = 0; j < k; ++j) nn[a].push_back(cand[j].second);
    }

    Rng rng(derive_seed(seed, {c}));
    std::uniform_int_distribution<std::size_t> pick_member(0, mem.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, k - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = mem.size(); s < majority; ++s) {
      const std::size_t a = pick_member(rng);
      const std::size_t b = nn[a][pick_nn(rng)];
      const double u = unit(rng);
      for (std::size_t j = 0; j < x.cols(); ++j) {
        const double base = x(mem[a], j);
        synth[j] = base + u * (x(mem[b], j) - base);
      }
      out.x.append_row(synth);
      out.y.push_back(static_cast<int>(c));
    }
  }
  return out;
}

std::vector<int> smote_balance_views(std::vector<Matrix>& views, std::span<const int> y, std::size_t n_classes,
                                     const PreprocessConfig& cfg, std::uint64_t seed) {
  std::vector<const Matrix*> blocks;
  for (const auto& v : views) blocks.push_back(&v);
  const Matrix joined = hconcat(blocks);
  auto balanced = smote_balance(joined, y, n_classes, cfg, seed);
  std::size_t offset = 0;
  for (auto& v : views) {
    std::vector<std::size_t> cols(v.cols());
    std::iota(cols.begin(), cols.end(), offset);
    offset += v.cols();
    v = balanced.x.select_cols(cols);
  }
  return std::move(balanced.y);
}

FittedPreprocessor FittedPreprocessor::fit(const ModalityTable& train, const PreprocessConfig& cfg) {
  cfg.validate();
  FittedPreprocessor fp;
  fp.modality_ = train.name;
  fp.source_width_ = train.n_features();
  fp.cfg_ = cfg;
  fp.kind_ = cfg.normalization_for(train.name);

  std::vector<std::size_t> keep(train.n_features());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  auto narrow = [&](const std::vector<std::size_t>& local) {
    std::vector<std::size_t> next;
    next.reserve(local.size());
    for (std::size_t j : local) next.push_back(keep[j]);
    keep = std::move(next);
  };
  if (cfg.sparsity_filter) {
    narrow(sparse_keep(train.values, cfg));
    if (keep.empty()) throw DataError("empty modality after sparsity filter: '" + train.name + "'");
  }
  if (cfg.correlation_filter) narrow(correlation_keep(train.values.select_cols(keep), cfg));
  if (cfg.variance_filter) narrow(variance_keep(train.values.select_cols(keep), train.n_samples(), cfg));
  if (keep.empty()) throw DataError("no features left in modality '" + train.name + "'");

  fp.kept_ = keep;
  for (std::size_t j : keep) fp.kept_names_.push_back(train.feature_names[j]);
  fp.donors_ = train.values.select_cols(keep);
  fp.imputed_train_ = impute_knn(fp.donors_, fp.donors_, cfg);
  if (fp.kind_ == Normalization::Standardize) {
    for (std::size_t c = 0; c < fp.imputed_train_.cols(); ++c) {
      const auto m = moments(fp.imputed_train_, c);
      fp.means_.push_back(m.mean);
      fp.sds_.push_back(m.sd);
    }
  }
  return fp;
}

ModalityTable FittedPreprocessor::transform(const ModalityTable& table) const {
  if (table.n_features() != source_width_)
    throw std::invalid_argument("FittedPreprocessor: modality '" + table.name + "' width differs from the fitted table");
  ModalityTable out = table.select_features(kept_);
  if (out.feature_names != kept_names_)
    throw std::invalid_argument("FittedPreprocessor: feature names differ from the fitted table");
  out.values = impute_knn(donors_, out.values, cfg_);
  out.values = normalize(imputed_train_, out.values, kind_);
  return out;
}

}  // namespace latefuse
