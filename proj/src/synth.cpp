#include "latefuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "latefuse/random.hpp"

namespace latefuse {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("synth spec: " + what);
}

bool is_fraction(double v) { return v >= 0.0 && v <= 1.0; }

// Largest-remainder allocation; every class gets at least one sample.
std::vector<std::size_t> class_counts(const SynthSpec& spec) {
  const std::size_t K = spec.n_classes;
  std::vector<double> w = spec.class_weights.empty() ? std::vector<double>(K, 1.0) : spec.class_weights;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> counts(K);
  std::vector<std::pair<double, std::size_t>> rest;
  std::size_t used = 0;
  for (std::size_t c = 0; c < K; ++c) {
    const double exact = static_cast<double>(spec.n_samples) * w[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    used += counts[c];
    rest.push_back({exact - std::floor(exact), c});
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < spec.n_samples; ++i, ++used) ++counts[rest[i % K].second];
  for (std::size_t c : counts) require(c >= 1, "a class would receive no samples");
  return counts;
}

std::string padded(const std::string& prefix, std::size_t i, std::size_t n) {
  std::string num = std::to_string(i);
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  return prefix + std::string(width - std::min(width, num.size()), '0') + num;
}

}  // namespace

void SynthSpec::validate() const {
  require(n_classes >= 2, "need at least 2 classes");
  require(n_samples >= n_classes, "fewer samples than classes");
  require(!modalities.empty(), "no modalities");
  require(is_fraction(signal_overlap), "signal_overlap outside [0,1]");
  if (!class_weights.empty()) {
    require(class_weights.size() == n_classes, "class_weights length differs from n_classes");
    for (double w : class_weights) require(w > 0.0 && std::isfinite(w), "class weights must be positive");
  }
  std::set<std::string> names;
  for (const auto& m : modalities) {
    require(!m.name.empty(), "modality without a name");
    require(names.insert(m.name).second, "duplicate modality name '" + m.name + "'");
    require(m.n_features >= 1, "modality '" + m.name + "' has no features");
    require(m.n_informative <= m.n_features, "modality '" + m.name + "' has more informative than total features");
    require(m.snr >= 0.0 && std::isfinite(m.snr), "modality '" + m.name + "' has a negative snr");
    require(is_fraction(m.missing_fraction), "modality '" + m.name + "' missing_fraction outside [0,1]");
    require(is_fraction(m.zero_fraction), "modality '" + m.name + "' zero_fraction outside [0,1]");
    std::set<int> seen;
    for (int c : m.signal_classes) {
      require(c >= 0 && static_cast<std::size_t>(c) < n_classes, "modality '" + m.name + "' signal class out of range");
      require(seen.insert(c).second, "modality '" + m.name + "' repeats a signal class");
    }
  }
  class_counts(*this);
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples, K = spec.n_classes;
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const auto counts = class_counts(spec);
  std::vector<int> labels;
  for (std::size_t c = 0; c < K; ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  std::shuffle(labels.begin(), labels.end(), rng);

  SynthResult out;
  auto& ds = out.dataset;
  for (std::size_t c = 0; c < K; ++c) ds.class_names.push_back("C" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) ds.sample_ids.push_back(padded("S", i, n));
  ds.labels = labels;

  std::size_t max_inf = 0;
  for (const auto& m : spec.modalities) max_inf = std::max(max_inf, m.n_informative);
  Matrix shared(n, max_inf);
  for (double& v : shared.data()) v = gauss(rng);
  const double a = std::sqrt(spec.signal_overlap), b = std::sqrt(1.0 - spec.signal_overlap);

  std::vector<double> prior(K);
  for (std::size_t c = 0; c < K; ++c) prior[c] = static_cast<double>(counts[c]) / static_cast<double>(n);

  for (const auto& sm : spec.modalities) {
    const std::size_t p = sm.n_features;
    std::vector<bool> signal(K, sm.signal_classes.empty());
    for (int c : sm.signal_classes) signal[c] = true;

    // class means of the informative features; non-signal classes stay at 0
    Matrix means(K, sm.n_informative, 0.0);
    for (std::size_t f = 0; f < sm.n_informative; ++f)
      for (std::size_t c = 0; c < K; ++c)
        if (signal[c]) means(c, f) = sm.snr * gauss(rng);

    // informative columns sit at random positions
    std::vector<std::size_t> cols(p);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    std::shuffle(cols.begin(), cols.end(), rng);
    std::vector<std::ptrdiff_t> role(p, -1);
    for (std::size_t f = 0; f < sm.n_informative; ++f) role[cols[f]] = static_cast<std::ptrdiff_t>(f);

    ModalityTable t;
    t.name = sm.name;
    t.sample_ids = ds.sample_ids;
    for (std::size_t j = 0; j < p; ++j) t.feature_names.push_back(padded(sm.name + "_f", j, p));
    t.values = Matrix(n, p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        double v = gauss(rng);
        if (role[j] >= 0) {
          const auto f = static_cast<std::size_t>(role[j]);
          v = means(labels[i], f) + a * shared(i, f) + b * v;
        }
        if (sm.count_valued) {
          std::poisson_distribution<long> pois(20.0 * std::exp(0.5 * std::clamp(v, -8.0, 8.0)));
          v = static_cast<double>(pois(rng));
        }
        t.values(i, j) = v;
      }
    if (sm.zero_fraction > 0.0)
      for (double& v : t.values.data())
        if (unif(rng) < sm.zero_fraction) v = 0.0;
    if (sm.missing_fraction > 0.0)
      for (double& v : t.values.data())
        if (unif(rng) < sm.missing_fraction) v = kMissing;

    double sep = 0.0;
    for (std::size_t f = 0; f < sm.n_informative; ++f) {
      double mu = 0.0;
      for (std::size_t c = 0; c < K; ++c) mu += prior[c] * means(c, f);
      for (std::size_t c = 0; c < K; ++c) sep += prior[c] * (means(c, f) - mu) * (means(c, f) - mu);
    }
    out.manifest.separability.push_back(sep);
    for (std::size_t j = 0; j < p; ++j)
      if (role[j] >= 0) out.manifest.informative.push_back({sm.name, t.feature_names[j]});
    ds.modalities.push_back(std::move(t));
  }

  const std::size_t M = spec.modalities.size();
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return out.manifest.separability[x] > out.manifest.separability[y]; });
  out.manifest.separability_rank.assign(M, 0);
  for (std::size_t r = 0; r < M; ++r) out.manifest.separability_rank[order[r]] = static_cast<int>(r + 1);
  std::sort(out.manifest.informative.begin(), out.manifest.informative.end());
  return out;
}

std::vector<ModalityFile> write_synth(const SynthSpec& spec, const SynthResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<ModalityFile> files;
  const auto& ds = result.dataset;
  for (const auto& t : ds.modalities) {
    files.push_back({t.name, dir / (t.name + ".csv")});
    write_modality_csv(t, files.back().path);
  }
  write_labels_csv(ds, dir / "labels.csv");

  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["n_samples"] = ds.n_samples();
  j["class_names"] = ds.class_names;
  std::vector<std::size_t> counts(ds.n_classes(), 0);
  for (int y : ds.labels) ++counts[y];
  j["class_counts"] = counts;
  j["signal_overlap"] = spec.signal_overlap;
  auto mods = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < spec.modalities.size(); ++m) {
    const auto& sm = spec.modalities[m];
    nlohmann::ordered_json e;
    e["name"] = sm.name;
    e["file"] = sm.name + ".csv";
    e["n_features"] = sm.n_features;
    e["n_informative"] = sm.n_informative;
    e["snr"] = sm.snr;
    e["count_valued"] = sm.count_valued;
    e["signal_classes"] = sm.signal_classes;
    e["separability"] = result.manifest.separability[m];
    e["separability_rank"] = result.manifest.separability_rank[m];
    std::vector<std::string> inf;
    for (const auto& [mod, feat] : result.manifest.informative)
      if (mod == sm.name) inf.push_back(feat);
    e["informative"] = inf;
    mods.push_back(std::move(e));
  }
  j["modalities"] = std::move(mods);
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failed for " + (dir / "manifest.json").string());
  return files;
}

SynthSpec complementary_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_samples = 120;
  s.n_classes = 4;
  s.seed = seed;
  const std::vector<std::vector<int>> pairs{{0, 1}, {2, 3}, {1, 2}};
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    SynthModality sm;
    sm.name = "view" + std::to_string(m + 1);
    sm.n_features = 20;
    sm.n_informative = 5;
    sm.snr = 1.5;
    sm.signal_classes = pairs[m];
    s.modalities.push_back(sm);
  }
  return s;
}

SynthSpec planted_noise_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_samples = 90;
  s.n_classes = 3;
  s.seed = seed;
  for (int m = 0; m < 3; ++m) {
    SynthModality sm;
    sm.name = m < 2 ? "signal" + std::to_string(m + 1) : "noise";
    sm.n_features = 20;
    sm.n_informative = m < 2 ? 5 : 0;
    sm.snr = m < 2 ? 1.0 : 0.0;
    s.modalities.push_back(sm);
  }
  return s;
}

SynthSpec high_dimensional_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_samples = 100;
  s.n_classes = 3;
  s.seed = seed;
  for (int m = 0; m < 3; ++m) {
    SynthModality sm;
    sm.name = "omics" + std::to_string(m + 1);
    sm.n_features = 2000;
    sm.n_informative = 20;
    sm.snr = 1.0;
    s.modalities.push_back(sm);
  }
  return s;
}

}  // namespace latefuse
