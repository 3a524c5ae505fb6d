#include "latefuse/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace latefuse {

using json = nlohmann::ordered_json;

namespace {

// Reads one JSON object; every key must be consumed before finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config must be an object" : "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void integer(const std::string& key, T& out) {
    if (auto* v = raw(key)) {
      if (!v->is_number_integer()) fail(key, "must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v->is_number_unsigned()) out = static_cast<T>(v->get<std::uint64_t>());
        else if (v->get<std::int64_t>() < 0) fail(key, "must be >= 0");
        else out = static_cast<T>(v->get<std::int64_t>());
      } else {
        out = static_cast<T>(v->get<std::int64_t>());
      }
    }
  }

  void number(const std::string& key, double& out) {
    if (auto* v = raw(key)) {
      if (!v->is_number()) fail(key, "must be a number");
      out = v->get<double>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto* v = raw(key)) {
      if (!v->is_boolean()) fail(key, "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (auto* v = raw(key)) {
      if (!v->is_string()) fail(key, "must be a string");
      out = v->get<std::string>();
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (auto* v = raw(key)) {
      if (!v->is_array()) fail(key, "must be an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "must be an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + child(it.key()) + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("'" + child(key) + "' " + what);
  }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError((path_.empty() ? "" : "'" + path_ + "' ") + what); }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Wraps std::invalid_argument from the module validators.
template <class Fn>
void checked(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void read_gbm(const json& j, const std::string& path, GbmParams& p) {
  Section s(j, path);
  s.integer("n_rounds", p.n_rounds);
  s.number("learning_rate", p.learning_rate);
  s.integer("max_depth", p.max_depth);
  s.integer("min_leaf", p.min_leaf);
  s.number("subsample", p.subsample);
  s.finish();
}

json gbm_json(const GbmParams& p) {
  return {{"n_rounds", p.n_rounds},
          {"learning_rate", p.learning_rate},
          {"max_depth", p.max_depth},
          {"min_leaf", p.min_leaf},
          {"subsample", p.subsample}};
}

void read_forest(const json& j, const std::string& path, ForestParams& p) {
  Section s(j, path);
  s.integer("n_trees", p.n_trees);
  s.integer("max_depth", p.max_depth);
  s.integer("min_leaf", p.min_leaf);
  s.integer("max_features", p.max_features);
  s.boolean("bootstrap", p.bootstrap);
  s.finish();
}

json forest_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_leaf", p.min_leaf},
          {"max_features", p.max_features},
          {"bootstrap", p.bootstrap}};
}

IntegratorSpec read_method(const json& j, const std::string& path, const GbmParams& base) {
  IntegratorSpec m;
  m.base = base;
  if (j.is_string()) {
    checked(path, [&] { m.kind = parse_integrator_kind(j.get<std::string>()); });
    return m;
  }
  Section s(j, path);
  std::string kind;
  s.string("kind", kind);
  if (!s.has("kind")) s.fail("needs a 'kind'");
  checked(s.child("kind"), [&] { m.kind = parse_integrator_kind(kind); });
  s.string("name", m.name);
  s.strings("modalities", m.modalities);
  if (auto* b = s.raw("base")) read_gbm(*b, s.child("base"), m.base);
  if (auto* o = s.raw("base_overrides")) {
    Section os(*o, s.child("base_overrides"));
    for (auto it = o->begin(); it != o->end(); ++it) {
      GbmParams p = m.base;
      read_gbm(*os.raw(it.key()), os.child(it.key()), p);
      m.base_overrides[it.key()] = p;
    }
    os.finish();
  }
  s.integer("boosting_rounds", m.boosting_rounds);
  s.number("soft_confidence_ratio", m.soft_confidence_ratio);
  s.integer("inner_folds", m.inner_folds);
  if (auto* f = s.raw("meta")) read_forest(*f, s.child("meta"), m.meta);
  s.integer("pbmv_max_steps", m.pbmv_max_steps);
  s.number("pbmv_tolerance", m.pbmv_tolerance);
  s.integer("smote_k", m.smote_k);
  s.finish();
  checked(path, [&] { m.validate(); });
  return m;
}

json method_json(const IntegratorSpec& m) {
  json j;
  j["kind"] = to_string(m.kind);
  j["name"] = m.label();
  j["modalities"] = m.modalities;
  j["base"] = gbm_json(m.base);
  json o = json::object();
  for (const auto& [k, p] : m.base_overrides) o[k] = gbm_json(p);
  j["base_overrides"] = o;
  j["boosting_rounds"] = m.boosting_rounds;
  j["soft_confidence_ratio"] = m.soft_confidence_ratio;
  j["inner_folds"] = m.inner_folds;
  j["meta"] = forest_json(m.meta);
  j["pbmv_max_steps"] = m.pbmv_max_steps;
  j["pbmv_tolerance"] = m.pbmv_tolerance;
  j["smote_k"] = m.smote_k;
  return j;
}

SynthSpec read_synth(const json& j, const std::string& path, std::uint64_t default_seed) {
  Section s(j, path);
  SynthSpec spec;
  std::uint64_t seed = default_seed;
  s.integer("seed", seed);
  std::string preset;
  s.string("preset", preset);
  if (!preset.empty()) {
    if (preset == "complementary") spec = complementary_spec(seed);
    else if (preset == "planted_noise") spec = planted_noise_spec(seed);
    else if (preset == "high_dimensional") spec = high_dimensional_spec(seed);
    else s.fail("preset", "must be complementary, planted_noise or high_dimensional");
  }
  spec.seed = seed;
  s.integer("n_samples", spec.n_samples);
  s.integer("n_classes", spec.n_classes);
  if (auto* w = s.raw("class_weights")) {
    if (!w->is_array()) s.fail("class_weights", "must be an array of numbers");
    spec.class_weights.clear();
    for (const auto& e : *w) {
      if (!e.is_number()) s.fail("class_weights", "must be an array of numbers");
      spec.class_weights.push_back(e.get<double>());
    }
  }
  s.number("signal_overlap", spec.signal_overlap);
  if (auto* mods = s.raw("modalities")) {
    if (!mods->is_array()) s.fail("modalities", "must be an array");
    spec.modalities.clear();
    for (std::size_t i = 0; i < mods->size(); ++i) {
      Section ms((*mods)[i], s.child("modalities") + "[" + std::to_string(i) + "]");
      SynthModality m;
      ms.string("name", m.name);
      ms.integer("n_features", m.n_features);
      ms.integer("n_informative", m.n_informative);
      ms.number("snr", m.snr);
      ms.number("missing_fraction", m.missing_fraction);
      ms.number("zero_fraction", m.zero_fraction);
      ms.boolean("count_valued", m.count_valued);
      if (auto* sc = ms.raw("signal_classes")) {
        if (!sc->is_array()) ms.fail("signal_classes", "must be an array of integers");
        for (const auto& e : *sc) {
          if (!e.is_number_integer()) ms.fail("signal_classes", "must be an array of integers");
          m.signal_classes.push_back(e.get<int>());
        }
      }
      ms.finish();
      spec.modalities.push_back(std::move(m));
    }
  }
  s.finish();
  checked(path, [&] { spec.validate(); });
  return spec;
}

json synth_json(const SynthSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["n_samples"] = spec.n_samples;
  j["n_classes"] = spec.n_classes;
  j["class_weights"] = spec.class_weights;
  j["signal_overlap"] = spec.signal_overlap;
  auto mods = json::array();
  for (const auto& m : spec.modalities)
    mods.push_back({{"name", m.name},
                    {"n_features", m.n_features},
                    {"n_informative", m.n_informative},
                    {"snr", m.snr},
                    {"missing_fraction", m.missing_fraction},
                    {"zero_fraction", m.zero_fraction},
                    {"count_valued", m.count_valued},
                    {"signal_classes", m.signal_classes}});
  j["modalities"] = mods;
  return j;
}

void read_preprocess(const json& j, const std::string& path, PreprocessConfig& p) {
  Section s(j, path);
  s.number("max_missing_fraction", p.max_missing_fraction);
  s.number("max_zero_fraction", p.max_zero_fraction);
  s.number("correlation_threshold", p.correlation_threshold);
  s.integer("variance_cap", p.variance_cap);
  s.number("dimensionality_ratio_trigger", p.dimensionality_ratio_trigger);
  s.integer("knn_k", p.knn_k);
  s.integer("smote_k", p.smote_k);
  s.boolean("smote", p.smote_enabled);
  s.boolean("sparsity_filter", p.sparsity_filter);
  s.boolean("correlation_filter", p.correlation_filter);
  s.boolean("variance_filter", p.variance_filter);
  if (auto* n = s.raw("normalization")) {
    Section ns(*n, s.child("normalization"));
    for (auto it = n->begin(); it != n->end(); ++it) {
      std::string v;
      ns.string(it.key(), v);
      checked(ns.child(it.key()), [&] { p.normalization[it.key()] = parse_normalization(v); });
    }
    ns.finish();
  }
  s.finish();
  checked(path, [&] { p.validate(); });
}

json preprocess_json(const PreprocessConfig& p) {
  json norm = json::object();
  for (const auto& [k, v] : p.normalization) norm[k] = to_string(v);
  return {{"max_missing_fraction", p.max_missing_fraction},
          {"max_zero_fraction", p.max_zero_fraction},
          {"correlation_threshold", p.correlation_threshold},
          {"variance_cap", p.variance_cap},
          {"dimensionality_ratio_trigger", p.dimensionality_ratio_trigger},
          {"knn_k", p.knn_k},
          {"smote_k", p.smote_k},
          {"smote", p.smote_enabled},
          {"sparsity_filter", p.sparsity_filter},
          {"correlation_filter", p.correlation_filter},
          {"variance_filter", p.variance_filter},
          {"normalization", norm}};
}

std::vector<IntegratorSpec> default_methods(const GbmParams& base) {
  std::vector<IntegratorSpec> out;
  for (int k = 0; k < 9; ++k) {
    IntegratorSpec m;
    m.kind = static_cast<IntegratorKind>(k);
    m.base = base;
    out.push_back(m);
  }
  return out;
}

}  // namespace

BenchmarkOptions ExperimentConfig::benchmark_options() const {
  BenchmarkOptions o;
  o.preprocess = preprocess;
  o.boruta = boruta;
  o.boruta_params = boruta_params;
  o.thresholds = signature;
  o.seed = seed;
  o.threads = parallelism;
  return o;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section s(doc, "");
  s.integer("seed", c.seed);
  s.string("output_dir", c.output_dir);
  s.integer("parallelism", c.parallelism);
  if (c.parallelism < 1) s.fail("parallelism", "must be >= 1");

  if (auto* d = s.raw("data")) {
    Section ds(*d, "data");
    if (auto* mods = ds.raw("modalities")) {
      if (!mods->is_array()) ds.fail("modalities", "must be an array");
      for (std::size_t i = 0; i < mods->size(); ++i) {
        Section ms((*mods)[i], ds.child("modalities") + "[" + std::to_string(i) + "]");
        ModalityFile f;
        std::string path;
        ms.string("name", f.name);
        ms.string("path", path);
        ms.finish();
        if (f.name.empty() || path.empty()) ms.fail("needs 'name' and 'path'");
        f.path = path;
        c.modalities.push_back(std::move(f));
      }
    }
    std::string labels;
    ds.string("labels", labels);
    c.labels = labels;
    if (auto* sy = ds.raw("synth")) c.synth = read_synth(*sy, ds.child("synth"), c.seed);
    ds.finish();
    if (c.synth && (!c.modalities.empty() || !c.labels.empty()))
      ds.fail("takes either 'synth' or 'modalities' + 'labels', not both");
    if (!c.synth && (c.modalities.empty() != c.labels.empty()))
      ds.fail("needs both 'modalities' and 'labels'");
  }

  if (auto* p = s.raw("preprocess")) read_preprocess(*p, "preprocess", c.preprocess);

  if (auto* b = s.raw("boruta")) {
    Section bs(*b, "boruta");
    bs.boolean("enabled", c.boruta);
    bs.integer("max_iter", c.boruta_params.max_iter);
    bs.number("alpha", c.boruta_params.alpha);
    if (auto* l = bs.raw("learner")) read_gbm(*l, bs.child("learner"), c.boruta_params.learner);
    bs.finish();
    if (c.boruta_params.max_iter < 1) bs.fail("max_iter", "must be >= 1");
    if (!(c.boruta_params.alpha > 0.0 && c.boruta_params.alpha < 1.0)) bs.fail("alpha", "must be in (0, 1)");
  }

  if (auto* g = s.raw("signature")) {
    Section gs(*g, "signature");
    gs.number("min_frequency", c.signature.min_frequency);
    gs.number("min_score", c.signature.min_score);
    gs.finish();
  }

  c.fold_seed = c.seed;
  if (auto* f = s.raw("folds")) {
    Section fs(*f, "folds");
    fs.integer("repeats", c.repeats);
    fs.integer("folds", c.folds);
    fs.integer("seed", c.fold_seed);
    fs.finish();
    if (c.repeats < 1) fs.fail("repeats", "must be >= 1");
    if (c.folds < 2) fs.fail("folds", "must be >= 2");
  }

  if (auto* b = s.raw("base_learner")) read_gbm(*b, "base_learner", c.base_learner);

  if (auto* ms = s.raw("methods")) {
    if (!ms->is_array() || ms->empty()) s.fail("methods", "must be a non-empty array");
    for (std::size_t i = 0; i < ms->size(); ++i)
      c.methods.push_back(read_method((*ms)[i], "methods[" + std::to_string(i) + "]", c.base_learner));
  } else {
    c.methods = default_methods(c.base_learner);
  }
  std::set<std::string> labels;
  for (const auto& m : c.methods)
    if (!labels.insert(m.label()).second) s.fail("methods", "repeats the name '" + m.label() + "'");

  c.incremental_ensemble.kind = IntegratorKind::EnsSoft;
  c.incremental_ensemble.base = c.base_learner;
  if (auto* inc = s.raw("incremental")) {
    Section is(*inc, "incremental");
    is.number("margin", c.incremental_margin);
    if (auto* e = is.raw("ensemble")) c.incremental_ensemble = read_method(*e, is.child("ensemble"), c.base_learner);
    is.finish();
    if (!(c.incremental_margin >= 0.0)) is.fail("margin", "must be >= 0");
  }
  s.finish();

  for (auto& f : c.modalities)
    if (f.path.is_relative() && !base_dir.empty()) f.path = base_dir / f.path;
  if (!c.labels.empty() && c.labels.is_relative() && !base_dir.empty()) c.labels = base_dir / c.labels;
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["parallelism"] = c.parallelism;
  json data;
  if (c.synth) {
    data["synth"] = synth_json(*c.synth);
  } else {
    auto mods = json::array();
    for (const auto& f : c.modalities) mods.push_back({{"name", f.name}, {"path", f.path.generic_string()}});
    data["modalities"] = mods;
    data["labels"] = c.labels.generic_string();
  }
  j["data"] = data;
  j["preprocess"] = preprocess_json(c.preprocess);
  j["boruta"] = {{"enabled", c.boruta},
                 {"max_iter", c.boruta_params.max_iter},
                 {"alpha", c.boruta_params.alpha},
                 {"learner", gbm_json(c.boruta_params.learner)}};
  j["signature"] = {{"min_frequency", c.signature.min_frequency}, {"min_score", c.signature.min_score}};
  j["folds"] = {{"repeats", c.repeats}, {"folds", c.folds}, {"seed", c.fold_seed}};
  j["base_learner"] = gbm_json(c.base_learner);
  auto methods = json::array();
  for (const auto& m : c.methods) methods.push_back(method_json(m));
  j["methods"] = methods;
  j["incremental"] = {{"margin", c.incremental_margin}, {"ensemble", method_json(c.incremental_ensemble)}};
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("override key '" + key + "' goes through a non-object");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError("override key '" + key + "' goes through a non-object");
  (*node)[parts.back()] = std::move(value);
}

MultiModalDataset load_experiment_data(const ExperimentConfig& c) {
  if (c.synth) return generate(*c.synth).dataset;
  if (c.modalities.empty()) throw ConfigError("no data: set data.modalities + data.labels or data.synth");
  return load_dataset(c.modalities, c.labels);
}

}  // namespace latefuse
