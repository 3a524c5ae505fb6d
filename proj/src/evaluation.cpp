#include "latefuse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "latefuse/csv.hpp"
#include "latefuse/parallel.hpp"
#include "latefuse/random.hpp"

namespace latefuse {

namespace {

using json = nlohmann::ordered_json;

struct CellViews {
  std::vector<View> train;
  std::vector<View> test;
  std::vector<int> y_train;
  std::vector<std::string> warnings;
};

struct MethodCell {
  bool ok = false;
  std::string error;
  MetricSet metrics;
  FoldScores scores;
  std::set<std::string> selected;
  std::vector<std::string> warnings;
};

struct CellResult {
  std::vector<MethodCell> methods;
  std::vector<std::string> warnings;
};

View to_view(ModalityTable t) { return {std::move(t.name), std::move(t.feature_names), std::move(t.values)}; }

// Test labels are never touched here.
CellViews prepare_cell(const MultiModalDataset& ds, const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                       const BenchmarkOptions& opt, std::uint64_t cell_seed) {
  CellViews cell;
  cell.y_train.reserve(train.size());
  for (auto i : train) cell.y_train.push_back(ds.labels[i]);
  for (std::size_t m = 0; m < ds.n_modalities(); ++m) {
    const auto& table = ds.modalities[m];
    const auto tr_raw = table.select_rows(train);
    const auto pre = FittedPreprocessor::fit(tr_raw, opt.preprocess);
    auto tr = pre.transform(tr_raw);
    auto te = pre.transform(table.select_rows(test));
    if (opt.boruta) {
      const auto res = boruta_select(tr.values, cell.y_train, ds.n_classes(), opt.boruta_params, derive_seed(cell_seed, {1, m}));
      const auto keep = res.confirmed();
      if (keep.empty()) {
        cell.warnings.push_back("boruta confirmed nothing in '" + table.name + "'; modality kept whole");
      } else {
        tr = tr.select_features(keep);
        te = te.select_features(keep);
      }
    }
    cell.train.push_back(to_view(std::move(tr)));
    cell.test.push_back(to_view(std::move(te)));
  }
  if (opt.preprocess.smote_enabled) {
    std::vector<Matrix> mats;
    for (auto& v : cell.train) mats.push_back(std::move(v.x));
    cell.y_train = smote_balance_views(mats, cell.y_train, ds.n_classes(), opt.preprocess, derive_seed(cell_seed, {0}));
    for (std::size_t m = 0; m < mats.size(); ++m) cell.train[m].x = std::move(mats[m]);
  }
  return cell;
}

std::vector<std::string> method_modalities(const IntegratorSpec& spec, const MultiModalDataset& ds) {
  if (!spec.modalities.empty()) return spec.modalities;
  std::vector<std::string> all;
  for (const auto& t : ds.modalities) all.push_back(t.name);
  return all;
}

std::string feature_id(const FeatureKey& k) { return k.first + "/" + k.second; }

CellResult run_cell(const MultiModalDataset& ds, const FoldPlan& plan, int r, int f, const std::vector<IntegratorSpec>& methods,
                    const BenchmarkOptions& opt) {
  const std::uint64_t cell_seed = derive_seed(opt.seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f)});
  const auto& test = plan.test_indices(r, f);
  const auto train = plan.train_indices(r, f);
  auto views = prepare_cell(ds, train, test, opt, cell_seed);

  std::vector<int> y_test;
  y_test.reserve(test.size());
  for (auto i : test) y_test.push_back(ds.labels[i]);

  CellResult out;
  out.warnings = std::move(views.warnings);
  TrainingData data;
  data.views = std::move(views.train);
  data.labels = std::move(views.y_train);
  data.n_classes = ds.n_classes();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    MethodCell mc;
    try {
      const auto model = fit_integrator(methods[k], data, derive_seed(cell_seed, {2, k}));
      const auto pred = model->predict(views.test);
      mc.metrics = compute_metrics(pred, y_test, ds.n_classes());
      mc.scores = model->feature_scores();
      if (model->selection_level() == SelectionLevel::Modality) {
        mc.selected.insert(model->modalities().begin(), model->modalities().end());
      } else {
        for (const auto& [key, v] : mc.scores)
          if (v > 0.0) mc.selected.insert(feature_id(key));
      }
      mc.warnings = model->warnings();
      mc.ok = true;
    } catch (const std::exception& e) {
      mc.error = e.what();
    }
    out.methods.push_back(std::move(mc));
  }
  return out;
}

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

double class_value(const ClassMetrics& c, const std::string& name) {
  if (name == "accuracy") return c.accuracy;
  if (name == "sensitivity") return c.sensitivity;
  if (name == "specificity") return c.specificity;
  if (name == "precision") return c.precision;
  if (name == "recall") return c.recall;
  if (name == "f1") return c.f1;
  return c.auc;
}

double fold_value(const MetricSet& m, const std::string& name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "overall_accuracy") return m.overall_accuracy;
  if (name == "sensitivity") return m.sensitivity;
  if (name == "specificity") return m.specificity;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "f1") return m.f1;
  return m.auc;
}

}  // namespace

const std::vector<std::string>& aggregate_metric_names() {
  static const std::vector<std::string> names{"accuracy", "overall_accuracy", "sensitivity", "specificity",
                                              "precision", "recall", "f1", "auc"};
  return names;
}

const MethodReport& EvaluationReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return m;
  throw std::out_of_range("no method '" + name + "' in report");
}

std::vector<double> EvaluationReport::fold_series(const std::string& name, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& s : folds_summary) {
    if (s.method != name) continue;
    if (metric == "f1") out.push_back(s.f1);
    else if (metric == "auc") out.push_back(s.auc);
    else if (metric == "accuracy") out.push_back(s.accuracy);
    else if (metric == "overall_accuracy") out.push_back(s.overall_accuracy);
    else if (metric == "unknown_rate") out.push_back(s.unknown_rate);
    else throw std::invalid_argument("unknown fold metric '" + metric + "'");
  }
  return out;
}

const PairwiseTest* EvaluationReport::test(const std::string& metric, const std::string& a, const std::string& b) const {
  const auto it = significance.find(metric);
  if (it == significance.end()) return nullptr;
  for (const auto& t : it->second)
    if ((t.a == a && t.b == b) || (t.a == b && t.b == a)) return &t;
  return nullptr;
}

EvaluationReport run_cv_benchmark(const MultiModalDataset& dataset, const FoldPlan& plan,
                                  const std::vector<IntegratorSpec>& methods, const BenchmarkOptions& options) {
  dataset.validate();
  options.preprocess.validate();
  if (plan.n_samples != dataset.n_samples()) throw std::invalid_argument("fold plan was built for a different dataset");
  if (methods.empty()) throw std::invalid_argument("no methods to evaluate");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    m.validate();
    if (!labels.insert(m.label()).second) throw std::invalid_argument("duplicate method name '" + m.label() + "'");
    for (const auto& name : m.modalities) dataset.modality_index(name);
  }

  const std::size_t cells = plan.n_cells();
  std::vector<CellResult> results(cells);
  parallel_for(cells, options.threads, [&](std::size_t c) {
    const int r = static_cast<int>(c) / plan.folds_per_repeat, f = static_cast<int>(c) % plan.folds_per_repeat;
    results[c] = run_cell(dataset, plan, r, f, methods, options);
  });

  EvaluationReport rep;
  rep.seed = options.seed;
  rep.repeats = plan.repeats;
  rep.folds = plan.folds_per_repeat;
  rep.mean_train_size = plan.mean_train_size();
  rep.mean_test_size = plan.mean_test_size();
  rep.class_names = dataset.class_names;
  for (const auto& t : dataset.modalities) rep.modality_sizes.push_back({t.name, t.n_features()});

  const std::size_t K = dataset.n_classes();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& spec = methods[k];
    MethodReport mr;
    mr.name = spec.label();
    mr.kind = spec.kind;
    mr.modalities = method_modalities(spec, dataset);
    mr.selection_level = spec.kind == IntegratorKind::MetaLearner ? SelectionLevel::Modality : SelectionLevel::Feature;

    std::vector<FoldScores> fold_scores;
    std::vector<std::set<std::string>> subsets;
    std::map<std::string, std::vector<double>> per_class_values, per_fold_values;
    std::vector<double> unknown;
    std::set<std::string> warnings;
    for (std::size_t c = 0; c < cells; ++c) {
      const int r = static_cast<int>(c) / plan.folds_per_repeat, f = static_cast<int>(c) % plan.folds_per_repeat;
      const auto& mc = results[c].methods[k];
      for (const auto& w : results[c].warnings) warnings.insert(w);
      if (!mc.ok) {
        ++mr.failed_folds;
        rep.failures.push_back({mr.name, r, f, mc.error});
        continue;
      }
      ++mr.completed_folds;
      for (const auto& w : mc.warnings) warnings.insert(w);
      for (std::size_t cls = 0; cls < K; ++cls) {
        const auto& cm = mc.metrics.per_class[cls];
        rep.records.push_back({mr.name, r, f, static_cast<int>(cls), cm});
        for (const auto& name : aggregate_metric_names()) {
          if (name == "overall_accuracy" || (name == "auc" && !cm.auc_defined)) continue;
          per_class_values[name].push_back(class_value(cm, name));
        }
      }
      for (const auto& name : aggregate_metric_names()) per_fold_values[name].push_back(fold_value(mc.metrics, name));
      unknown.push_back(mc.metrics.unknown_rate());
      rep.folds_summary.push_back({mr.name, r, f, mc.metrics.f1, mc.metrics.auc, mc.metrics.accuracy,
                                   mc.metrics.overall_accuracy, mc.metrics.unknown_rate()});
      fold_scores.push_back(mc.scores);
      subsets.push_back(mc.selected);
    }
    for (const auto& name : aggregate_metric_names()) {
      MeanSd v = mean_sd(per_fold_values[name]);
      if (name != "overall_accuracy") v.mean = mean_sd(per_class_values[name]).mean;
      mr.aggregates[name] = v;
    }
    mr.unknown_rate = mean_sd(unknown).mean;
    mr.warnings.assign(warnings.begin(), warnings.end());
    if (!fold_scores.empty()) mr.signature = select_signature(fold_scores, fold_scores.size(), options.thresholds);
    if (subsets.size() >= 2) {
      std::size_t universe = 0;
      if (mr.selection_level == SelectionLevel::Modality) {
        universe = mr.modalities.size();
        mr.stability_note =
            "modality-level: the meta-learner scores every meta-feature of every modality, so this is 1 by construction";
      } else {
        for (const auto& name : mr.modalities) universe += dataset.modalities[dataset.modality_index(name)].n_features();
      }
      mr.stability = stability_cwrel(subsets, universe);
    }
    rep.methods.push_back(std::move(mr));
  }

  for (const std::string metric : {"f1", "auc"}) {
    auto& tests = rep.significance[metric];
    for (std::size_t i = 0; i < rep.methods.size(); ++i)
      for (std::size_t j = i + 1; j < rep.methods.size(); ++j) {
        const auto& a = rep.methods[i];
        const auto& b = rep.methods[j];
        if (a.failed_folds || b.failed_folds || a.completed_folds < 2) continue;
        const auto sa = rep.fold_series(a.name, metric), sb = rep.fold_series(b.name, metric);
        tests.push_back({a.name, b.name, corrected_ttest(sa, sb, rep.mean_train_size, rep.mean_test_size)});
      }
  }
  return rep;
}

double cv_subset_f1(const MultiModalDataset& dataset, const FoldPlan& plan, const IntegratorSpec& method,
                    const BenchmarkOptions& options, const std::vector<std::string>& subset) {
  IntegratorSpec spec = method;
  spec.modalities = subset;
  const auto rep = run_cv_benchmark(dataset.select_modalities(subset), plan, {spec}, options);
  const auto& m = rep.methods.front();
  if (m.completed_folds == 0) throw std::runtime_error("every fold failed for subset evaluation: " + rep.failures.front().message);
  return m.aggregates.at("f1").mean;
}

IncrementalResult incremental_cv_select(const MultiModalDataset& dataset, const FoldPlan& plan, const IntegratorSpec& ensemble,
                                        const BenchmarkOptions& options, double margin) {
  if (dataset.n_modalities() < 2) throw std::invalid_argument("incremental selection needs at least 2 modalities");
  IntegratorSpec spec = ensemble;
  spec.kind = IntegratorKind::EnsSoft;
  std::vector<std::string> names;
  for (const auto& t : dataset.modalities) names.push_back(t.name);
  return incremental_select(
      names, [&](const std::vector<std::string>& subset) { return cv_subset_f1(dataset, plan, spec, options, subset); }, margin);
}

// ---------------------------------------------------------------- output

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json class_json(const ClassMetrics& c) {
  json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["tn"] = c.tn;
  j["fn"] = c.fn;
  j["accuracy"] = num(c.accuracy);
  j["sensitivity"] = num(c.sensitivity);
  j["specificity"] = num(c.specificity);
  j["precision"] = num(c.precision);
  j["recall"] = num(c.recall);
  j["f1"] = num(c.f1);
  j["auc"] = c.auc_defined ? num(c.auc) : json(nullptr);
  j["zero_division"] = c.zero_division;
  return j;
}

json stability_json(const StabilityReport& s) {
  json j;
  j["cw_rel"] = num(s.cw_rel);
  j["n_subsets"] = s.n_subsets;
  j["union_size"] = s.union_size;
  j["universe_size"] = s.universe_size;
  return j;
}

}  // namespace

json report_to_json(const EvaluationReport& rep, const json& config) {
  json j;
  j["report_version"] = 1;
  j["seed"] = rep.seed;
  j["config"] = config;
  json plan;
  plan["repeats"] = rep.repeats;
  plan["folds"] = rep.folds;
  plan["mean_train_size"] = rep.mean_train_size;
  plan["mean_test_size"] = rep.mean_test_size;
  j["fold_plan"] = plan;
  json data;
  data["class_names"] = rep.class_names;
  auto mods = json::array();
  for (const auto& [name, p] : rep.modality_sizes) mods.push_back({{"name", name}, {"n_features", p}});
  data["modalities"] = mods;
  j["dataset"] = data;

  auto methods = json::array();
  for (const auto& m : rep.methods) {
    json e;
    e["name"] = m.name;
    e["kind"] = to_string(m.kind);
    e["modalities"] = m.modalities;
    e["completed_folds"] = m.completed_folds;
    e["failed_folds"] = m.failed_folds;
    json agg;
    for (const auto& name : aggregate_metric_names()) {
      const auto& v = m.aggregates.at(name);
      agg[name] = {{"mean", num(v.mean)}, {"sd", num(v.sd)}};
    }
    e["aggregates"] = agg;
    e["unknown_rate"] = num(m.unknown_rate);
    json stab;
    stab["level"] = m.selection_level == SelectionLevel::Modality ? "modality" : "feature";
    if (m.stability) stab.update(stability_json(*m.stability));
    else stab["cw_rel"] = nullptr;
    if (!m.stability_note.empty()) stab["note"] = m.stability_note;
    e["stability"] = stab;
    auto sig = json::array();
    for (const auto& s : m.signature)
      sig.push_back({{"modality", s.modality}, {"feature", s.feature}, {"score", num(s.score)}, {"frequency", num(s.frequency)}});
    e["signature"] = sig;
    e["warnings"] = m.warnings;
    methods.push_back(std::move(e));
  }
  j["methods"] = methods;

  auto sig = json::object();
  for (const auto& [metric, tests] : rep.significance) {
    auto arr = json::array();
    for (const auto& t : tests)
      arr.push_back({{"a", t.a},
                     {"b", t.b},
                     {"t", num(t.result.t)},
                     {"p", num(t.result.p)},
                     {"mean_difference", num(t.result.mean_difference)},
                     {"degenerate", t.result.degenerate}});
    sig[metric] = arr;
  }
  j["significance"] = sig;

  auto folds = json::array();
  for (const auto& s : rep.folds_summary)
    folds.push_back({{"method", s.method},
                     {"repeat", s.repeat},
                     {"fold", s.fold},
                     {"f1", num(s.f1)},
                     {"auc", num(s.auc)},
                     {"accuracy", num(s.accuracy)},
                     {"overall_accuracy", num(s.overall_accuracy)},
                     {"unknown_rate", num(s.unknown_rate)}});
  j["folds"] = folds;

  auto records = json::array();
  for (const auto& r : rep.records) {
    json e;
    e["method"] = r.method;
    e["repeat"] = r.repeat;
    e["fold"] = r.fold;
    e["class"] = rep.class_names.at(r.cls);
    e.update(class_json(r.metrics));
    records.push_back(std::move(e));
  }
  j["records"] = records;

  auto failures = json::array();
  for (const auto& f : rep.failures)
    failures.push_back({{"method", f.method}, {"repeat", f.repeat}, {"fold", f.fold}, {"message", f.message}});
  j["failures"] = failures;
  return j;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_records_csv(const EvaluationReport& rep, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,repeat,fold,class,tp,fp,tn,fn,accuracy,sensitivity,specificity,precision,recall,f1,auc,zero_division\n";
  for (const auto& r : rep.records) {
    const auto& c = r.metrics;
    out << csv::escape(r.method) << ',' << r.repeat << ',' << r.fold << ',' << csv::escape(rep.class_names.at(r.cls)) << ','
        << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ',' << csv::format_double(c.accuracy) << ','
        << csv::format_double(c.sensitivity) << ',' << csv::format_double(c.specificity) << ','
        << csv::format_double(c.precision) << ',' << csv::format_double(c.recall) << ',' << csv::format_double(c.f1) << ','
        << (c.auc_defined ? csv::format_double(c.auc) : std::string("NA")) << ',' << (c.zero_division ? 1 : 0) << '\n';
  }
}

void write_signature_csv(const std::vector<SignatureEntry>& signature, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "modality,feature,score,frequency\n";
  for (const auto& e : signature)
    out << csv::escape(e.modality) << ',' << csv::escape(e.feature) << ',' << csv::format_double(e.score) << ','
        << csv::format_double(e.frequency) << '\n';
}

void write_trace_csv(const IncrementalResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "step,removed_modality,f1_after_removal\n";
  for (std::size_t s = 0; s < result.trace.size(); ++s)
    out << s << ',' << csv::escape(result.trace[s].removed) << ',' << csv::format_double(result.trace[s].f1_after) << '\n';
}

std::string file_stem(const std::string& label) {
  std::string out;
  for (char ch : label) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
    out += ok ? ch : '_';
  }
  return out.empty() ? "method" : out;
}

}  // namespace latefuse
