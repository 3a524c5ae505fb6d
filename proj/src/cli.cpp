#include "latefuse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <set>

#include "latefuse/csv.hpp"
#include "latefuse/folds.hpp"

namespace latefuse::cli {

using json = nlohmann::ordered_json;

namespace {

std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fixed(const json& v, int digits = 3) { return v.is_number() ? fixed(v.get<double>(), digits) : "NA"; }

FoldPlan plan_for(const ExperimentConfig& cfg, const MultiModalDataset& ds) {
  try {
    return make_fold_plan(ds.labels, cfg.repeats, cfg.folds, cfg.fold_seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("fold plan: ") + e.what());
  }
}

void check_stems(const std::vector<IntegratorSpec>& methods) {
  std::set<std::string> stems;
  for (const auto& m : methods)
    if (!stems.insert(file_stem(m.label())).second)
      throw ConfigError("method names map to the same file name '" + file_stem(m.label()) + "'");
}

void print_summary(const EvaluationReport& rep, std::ostream& out) {
  for (const auto& m : rep.methods) {
    out << std::left << std::setw(12) << m.name << " f1 " << fixed(m.aggregates.at("f1").mean) << " +- "
        << fixed(m.aggregates.at("f1").sd) << "  auc " << fixed(m.aggregates.at("auc").mean) << "  folds "
        << m.completed_folds << "/" << (m.completed_folds + m.failed_folds) << '\n';
  }
}

// Methods restricted to `subset`; methods that keep no modality are dropped.
std::vector<IntegratorSpec> restrict_methods(const std::vector<IntegratorSpec>& methods,
                                             const std::vector<std::string>& subset) {
  std::vector<IntegratorSpec> out;
  for (auto m : methods) {
    if (!m.modalities.empty()) {
      std::vector<std::string> kept;
      for (const auto& name : m.modalities)
        if (std::find(subset.begin(), subset.end(), name) != subset.end()) kept.push_back(name);
      if (kept.empty()) continue;
      m.modalities = kept;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

ExperimentConfig resolve_config(const std::string& config_path, const std::vector<std::string>& assignments) {
  json doc = json::object();
  std::filesystem::path base;
  if (!config_path.empty()) {
    doc = read_json_file(config_path);
    base = std::filesystem::absolute(config_path).parent_path();
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (const char* v = std::getenv(kEnvOutputDir); v && *v) doc["output_dir"] = std::string(v);
  if (const char* v = std::getenv(kEnvParallelism); v && *v) apply_override(doc, std::string("parallelism=") + v);
  for (const auto& a : assignments) apply_override(doc, a);
  return parse_config(doc, base);
}

int cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.synth) throw ConfigError("generate needs data.synth");
  const auto dir = output_dir(cfg);
  const auto result = generate(*cfg.synth);
  write_synth(*cfg.synth, result, dir);
  const auto& ds = result.dataset;
  for (std::size_t m = 0; m < ds.n_modalities(); ++m) {
    const auto& t = ds.modalities[m];
    std::size_t informative = 0;
    for (const auto& [mod, feat] : result.manifest.informative) informative += mod == t.name;
    out << t.name << ": " << ds.n_samples() << " samples x " << t.n_features() << " features, " << informative
        << " informative, separability rank " << result.manifest.separability_rank[m] << " -> "
        << (dir / (t.name + ".csv")).string() << '\n';
  }
  return kOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out) {
  check_stems(cfg.methods);
  const auto ds = load_experiment_data(cfg);
  const auto plan = plan_for(cfg, ds);
  const auto dir = output_dir(cfg);
  const auto rep = run_cv_benchmark(ds, plan, cfg.methods, cfg.benchmark_options());
  write_text(dir / "report.json", report_to_json(rep, config_to_json(cfg)).dump(2) + "\n");
  write_records_csv(rep, dir / "records.csv");
  for (const auto& m : rep.methods) write_signature_csv(m.signature, dir / ("signature_" + file_stem(m.name) + ".csv"));
  print_summary(rep, out);
  for (const auto& f : rep.failures)
    out << "failed: " << f.method << " repeat " << f.repeat << " fold " << f.fold << ": " << f.message << '\n';
  out << "wrote " << (dir / "report.json").string() << '\n';
  return rep.failures.empty() ? kOk : kPartialFailure;
}

int cmd_incremental(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ds = load_experiment_data(cfg);
  if (ds.n_modalities() < 2) throw ConfigError("incremental selection needs at least 2 modalities");
  const auto plan = plan_for(cfg, ds);
  const auto dir = output_dir(cfg);
  const auto opt = cfg.benchmark_options();

  const auto inc = incremental_cv_select(ds, plan, cfg.incremental_ensemble, opt, cfg.incremental_margin);
  write_trace_csv(inc, dir / "trace.csv");
  std::string subset_text;
  for (const auto& m : inc.best_subset) subset_text += m + "\n";
  write_text(dir / "best_subset.txt", subset_text);
  for (std::size_t s = 0; s < inc.trace.size(); ++s)
    out << "step " << s << " removed " << inc.trace[s].removed << " f1 " << fixed(inc.trace[s].f1_after) << '\n';

  const auto all = run_cv_benchmark(ds, plan, cfg.methods, opt);
  const auto sub_ds = ds.select_modalities(inc.best_subset);
  const auto sub = run_cv_benchmark(sub_ds, plan, restrict_methods(cfg.methods, inc.best_subset), opt);

  std::string csv_text = "method,auc_all,f1_all,auc_subset,f1_subset\n";
  auto comparison = json::array();
  for (const auto& m : all.methods) {
    const MethodReport* s = nullptr;
    for (const auto& x : sub.methods)
      if (x.name == m.name) s = &x;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double auc_all = m.aggregates.at("auc").mean, f1_all = m.aggregates.at("f1").mean;
    const double auc_sub = s ? s->aggregates.at("auc").mean : nan, f1_sub = s ? s->aggregates.at("f1").mean : nan;
    csv_text += csv::escape(m.name) + "," + csv::format_double(auc_all) + "," + csv::format_double(f1_all) + "," +
                csv::format_double(auc_sub) + "," + csv::format_double(f1_sub) + "\n";
    auto js = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    comparison.push_back(
        {{"method", m.name}, {"auc_all", js(auc_all)}, {"f1_all", js(f1_all)}, {"auc_subset", js(auc_sub)}, {"f1_subset", js(f1_sub)}});
    out << std::left << std::setw(12) << m.name << " all: auc " << fixed(auc_all) << " f1 " << fixed(f1_all)
        << "  subset: auc " << fixed(auc_sub) << " f1 " << fixed(f1_sub) << '\n';
  }
  write_text(dir / "comparison.csv", csv_text);

  json doc;
  doc["report_version"] = 1;
  doc["config"] = config_to_json(cfg);
  auto trace = json::array();
  for (std::size_t s = 0; s < inc.trace.size(); ++s)
    trace.push_back({{"step", s}, {"removed_modality", inc.trace[s].removed}, {"f1_after_removal", inc.trace[s].f1_after}});
  doc["trace"] = trace;
  doc["best_subset"] = inc.best_subset;
  doc["comparison"] = comparison;
  auto failures = json::array();
  for (const auto* rep : {&all, &sub})
    for (const auto& f : rep->failures)
      failures.push_back({{"run", rep == &all ? "all" : "subset"},
                          {"method", f.method},
                          {"repeat", f.repeat},
                          {"fold", f.fold},
                          {"message", f.message}});
  doc["failures"] = failures;
  write_text(dir / "incremental.json", doc.dump(2) + "\n");
  out << "best subset:";
  for (const auto& m : inc.best_subset) out << ' ' << m;
  out << '\n';
  return failures.empty() ? kOk : kPartialFailure;
}

int cmd_report(const std::filesystem::path& path, std::ostream& out) {
  const json j = read_json_file(path);
  if (!j.is_object() || !j.contains("report_version") || j["report_version"] != 1)
    throw ConfigError(path.string() + " is not a version 1 report");
  try {
    const auto& plan = j.at("fold_plan");
    out << "seed " << j.at("seed").dump() << ", " << plan.at("repeats").dump() << " x " << plan.at("folds").dump()
        << " folds, train " << fixed(plan.at("mean_train_size"), 1) << " / test " << fixed(plan.at("mean_test_size"), 1)
        << "\nclasses:";
    for (const auto& c : j.at("dataset").at("class_names")) out << ' ' << c.get<std::string>();
    out << "\nmodalities:";
    for (const auto& m : j.at("dataset").at("modalities"))
      out << ' ' << m.at("name").get<std::string>() << " (" << m.at("n_features").dump() << ")";
    out << "\n\n";

    out << std::left << std::setw(12) << "method" << std::right;
    for (const char* h : {"f1", "sd", "auc", "acc", "overall", "unknown", "cw_rel", "sig", "folds"}) out << std::setw(9) << h;
    out << '\n';
    for (const auto& m : j.at("methods")) {
      const auto& agg = m.at("aggregates");
      out << std::left << std::setw(12) << m.at("name").get<std::string>() << std::right << std::setw(9)
          << fixed(agg.at("f1").at("mean")) << std::setw(9) << fixed(agg.at("f1").at("sd")) << std::setw(9)
          << fixed(agg.at("auc").at("mean")) << std::setw(9) << fixed(agg.at("accuracy").at("mean")) << std::setw(9)
          << fixed(agg.at("overall_accuracy").at("mean")) << std::setw(9) << fixed(m.at("unknown_rate"))
          << std::setw(9) << fixed(m.at("stability").at("cw_rel")) << std::setw(9) << m.at("signature").size()
          << std::setw(9)
          << (std::to_string(m.at("completed_folds").get<long>()) + "/" +
              std::to_string(m.at("completed_folds").get<long>() + m.at("failed_folds").get<long>()))
          << '\n';
      if (m.at("stability").contains("note")) out << "  note: " << m.at("stability").at("note").get<std::string>() << '\n';
      for (const auto& w : m.at("warnings")) out << "  warning: " << w.get<std::string>() << '\n';
    }

    for (const auto& [metric, tests] : j.at("significance").items()) {
      out << "\ncorrected t-tests on " << metric << " (p < 0.05 marked *)\n";
      for (const auto& t : tests)
        out << "  " << t.at("a").get<std::string>() << " vs " << t.at("b").get<std::string>() << ": diff "
            << fixed(t.at("mean_difference")) << " p " << fixed(t.at("p"), 4)
            << (t.at("p").is_number() && t.at("p").get<double>() < 0.05 ? " *" : "") << '\n';
    }
    const auto& failures = j.at("failures");
    if (!failures.empty()) {
      out << "\nfailures:\n";
      for (const auto& f : failures)
        out << "  " << f.at("method").get<std::string>() << " repeat " << f.at("repeat").dump() << " fold "
            << f.at("fold").dump() << ": " << f.at("message").get<std::string>() << '\n';
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed report: " + e.what());
  }
  return kOk;
}

int guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace latefuse::cli
