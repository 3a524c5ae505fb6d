#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "latefuse/cli.hpp"
#include "support.hpp"

using namespace latefuse;
using json = nlohmann::ordered_json;

namespace {

json small_config(const std::string& out) {
  json j = json::parse(R"({
    "seed": 5,
    "data": {"synth": {"preset": "complementary", "n_samples": 60}},
    "folds": {"repeats": 2, "folds": 3},
    "base_learner": {"n_rounds": 10, "max_depth": 2},
    "methods": ["CONCAT", "ENS-S", {"kind": "PBMV", "boosting_rounds": 4}]
  })");
  j["output_dir"] = out;
  return j;
}

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(LATEFUSE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("defaults are filled in and the resolved config round-trips") {
  const auto cfg = parse_config(json::object());
  CHECK(cfg.repeats == 5);
  CHECK(cfg.folds == 5);
  CHECK(cfg.methods.size() == 9);
  CHECK(cfg.incremental_ensemble.kind == IntegratorKind::EnsSoft);
  const auto j = config_to_json(cfg);
  CHECK(config_to_json(parse_config(j)) == j);

  const auto c2 = parse_config(small_config("x"));
  CHECK(c2.synth->modalities.size() == 3);
  CHECK(c2.synth->seed == 5);
  CHECK(c2.fold_seed == 5);
  CHECK(c2.methods[2].base.n_rounds == 10);
  CHECK(c2.methods[2].boosting_rounds == 4);
  const auto j2 = config_to_json(c2);
  CHECK(j2["data"]["synth"]["n_samples"] == 60);
  CHECK_FALSE(j2["data"]["synth"].contains("preset"));
  CHECK(config_to_json(parse_config(j2)) == j2);
}

TEST_CASE("unknown keys and bad values are rejected") {
  auto rejects = [](const std::string& text, const std::string& fragment) {
    try {
      parse_config(json::parse(text));
      FAIL("accepted " << text);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  rejects(R"({"sed": 1})", "'sed'");
  rejects(R"({"preprocess": {"knn": 3}})", "'preprocess.knn'");
  rejects(R"({"methods": [{"kind": "ENS-S", "rounds": 3}]})", "'methods[0].rounds'");
  rejects(R"({"methods": [{"kind": "ENS-S", "meta": {"trees": 3}}]})", "'methods[0].meta.trees'");
  rejects(R"({"data": {"synth": {"modalities": [{"name": "a", "snrr": 1}]}}})", "snrr");
  rejects(R"({"seed": "one"})", "must be an integer");
  rejects(R"({"seed": -1})", ">= 0");
  rejects(R"({"parallelism": 0})", "parallelism");
  rejects(R"({"folds": {"folds": 1}})", "folds.folds");
  rejects(R"({"methods": ["ENS-S", "ENS-S"]})", "ENS-S");
  rejects(R"({"methods": ["XX"]})", "XX");
  rejects(R"({"methods": []})", "methods");
  rejects(R"({"data": {"labels": "l.csv"}})", "data");
  rejects(R"({"data": {"synth": {"preset": "complementary"}, "labels": "l.csv", "modalities": [{"name": "a", "path": "a"}]}})", "not both");
  rejects(R"({"preprocess": {"normalization": {"a": "zscore"}}})", "normalization.a");
  rejects(R"({"boruta": {"alpha": 2}})", "alpha");
  rejects(R"([1, 2])", "object");
}

TEST_CASE("overrides replace config keys one to one") {
  json doc = small_config("out");
  apply_override(doc, "folds.repeats=3");
  apply_override(doc, "output_dir=other");
  apply_override(doc, "preprocess.smote=false");
  apply_override(doc, "methods=[\"ML\"]");
  const auto cfg = parse_config(doc);
  CHECK(cfg.repeats == 3);
  CHECK(cfg.folds == 3);
  CHECK(cfg.output_dir == "other");
  CHECK_FALSE(cfg.preprocess.smote_enabled);
  REQUIRE(cfg.methods.size() == 1);
  CHECK(cfg.methods[0].kind == IntegratorKind::MetaLearner);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "seed.x=1"), ConfigError);
}

TEST_CASE("environment overrides sit between the file and the flags") {
  const auto dir = testsupport::temp_dir("cli_env");
  testsupport::write_text(dir / "c.json", small_config("from_file").dump());
  setenv(cli::kEnvOutputDir, "from_env", 1);
  setenv(cli::kEnvParallelism, "2", 1);
  auto cfg = cli::resolve_config((dir / "c.json").string(), {});
  CHECK(cfg.output_dir == "from_env");
  CHECK(cfg.parallelism == 2);
  cfg = cli::resolve_config((dir / "c.json").string(), {"output_dir=from_flag", "parallelism=3"});
  CHECK(cfg.output_dir == "from_flag");
  CHECK(cfg.parallelism == 3);
  unsetenv(cli::kEnvOutputDir);
  unsetenv(cli::kEnvParallelism);
}

TEST_CASE("relative data paths resolve against the config file") {
  const auto dir = testsupport::temp_dir("cli_paths");
  testsupport::write_text(dir / "c.json", R"({"data": {"modalities": [{"name": "a", "path": "d/a.csv"}], "labels": "d/l.csv"}})");
  const auto cfg = cli::resolve_config((dir / "c.json").string(), {});
  CHECK(cfg.modalities[0].path == std::filesystem::absolute(dir) / "d/a.csv");
  CHECK(cfg.labels == std::filesystem::absolute(dir) / "d/l.csv");
}

TEST_CASE("generate writes the cohort and is reproducible") {
  const auto dir = testsupport::temp_dir("cli_generate");
  json cfg = small_config((dir / "a").string());
  std::ostringstream out;
  CHECK(cli::cmd_generate(parse_config(cfg), out) == cli::kOk);
  for (const char* f : {"view1.csv", "view2.csv", "view3.csv", "labels.csv", "manifest.json"})
    CHECK(std::filesystem::exists(dir / "a" / f));
  const std::string summary = out.str();
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  cfg["output_dir"] = (dir / "b").string();
  CHECK(cli::cmd_generate(parse_config(cfg), out) == cli::kOk);
  for (const char* f : {"view1.csv", "labels.csv", "manifest.json"})
    CHECK(testsupport::read_text(dir / "a" / f) == testsupport::read_text(dir / "b" / f));
  CHECK_THROWS_AS(cli::cmd_generate(parse_config(json{{"output_dir", (dir / "c").string()}}), out), ConfigError);
}

TEST_CASE("run writes the report files and echoes the resolved config") {
  const auto dir = testsupport::temp_dir("cli_run");
  const auto cfg = parse_config(small_config((dir / "out").string()));
  std::ostringstream out;
  CHECK(cli::cmd_run(cfg, out) == cli::kOk);
  for (const char* f : {"report.json", "records.csv", "signature_CONCAT.csv", "signature_ENS-S.csv", "signature_PBMV.csv"})
    CHECK(std::filesystem::exists(dir / "out" / f));
  const auto report = json::parse(testsupport::read_text(dir / "out" / "report.json"));
  CHECK(report["config"] == config_to_json(cfg));
  CHECK(report["methods"].size() == 3);
  CHECK(report["seed"] == 5);

  std::ostringstream pretty;
  CHECK(cli::cmd_report(dir / "out" / "report.json", pretty) == cli::kOk);
  CHECK(pretty.str().find("PBMV") != std::string::npos);
  CHECK(pretty.str().find("corrected t-tests on f1") != std::string::npos);
}

TEST_CASE("single-modality methods give the per-modality baseline table") {
  const auto dir = testsupport::temp_dir("cli_baseline");
  json doc = small_config((dir / "out").string());
  doc["methods"] = json::array();
  for (const char* m : {"view1", "view2", "view3"})
    doc["methods"].push_back({{"kind", "CONCAT"}, {"name", m}, {"modalities", {m}}});
  std::ostringstream out;
  CHECK(cli::cmd_run(parse_config(doc), out) == cli::kOk);
  const auto report = json::parse(testsupport::read_text(dir / "out" / "report.json"));
  REQUIRE(report["methods"].size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(report["methods"][i]["modalities"].size() == 1);
}

TEST_CASE("incremental writes trace, subset and comparison") {
  const auto dir = testsupport::temp_dir("cli_incremental");
  json doc = small_config((dir / "out").string());
  doc["data"]["synth"] = {{"preset", "planted_noise"}};
  doc["base_learner"]["n_rounds"] = 30;
  std::ostringstream out;
  CHECK(cli::cmd_incremental(parse_config(doc), out) == cli::kOk);
  const auto trace = testsupport::read_text(dir / "out" / "trace.csv");
  CHECK(trace.rfind("step,removed_modality,f1_after_removal\n0,None,", 0) == 0);
  CHECK(trace.find("\n1,noise,") != std::string::npos);
  const auto subset = testsupport::read_text(dir / "out" / "best_subset.txt");
  CHECK(subset.find("noise") == std::string::npos);
  const auto cmp = testsupport::read_text(dir / "out" / "comparison.csv");
  CHECK(cmp.rfind("method,auc_all,f1_all,auc_subset,f1_subset\n", 0) == 0);
  CHECK(std::count(cmp.begin(), cmp.end(), '\n') == 4);
  const auto j = json::parse(testsupport::read_text(dir / "out" / "incremental.json"));
  CHECK(j["config"] == config_to_json(parse_config(doc)));

  json one = doc;
  one["data"]["synth"] = {{"n_samples", 30}, {"modalities", {{{"name", "only"}}}}};
  CHECK_THROWS_AS(cli::cmd_incremental(parse_config(one), out), ConfigError);
}

TEST_CASE("binary: exit codes and byte-identical reruns") {
  const auto dir = testsupport::temp_dir("cli_binary");
  testsupport::write_text(dir / "c.json", small_config((dir / "out1").string()).dump(2));
  const auto log = dir / "log.txt";

  CHECK(run_cli("run -c " + (dir / "c.json").string(), log) == 0);
  CHECK(run_cli("run -c " + (dir / "c.json").string() + " -o " + (dir / "out2").string(), log) == 0);
  // output_dir is echoed, so compare a third run into the first directory
  const auto first = testsupport::read_text(dir / "out1" / "report.json");
  CHECK(run_cli("run -c " + (dir / "c.json").string(), log) == 0);
  CHECK(testsupport::read_text(dir / "out1" / "report.json") == first);

  CHECK(run_cli("run -c " + (dir / "c.json").string() + " --set bogus=1", log) == 1);
  CHECK(testsupport::read_text(log).find("unknown key 'bogus'") != std::string::npos);
  CHECK(run_cli("run -c " + (dir / "missing.json").string(), log) == 1);
  CHECK(run_cli("run -c " + (dir / "c.json").string() + " --set data.synth.n_classes=1", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("run --help", log) == 0);

  testsupport::write_text(dir / "files.json",
                          R"({"data": {"modalities": [{"name": "a", "path": "nope.csv"}], "labels": "nope_labels.csv"}})");
  CHECK(run_cli("run -c " + (dir / "files.json").string() + " -o " + (dir / "out3").string(), log) == 1);

  CHECK(run_cli("run -c " + (dir / "c.json").string() + " -o " + (dir / "out4").string() +
                    " --set 'methods=[{\"kind\":\"PBMV\",\"modalities\":[\"view1\"]},\"ENS-S\"]'",
                log) == 2);
  const auto partial = json::parse(testsupport::read_text(dir / "out4" / "report.json"));
  CHECK(partial["failures"].size() == 6);

  CHECK(run_cli("generate -c " + (dir / "c.json").string() + " -o " + (dir / "gen").string(), log) == 0);
  CHECK(run_cli("report " + (dir / "out1" / "report.json").string(), log) == 0);
  CHECK(run_cli("report " + (dir / "c.json").string(), log) == 1);
  CHECK(run_cli("run -c " + (dir / "c.json").string() + " --print-config --seed 9", log) == 0);
  CHECK(json::parse(testsupport::read_text(log))["seed"] == 9);
}
