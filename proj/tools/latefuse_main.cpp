// latefuse command-line entry point.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latefuse/cli.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> parallelism;
  std::optional<int> repeats;
  std::optional<int> folds;
  bool print_config = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "JSON config file");
    cmd->add_option("--set", set, "Override a config key, e.g. --set folds.repeats=2 (repeatable)");
    cmd->add_option("--seed", seed, "Config key seed");
    cmd->add_option("-o,--output-dir", output_dir, "Config key output_dir");
    cmd->add_option("-j,--parallelism", parallelism, "Config key parallelism");
    cmd->add_option("--repeats", repeats, "Config key folds.repeats");
    cmd->add_option("--folds", folds, "Config key folds.folds");
    cmd->add_flag("--print-config", print_config, "Print the resolved config and exit");
  }

  std::vector<std::string> assignments() const {
    std::vector<std::string> out = set;
    if (seed) out.push_back("seed=" + std::to_string(*seed));
    if (output_dir) out.push_back("output_dir=" + nlohmann::json(*output_dir).dump());
    if (parallelism) out.push_back("parallelism=" + std::to_string(*parallelism));
    if (repeats) out.push_back("folds.repeats=" + std::to_string(*repeats));
    if (folds) out.push_back("folds.folds=" + std::to_string(*folds));
    return out;
  }
};

}  // namespace

int main(int argc, char** argv) {
  using namespace latefuse;
  CLI::App app{"Late-integration ensembles for multi-modal, multi-class data"};
  app.require_subcommand(1);

  CommonFlags gen_flags, run_flags, inc_flags;
  auto* gen = app.add_subcommand("generate", "Write a synthetic cohort (data.synth) to output_dir");
  gen_flags.attach(gen);
  auto* run = app.add_subcommand("run", "Repeated cross-validation benchmark of the configured methods");
  run_flags.attach(run);
  auto* inc = app.add_subcommand("incremental", "Backward modality elimination plus all-vs-subset comparison");
  inc_flags.attach(inc);
  std::string report_path;
  auto* rep = app.add_subcommand("report", "Pretty-print an existing report.json");
  rep->add_option("report", report_path, "Path to report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kInputError;
  }

  auto with_config = [&](const CommonFlags& flags, int (*cmd)(const ExperimentConfig&, std::ostream&)) {
    return cli::guarded(
        [&] {
          const auto cfg = cli::resolve_config(flags.config, flags.assignments());
          if (flags.print_config) {
            std::cout << config_to_json(cfg).dump(2) << '\n';
            return int{cli::kOk};
          }
          return cmd(cfg, std::cout);
        },
        std::cerr);
  };

  if (*gen) return with_config(gen_flags, &cli::cmd_generate);
  if (*run) return with_config(run_flags, &cli::cmd_run);
  if (*inc) return with_config(inc_flags, &cli::cmd_incremental);
  return cli::guarded([&] { return cli::cmd_report(report_path, std::cout); }, std::cerr);
}
