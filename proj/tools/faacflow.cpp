// faacflow: derive -> integrate -> evaluate -> report over flow datasets.
//
// Exit codes: 0 success, 2 configuration, 3 data, 4 evaluation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "faacflow/commands.hpp"
#include "faacflow/errors.hpp"

namespace fs = std::filesystem;
using namespace faacflow;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("faacflow");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("FAACFLOW_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

RunConfig load(const GlobalFlags& flags) {
  if (flags.config.empty()) throw ConfigError("--config is required");
  RunConfig run = load_run_config(flags.config);
  if (flags.seed) {
    run.seed = *flags.seed;
    run.seed_set = true;
  }
  if (flags.out) run.output_dir = fs::absolute(*flags.out);
  if (flags.threads) {
    if (*flags.threads < 1) throw ConfigError("--threads must be positive");
    run.threads = *flags.threads;
  }
  return run;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Feature-as-a-Counter derivation, integration and evaluation of NIDS datasets"};
  app.require_subcommand(1, 0);  // stages may be chained; they run in pipeline order
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Run configuration (JSON)");
  app.add_option("--seed", flags.seed, "Root seed; overrides the config");
  app.add_option("--out", flags.out, "Output directory; overrides the config");
  app.add_option("--threads", flags.threads, "Worker threads");

  auto* synth = app.add_subcommand("synth", "Generate synthetic raw sources from their profiles");
  auto* derive = app.add_subcommand("derive", "Apply FaaC to every raw source");
  auto* integrate = app.add_subcommand("integrate", "Concatenate derived sources over the shared classes");
  auto* evaluate = app.add_subcommand("evaluate", "Run the evaluation settings and write reports");
  std::vector<std::string> settings;
  evaluate->add_option("--setting", settings, "single and/or cross; overrides the config")
      ->check(CLI::IsMember({"single", "cross"}));
  evaluate->add_flag("--tune-once", "Tune hyperparameters once per dataset instead of per fold");
  auto* report = app.add_subcommand("report", "Rebuild summary and significance tables from eval CSVs");
  std::vector<std::string> eval_files;
  report->add_option("files", eval_files, "Eval CSV files (default: those under the output directory)");
  auto* pipeline = app.add_subcommand("pipeline", "synth, derive, integrate, evaluate and report in one run");
  for (auto* sub : {synth, derive, integrate, evaluate, report, pipeline}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*report && flags.config.empty()) {
      if (eval_files.empty()) throw ConfigError("report: give eval CSV files or --config");
      const fs::path out = flags.out ? fs::path(*flags.out) : fs::path(eval_files.front()).parent_path() / "report";
      std::vector<fs::path> paths(eval_files.begin(), eval_files.end());
      commands::report(paths, out);
      return 0;
    }
    RunConfig run = load(flags);
    if (*synth) commands::synth(run);
    if (*derive) commands::derive(run);
    if (*integrate) commands::integrate(run);
    if (*evaluate) {
      if (!settings.empty()) run.settings = settings;
      if (evaluate->count("--tune-once") > 0) run.tune_once = true;
      commands::evaluate(run);
    }
    if (*report) {
      const commands::Layout layout{run.output_dir};
      std::vector<fs::path> paths(eval_files.begin(), eval_files.end());
      if (paths.empty())
        for (const char* s : {"single", "cross"})
          if (fs::exists(layout.eval(s))) paths.push_back(layout.eval(s));
      commands::report(paths, layout.report_dir());
    }
    if (*pipeline) commands::pipeline(run);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return commands::exit_code_for(e);
  }
  return 0;
}
