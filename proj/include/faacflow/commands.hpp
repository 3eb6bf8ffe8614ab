#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "faacflow/config.hpp"

namespace faacflow::commands {

/// Output layout under RunConfig::output_dir.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path raw(const std::string& id) const { return root / "raw" / (id + ".csv"); }
  std::filesystem::path derived(const std::string& id) const { return root / "derived" / (id + ".csv"); }
  std::filesystem::path distribution(const std::string& id) const {
    return root / "derived" / (id + ".distribution.csv");
  }
  std::filesystem::path manifest(const std::string& id) const { return root / "derived" / (id + ".manifest.json"); }
  std::filesystem::path eval(const std::string& setting) const { return root / "eval" / ("eval_" + setting + ".csv"); }
  std::filesystem::path model(const std::string& train, const std::string& kind) const {
    return root / "models" / (train + "." + kind + ".json");
  }
  std::filesystem::path report_dir() const { return root / "report"; }
};

/// Generates the raw CSV of every source that has a profile. Each source
/// draws from derive_seed(root seed, "synth/<id>").
std::vector<std::filesystem::path> synth(const RunConfig& run);

/// Streams each raw source through FaaC; writes the derived CSV and its
/// class distribution. Rows rejected by the parser are logged with file
/// and line and skipped.
std::vector<std::filesystem::path> derive(const RunConfig& run);

/// Concatenates the derived sources over the shared classes and writes a
/// manifest with the SHA-256 of every input and of the output.
std::filesystem::path integrate(const RunConfig& run);

/// Runs the configured settings; writes eval CSVs, cross-dataset model
/// artifacts and the report files.
std::vector<std::filesystem::path> evaluate(const RunConfig& run);

/// Rebuilds summaries and significance tables from eval CSVs. Throws
/// EvaluationError when the inputs hold no fold results.
std::vector<std::filesystem::path> report(const std::vector<std::filesystem::path>& eval_csvs,
                                          const std::filesystem::path& out_dir);

/// synth (when profiles exist), derive, integrate, evaluate, report.
void pipeline(const RunConfig& run);

/// Exit code for an exception: 2 config, 3 data, 4 evaluation, 1 other.
int exit_code_for(const std::exception& e);

}  // namespace faacflow::commands
