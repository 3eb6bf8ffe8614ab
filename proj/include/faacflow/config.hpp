#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faacflow/faac.hpp"
#include "faacflow/ingest.hpp"

namespace faacflow {

// Structured-text (JSON) readers for every configuration file. All of them
// throw ConfigError with the offending key or file in the message.

SourceSchema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const SourceSchema& schema);
SourceSchema load_schema(const std::filesystem::path& path);

/// Accepts either the profile object itself or a document with a
/// top-level "profile" key.
SyntheticProfile profile_from_json(const nlohmann::json& j);
SyntheticProfile load_profile(const std::filesystem::path& path);

FaacConfig faac_config_from_json(const nlohmann::json& j);
nlohmann::json faac_config_to_json(const FaacConfig& config);
FaacConfig load_faac_config(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);

/// One raw source inside a run.
struct SourceEntry {
  std::string id;
  std::filesystem::path schema;
  /// Raw CSV; when unset, `<output_dir>/raw/<id>.csv` as written by synth.
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> profile;  // required by synth
  std::optional<std::size_t> records;            // overrides profile size
  std::size_t target_rows = 0;                   // M
};

struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path output_dir = "out";
  std::filesystem::path faac_config;
  std::vector<SourceEntry> sources;
  std::uint64_t seed = 0;
  bool seed_set = false;

  std::string integration_name = "UNK21";
  std::vector<std::string> shared_classes{"Background", "DoS", "PortScanning"};

  int folds = 5;
  int repetitions = 20;
  std::vector<std::string> models{"lr", "rf"};
  std::size_t n_init = 5;
  std::size_t n_iter = 20;
  std::size_t candidates = 512;
  bool tune_once = false;
  std::vector<std::string> settings{"single", "cross"};
  /// Datasets for the single-dataset setting; empty = every source plus
  /// the integrated one.
  std::vector<std::string> single_datasets;
  int threads = 1;

  /// Checks referenced paths exist and the seed is explicit.
  void validate(bool require_inputs) const;
  std::filesystem::path input_of(const SourceEntry& source) const;
};

/// Relative paths resolve against the config file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace faacflow
