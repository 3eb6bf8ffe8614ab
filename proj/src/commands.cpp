#include "faacflow/commands.hpp"

#include <fstream>
#include <map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "faacflow/digest.hpp"
#include "faacflow/errors.hpp"
#include "faacflow/evaluation.hpp"
#include "faacflow/faac.hpp"
#include "faacflow/ingest.hpp"
#include "faacflow/integrator.hpp"
#include "faacflow/report.hpp"
#include "faacflow/rng.hpp"

namespace faacflow::commands {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw DataError("write failed: " + path.string());
}

DerivedDataset load_derived(const fs::path& path, const std::vector<std::string>& classes) {
  auto in = open_in(path);
  try {
    return read_derived_csv(in, classes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_derived(const DerivedDataset& ds, const std::string& id, const Layout& layout) {
  auto out = open_out(layout.derived(id));
  write_derived_csv(out, ds);
  close_checked(out, layout.derived(id));
  auto dist = open_out(layout.distribution(id));
  write_distribution_csv(dist, distribution_report(ds));
  close_checked(dist, layout.distribution(id));
}

EvalOptions eval_options(const RunConfig& run) {
  EvalOptions o;
  o.k = run.folds;
  o.repetitions = run.repetitions;
  o.models.clear();
  for (const auto& m : run.models) o.models.push_back(model_kind_from_string(m));
  o.budget = Budget{run.n_init, run.n_iter, run.candidates};
  o.seed = derive_seed(run.seed, "evaluate");
  o.tune_once = run.tune_once;
  o.threads = run.threads;
  return o;
}

bool has_setting(const RunConfig& run, std::string_view s) {
  return std::find(run.settings.begin(), run.settings.end(), s) != run.settings.end();
}

}  // namespace

std::vector<fs::path> synth(const RunConfig& run) {
  run.validate(false);
  const Layout layout{run.output_dir};
  std::vector<fs::path> written;
  for (const auto& src : run.sources) {
    if (!src.profile) continue;
    const SourceSchema schema = load_schema(src.schema);
    SyntheticProfile profile = load_profile(*src.profile);
    if (src.records) profile.total_records = *src.records;
    profile.seed = derive_seed(run.seed, "synth/" + src.id);
    SyntheticGenerator gen(profile, schema);

    const fs::path path = run.input_of(src);
    auto out = open_out(path);
    FlowCsvWriter writer(out, schema);
    FlowRecord rec;
    std::size_t n = 0;
    while (gen.next(rec)) {
      writer.write(rec);
      ++n;
    }
    close_checked(out, path);
    spdlog::info("synth: {} records for '{}' -> {}", n, src.id, path.string());
    written.push_back(path);
  }
  return written;
}

std::vector<fs::path> derive(const RunConfig& run) {
  run.validate(true);
  const FaacConfig cfg = load_faac_config(run.faac_config);
  const Layout layout{run.output_dir};
  std::vector<fs::path> written;
  for (const auto& src : run.sources) {
    const SourceSchema schema = load_schema(src.schema);
    const fs::path input = run.input_of(src);

    // First pass counts the records the parser accepts.
    std::size_t records = 0;
    {
      auto in = open_in(input);
      CsvFlowReader counter(in, schema);
      FlowRecord rec;
      while (counter.next(rec)) ++records;
    }
    const BatchPlan plan = plan_batches(records, src.target_rows);
    spdlog::info("derive: '{}' N = {}, M = {}, B = {}, dropped tail = {}", src.id, records, src.target_rows,
                 plan.batch_size, plan.dropped_tail);

    auto in = open_in(input);
    CsvFlowReader reader(in, schema, [&](const RowError& e) {
      spdlog::warn("{}:{}: {}", input.string(), e.line, e.message);
    });
    DerivedDataset ds;
    try {
      ds = derive_dataset(reader, records, src.target_rows, cfg);
    } catch (const SchemaError& e) {
      throw SchemaError(input.string() + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(input.string() + ": " + e.what());
    }
    if (reader.error_count() > 0)
      spdlog::warn("derive: {} malformed rows skipped in {}", reader.error_count(), input.string());
    write_derived(ds, src.id, layout);
    written.push_back(layout.derived(src.id));
  }
  return written;
}

fs::path integrate(const RunConfig& run) {
  run.validate(false);
  const FaacConfig cfg = load_faac_config(run.faac_config);
  const Layout layout{run.output_dir};

  std::vector<DerivedDataset> inputs;
  nlohmann::json manifest;
  manifest["name"] = run.integration_name;
  manifest["shared_classes"] = run.shared_classes;
  manifest["inputs"] = nlohmann::json::array();
  for (const auto& src : run.sources) {
    const fs::path path = layout.derived(src.id);
    inputs.push_back(load_derived(path, cfg.taxonomy.classes));
    manifest["inputs"].push_back({{"id", src.id},
                                  {"file", path.filename().string()},
                                  {"rows", inputs.back().rows.size()},
                                  {"sha256", sha256_file(path)}});
  }
  IntegrationSpec spec;
  spec.name = run.integration_name;
  spec.shared_classes = run.shared_classes;
  for (const auto& ds : inputs) spec.inputs.emplace_back(ds);
  const DerivedDataset out = integrate(spec);

  write_derived(out, run.integration_name, layout);
  manifest["output"] = {{"file", layout.derived(run.integration_name).filename().string()},
                        {"rows", out.rows.size()},
                        {"sha256", sha256_file(layout.derived(run.integration_name))}};
  auto mf = open_out(layout.manifest(run.integration_name));
  mf << manifest.dump(2) << '\n';
  close_checked(mf, layout.manifest(run.integration_name));
  spdlog::info("integrate: {} rows from {} sources -> {}", out.rows.size(), inputs.size(),
               layout.derived(run.integration_name).string());
  return layout.derived(run.integration_name);
}

std::vector<fs::path> evaluate(const RunConfig& run) {
  run.validate(false);
  const FaacConfig cfg = load_faac_config(run.faac_config);
  const Layout layout{run.output_dir};
  const EvalOptions options = eval_options(run);

  std::map<std::string, DerivedDataset> data;
  auto dataset = [&](const std::string& id) -> const DerivedDataset& {
    auto it = data.find(id);
    if (it == data.end()) it = data.emplace(id, load_derived(layout.derived(id), cfg.taxonomy.classes)).first;
    return it->second;
  };

  std::vector<fs::path> eval_files;
  if (has_setting(run, "single")) {
    std::vector<std::string> ids = run.single_datasets;
    if (ids.empty()) {
      for (const auto& s : run.sources) ids.push_back(s.id);
      if (fs::exists(layout.derived(run.integration_name))) ids.push_back(run.integration_name);
    }
    std::vector<FoldResult> folds;
    for (const auto& id : ids) {
      spdlog::info("evaluate: single-dataset on '{}' (k = {}, R = {})", id, options.k, options.repetitions);
      EvalReport rep = run_single_dataset(dataset(id), id, options);
      for (auto& f : rep.folds) folds.push_back(std::move(f));
    }
    const fs::path path = layout.eval("single");
    auto out = open_out(path);
    write_eval_csv(out, folds);
    close_checked(out, path);
    eval_files.push_back(path);
  }
  if (has_setting(run, "cross")) {
    std::vector<NamedDataset> named;
    for (const auto& s : run.sources) named.push_back({s.id, std::cref(dataset(s.id))});
    spdlog::info("evaluate: cross-dataset rotation over {} sources", named.size());
    std::vector<PipelineModel> fitted;
    EvalReport rep = run_cross_rotation(named, run.shared_classes, options, &fitted);
    const fs::path path = layout.eval("cross");
    auto out = open_out(path);
    write_eval_csv(out, rep.folds);
    close_checked(out, path);
    eval_files.push_back(path);
    for (const auto& m : fitted) {
      const fs::path mp = layout.model(m.provenance.dataset, to_string(m.kind));
      auto mo = open_out(mp);
      mo << serialize_model(m) << '\n';
      close_checked(mo, mp);
    }
  }
  for (const auto& p : report(eval_files, layout.report_dir())) eval_files.push_back(p);
  return eval_files;
}

std::vector<fs::path> report(const std::vector<fs::path>& eval_csvs, const fs::path& out_dir) {
  std::vector<FoldResult> folds;
  for (const auto& p : eval_csvs) {
    auto in = open_in(p);
    for (auto& f : read_eval_csv(in)) folds.push_back(std::move(f));
  }
  if (folds.empty()) throw EvaluationError("report: no fold results in the given eval files");
  const std::vector<EvalReport> reports = rebuild_reports(folds);
  std::vector<ModelSummary> summaries;
  std::vector<SignificanceRow> significance;
  for (const auto& r : reports) {
    summaries.insert(summaries.end(), r.summaries.begin(), r.summaries.end());
    significance.insert(significance.end(), r.significance.begin(), r.significance.end());
  }

  const std::vector<fs::path> paths{out_dir / "summary.csv", out_dir / "significance.csv",
                                    out_dir / "auc_distribution.csv", out_dir / "report.txt"};
  auto s = open_out(paths[0]);
  write_summary_csv(s, summaries);
  close_checked(s, paths[0]);
  auto g = open_out(paths[1]);
  write_significance_csv(g, significance);
  close_checked(g, paths[1]);
  auto a = open_out(paths[2]);
  write_auc_distribution_csv(a, folds);
  close_checked(a, paths[2]);
  auto t = open_out(paths[3]);
  write_text_report(t, summaries, significance);
  close_checked(t, paths[3]);
  spdlog::info("report: {} fold results -> {}", folds.size(), out_dir.string());
  return paths;
}

void pipeline(const RunConfig& run) {
  run.validate(false);
  synth(run);
  derive(run);
  integrate(run);
  evaluate(run);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const EvaluationError*>(&e)) return 4;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

}  // namespace faacflow::commands
