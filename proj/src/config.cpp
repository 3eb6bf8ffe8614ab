#include "faacflow/config.hpp"

#include <fstream>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const char* key, const char* where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + ": bad value for '" + key + "': " + e.what());
  }
}

std::string token_string(const json& t) {
  if (t.is_string()) return t.get<std::string>();
  if (t.is_number_integer() || t.is_number_unsigned()) return t.dump();
  if (t.is_number_float()) return csv::format_exact(t.get<double>());
  throw ConfigError("faac: matcher token must be a string or number");
}

ColumnKind kind_from(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  throw ConfigError("schema: unknown column kind '" + s + "'");
}

ValueDistribution distribution_from(const json& j) {
  ValueDistribution d;
  if (!j.is_object()) throw ConfigError("profile: distribution must be an object");
  if (j.contains("tokens")) {
    for (const auto& [tok, w] : j.at("tokens").items()) d.tokens.push_back({tok, w.get<double>()});
  }
  if (j.contains("ranges")) {
    for (const auto& r : j.at("ranges")) {
      ValueDistribution::Range range;
      range.lo = get_as<double>(r, "lo", "profile range");
      range.hi = get_as<double>(r, "hi", "profile range");
      range.weight = r.value("weight", 1.0);
      range.integer = r.value("integer", false);
      d.ranges.push_back(range);
    }
  }
  d.missing_rate = j.value("missing_rate", 0.0);
  return d;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

}  // namespace

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------ schema

SourceSchema schema_from_json(const json& j) {
  SourceSchema s;
  try {
    s.dataset_id = require(require(j, "dataset", "schema"), "id", "schema.dataset").get<std::string>();
    for (const auto& c : require(j, "columns", "schema"))
      s.columns.push_back({get_as<std::string>(c, "name", "schema.columns"),
                           kind_from(get_as<std::string>(c, "kind", "schema.columns"))});
    s.label_column = get_as<std::string>(j, "label_column", "schema");
    for (const auto& [src, canon] : require(j, "class_map", "schema").items())
      s.class_map.emplace(src, canon.get<std::string>());
    if (j.contains("record_count_hint")) s.record_count_hint = j.at("record_count_hint").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

json schema_to_json(const SourceSchema& s) {
  json j;
  j["dataset"]["id"] = s.dataset_id;
  j["columns"] = json::array();
  for (const auto& c : s.columns)
    j["columns"].push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::numeric ? "numeric" : "categorical"}});
  j["label_column"] = s.label_column;
  j["class_map"] = s.class_map;
  if (s.record_count_hint) j["record_count_hint"] = *s.record_count_hint;
  return j;
}

SourceSchema load_schema(const fs::path& path) {
  try {
    return schema_from_json(load_json(path));
  } catch (const SchemaError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ----------------------------------------------------------------- profile

SyntheticProfile profile_from_json(const json& root) {
  const json& j = root.contains("profile") ? root.at("profile") : root;
  SyntheticProfile p;
  try {
    p.seed = get_as<std::uint64_t>(j, "seed", "profile");
    p.total_records = j.value("records", std::size_t{0});
    for (const auto& [cls, frac] : require(j, "proportions", "profile").items())
      p.proportions.emplace_back(cls, frac.get<double>());
    if (j.contains("base"))
      for (const auto& [col, d] : j.at("base").items()) p.base.emplace(col, distribution_from(d));
    if (j.contains("classes"))
      for (const auto& [cls, cols] : j.at("classes").items())
        for (const auto& [col, d] : cols.items()) p.per_class[cls].emplace(col, distribution_from(d));
    if (j.contains("burst_length"))
      for (const auto& [cls, len] : j.at("burst_length").items()) p.burst_length.emplace(cls, len.get<double>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
  p.validate();
  return p;
}

SyntheticProfile load_profile(const fs::path& path) {
  try {
    return profile_from_json(load_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------- FaaC config

FaacConfig faac_config_from_json(const json& j) {
  FaacConfig c;
  try {
    if (j.contains("classes")) c.taxonomy.classes = j.at("classes").get<std::vector<std::string>>();
    if (j.contains("class_priority")) c.class_priority = j.at("class_priority").get<std::vector<std::string>>();
    for (const auto& f : require(j, "features", "faac")) {
      FeatureSpec spec;
      spec.name = get_as<std::string>(f, "name", "faac.features");
      spec.variable = get_as<std::string>(f, "variable", "faac.features");
      spec.allow_overlap = f.value("allow_overlap", false);
      const json& m = require(f, "matcher", "faac.features");
      const auto kind = get_as<std::string>(m, "kind", "faac.matcher");
      const json args = m.value("args", json::array());
      if (kind == "equals") {
        spec.matcher = Matcher::equals(token_string(args.is_array() ? args.at(0) : args));
      } else if (kind == "in_set") {
        std::vector<std::string> toks;
        for (const auto& t : args) toks.push_back(token_string(t));
        spec.matcher = Matcher::in_set(std::move(toks));
      } else if (kind == "numeric_range") {
        if (!args.is_array() || args.size() != 2) throw ConfigError("faac: numeric_range needs [lo, hi]");
        spec.matcher = Matcher::range(args.at(0).get<double>(), args.at(1).get<double>());
      } else if (kind == "missing") {
        spec.matcher = Matcher::missing();
      } else if (kind == "catch_all") {
        spec.matcher = Matcher::catch_all();
      } else {
        throw ConfigError("faac: unknown matcher kind '" + kind + "'");
      }
      c.features.push_back(std::move(spec));
    }
    if (j.contains("aliases"))
      for (const auto& [ds, overrides] : j.at("aliases").items())
        for (const auto& [var, col] : overrides.items()) c.aliases[ds][var] = col.get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("faac: ") + e.what());
  }
  c.validate();
  return c;
}

json faac_config_to_json(const FaacConfig& c) {
  json j;
  j["classes"] = c.taxonomy.classes;
  j["class_priority"] = c.class_priority;
  j["features"] = json::array();
  for (const auto& f : c.features) {
    json m;
    switch (f.matcher.kind) {
      case MatcherKind::equals: m = {{"kind", "equals"}, {"args", f.matcher.tokens}}; break;
      case MatcherKind::in_set: m = {{"kind", "in_set"}, {"args", f.matcher.tokens}}; break;
      case MatcherKind::numeric_range: m = {{"kind", "numeric_range"}, {"args", {f.matcher.lo, f.matcher.hi}}}; break;
      case MatcherKind::missing: m = {{"kind", "missing"}}; break;
      case MatcherKind::catch_all: m = {{"kind", "catch_all"}}; break;
    }
    json fj = {{"name", f.name}, {"variable", f.variable}, {"matcher", m}};
    if (f.allow_overlap) fj["allow_overlap"] = true;
    j["features"].push_back(fj);
  }
  j["aliases"] = c.aliases;
  return j;
}

FaacConfig load_faac_config(const fs::path& path) {
  try {
    return faac_config_from_json(load_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// -------------------------------------------------------------- run config

void RunConfig::validate(bool require_inputs) const {
  if (!seed_set) throw ConfigError("run config: an explicit seed is required");
  if (!fs::exists(faac_config)) throw ConfigError("run config: faac config not found: " + faac_config.string());
  if (sources.empty()) throw ConfigError("run config: no sources");
  for (const auto& s : sources) {
    if (!fs::exists(s.schema)) throw ConfigError("run config: schema not found: " + s.schema.string());
    if (require_inputs && !fs::exists(input_of(s)))
      throw ConfigError("run config: input not found: " + input_of(s).string());
    if (s.profile && !fs::exists(*s.profile))
      throw ConfigError("run config: profile not found: " + s.profile->string());
    if (s.target_rows == 0) throw ConfigError("run config: source '" + s.id + "' needs a positive M");
  }
  if (folds < 2) throw ConfigError("run config: k must be at least 2");
  if (repetitions < 1) throw ConfigError("run config: R must be at least 1");
  if (n_init + n_iter == 0) throw ConfigError("run config: search budget must be at least one evaluation");
}

fs::path RunConfig::input_of(const SourceEntry& source) const {
  return source.input ? *source.input : output_dir / "raw" / (source.id + ".csv");
}

RunConfig load_run_config(const fs::path& path) {
  const json j = load_json(path);
  RunConfig rc;
  rc.base_dir = fs::absolute(path).parent_path();
  try {
    if (j.contains("seed")) {
      rc.seed = j.at("seed").get<std::uint64_t>();
      rc.seed_set = true;
    }
    rc.output_dir = resolve(rc.base_dir, j.value("output_dir", std::string("out")));
    rc.faac_config = resolve(rc.base_dir, get_as<std::string>(j, "faac_config", "run config"));
    for (const auto& s : require(j, "sources", "run config")) {
      SourceEntry e;
      e.id = get_as<std::string>(s, "id", "run config.sources");
      e.schema = resolve(rc.base_dir, get_as<std::string>(s, "schema", "run config.sources"));
      if (s.contains("input")) e.input = resolve(rc.base_dir, s.at("input").get<std::string>());
      if (s.contains("profile")) e.profile = resolve(rc.base_dir, s.at("profile").get<std::string>());
      if (s.contains("records")) e.records = s.at("records").get<std::size_t>();
      e.target_rows = get_as<std::size_t>(s, "M", "run config.sources");
      rc.sources.push_back(std::move(e));
    }
    if (j.contains("integration")) {
      const auto& ij = j.at("integration");
      rc.integration_name = ij.value("name", rc.integration_name);
      if (ij.contains("shared_classes")) rc.shared_classes = ij.at("shared_classes").get<std::vector<std::string>>();
    }
    if (j.contains("evaluation")) {
      const auto& ej = j.at("evaluation");
      rc.folds = ej.value("k", rc.folds);
      rc.repetitions = ej.value("R", rc.repetitions);
      if (ej.contains("models")) rc.models = ej.at("models").get<std::vector<std::string>>();
      if (ej.contains("budget")) {
        rc.n_init = ej.at("budget").value("n_init", rc.n_init);
        rc.n_iter = ej.at("budget").value("n_iter", rc.n_iter);
        rc.candidates = ej.at("budget").value("candidates", rc.candidates);
      }
      rc.tune_once = ej.value("tune_once", rc.tune_once);
      if (ej.contains("settings")) rc.settings = ej.at("settings").get<std::vector<std::string>>();
      if (ej.contains("single_datasets"))
        rc.single_datasets = ej.at("single_datasets").get<std::vector<std::string>>();
    }
    rc.threads = j.value("threads", 1);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return rc;
}

}  // namespace faacflow
