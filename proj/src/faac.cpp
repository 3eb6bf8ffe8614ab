#include "faacflow/faac.hpp"

#include <algorithm>
#include <set>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

Matcher Matcher::equals(std::string token) { return Matcher{MatcherKind::equals, {std::move(token)}, 0, 0}; }
Matcher Matcher::in_set(std::vector<std::string> tokens) { return Matcher{MatcherKind::in_set, std::move(tokens), 0, 0}; }
Matcher Matcher::range(double lo, double hi) { return Matcher{MatcherKind::numeric_range, {}, lo, hi}; }
Matcher Matcher::missing() { return Matcher{MatcherKind::missing, {}, 0, 0}; }
Matcher Matcher::catch_all() { return Matcher{MatcherKind::catch_all, {}, 0, 0}; }

// ---------------------------------------------------------------- FaacConfig

void FaacConfig::validate() const {
  taxonomy.validate();
  if (features.empty()) throw ConfigError("faac: no features");

  std::set<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty() || f.variable.empty()) throw ConfigError("faac: feature with empty name or variable");
    if (!names.insert(f.name).second) throw ConfigError("faac: duplicate feature name '" + f.name + "'");
    const auto& m = f.matcher;
    switch (m.kind) {
      case MatcherKind::equals:
        if (m.tokens.size() != 1) throw ConfigError("faac: '" + f.name + "': equals needs exactly one token");
        break;
      case MatcherKind::in_set:
        if (m.tokens.empty()) throw ConfigError("faac: '" + f.name + "': in_set needs tokens");
        break;
      case MatcherKind::numeric_range:
        if (!(m.lo < m.hi)) throw ConfigError("faac: '" + f.name + "': range needs lo < hi");
        break;
      default:
        break;
    }
  }

  // Per-variable disjointness: ranges, token sets, numeric tokens inside
  // ranges; at most one catch_all and one missing matcher.
  std::map<std::string, std::vector<const FeatureSpec*>> by_var;
  for (const auto& f : features) by_var[f.variable].push_back(&f);
  for (const auto& [var, feats] : by_var) {
    int catch_alls = 0, missings = 0;
    std::map<std::string, const FeatureSpec*> token_owner;
    std::vector<const FeatureSpec*> ranges;
    for (const auto* f : feats) {
      const auto& m = f->matcher;
      if (m.kind == MatcherKind::catch_all) ++catch_alls;
      if (m.kind == MatcherKind::missing) ++missings;
      if (m.kind == MatcherKind::numeric_range) ranges.push_back(f);
      for (const auto& t : m.tokens) {
        auto [it, inserted] = token_owner.emplace(t, f);
        if (!inserted && !(f->allow_overlap && it->second->allow_overlap))
          throw ConfigError("faac: token '" + t + "' of variable '" + var + "' used by '" + it->second->name +
                            "' and '" + f->name + "'");
      }
    }
    if (catch_alls > 1) throw ConfigError("faac: variable '" + var + "' has more than one catch_all");
    if (missings > 1) throw ConfigError("faac: variable '" + var + "' has more than one missing matcher");
    for (std::size_t a = 0; a < ranges.size(); ++a) {
      for (std::size_t b = a + 1; b < ranges.size(); ++b) {
        const auto &ra = ranges[a]->matcher, &rb = ranges[b]->matcher;
        if (ra.lo < rb.hi && rb.lo < ra.hi && !(ranges[a]->allow_overlap && ranges[b]->allow_overlap))
          throw ConfigError("faac: ranges '" + ranges[a]->name + "' and '" + ranges[b]->name + "' overlap");
      }
    }
    for (const auto& [tok, owner] : token_owner) {
      auto v = csv::parse_number(tok);
      if (!v) continue;
      for (const auto* r : ranges)
        if (*v >= r->matcher.lo && *v < r->matcher.hi && !(owner->allow_overlap && r->allow_overlap))
          throw ConfigError("faac: token '" + tok + "' of '" + owner->name + "' lies inside range '" + r->name + "'");
    }
  }

  for (const auto& c : class_priority) {
    if (!taxonomy.index_of(c)) throw ConfigError("faac: class_priority names unknown class '" + c + "'");
    if (c == kBackground) throw ConfigError("faac: Background cannot appear in class_priority");
  }
}

std::vector<std::string> FaacConfig::feature_names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

std::string_view FaacConfig::column_for(std::string_view origin, std::string_view variable) const {
  auto ds = aliases.find(std::string(origin));
  if (ds != aliases.end()) {
    auto it = ds->second.find(std::string(variable));
    if (it != ds->second.end()) return it->second;
  }
  return variable;
}

// --------------------------------------------------------------- BatchPlan

BatchPlan plan_batches(std::size_t records, std::size_t target_rows) {
  if (target_rows == 0) throw ConfigError("target observation count must be positive");
  if (records < target_rows)
    throw ConfigError("batch size would be zero: " + std::to_string(records) + " records for " +
                      std::to_string(target_rows) + " observations");
  BatchPlan plan;
  plan.records = records;
  plan.target_rows = target_rows;
  plan.batch_size = records / target_rows;
  plan.full_batches = records / plan.batch_size;
  plan.dropped_tail = records % plan.batch_size;
  return plan;
}

// ------------------------------------------------------------ DerivedDataset

std::vector<OriginSummary> DerivedDataset::provenance() const {
  std::vector<OriginSummary> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const OriginSummary& s) { return s.origin == r.origin && s.batch_size == r.batch_size; });
    if (it == out.end())
      out.push_back({r.origin, 1, r.batch_size});
    else
      ++it->rows;
  }
  return out;
}

std::optional<int> DerivedDataset::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

// ----------------------------------------------------------- BatchAggregator

bool BatchAggregator::CompiledMatcher::matches(const FlowValue& v) const {
  switch (kind) {
    case MatcherKind::missing:
      return is_missing(v);
    case MatcherKind::numeric_range: {
      auto* d = std::get_if<double>(&v);
      return d && *d >= lo && *d < hi;
    }
    case MatcherKind::equals:
    case MatcherKind::in_set: {
      if (auto* d = std::get_if<double>(&v))
        return std::find(numeric_tokens.begin(), numeric_tokens.end(), *d) != numeric_tokens.end();
      if (auto* s = std::get_if<std::string>(&v)) return std::find(tokens.begin(), tokens.end(), *s) != tokens.end();
      return false;
    }
    case MatcherKind::catch_all:
      return false;
  }
  return false;
}

BatchAggregator::BatchAggregator(FaacConfig config) : config_(std::move(config)) {
  config_.validate();
  for (std::size_t j = 0; j < config_.features.size(); ++j) {
    const auto& f = config_.features[j];
    auto g = std::find_if(groups_.begin(), groups_.end(), [&](const VariableGroup& vg) { return vg.variable == f.variable; });
    if (g == groups_.end()) {
      groups_.push_back({f.variable, {}, std::nullopt});
      g = groups_.end() - 1;
    }
    if (f.matcher.kind == MatcherKind::catch_all) {
      g->catch_all = j;
      continue;
    }
    CompiledMatcher cm;
    cm.feature = j;
    cm.kind = f.matcher.kind;
    cm.tokens = f.matcher.tokens;
    for (const auto& t : cm.tokens)
      if (auto v = csv::parse_number(t)) cm.numeric_tokens.push_back(*v);
    cm.lo = f.matcher.lo;
    cm.hi = f.matcher.hi;
    g->matchers.push_back(std::move(cm));
  }

  const auto& classes = config_.taxonomy.classes;
  priority_rank_.assign(classes.size(), 0);
  int rank = 0;
  std::vector<bool> ranked(classes.size(), false);
  for (const auto& name : config_.class_priority) {
    int idx = *config_.taxonomy.index_of(name);
    if (!ranked[idx]) {
      priority_rank_[idx] = rank++;
      ranked[idx] = true;
    }
  }
  for (std::size_t i = 1; i < classes.size(); ++i)
    if (!ranked[i]) priority_rank_[i] = rank++;
}

int BatchAggregator::label_for_counts(std::span<const std::size_t> counts) const {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    if (best == 0 || counts[c] > counts[best] ||
        (counts[c] == counts[best] && priority_rank_[c] < priority_rank_[best]))
      best = static_cast<int>(c);
  }
  return best;
}

DerivedObservation BatchAggregator::aggregate(std::span<const FlowRecord> batch) const {
  if (batch.empty()) throw DataError("faac: empty batch");
  const std::string& origin = batch.front().origin;
  const auto& classes = config_.taxonomy.classes;

  // Resolve each variable group to a slot of the batch's column layout.
  std::vector<std::optional<std::size_t>> slots(groups_.size());
  const VariableLayout* layout = batch.front().layout.get();
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (layout) slots[g] = layout->find(config_.column_for(origin, groups_[g].variable));

  std::vector<std::size_t> counts(config_.features.size(), 0);
  std::vector<std::size_t> class_counts(classes.size(), 0);
  static const FlowValue kMissing{};

  for (const auto& rec : batch) {
    if (rec.origin != origin)
      throw DataError("faac: batch mixes origins '" + origin + "' and '" + rec.origin + "'");
    if (rec.layout.get() != layout) {
      // Same origin but a different layout object: re-resolve.
      layout = rec.layout.get();
      for (std::size_t g = 0; g < groups_.size(); ++g)
        slots[g] = layout ? layout->find(config_.column_for(origin, groups_[g].variable)) : std::nullopt;
    }
    auto cls = config_.taxonomy.index_of(rec.label);
    if (!cls) throw ConfigError("faac: class '" + rec.label + "' is not in the taxonomy");
    ++class_counts[*cls];

    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto& group = groups_[g];
      const FlowValue& v = slots[g] ? rec.values[*slots[g]] : kMissing;
      bool any = false;
      for (const auto& m : group.matchers) {
        if (m.matches(v)) {
          ++counts[m.feature];
          any = true;
        }
      }
      if (!any && group.catch_all && !is_missing(v)) ++counts[*group.catch_all];
    }
  }

  DerivedObservation obs;
  obs.batch_size = batch.size();
  obs.origin = origin;
  obs.counters.resize(counts.size());
  const double b = static_cast<double>(batch.size());
  for (std::size_t j = 0; j < counts.size(); ++j) obs.counters[j] = static_cast<double>(counts[j]) / b;
  obs.label = label_for_counts(class_counts);
  return obs;
}

DerivedObservation aggregate_batch(std::span<const FlowRecord> batch, const FaacConfig& config) {
  return BatchAggregator(config).aggregate(batch);
}

// ---------------------------------------------------------- derive_dataset

namespace {

DerivedDataset empty_dataset(const FaacConfig& config) {
  DerivedDataset ds;
  ds.feature_names = config.feature_names();
  ds.classes = config.taxonomy.classes;
  return ds;
}

}  // namespace

DerivedDataset derive_dataset(FlowSource& records, std::size_t record_count, std::size_t target_rows,
                              const FaacConfig& config) {
  if (record_count == 0) throw DataError("faac: empty record stream");
  const BatchPlan plan = plan_batches(record_count, target_rows);
  BatchAggregator agg(config);
  DerivedDataset ds = empty_dataset(config);
  ds.rows.reserve(plan.full_batches);

  std::vector<FlowRecord> batch(plan.batch_size);
  for (std::size_t b = 0; b < plan.full_batches; ++b) {
    for (std::size_t i = 0; i < plan.batch_size; ++i) {
      if (!records.next(batch[i]))
        throw DataError("faac: stream ended after " + std::to_string(b * plan.batch_size + i) + " records, expected " +
                        std::to_string(record_count));
    }
    ds.rows.push_back(agg.aggregate(batch));
  }
  return ds;
}

DerivedDataset derive_dataset(std::span<const FlowRecord> records, std::size_t target_rows,
                              const FaacConfig& config) {
  if (records.empty()) throw DataError("faac: empty record stream");
  const BatchPlan plan = plan_batches(records.size(), target_rows);
  BatchAggregator agg(config);
  DerivedDataset ds = empty_dataset(config);
  ds.rows.reserve(plan.full_batches);
  for (std::size_t b = 0; b < plan.full_batches; ++b)
    ds.rows.push_back(agg.aggregate(records.subspan(b * plan.batch_size, plan.batch_size)));
  return ds;
}

// ------------------------------------------------------------------- CSV

void write_derived_csv(std::ostream& out, const DerivedDataset& ds) {
  for (const auto& f : ds.feature_names) out << csv::escape(f) << ',';
  out << "label,origin,batch_size\n";
  for (const auto& row : ds.rows) {
    for (double c : row.counters) out << csv::format_sig(c, 9) << ',';
    out << csv::escape(ds.classes.at(static_cast<std::size_t>(row.label))) << ',' << csv::escape(row.origin) << ','
        << row.batch_size << '\n';
  }
}

DerivedDataset read_derived_csv(std::istream& in, std::vector<std::string> classes) {
  DerivedDataset ds;
  std::string line;
  std::vector<std::string> fields;
  if (!csv::read_line(in, line)) throw DataError("derived csv: empty file");
  csv::split(line, fields);
  if (fields.size() < 4 || fields[fields.size() - 3] != "label" || fields[fields.size() - 2] != "origin" ||
      fields.back() != "batch_size")
    throw DataError("derived csv: header must end with label,origin,batch_size");
  ds.feature_names.assign(fields.begin(), fields.end() - 3);
  const std::size_t p = ds.feature_names.size();

  const bool infer = classes.empty();
  if (infer) classes.push_back(std::string(kBackground));
  ds.classes = std::move(classes);

  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    csv::split(line, fields);
    auto where = [&] { return " (line " + std::to_string(line_no) + ")"; };
    if (fields.size() != p + 3) throw DataError("derived csv: wrong field count" + where());
    DerivedObservation row;
    row.counters.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      auto v = csv::parse_number(fields[j]);
      if (!v) throw DataError("derived csv: bad counter '" + fields[j] + "'" + where());
      row.counters[j] = *v;
    }
    auto idx = ds.class_index(fields[p]);
    if (!idx) {
      if (!infer) throw DataError("derived csv: unknown class '" + fields[p] + "'" + where());
      ds.classes.push_back(fields[p]);
      idx = static_cast<int>(ds.classes.size() - 1);
    }
    row.label = *idx;
    row.origin = fields[p + 1];
    auto b = csv::parse_number(fields[p + 2]);
    if (!b || *b < 1 || *b != static_cast<double>(static_cast<std::size_t>(*b)))
      throw DataError("derived csv: bad batch_size" + where());
    row.batch_size = static_cast<std::size_t>(*b);
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

}  // namespace faacflow
