#include "faacflow/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

std::optional<std::size_t> VariableLayout::find(std::string_view name) const {
  auto it = index.find(std::string(name));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

// ------------------------------------------------------------- SourceSchema

void SourceSchema::validate() const {
  if (dataset_id.empty()) throw ConfigError("schema: dataset.id is empty");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema '" + dataset_id + "': empty column name");
    if (!seen.insert(c.name).second)
      throw ConfigError("schema '" + dataset_id + "': duplicate column '" + c.name + "'");
  }
  if (!seen.count(label_column))
    throw ConfigError("schema '" + dataset_id + "': label column '" + label_column + "' not among columns");
  for (const auto& [src, canon] : class_map) {
    if (canon.empty()) throw ConfigError("schema '" + dataset_id + "': class '" + src + "' maps to empty name");
  }
}

std::size_t SourceSchema::label_position() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == label_column) return i;
  throw ConfigError("schema '" + dataset_id + "': label column '" + label_column + "' not among columns");
}

const std::string& SourceSchema::canonical(std::string_view source_label) const {
  auto it = class_map.find(std::string(source_label));
  if (it == class_map.end())
    throw SchemaError("schema '" + dataset_id + "': class '" + std::string(source_label) +
                      "' has no canonical mapping");
  return it->second;
}

std::shared_ptr<const VariableLayout> SourceSchema::make_layout() const {
  auto layout = std::make_shared<VariableLayout>();
  for (const auto& c : columns) {
    if (c.name == label_column) continue;
    layout->index.emplace(c.name, layout->names.size());
    layout->names.push_back(c.name);
    layout->kinds.push_back(c.kind);
  }
  return layout;
}

// --------------------------------------------------------------- FlowRecord

const FlowValue* FlowRecord::find(std::string_view variable) const {
  if (!layout) return nullptr;
  auto slot = layout->find(variable);
  if (!slot) return nullptr;
  return &values[*slot];
}

bool FlowRecord::operator==(const FlowRecord& other) const {
  if (values != other.values || source_label != other.source_label || label != other.label ||
      origin != other.origin)
    return false;
  if (layout == other.layout) return true;
  if (!layout || !other.layout) return false;
  return layout->names == other.layout->names && layout->kinds == other.layout->kinds;
}

void CanonicalTaxonomy::validate() const {
  if (classes.empty() || classes.front() != kBackground)
    throw ConfigError("taxonomy: index 0 must be Background");
  std::set<std::string> seen;
  for (const auto& c : classes)
    if (!seen.insert(c).second) throw ConfigError("taxonomy: duplicate class '" + c + "'");
}

std::optional<int> CanonicalTaxonomy::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

// ------------------------------------------------------------ CsvFlowReader

CsvFlowReader::CsvFlowReader(std::istream& in, const SourceSchema& schema, ErrorHandler on_error)
    : in_(in), schema_(schema), on_error_(std::move(on_error)) {
  schema_.validate();
  layout_ = schema_.make_layout();
  label_pos_ = schema_.label_position();
  value_slot_.resize(schema_.columns.size());
  for (std::size_t i = 0; i < schema_.columns.size(); ++i)
    value_slot_[i] = i == label_pos_ ? std::string::npos : *layout_->find(schema_.columns[i].name);
}

void CsvFlowReader::report(std::size_t line, std::string message) {
  ++error_count_;
  RowError err{line, std::move(message)};
  if (on_error_) on_error_(err);
  if (errors_.size() < kMaxStoredErrors) errors_.push_back(std::move(err));
}

bool CsvFlowReader::next(FlowRecord& out) {
  while (csv::read_line(in_, line_)) {
    ++line_no_;
    if (line_.empty()) continue;
    csv::split(line_, fields_);
    if (line_no_ == 1 && fields_.size() == schema_.columns.size()) {
      bool header = true;
      for (std::size_t i = 0; i < fields_.size() && header; ++i) header = fields_[i] == schema_.columns[i].name;
      if (header) continue;
    }
    if (parse_row(out)) {
      ++records_;
      return true;
    }
  }
  return false;
}

bool CsvFlowReader::parse_row(FlowRecord& out) {
  const auto& cols = schema_.columns;
  if (fields_.size() != cols.size()) {
    report(line_no_, "expected " + std::to_string(cols.size()) + " fields, found " + std::to_string(fields_.size()));
    return false;
  }
  const std::string& label = fields_[label_pos_];
  if (label.empty()) {
    report(line_no_, "empty class label");
    return false;
  }
  // Unmapped classes are fatal, not per-row.
  const std::string& canonical = [&]() -> const std::string& {
    try {
      return schema_.canonical(label);
    } catch (const SchemaError& e) {
      throw SchemaError(std::string(e.what()) + " (line " + std::to_string(line_no_) + ")");
    }
  }();

  out.values.assign(layout_->names.size(), FlowValue{});
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i == label_pos_) continue;
    const std::string& field = fields_[i];
    FlowValue& slot = out.values[value_slot_[i]];
    if (field.empty()) continue;  // missing marker
    if (cols[i].kind == ColumnKind::numeric) {
      auto v = csv::parse_number(field);
      if (!v) {
        report(line_no_, "column '" + cols[i].name + "': not a finite number: '" + field + "'");
        return false;
      }
      slot = *v;
    } else {
      slot = field;
    }
  }
  out.layout = layout_;
  out.source_label = label;
  out.label = canonical;
  out.origin = schema_.dataset_id;
  return true;
}

// ------------------------------------------------------------ FlowCsvWriter

FlowCsvWriter::FlowCsvWriter(std::ostream& out, const SourceSchema& schema, bool header)
    : out_(out), schema_(schema), label_pos_(schema.label_position()) {
  if (header) {
    for (std::size_t i = 0; i < schema_.columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv::escape(schema_.columns[i].name);
    }
    out_ << '\n';
  }
}

void FlowCsvWriter::write(const FlowRecord& record) {
  for (std::size_t i = 0; i < schema_.columns.size(); ++i) {
    if (i) out_ << ',';
    if (i == label_pos_) {
      out_ << csv::escape(record.source_label);
      continue;
    }
    const FlowValue* v = record.find(schema_.columns[i].name);
    if (!v || is_missing(*v)) continue;
    if (auto* d = std::get_if<double>(v))
      out_ << csv::format_exact(*d);
    else
      out_ << csv::escape(std::get<std::string>(*v));
  }
  out_ << '\n';
}

// --------------------------------------------------------- SyntheticProfile

void SyntheticProfile::validate() const {
  if (proportions.empty()) throw ConfigError("profile: no class proportions");
  double sum = 0.0;
  for (const auto& [cls, p] : proportions) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("profile: proportion of '" + cls + "' is negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "profile: proportions sum to " << sum << ", expected 1";
    throw ConfigError(msg.str());
  }
  for (const auto& [cls, len] : burst_length)
    if (!(len >= 1.0)) throw ConfigError("profile: burst length of '" + cls + "' must be >= 1");
}

SyntheticGenerator::SyntheticGenerator(SyntheticProfile profile, const SourceSchema& schema)
    : profile_(std::move(profile)), schema_(schema), rng_(profile_.seed) {
  profile_.validate();
  schema_.validate();
  layout_ = schema_.make_layout();

  auto check_dist = [&](const ValueDistribution& d, ColumnKind kind, const std::string& col, const std::string& cls) {
    double total = 0.0;
    if (kind == ColumnKind::numeric) {
      if (d.ranges.empty() && d.missing_rate < 1.0)
        throw ConfigError("profile: numeric column '" + col + "' of class '" + cls + "' needs ranges");
      for (const auto& r : d.ranges) {
        if (!(r.lo <= r.hi) || r.weight < 0) throw ConfigError("profile: bad range for column '" + col + "'");
        total += r.weight;
      }
    } else {
      if (d.tokens.empty() && d.missing_rate < 1.0)
        throw ConfigError("profile: categorical column '" + col + "' of class '" + cls + "' needs tokens");
      for (const auto& t : d.tokens) {
        if (t.value.empty() || t.weight < 0) throw ConfigError("profile: bad token for column '" + col + "'");
        total += t.weight;
      }
    }
    if (d.missing_rate < 1.0 && !(total > 0))
      throw ConfigError("profile: weights of column '" + col + "' sum to zero");
  };

  std::vector<double> weights;
  for (const auto& [cls, p] : profile_.proportions) {
    ClassPlan plan;
    plan.source_label = cls;
    plan.canonical = schema_.canonical(cls);
    double burst = 1.0;
    if (auto it = profile_.burst_length.find(cls); it != profile_.burst_length.end()) burst = it->second;
    plan.continue_prob = 1.0 - 1.0 / burst;
    auto overrides = profile_.per_class.find(cls);
    plan.columns.resize(layout_->names.size(), nullptr);
    for (std::size_t slot = 0; slot < layout_->names.size(); ++slot) {
      const auto& col = layout_->names[slot];
      const ValueDistribution* d = nullptr;
      if (overrides != profile_.per_class.end()) {
        if (auto it = overrides->second.find(col); it != overrides->second.end()) d = &it->second;
      }
      if (!d) {
        if (auto it = profile_.base.find(col); it != profile_.base.end()) d = &it->second;
      }
      if (!d) throw ConfigError("profile: no distribution for column '" + col + "' (class '" + cls + "')");
      check_dist(*d, layout_->kinds[slot], col, cls);
      plan.columns[slot] = d;
    }
    // Segments are chosen with weight p / burst so that long-run class
    // frequencies stay at p.
    weights.push_back(p / burst);
    classes_.push_back(std::move(plan));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  for (double w : weights) {
    acc += w / total;
    segment_cdf_.push_back(acc);
  }
  segment_cdf_.back() = 1.0;
}

FlowValue SyntheticGenerator::draw(const ValueDistribution& d, ColumnKind kind) {
  if (d.missing_rate > 0.0 && rng_.uniform() < d.missing_rate) return FlowValue{};
  if (kind == ColumnKind::numeric) {
    double total = 0.0;
    for (const auto& r : d.ranges) total += r.weight;
    double u = rng_.uniform() * total;
    const ValueDistribution::Range* pick = &d.ranges.back();
    for (const auto& r : d.ranges) {
      if (u < r.weight) {
        pick = &r;
        break;
      }
      u -= r.weight;
    }
    double v = rng_.uniform(pick->lo, pick->hi);
    if (pick->integer) v = std::floor(v);
    return v;
  }
  double total = 0.0;
  for (const auto& t : d.tokens) total += t.weight;
  double u = rng_.uniform() * total;
  for (const auto& t : d.tokens) {
    if (u < t.weight) return t.value;
    u -= t.weight;
  }
  return d.tokens.back().value;
}

bool SyntheticGenerator::next(FlowRecord& out) {
  if (emitted_ >= profile_.total_records) return false;
  const bool keep = in_run_ && rng_.uniform() < classes_[current_].continue_prob;
  if (!keep) {
    double u = rng_.uniform();
    current_ = static_cast<std::size_t>(std::upper_bound(segment_cdf_.begin(), segment_cdf_.end(), u) -
                                        segment_cdf_.begin());
    if (current_ >= classes_.size()) current_ = classes_.size() - 1;
  }
  in_run_ = true;
  const ClassPlan& plan = classes_[current_];
  out.layout = layout_;
  out.values.resize(layout_->names.size());
  for (std::size_t slot = 0; slot < layout_->names.size(); ++slot)
    out.values[slot] = draw(*plan.columns[slot], layout_->kinds[slot]);
  out.source_label = plan.source_label;
  out.label = plan.canonical;
  out.origin = schema_.dataset_id;
  ++emitted_;
  return true;
}

// ------------------------------------------------------------ histograms

std::map<std::string, std::size_t> class_histogram(FlowSource& records) {
  std::map<std::string, std::size_t> hist;
  FlowRecord r;
  while (records.next(r)) ++hist[r.label];
  return hist;
}

std::map<std::string, std::size_t> class_histogram(std::span<const FlowRecord> records) {
  std::map<std::string, std::size_t> hist;
  for (const auto& r : records) ++hist[r.label];
  return hist;
}

std::vector<FlowRecord> collect(FlowSource& source) {
  std::vector<FlowRecord> out;
  FlowRecord r;
  while (source.next(r)) out.push_back(r);
  return out;
}

}  // namespace faacflow
