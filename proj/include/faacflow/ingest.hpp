#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "faacflow/rng.hpp"

namespace faacflow {

enum class ColumnKind { categorical, numeric };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

/// Raw value of one variable. `std::monostate` is the reserved missing
/// marker (an empty CSV field).
using FlowValue = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const FlowValue& v) { return std::holds_alternative<std::monostate>(v); }

/// Column layout shared by all records parsed with one schema. The label
/// column is not part of the layout.
struct VariableLayout {
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> find(std::string_view name) const;
};

/// Per-dataset description of a raw flow file.
struct SourceSchema {
  std::string dataset_id;
  std::vector<ColumnSpec> columns;  // includes the label column
  std::string label_column;
  std::map<std::string, std::string> class_map;  // source class -> canonical class
  std::optional<std::size_t> record_count_hint;

  /// Throws ConfigError on duplicate columns or a missing label column.
  void validate() const;
  std::size_t label_position() const;
  /// Canonical class for a source label; throws SchemaError if unmapped.
  const std::string& canonical(std::string_view source_label) const;
  std::shared_ptr<const VariableLayout> make_layout() const;
};

/// One raw flow. Immutable once produced by a FlowSource.
struct FlowRecord {
  std::shared_ptr<const VariableLayout> layout;
  std::vector<FlowValue> values;  // aligned with layout->names
  std::string source_label;
  std::string label;  // canonical class name
  std::string origin;

  const FlowValue* find(std::string_view variable) const;
  bool operator==(const FlowRecord& other) const;
};

/// Ordered canonical classes; index 0 is always Background.
struct CanonicalTaxonomy {
  std::vector<std::string> classes{"Background", "DoS", "PortScanning"};

  void validate() const;
  std::optional<int> index_of(std::string_view name) const;
};

inline constexpr std::string_view kBackground = "Background";

/// Pull-style record stream.
class FlowSource {
 public:
  virtual ~FlowSource() = default;
  /// Writes the next record into `out`; false once the stream is exhausted.
  virtual bool next(FlowRecord& out) = 0;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

/// Streaming CSV parser. Memory use does not depend on the file length.
/// Malformed rows are skipped and reported; an unmapped class label throws
/// SchemaError.
class CsvFlowReader final : public FlowSource {
 public:
  using ErrorHandler = std::function<void(const RowError&)>;

  CsvFlowReader(std::istream& in, const SourceSchema& schema, ErrorHandler on_error = {});

  bool next(FlowRecord& out) override;

  /// First kMaxStoredErrors row errors; error_count() has the total.
  const std::vector<RowError>& errors() const { return errors_; }
  std::size_t error_count() const { return error_count_; }
  std::size_t records_read() const { return records_; }

  static constexpr std::size_t kMaxStoredErrors = 100;

 private:
  void report(std::size_t line, std::string message);
  bool parse_row(FlowRecord& out);

  std::istream& in_;
  const SourceSchema& schema_;
  std::shared_ptr<const VariableLayout> layout_;
  std::vector<std::size_t> value_slot_;  // csv column -> layout slot, npos for label
  std::size_t label_pos_;
  ErrorHandler on_error_;
  std::string line_;
  std::vector<std::string> fields_;
  std::size_t line_no_ = 0;
  std::size_t records_ = 0;
  std::size_t error_count_ = 0;
  std::vector<RowError> errors_;
};

/// Writes records in the canonical CSV form (schema column order, source
/// label in the label column, missing values as empty fields, numbers in
/// shortest round-trip form).
class FlowCsvWriter {
 public:
  FlowCsvWriter(std::ostream& out, const SourceSchema& schema, bool header = true);
  void write(const FlowRecord& record);

 private:
  std::ostream& out_;
  const SourceSchema& schema_;
  std::size_t label_pos_;
};

/// Value distribution of one variable for synthetic generation: either
/// weighted categorical tokens or a weighted mixture of uniform ranges.
struct ValueDistribution {
  struct Token {
    std::string value;
    double weight = 1.0;
  };
  struct Range {
    double lo = 0.0;
    double hi = 1.0;
    double weight = 1.0;
    bool integer = false;  // floor the draw
  };
  std::vector<Token> tokens;
  std::vector<Range> ranges;
  double missing_rate = 0.0;
};

struct SyntheticProfile {
  /// Source class label -> fraction, in declaration order.
  std::vector<std::pair<std::string, double>> proportions;
  /// Column -> distribution used by every class unless overridden.
  std::map<std::string, ValueDistribution> base;
  /// Class -> column -> override.
  std::map<std::string, std::map<std::string, ValueDistribution>> per_class;
  /// Mean run length of consecutive records of a class (default 1, i.i.d.).
  std::map<std::string, double> burst_length;
  std::size_t total_records = 0;
  std::uint64_t seed = 0;

  /// Throws ConfigError if proportions are negative or do not sum to 1.
  void validate() const;
};

/// Emits `profile.total_records` records. Output is a pure function of
/// (profile, schema).
class SyntheticGenerator final : public FlowSource {
 public:
  SyntheticGenerator(SyntheticProfile profile, const SourceSchema& schema);

  bool next(FlowRecord& out) override;

 private:
  struct ClassPlan {
    std::string source_label;
    std::string canonical;
    double continue_prob = 0.0;
    std::vector<const ValueDistribution*> columns;  // per layout slot
  };

  FlowValue draw(const ValueDistribution& dist, ColumnKind kind);

  SyntheticProfile profile_;
  const SourceSchema& schema_;
  std::shared_ptr<const VariableLayout> layout_;
  std::vector<ClassPlan> classes_;
  std::vector<double> segment_cdf_;
  Rng rng_;
  std::size_t emitted_ = 0;
  std::size_t current_ = 0;
  bool in_run_ = false;
};

/// Canonical class -> record count.
std::map<std::string, std::size_t> class_histogram(FlowSource& records);
std::map<std::string, std::size_t> class_histogram(std::span<const FlowRecord> records);

/// Drains a source into memory. Intended for tests and small inputs.
std::vector<FlowRecord> collect(FlowSource& source);

}  // namespace faacflow
