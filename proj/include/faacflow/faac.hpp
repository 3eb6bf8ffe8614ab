#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faacflow/ingest.hpp"

namespace faacflow {

enum class MatcherKind { equals, in_set, numeric_range, missing, catch_all };

/// Predicate on a single variable's value.
///
/// Tokens compare as strings against categorical values and as numbers
/// against numeric values. `numeric_range` is half-open [lo, hi).
/// `catch_all` is resolved per variable: it matches a present value that no
/// other feature on the same variable matched.
struct Matcher {
  MatcherKind kind = MatcherKind::catch_all;
  std::vector<std::string> tokens;
  double lo = 0.0;
  double hi = 0.0;

  static Matcher equals(std::string token);
  static Matcher in_set(std::vector<std::string> tokens);
  static Matcher range(double lo, double hi);
  static Matcher missing();
  static Matcher catch_all();
};

struct FeatureSpec {
  std::string name;
  std::string variable;
  Matcher matcher;
  bool allow_overlap = false;
};

struct FaacConfig {
  std::vector<FeatureSpec> features;
  /// dataset id -> (logical variable -> that dataset's column name)
  std::map<std::string, std::map<std::string, std::string>> aliases;
  CanonicalTaxonomy taxonomy;
  /// Attack classes in tie-break order; unlisted classes follow in
  /// taxonomy order.
  std::vector<std::string> class_priority;

  /// Checks feature names, matcher arguments and per-variable overlap.
  void validate() const;
  std::vector<std::string> feature_names() const;
  std::string_view column_for(std::string_view origin, std::string_view variable) const;
};

struct BatchPlan {
  std::size_t records = 0;       // N
  std::size_t target_rows = 0;   // M
  std::size_t batch_size = 0;    // B = floor(N / M)
  std::size_t full_batches = 0;  // floor(N / B)
  std::size_t dropped_tail = 0;  // N mod B
};

/// Throws ConfigError when N < M ("batch size would be zero") or M == 0.
BatchPlan plan_batches(std::size_t records, std::size_t target_rows);

struct DerivedObservation {
  std::vector<double> counters;
  int label = 0;  // taxonomy index
  std::string origin;
  std::size_t batch_size = 0;

  bool operator==(const DerivedObservation&) const = default;
};

struct OriginSummary {
  std::string origin;
  std::size_t rows = 0;
  std::size_t batch_size = 0;
};

struct DerivedDataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;  // taxonomy used for row labels
  std::vector<DerivedObservation> rows;

  std::vector<OriginSummary> provenance() const;
  std::optional<int> class_index(std::string_view name) const;
  bool operator==(const DerivedDataset&) const = default;
};

/// Turns batches of raw records into counter rows. Holds the compiled
/// per-variable matcher groups; safe to share across threads.
class BatchAggregator {
 public:
  explicit BatchAggregator(FaacConfig config);

  /// All records must share one origin; the batch length is the batch size.
  DerivedObservation aggregate(std::span<const FlowRecord> batch) const;

  /// Label rule alone, given per-class counts indexed by taxonomy.
  int label_for_counts(std::span<const std::size_t> class_counts) const;

  const FaacConfig& config() const { return config_; }

 private:
  struct CompiledMatcher {
    std::size_t feature = 0;
    MatcherKind kind = MatcherKind::catch_all;
    std::vector<std::string> tokens;
    std::vector<double> numeric_tokens;
    double lo = 0.0;
    double hi = 0.0;
    bool matches(const FlowValue& v) const;
  };
  struct VariableGroup {
    std::string variable;
    std::vector<CompiledMatcher> matchers;  // excluding catch_all
    std::optional<std::size_t> catch_all;
  };

  FaacConfig config_;
  std::vector<VariableGroup> groups_;
  std::vector<int> priority_rank_;  // by taxonomy index, lower wins
};

DerivedObservation aggregate_batch(std::span<const FlowRecord> batch, const FaacConfig& config);

/// Consumes `plan.full_batches * plan.batch_size` records from the source in
/// order; the trailing remainder is never read.
DerivedDataset derive_dataset(FlowSource& records, std::size_t record_count, std::size_t target_rows,
                              const FaacConfig& config);
DerivedDataset derive_dataset(std::span<const FlowRecord> records, std::size_t target_rows,
                              const FaacConfig& config);

/// CSV with header `<features...>,label,origin,batch_size`; counters use 9
/// significant digits and labels are written as class names.
void write_derived_csv(std::ostream& out, const DerivedDataset& ds);

/// Labels are resolved against `classes`; when empty the class list is
/// Background followed by labels in order of first appearance.
DerivedDataset read_derived_csv(std::istream& in, std::vector<std::string> classes = {});

}  // namespace faacflow
