#include <doctest.h>

#include <map>
#include <sstream>

#include "faacflow/errors.hpp"
#include "faacflow/faac.hpp"
#include "support.hpp"

using namespace faacflow;
using namespace faacflow::test;

TEST_SUITE("faac") {

TEST_CASE("plan_batches reproduces the reference batch sizes") {
  CHECK(plan_batches(2540044, 10000).batch_size == 254);
  CHECK(plan_batches(2540044, 20000).batch_size == 127);

  const BatchPlan even = plan_batches(100, 10);
  CHECK(even.batch_size == 10);
  CHECK(even.full_batches == 10);
  CHECK(even.dropped_tail == 0);

  const BatchPlan tail = plan_batches(105, 10);
  CHECK(tail.batch_size == 10);
  CHECK(tail.full_batches == 10);
  CHECK(tail.dropped_tail == 5);
}

TEST_CASE("plan_batches matches the integer-division oracle") {
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 1 + rng.below(50000);
    const std::size_t n = m + rng.below(5000000);
    const BatchPlan p = plan_batches(n, m);
    const std::size_t b = n / m;
    REQUIRE(p.batch_size == b);
    REQUIRE(p.full_batches == n / b);
    REQUIRE(p.dropped_tail == n - (n / b) * b);
    REQUIRE(p.full_batches >= m);
    REQUIRE(p.dropped_tail < b);
  }
}

TEST_CASE("plan_batches: larger M never increases B") {
  for (std::size_t m = 1; m < 2000; ++m)
    REQUIRE(plan_batches(123457, m + 1).batch_size <= plan_batches(123457, m).batch_size);
}

TEST_CASE("plan_batches rejects N < M and M = 0") {
  CHECK_THROWS_AS(plan_batches(9, 10), ConfigError);
  CHECK_THROWS_WITH(plan_batches(9, 10), doctest::Contains("batch size would be zero"));
  CHECK_THROWS_AS(plan_batches(9, 0), ConfigError);
}

TEST_CASE("uniform batch: one counter at 1, Background label") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> batch(254, make_record(layout, std::string("tcp"), 80.0, "Background"));
  const DerivedObservation obs = aggregate_batch(batch, toy_config());
  CHECK(obs.counters[0] == 1.0);
  CHECK(obs.counters[4] == 1.0);
  CHECK(obs.label == 0);
  CHECK(obs.batch_size == 254);
}

TEST_CASE("in_set counter is a fraction of the batch") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> batch{make_record(layout, std::string("tcp"), 53.0, "Background"),
                                make_record(layout, std::string("tcp"), 80.0, "Background"),
                                make_record(layout, std::string("tcp"), 443.0, "Background"),
                                make_record(layout, std::string("tcp"), 22.0, "Background")};
  const auto obs = aggregate_batch(batch, toy_config());
  CHECK(obs.counters[4] == 0.5);
  CHECK(obs.counters[6] == 0.5);  // 53 and 22 fall to catch_all
}

TEST_CASE("catch_all skips missing values; missing matcher counts them") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> batch{make_record(layout, FlowValue{}, FlowValue{}, "Background"),
                                make_record(layout, std::string("gre"), 2000.0, "Background")};
  const auto obs = aggregate_batch(batch, toy_config());
  CHECK(obs.counters[2] == 0.5);  // proto_other: gre only
  CHECK(obs.counters[3] == 0.5);  // proto_missing
  CHECK(obs.counters[5] == 0.5);  // dport_high: 2000
  CHECK(obs.counters[7] == 0.5);  // dport_missing
}

TEST_CASE("numeric range is half-open") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> batch{make_record(layout, std::string("tcp"), 1023.0, "Background"),
                                make_record(layout, std::string("tcp"), 1024.0, "Background"),
                                make_record(layout, std::string("tcp"), 65535.0, "Background"),
                                make_record(layout, std::string("tcp"), 65536.0, "Background")};
  const auto obs = aggregate_batch(batch, toy_config());
  CHECK(obs.counters[5] == 0.5);
  CHECK(obs.counters[6] == 0.5);
}

TEST_CASE("a column absent from the schema counts as missing") {
  SourceSchema s;
  s.dataset_id = "narrow";
  s.columns = {{"proto", ColumnKind::categorical}, {"label", ColumnKind::categorical}};
  s.label_column = "label";
  FlowRecord r;
  r.layout = s.make_layout();
  r.values = {std::string("udp")};
  r.label = "Background";
  r.origin = "narrow";
  const auto obs = aggregate_batch(std::vector<FlowRecord>{r}, toy_config());
  CHECK(obs.counters[1] == 1.0);
  CHECK(obs.counters[7] == 1.0);
}

TEST_CASE("aliases redirect a variable to the source's column") {
  SourceSchema s;
  s.dataset_id = "other";
  s.columns = {{"protocol", ColumnKind::categorical}, {"port", ColumnKind::numeric}, {"cls", ColumnKind::categorical}};
  s.label_column = "cls";
  FaacConfig cfg = toy_config();
  cfg.aliases["other"] = {{"proto", "protocol"}, {"dport", "port"}};
  FlowRecord r;
  r.layout = s.make_layout();
  r.values = {std::string("udp"), 443.0};
  r.label = "Background";
  r.origin = "other";
  const auto obs = aggregate_batch(std::vector<FlowRecord>{r}, cfg);
  CHECK(obs.counters[1] == 1.0);
  CHECK(obs.counters[4] == 1.0);
  CHECK(obs.counters.size() == cfg.features.size());
}

TEST_CASE("label rule: predominant attack, priority on ties") {
  BatchAggregator agg(toy_config());
  const std::vector<std::size_t> dos{250, 4, 0};
  const std::vector<std::size_t> tie{248, 3, 3};
  const std::vector<std::size_t> scan{240, 3, 11};
  const std::vector<std::size_t> clean{254, 0, 0};
  CHECK(agg.label_for_counts(dos) == 1);
  CHECK(agg.label_for_counts(tie) == 1);
  CHECK(agg.label_for_counts(scan) == 2);
  CHECK(agg.label_for_counts(clean) == 0);

  FaacConfig reversed = toy_config();
  reversed.class_priority = {"PortScanning", "DoS"};
  CHECK(BatchAggregator(reversed).label_for_counts(tie) == 2);
}

TEST_CASE("label rule matches a brute-force recount on random batches") {
  FaacConfig cfg = toy_config();
  cfg.taxonomy.classes = {"Background", "DoS", "PortScanning", "Spam"};
  cfg.class_priority = {"Spam", "DoS"};
  const std::vector<int> order{3, 1, 2};  // priority, then taxonomy order
  BatchAggregator agg(cfg);
  const auto layout = toy_schema().make_layout();
  Rng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t b = 1 + rng.below(12);
    std::vector<FlowRecord> batch;
    for (std::size_t i = 0; i < b; ++i) batch.push_back(random_record(rng, layout, cfg.taxonomy.classes, 0.2));
    std::map<std::string, std::size_t> count;
    for (const auto& r : batch) ++count[r.label];
    int expected = 0;
    std::size_t best = 0;
    for (int c : order) {
      const std::size_t n = count[cfg.taxonomy.classes[c]];
      if (n > best) {
        best = n;
        expected = c;
      }
    }
    REQUIRE(agg.aggregate(batch).label == expected);
  }
}

TEST_CASE("mixed origins inside a batch are rejected") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> batch{make_record(layout, std::string("tcp"), 80.0, "Background", "a"),
                                make_record(layout, std::string("tcp"), 80.0, "Background", "b")};
  CHECK_THROWS_AS(aggregate_batch(batch, toy_config()), DataError);
}

TEST_CASE("config validation") {
  FaacConfig dup = toy_config();
  dup.features.push_back({"proto_tcp", "proto", Matcher::equals("x")});
  CHECK_THROWS_AS(dup.validate(), ConfigError);

  FaacConfig overlap = toy_config();
  overlap.features.push_back({"dport_mid", "dport", Matcher::range(1000, 2000)});
  CHECK_THROWS_AS(overlap.validate(), ConfigError);
  overlap.features[5].allow_overlap = true;
  overlap.features.back().allow_overlap = true;
  CHECK_NOTHROW(overlap.validate());

  FaacConfig token_in_range = toy_config();
  token_in_range.features.push_back({"dport_8080", "dport", Matcher::equals("8080")});
  CHECK_THROWS_AS(token_in_range.validate(), ConfigError);

  FaacConfig shared_token = toy_config();
  shared_token.features.push_back({"proto_tcp2", "proto", Matcher::in_set({"tcp", "sctp"})});
  CHECK_THROWS_AS(shared_token.validate(), ConfigError);

  FaacConfig bad_range = toy_config();
  bad_range.features.push_back({"r", "bytes", Matcher::range(5, 5)});
  CHECK_THROWS_AS(bad_range.validate(), ConfigError);

  FaacConfig bad_priority = toy_config();
  bad_priority.class_priority = {"Worms"};
  CHECK_THROWS_AS(bad_priority.validate(), ConfigError);
}

TEST_CASE("derive_dataset: consecutive batches, tail dropped") {
  const auto layout = toy_schema().make_layout();
  std::vector<FlowRecord> recs;
  for (int i = 0; i < 105; ++i)
    recs.push_back(make_record(layout, std::string(i < 10 ? "udp" : "tcp"), 80.0, i == 57 ? "DoS" : "Background"));
  const DerivedDataset ds = derive_dataset(recs, 10, toy_config());
  REQUIRE(ds.rows.size() == 10);
  CHECK(ds.rows[0].counters[1] == 1.0);
  CHECK(ds.rows[1].counters[1] == 0.0);
  for (std::size_t b = 0; b < ds.rows.size(); ++b) {
    CHECK(ds.rows[b].batch_size == 10);
    CHECK(ds.rows[b].label == (b == 5 ? 1 : 0));
  }
  CHECK(ds.provenance().size() == 1);
  CHECK(ds.provenance()[0].rows == 10);
}

TEST_CASE("derive_dataset: streaming and in-memory paths agree") {
  const auto schema = toy_schema();
  const auto layout = schema.make_layout();
  Rng rng(3);
  std::vector<FlowRecord> recs;
  for (int i = 0; i < 997; ++i) recs.push_back(random_record(rng, layout, {"Background", "DoS", "PortScanning"}, 0.05));
  std::ostringstream csv_text;
  {
    FlowCsvWriter w(csv_text, schema);
    for (auto r : recs) {
      r.source_label = r.label == "Background" ? "bg" : r.label == "DoS" ? "dos" : "scan";
      w.write(r);
    }
  }
  std::istringstream in(csv_text.str());
  CsvFlowReader reader(in, schema);
  const DerivedDataset streamed = derive_dataset(reader, recs.size(), 30, toy_config());
  const DerivedDataset direct = derive_dataset(recs, 30, toy_config());
  CHECK(streamed == direct);
}

TEST_CASE("derive_dataset: truncated stream is a data error") {
  const auto schema = toy_schema();
  std::istringstream in("proto,dport,label\ntcp,80,bg\ntcp,80,bg\n");
  CsvFlowReader reader(in, schema);
  CHECK_THROWS_AS(derive_dataset(reader, 10, 2, toy_config()), DataError);
}

TEST_CASE("derived CSV round trip and header") {
  const auto layout = toy_schema().make_layout();
  Rng rng(5);
  std::vector<FlowRecord> recs;
  for (int i = 0; i < 300; ++i) recs.push_back(random_record(rng, layout, {"Background", "DoS", "PortScanning"}, 0.1));
  const DerivedDataset ds = derive_dataset(recs, 30, toy_config());
  std::ostringstream out;
  write_derived_csv(out, ds);
  const std::string text = out.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "proto_tcp,proto_udp,proto_other,proto_missing,dport_web,dport_high,dport_other,dport_missing,label,origin,"
        "batch_size");
  std::istringstream in(text);
  const DerivedDataset back = read_derived_csv(in, ds.classes);
  CHECK(back.feature_names == ds.feature_names);
  REQUIRE(back.rows.size() == ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    CHECK(back.rows[i].label == ds.rows[i].label);
    for (std::size_t j = 0; j < ds.rows[i].counters.size(); ++j)
      CHECK(back.rows[i].counters[j] == doctest::Approx(ds.rows[i].counters[j]).epsilon(1e-9));
  }
}

TEST_CASE("derived CSV reader errors") {
  std::istringstream bad_header("a,b,c\n");
  CHECK_THROWS_AS(read_derived_csv(bad_header), DataError);
  std::istringstream bad_count("f,label,origin,batch_size\n0.5,Background,x\n");
  CHECK_THROWS_WITH_AS(read_derived_csv(bad_count), doctest::Contains("line 2"), DataError);
  std::istringstream bad_class("f,label,origin,batch_size\n0.5,Worms,x,4\n");
  CHECK_THROWS_AS(read_derived_csv(bad_class, {"Background", "DoS"}), DataError);
  std::istringstream inferred("f,label,origin,batch_size\n0.5,Worms,x,4\n0.25,Background,x,4\n");
  const auto ds = read_derived_csv(inferred);
  CHECK(ds.classes == std::vector<std::string>{"Background", "Worms"});
}

TEST_CASE("invariants on random batches") {
  const FaacConfig cfg = toy_config();
  BatchAggregator agg(cfg);
  const auto layout = toy_schema().make_layout();
  Rng rng(99);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t b = 1 + rng.below(40);
    std::vector<FlowRecord> batch;
    bool clean = true;
    for (std::size_t i = 0; i < b; ++i) {
      batch.push_back(random_record(rng, layout, cfg.taxonomy.classes, 0.03));
      clean = clean && batch.back().label == "Background";
    }
    const auto obs = agg.aggregate(batch);
    double proto = 0, dport = 0;
    for (std::size_t j = 0; j < obs.counters.size(); ++j) {
      REQUIRE(obs.counters[j] >= 0.0);
      REQUIRE(obs.counters[j] <= 1.0);
      (j < 4 ? proto : dport) += obs.counters[j] * static_cast<double>(b);
    }
    REQUIRE(proto == static_cast<double>(b));
    REQUIRE(dport == static_cast<double>(b));
    REQUIRE((obs.label == 0) == clean);
  }
}

}  // TEST_SUITE
