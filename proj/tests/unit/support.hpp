#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "faacflow/faac.hpp"
#include "faacflow/ingest.hpp"
#include "faacflow/learning.hpp"
#include "faacflow/rng.hpp"

namespace faacflow::test {

inline SourceSchema toy_schema(std::string id = "toy") {
  SourceSchema s;
  s.dataset_id = std::move(id);
  s.columns = {{"proto", ColumnKind::categorical}, {"dport", ColumnKind::numeric}, {"label", ColumnKind::categorical}};
  s.label_column = "label";
  s.class_map = {{"bg", "Background"}, {"dos", "DoS"}, {"scan", "PortScanning"}};
  return s;
}

/// proto and dport are each partitioned: every value (including missing)
/// lands in exactly one feature of its variable.
inline FaacConfig toy_config() {
  FaacConfig c;
  c.features = {
      {"proto_tcp", "proto", Matcher::equals("tcp")},
      {"proto_udp", "proto", Matcher::equals("udp")},
      {"proto_other", "proto", Matcher::catch_all()},
      {"proto_missing", "proto", Matcher::missing()},
      {"dport_web", "dport", Matcher::in_set({"80", "443"})},
      {"dport_high", "dport", Matcher::range(1024, 65536)},
      {"dport_other", "dport", Matcher::catch_all()},
      {"dport_missing", "dport", Matcher::missing()},
  };
  c.class_priority = {"DoS", "PortScanning"};
  return c;
}

inline FlowRecord make_record(const std::shared_ptr<const VariableLayout>& layout, FlowValue proto, FlowValue dport,
                              std::string label, std::string origin = "toy") {
  FlowRecord r;
  r.layout = layout;
  r.values = {std::move(proto), std::move(dport)};
  r.label = std::move(label);
  r.source_label = r.label;
  r.origin = std::move(origin);
  return r;
}

/// Random record over the toy schema, including missing values.
inline FlowRecord random_record(Rng& rng, const std::shared_ptr<const VariableLayout>& layout,
                                const std::vector<std::string>& classes, double attack_rate) {
  static const char* protos[] = {"tcp", "udp", "icmp", "gre"};
  FlowValue proto = rng.uniform() < 0.05 ? FlowValue{} : FlowValue{std::string(protos[rng.below(4)])};
  FlowValue dport;
  const double u = rng.uniform();
  if (u < 0.05)
    dport = FlowValue{};
  else if (u < 0.35)
    dport = rng.below(2) ? 80.0 : 443.0;
  else
    dport = static_cast<double>(rng.below(65536));
  std::string label = classes[0];
  if (rng.uniform() < attack_rate) label = classes[1 + rng.below(classes.size() - 1)];
  return make_record(layout, std::move(proto), std::move(dport), label);
}

/// Labelled Gaussian blobs: class c is centred at `sep * c` on the first
/// `informative` columns; the rest are noise.
inline std::pair<Matrix, Labels> blobs(std::size_t n, int p, int classes, int informative, double sep,
                                       std::uint64_t seed) {
  Rng rng(seed);
  auto normal = [&] {
    const double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  Matrix X(static_cast<Eigen::Index>(n), p);
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    for (int j = 0; j < p; ++j)
      X(static_cast<Eigen::Index>(i), j) = normal() + (j < informative ? sep * y[i] * (j % 2 ? -1.0 : 1.0) : 0.0);
  }
  return {X, y};
}

}  // namespace faacflow::test
