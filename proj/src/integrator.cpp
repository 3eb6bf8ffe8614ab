#include "faacflow/integrator.hpp"

#include <algorithm>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

DerivedDataset integrate(const IntegrationSpec& spec) {
  if (spec.inputs.empty()) throw ConfigError("integrate: no inputs");
  if (spec.shared_classes.empty()) throw ConfigError("integrate: shared class set is empty");

  const DerivedDataset& first = spec.inputs.front().get();
  DerivedDataset out;
  out.feature_names = first.feature_names;
  out.classes = first.classes;

  for (const auto& c : spec.shared_classes)
    if (!out.class_index(c)) throw ConfigError("integrate: shared class '" + c + "' missing from taxonomy");

  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const DerivedDataset& in = spec.inputs[i].get();
    if (in.feature_names != out.feature_names)
      throw DataError("integrate: incompatible derived schemas (input " + std::to_string(i) + ")");

    // Input label index -> output label index, -1 when filtered out.
    std::vector<int> remap(in.classes.size(), -1);
    for (const auto& c : spec.shared_classes) {
      auto src = in.class_index(c);
      if (!src) throw ConfigError("integrate: shared class '" + c + "' missing from input " + std::to_string(i));
      remap[static_cast<std::size_t>(*src)] = *out.class_index(c);
    }

    for (const auto& row : in.rows) {
      int label = remap.at(static_cast<std::size_t>(row.label));
      if (label < 0) continue;
      if (row.batch_size == 0) throw DataError("integrate: row with zero batch size from '" + row.origin + "'");
      for (double c : row.counters)
        if (!(c >= 0.0 && c <= 1.0))
          throw DataError("integrate: counter outside [0,1] in a row from '" + row.origin + "'");
      DerivedObservation copy = row;
      copy.label = label;
      out.rows.push_back(std::move(copy));
    }
  }
  if (out.rows.empty()) throw DataError("integrate: no rows belong to the shared classes");
  return out;
}

DistributionReport distribution_report(const DerivedDataset& ds) {
  DistributionReport rep;
  rep.total = ds.rows.size();
  std::vector<std::size_t> by_class(ds.classes.size(), 0);
  for (const auto& r : ds.rows) {
    ++by_class.at(static_cast<std::size_t>(r.label));
    auto it = std::find_if(rep.origins.begin(), rep.origins.end(),
                           [&](const DistributionReport::Entry& e) { return e.name == r.origin; });
    if (it == rep.origins.end())
      rep.origins.push_back({r.origin, 1, 0.0});
    else
      ++it->count;
  }
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c] > 0) rep.classes.push_back({ds.classes[c], by_class[c], 0.0});
  const double total = static_cast<double>(rep.total);
  for (auto& e : rep.classes) e.fraction = static_cast<double>(e.count) / total;
  for (auto& e : rep.origins) e.fraction = static_cast<double>(e.count) / total;
  return rep;
}

void write_distribution_csv(std::ostream& out, const DistributionReport& report) {
  out << "grouping,name,count,fraction\n";
  for (const auto& e : report.classes)
    out << "class," << csv::escape(e.name) << ',' << e.count << ',' << csv::format_sig(e.fraction, 9) << '\n';
  for (const auto& e : report.origins)
    out << "origin," << csv::escape(e.name) << ',' << e.count << ',' << csv::format_sig(e.fraction, 9) << '\n';
}

}  // namespace faacflow
