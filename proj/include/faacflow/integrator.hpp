#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "faacflow/faac.hpp"

namespace faacflow {

struct IntegrationSpec {
  std::vector<std::reference_wrapper<const DerivedDataset>> inputs;
  std::vector<std::string> shared_classes{"Background", "DoS", "PortScanning"};
  std::string name = "UNK21";
};

/// Row-wise concatenation of the inputs restricted to the shared classes.
/// Rows keep their origin and batch size and are not rescaled; the class
/// list of the first input is used for the output.
DerivedDataset integrate(const IntegrationSpec& spec);

struct DistributionReport {
  struct Entry {
    std::string name;
    std::size_t count = 0;
    double fraction = 0.0;
  };
  std::size_t total = 0;
  std::vector<Entry> classes;  // taxonomy order, classes with rows only
  std::vector<Entry> origins;  // first-appearance order
};

DistributionReport distribution_report(const DerivedDataset& ds);

/// `grouping,name,count,fraction`
void write_distribution_csv(std::ostream& out, const DistributionReport& report);

}  // namespace faacflow
