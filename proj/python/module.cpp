#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "faacflow/commands.hpp"
#include "faacflow/config.hpp"
#include "faacflow/errors.hpp"
#include "faacflow/evaluation.hpp"
#include "faacflow/faac.hpp"
#include "faacflow/integrator.hpp"
#include "faacflow/learning.hpp"
#include "faacflow/metrics.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace faacflow;

namespace {

DerivedDataset read_derived(const fs::path& path, const std::vector<std::string>& classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_derived_csv(in, classes);
}

py::dict dataset_dict(const DerivedDataset& ds) {
  py::dict d;
  d["X"] = to_matrix(ds);
  d["y"] = to_labels(ds);
  d["features"] = ds.feature_names;
  d["classes"] = ds.classes;
  std::vector<std::string> origins;
  for (const auto& r : ds.rows) origins.push_back(r.origin);
  d["origin"] = origins;
  return d;
}

RunConfig run_config(const fs::path& config, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  RunConfig run = load_run_config(config);
  if (seed) {
    run.seed = *seed;
    run.seed_set = true;
  }
  if (out) run.output_dir = fs::absolute(*out);
  return run;
}

}  // namespace

PYBIND11_MODULE(faacflow, m) {
  m.doc() = "FaaC derivation, dataset integration and NIDS model evaluation";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());

  m.def(
      "plan_batches",
      [](std::size_t records, std::size_t target_rows) {
        const BatchPlan p = plan_batches(records, target_rows);
        py::dict d;
        d["records"] = p.records;
        d["target_rows"] = p.target_rows;
        d["batch_size"] = p.batch_size;
        d["full_batches"] = p.full_batches;
        d["dropped_tail"] = p.dropped_tail;
        return d;
      },
      py::arg("records"), py::arg("target_rows"));

  m.def(
      "load_derived",
      [](const fs::path& path, const std::vector<std::string>& classes) {
        return dataset_dict(read_derived(path, classes));
      },
      py::arg("path"), py::arg("classes") = std::vector<std::string>{},
      "Derived CSV as a dict with X, y, features, classes and origin.");

  m.def(
      "integrate",
      [](const std::vector<fs::path>& inputs, const std::vector<std::string>& shared_classes,
         const std::vector<std::string>& taxonomy) {
        std::vector<DerivedDataset> data;
        for (const auto& p : inputs) data.push_back(read_derived(p, taxonomy));
        IntegrationSpec spec;
        spec.shared_classes = shared_classes;
        for (const auto& d : data) spec.inputs.emplace_back(d);
        return dataset_dict(integrate(spec));
      },
      py::arg("inputs"), py::arg("shared_classes") = std::vector<std::string>{"Background", "DoS", "PortScanning"},
      py::arg("taxonomy") = std::vector<std::string>{});

  py::class_<PipelineModel>(m, "Model")
      .def_property_readonly("kind", [](const PipelineModel& p) { return to_string(p.kind); })
      .def_property_readonly("classes", [](const PipelineModel& p) { return p.classes; })
      .def_property_readonly("support", [](const PipelineModel& p) { return p.lasso.support; })
      .def_property_readonly("training_digest", [](const PipelineModel& p) { return p.provenance.training_digest; })
      .def("predict_proba", [](const PipelineModel& p, const Matrix& X) { return predict_proba(p, X); })
      .def("to_json", [](const PipelineModel& p) { return serialize_model(p); })
      .def_static("from_json", [](const std::string& text) { return deserialize_model(text); });

  m.def(
      "fit",
      [](const Matrix& X, const std::vector<int>& y, const std::string& kind, double lam, int trees, int max_depth,
         int features_per_split, std::uint64_t seed) {
        Hyperparams hp{lam, trees, max_depth, features_per_split};
        return fit_pipeline(X, y, model_kind_from_string(kind), hp, seed);
      },
      py::arg("X"), py::arg("y"), py::arg("kind") = "rf", py::arg("lam") = 1e-3, py::arg("trees") = 100,
      py::arg("max_depth") = 10, py::arg("features_per_split") = 0, py::arg("seed") = 0,
      "LASSO selection, z-score and an LR or RF classifier.");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) { return auc_binary(scores, labels); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "weighted_auc",
      [](const std::vector<std::optional<double>>& auc, const std::vector<std::size_t>& q) {
        return weighted_avg_auc(auc, q);
      },
      py::arg("auc"), py::arg("q"));
  m.def(
      "wilcoxon",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const WilcoxonResult r = wilcoxon_signed_rank(a, b);
        py::dict d;
        d["n"] = r.n;
        d["W"] = r.w;
        d["p"] = r.p_two_sided;
        d["significant"] = r.significant;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "stratified_folds",
      [](const std::vector<int>& labels, int k, std::uint64_t seed) { return stratified_folds(labels, k, seed).fold_of; },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0);

  m.def(
      "run_pipeline",
      [](const fs::path& config, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
        py::gil_scoped_release release;
        commands::pipeline(run_config(config, seed, out));
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      "synth, derive, integrate, evaluate and report from one run config.");
  m.def(
      "derive",
      [](const fs::path& config, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
        return commands::derive(run_config(config, seed, out));
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
  m.def(
      "synth",
      [](const fs::path& config, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
        return commands::synth(run_config(config, seed, out));
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());

#ifdef FAACFLOW_VERSION
  m.attr("__version__") = FAACFLOW_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
