#include <json.hpp>

#include "faacflow/errors.hpp"
#include "faacflow/learning.hpp"

namespace faacflow {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "faacflow-model/1";

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix mat_from(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  Matrix m(r, c);
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r) throw DataError("model: matrix row count mismatch");
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto row = data[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != c) throw DataError("model: matrix column count mismatch");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    if (n.feature < 0)
      nodes.push_back({{"counts", n.counts}});
    else
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
  }
  return {{"seed", t.seed}, {"depth", t.depth}, {"nodes", nodes}};
}

DecisionTree tree_from(const json& j, std::size_t n_classes, int n_features) {
  DecisionTree t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.depth = j.at("depth").get<int>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    if (n.contains("counts")) {
      node.counts = n.at("counts").get<std::vector<std::uint32_t>>();
      if (node.counts.size() != n_classes) throw DataError("model: leaf class count mismatch");
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      if (node.feature >= n_features) throw DataError("model: split feature out of range");
    }
    t.nodes.push_back(std::move(node));
  }
  const auto size = static_cast<int>(t.nodes.size());
  if (size == 0) throw DataError("model: empty tree");
  for (const auto& n : t.nodes)
    if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
      throw DataError("model: tree child index out of range");
  return t;
}

}  // namespace

std::string serialize_model(const PipelineModel& model) {
  json j;
  j["format"] = kFormat;
  j["kind"] = to_string(model.kind);
  j["hyperparams"] = json::parse(model.hyperparams.to_json(model.kind));
  j["input_features"] = model.input_features;
  j["classes"] = model.classes;
  j["lasso"] = {{"lambda", model.lasso.lambda},
                {"classes", model.lasso.classes},
                {"coef", mat_json(model.lasso.coef)},
                {"intercept", vec_json(model.lasso.intercept)},
                {"support", model.lasso.support},
                {"converged", model.lasso.converged}};
  j["standardizer"] = {{"mean", vec_json(model.standardizer.mean)}, {"stddev", vec_json(model.standardizer.stddev)}};
  if (const auto* lr = std::get_if<LRModel>(&model.classifier)) {
    j["classifier"] = {{"classes", lr->classes},
                       {"weights", mat_json(lr->weights)},
                       {"intercepts", vec_json(lr->intercepts)},
                       {"ridge_fallback", lr->ridge_fallback},
                       {"converged", lr->converged}};
  } else {
    const auto& rf = std::get<RFModel>(model.classifier);
    json trees = json::array();
    for (const auto& t : rf.trees) trees.push_back(tree_json(t));
    j["classifier"] = {{"classes", rf.classes},
                       {"n_features", rf.n_features},
                       {"features_per_split", rf.features_per_split},
                       {"max_depth", rf.max_depth},
                       {"min_leaf", rf.min_leaf},
                       {"bootstrap", rf.bootstrap},
                       {"seed", rf.seed},
                       {"trees", trees}};
  }
  const auto& p = model.provenance;
  j["provenance"] = {{"dataset", p.dataset},
                     {"repetition", p.repetition},
                     {"fold", p.fold},
                     {"seed", p.seed},
                     {"training_rows", p.training_rows},
                     {"training_digest", p.training_digest}};
  return j.dump(1);
}

PipelineModel deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model: invalid JSON: ") + e.what());
  }
  if (j.value("format", std::string{}) != kFormat) throw DataError("model: unsupported artifact format");
  try {
    PipelineModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto& hp = j.at("hyperparams");
    m.hyperparams.lambda = hp.at("lambda").get<double>();
    if (m.kind == ModelKind::rf) {
      m.hyperparams.trees = hp.at("trees").get<int>();
      m.hyperparams.max_depth = hp.at("max_depth").get<int>();
      m.hyperparams.features_per_split = hp.at("features_per_split").get<int>();
    }
    m.input_features = j.at("input_features").get<std::size_t>();
    m.classes = j.at("classes").get<std::vector<int>>();

    const auto& l = j.at("lasso");
    m.lasso.lambda = l.at("lambda").get<double>();
    m.lasso.classes = l.at("classes").get<std::vector<int>>();
    m.lasso.coef = mat_from(l.at("coef"));
    m.lasso.intercept = vec_from(l.at("intercept"));
    m.lasso.support = l.at("support").get<std::vector<int>>();
    m.lasso.converged = l.at("converged").get<bool>();
    for (int s : m.lasso.support)
      if (s < 0 || static_cast<std::size_t>(s) >= m.input_features) throw DataError("model: support index out of range");

    m.standardizer.mean = vec_from(j.at("standardizer").at("mean"));
    m.standardizer.stddev = vec_from(j.at("standardizer").at("stddev"));
    if (m.standardizer.mean.size() != static_cast<Eigen::Index>(m.lasso.support.size()) ||
        m.standardizer.stddev.size() != m.standardizer.mean.size())
      throw DataError("model: standardizer width does not match the support");

    const auto& c = j.at("classifier");
    if (m.kind == ModelKind::lr) {
      LRModel lr;
      lr.classes = c.at("classes").get<std::vector<int>>();
      lr.weights = mat_from(c.at("weights"));
      lr.intercepts = vec_from(c.at("intercepts"));
      lr.ridge_fallback = c.at("ridge_fallback").get<bool>();
      lr.converged = c.at("converged").get<bool>();
      if (lr.weights.cols() != static_cast<Eigen::Index>(m.lasso.support.size()))
        throw DataError("model: classifier width does not match the support");
      m.classifier = std::move(lr);
    } else {
      RFModel rf;
      rf.classes = c.at("classes").get<std::vector<int>>();
      rf.n_features = c.at("n_features").get<int>();
      rf.features_per_split = c.at("features_per_split").get<int>();
      rf.max_depth = c.at("max_depth").get<int>();
      rf.min_leaf = c.at("min_leaf").get<int>();
      rf.bootstrap = c.at("bootstrap").get<bool>();
      rf.seed = c.at("seed").get<std::uint64_t>();
      if (rf.n_features != static_cast<int>(m.lasso.support.size()))
        throw DataError("model: classifier width does not match the support");
      for (const auto& t : c.at("trees")) rf.trees.push_back(tree_from(t, rf.classes.size(), rf.n_features));
      m.classifier = std::move(rf);
    }

    const auto& p = j.at("provenance");
    m.provenance.dataset = p.at("dataset").get<std::string>();
    m.provenance.repetition = p.at("repetition").get<int>();
    m.provenance.fold = p.at("fold").get<int>();
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.training_rows = p.at("training_rows").get<std::size_t>();
    m.provenance.training_digest = p.at("training_digest").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: malformed artifact: ") + e.what());
  }
}

}  // namespace faacflow
