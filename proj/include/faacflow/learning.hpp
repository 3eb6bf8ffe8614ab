#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace faacflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Class labels as taxonomy indices.
using Labels = std::vector<int>;

/// Sorted distinct labels.
std::vector<int> distinct_classes(std::span<const int> y);

Matrix select_rows(const Matrix& X, std::span<const std::size_t> rows);
Matrix select_columns(const Matrix& X, std::span<const int> cols);
Labels select_labels(std::span<const int> y, std::span<const std::size_t> rows);

// ---------------------------------------------------------------- z-score

/// Population mean / standard deviation per column, from training rows.
struct StandardizerParams {
  Vector mean;
  Vector stddev;

  StandardizerParams restricted(std::span<const int> cols) const;
};

StandardizerParams fit_standardizer(const Matrix& X);
/// Columns with zero deviation map to zero. Throws on width mismatch.
Matrix apply_standardizer(const StandardizerParams& params, const Matrix& X);

// ------------------------------------------------------ logistic objective

struct SolverOptions {
  double opt_tol = 1e-6;
  int max_iter = 10000;
};

/// Mean binary log-loss of a linear model with intercept, plus an optional
/// l1 term on the weights and an optional ridge term (weights only).
/// `beta` holds the p weights followed by the intercept.
double logistic_objective(const Matrix& X, const Vector& y01, const Vector& beta, double l1 = 0.0,
                          double ridge = 0.0);
/// Gradient of the smooth part (log-loss + ridge) with respect to `beta`.
Vector logistic_gradient(const Matrix& X, const Vector& y01, const Vector& beta, double ridge = 0.0);

/// One-vs-all binary target for `cls`.
Vector one_vs_all_target(std::span<const int> y, int cls);

// --------------------------------------------------------------- LASSO

struct LassoResult {
  double lambda = 0.0;
  std::vector<int> classes;
  Matrix coef;       // classes x features
  Vector intercept;  // unpenalized, one per class
  std::vector<int> support;
  bool converged = true;
};

inline constexpr double kSupportEpsilon = 1e-8;

/// l1-penalized one-vs-all logistic regression, one problem per class, by
/// proximal Newton with coordinate descent on the quadratic model. The
/// support is the union over classes of |coef| > kSupportEpsilon.
LassoResult fit_lasso(const Matrix& X, std::span<const int> y, double lambda, const SolverOptions& opts = {});

/// Smallest lambda for which the all-zero solution satisfies the
/// optimality conditions for every class: max_j |x_j^T (y - mean(y))| / n.
double lasso_lambda_max(const Matrix& X, std::span<const int> y);

// ----------------------------------------------------- logistic regression

struct LRModel {
  std::vector<int> classes;
  Matrix weights;  // classes x features
  Vector intercepts;
  bool ridge_fallback = false;
  bool converged = true;
};

/// Unregularized one-vs-all logistic regression by damped Newton. Falls
/// back to a 1e-8 ridge when the Hessian is numerically singular.
LRModel fit_lr(const Matrix& X, std::span<const int> y, const SolverOptions& opts = {});

/// Per-row one-vs-all sigmoid scores divided by their sum.
Matrix predict_proba_lr(const LRModel& model, const Matrix& X);

/// Divides each row by its sum; an all-zero row becomes uniform.
void normalize_rows(Matrix& scores);

// ----------------------------------------------------------- random forest

struct RFParams {
  int trees = 100;
  int max_depth = 0;            // 0 = unlimited
  int features_per_split = 0;   // 0 = floor(sqrt(p)), at least 1
  int min_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<std::uint32_t> counts;  // per model class, leaves only
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::uint64_t seed = 0;
  int depth = 0;

  /// Index of the leaf reached by row `i` of X.
  int leaf_for(const Matrix& X, Eigen::Index i) const;
};

struct RFModel {
  std::vector<int> classes;
  std::vector<DecisionTree> trees;
  int n_features = 0;
  int features_per_split = 0;
  int max_depth = 0;
  int min_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Seed of tree `t` in a forest seeded with `forest_seed`.
std::uint64_t tree_seed(std::uint64_t forest_seed, int t);
/// Row indices drawn with replacement (size n) for a tree seed.
std::vector<std::size_t> bootstrap_indices(std::uint64_t tree_seed, std::size_t n);

/// Gini impurity of a class-count vector.
double gini(std::span<const double> counts);

RFModel fit_rf(const Matrix& X, std::span<const int> y, const RFParams& params);
/// Fraction of trees voting for each class (leaf majority, ties to the
/// lowest class index).
Matrix predict_proba_rf(const RFModel& model, const Matrix& X);

/// Arg-max per row, ties to the lowest column; returns model class labels.
std::vector<int> predict_classes(const Matrix& proba, std::span<const int> classes);

// ---------------------------------------------------------------- pipeline

enum class ModelKind { lr, rf };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct Hyperparams {
  double lambda = 1e-3;
  int trees = 100;
  int max_depth = 10;
  int features_per_split = 0;

  std::string to_json(ModelKind kind) const;
};

struct Provenance {
  std::string dataset;
  int repetition = -1;
  int fold = -1;
  std::uint64_t seed = 0;
  std::size_t training_rows = 0;
  std::string training_digest;  // hash of the exact rows used for fitting
};

/// LASSO support + z-score + classifier, fitted on one training set.
/// Standardizer and classifier are dimensioned to the LASSO support.
struct PipelineModel {
  ModelKind kind = ModelKind::lr;
  Hyperparams hyperparams;
  std::size_t input_features = 0;
  LassoResult lasso;
  StandardizerParams standardizer;
  std::variant<LRModel, RFModel> classifier;
  std::vector<int> classes;
  Provenance provenance;
};

/// Digest of a row subset, used to tag fitted artifacts with their
/// training data.
std::string training_digest(const Matrix& X, std::span<const int> y);

PipelineModel fit_pipeline(const Matrix& X, std::span<const int> y, ModelKind kind, const Hyperparams& hp,
                           std::uint64_t seed, Provenance provenance = {}, const SolverOptions& opts = {},
                           int threads = 1);
/// Probabilities over `model.classes` for raw (unstandardized) rows.
Matrix predict_proba(const PipelineModel& model, const Matrix& X);

/// Versioned JSON artifact. Serialization is deterministic.
std::string serialize_model(const PipelineModel& model);
PipelineModel deserialize_model(std::string_view text);

}  // namespace faacflow
