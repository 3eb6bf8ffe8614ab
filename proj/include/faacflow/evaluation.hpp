#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "faacflow/faac.hpp"
#include "faacflow/hyperopt.hpp"
#include "faacflow/learning.hpp"
#include "faacflow/metrics.hpp"

namespace faacflow {

inline constexpr const char* kSettingSingle = "single-dataset";
inline constexpr const char* kSettingCross = "cross-dataset";

struct FoldResult {
  std::string setting;
  std::string model;
  std::string train_origin;
  std::string test_origin;
  int repetition = 0;
  int fold = 0;
  std::vector<std::string> class_names;
  std::vector<std::optional<double>> auc;  // per class, nullopt if undefined
  std::vector<std::size_t> q;              // true rows per class in the test set
  double weighted_auc = 0.0;
  std::string hyperparams_json;
};

struct ModelSummary {
  std::string setting;
  std::string model;
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct SignificanceRow {
  std::string setting;
  std::string model_a;
  std::string model_b;
  WilcoxonResult result;
  bool sufficient = true;  // false when fewer than 5 usable pairs
  double mean_a = 0.0;
  double mean_b = 0.0;
};

struct EvalReport {
  std::string setting;
  std::vector<FoldResult> folds;
  std::vector<ModelSummary> summaries;
  std::vector<SignificanceRow> significance;
};

struct EvalOptions {
  int k = 5;
  int repetitions = 20;
  std::vector<ModelKind> models{ModelKind::lr, ModelKind::rf};
  Budget budget;
  KernelParams kernel;
  SolverOptions solver;
  std::uint64_t seed = 0;
  /// Tune once per dataset (first training split) instead of per fold.
  bool tune_once = false;
  /// Held-out share of the training split used to score trials.
  double inner_holdout = 0.2;
  int threads = 1;
  /// Fixed hyperparameters instead of tuning (tests and quick runs).
  std::optional<Hyperparams> fixed_lr;
  std::optional<Hyperparams> fixed_rf;
};

/// Default Bayesian search space for a model on `features` inputs.
SearchSpace default_search_space(ModelKind kind, std::size_t features);
Hyperparams hyperparams_from(const Configuration& config, ModelKind kind);

struct TuningResult {
  Hyperparams hyperparams;
  TrialLog log;
};

/// Bayesian search scored by weighted AUC on an inner stratified holdout
/// of (X, y).
TuningResult tune_hyperparameters(const Matrix& X, std::span<const int> y, ModelKind kind,
                                  const EvalOptions& options, std::uint64_t seed);

/// Per-class one-vs-rest AUC over `eval_classes`, q counts and support-weighted
/// AUC for a fitted pipeline on a labelled set.
FoldResult score_model(const PipelineModel& model, const Matrix& X, std::span<const int> y,
                       const std::vector<int>& eval_classes, const std::vector<std::string>& class_names);

/// Design matrix and labels of a derived dataset.
Matrix to_matrix(const DerivedDataset& ds);
Labels to_labels(const DerivedDataset& ds);

/// Rows whose class is in `classes`, relabelled to positions in `classes`,
/// which becomes the taxonomy. Throws ConfigError for an unknown class.
DerivedDataset restrict_classes(const DerivedDataset& ds, const std::vector<std::string>& classes);

/// Repeated stratified k-fold CV. Every fitted parameter comes from the
/// training folds only. Emits k * R FoldResults per model.
EvalReport run_single_dataset(const DerivedDataset& ds, const std::string& name, const EvalOptions& options);

struct NamedDataset {
  std::string name;
  std::reference_wrapper<const DerivedDataset> data;
};

/// Fit once on the whole training dataset, score every test dataset; all
/// sides restricted to `shared_classes`. One FoldResult per
/// (train, test, model). Optionally returns the fitted models.
EvalReport run_cross_dataset(const NamedDataset& train, const std::vector<NamedDataset>& tests,
                             const std::vector<std::string>& shared_classes, const EvalOptions& options,
                             std::vector<PipelineModel>* fitted = nullptr);

/// Train on each dataset in turn and test on the others.
EvalReport run_cross_rotation(const std::vector<NamedDataset>& datasets,
                              const std::vector<std::string>& shared_classes, const EvalOptions& options,
                              std::vector<PipelineModel>* fitted = nullptr);

/// Per-model mean/std of weighted AUC and LR-vs-RF (or any model pair)
/// Wilcoxon tests on paired fold results.
void summarize(EvalReport& report);

}  // namespace faacflow
