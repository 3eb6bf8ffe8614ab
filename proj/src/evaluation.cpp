#include "faacflow/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "faacflow/errors.hpp"
#include "faacflow/rng.hpp"

namespace faacflow {

SearchSpace default_search_space(ModelKind kind, std::size_t features) {
  SearchSpace space;
  space.dims.push_back({"lambda", 1e-4, 1e1, Scale::log, DimKind::continuous});
  if (kind == ModelKind::rf) {
    space.dims.push_back({"trees", 50, 300, Scale::linear, DimKind::integer});
    space.dims.push_back({"max_depth", 2, 20, Scale::linear, DimKind::integer});
    // The support size is only known after LASSO; the fit clamps m to it.
    space.dims.push_back(
        {"features_per_split", 1, static_cast<double>(std::max<std::size_t>(features, 2)), Scale::linear,
         DimKind::integer});
  }
  return space;
}

Hyperparams hyperparams_from(const Configuration& config, ModelKind kind) {
  Hyperparams hp;
  hp.lambda = config.at("lambda");
  if (kind == ModelKind::rf) {
    hp.trees = static_cast<int>(std::lround(config.at("trees")));
    hp.max_depth = static_cast<int>(std::lround(config.at("max_depth")));
    hp.features_per_split = static_cast<int>(std::lround(config.at("features_per_split")));
  }
  return hp;
}

FoldResult score_model(const PipelineModel& model, const Matrix& X, std::span<const int> y,
                       const std::vector<int>& eval_classes, const std::vector<std::string>& class_names) {
  if (eval_classes.size() != class_names.size()) throw EvaluationError("score: class list and names differ");
  const Matrix proba = predict_proba(model, X);
  FoldResult r;
  r.model = to_string(model.kind);
  r.class_names = class_names;
  r.hyperparams_json = model.hyperparams.to_json(model.kind);
  std::vector<double> scores(y.size());
  std::vector<int> truth(y.size());
  for (int c : eval_classes) {
    auto it = std::find(model.classes.begin(), model.classes.end(), c);
    const auto col = it == model.classes.end() ? Eigen::Index{-1} : static_cast<Eigen::Index>(it - model.classes.begin());
    std::size_t q = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      scores[i] = col < 0 ? 0.0 : proba(static_cast<Eigen::Index>(i), col);
      truth[i] = y[i] == c ? 1 : 0;
      q += static_cast<std::size_t>(truth[i]);
    }
    r.auc.push_back(auc_binary(scores, truth));
    r.q.push_back(q);
  }
  try {
    r.weighted_auc = weighted_avg_auc(r.auc, r.q);
  } catch (const std::invalid_argument&) {
    throw EvaluationError("score: no class has a defined AUC on this test set");
  }
  return r;
}

TuningResult tune_hyperparameters(const Matrix& X, std::span<const int> y, ModelKind kind,
                                  const EvalOptions& options, std::uint64_t seed) {
  const auto [train, hold] = stratified_holdout(y, options.inner_holdout, derive_seed(seed, {1}));
  const Matrix Xtr = select_rows(X, train), Xho = select_rows(X, hold);
  const Labels ytr = select_labels(y, train), yho = select_labels(y, hold);
  const std::vector<int> classes = distinct_classes(yho);
  const std::vector<std::string> names(classes.size());
  const std::uint64_t fit_seed = derive_seed(seed, {2});

  auto objective = [&](const Configuration& config) -> double {
    try {
      const PipelineModel m =
          fit_pipeline(Xtr, ytr, kind, hyperparams_from(config, kind), fit_seed, {}, options.solver, options.threads);
      return score_model(m, Xho, yho, classes, names).weighted_auc;
    } catch (const EvaluationError&) {
      return std::nan("");
    }
  };
  const SearchSpace space = default_search_space(kind, static_cast<std::size_t>(X.cols()));
  TuningResult result;
  result.log = optimize(objective, space, options.budget, derive_seed(seed, {3}), options.kernel);
  if (!result.log.best) throw EvaluationError("tuning: every trial failed");
  result.hyperparams = hyperparams_from(result.log.trials[*result.log.best].config, kind);
  return result;
}

Matrix to_matrix(const DerivedDataset& ds) {
  const auto p = static_cast<Eigen::Index>(ds.feature_names.size());
  Matrix X(static_cast<Eigen::Index>(ds.rows.size()), p);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (static_cast<Eigen::Index>(ds.rows[i].counters.size()) != p) throw DataError("derived row width mismatch");
    for (Eigen::Index j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), j) = ds.rows[i].counters[static_cast<std::size_t>(j)];
  }
  return X;
}

Labels to_labels(const DerivedDataset& ds) {
  Labels y;
  y.reserve(ds.rows.size());
  for (const auto& r : ds.rows) y.push_back(r.label);
  return y;
}

DerivedDataset restrict_classes(const DerivedDataset& ds, const std::vector<std::string>& classes) {
  DerivedDataset out;
  out.feature_names = ds.feature_names;
  out.classes = classes;
  std::vector<int> remap(ds.classes.size(), -1);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto src = ds.class_index(classes[c]);
    if (!src) throw ConfigError("class '" + classes[c] + "' is not in the dataset taxonomy");
    remap[static_cast<std::size_t>(*src)] = static_cast<int>(c);
  }
  for (const auto& row : ds.rows) {
    const int label = remap.at(static_cast<std::size_t>(row.label));
    if (label < 0) continue;
    DerivedObservation copy = row;
    copy.label = label;
    out.rows.push_back(std::move(copy));
  }
  return out;
}

namespace {

std::optional<Hyperparams> fixed_for(const EvalOptions& o, ModelKind kind) {
  return kind == ModelKind::lr ? o.fixed_lr : o.fixed_rf;
}

// Runs cells in index order or on a worker pool; the first failing cell in
// index order is rethrown.
template <class Fn>
void run_cells(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(context + ": " + e.what());
  }
}

}  // namespace

EvalReport run_single_dataset(const DerivedDataset& ds, const std::string& name, const EvalOptions& options) {
  if (options.k < 2) throw ConfigError("k must be at least 2");
  if (options.repetitions < 1) throw ConfigError("repetitions must be at least 1");
  const Matrix X = to_matrix(ds);
  const Labels y = to_labels(ds);
  const std::vector<int> classes = distinct_classes(y);
  std::vector<std::string> names;
  for (int c : classes) names.push_back(ds.classes.at(static_cast<std::size_t>(c)));

  std::vector<FoldAssignment> folds;
  for (int r = 0; r < options.repetitions; ++r)
    folds.push_back(stratified_folds(y, options.k, derive_seed(options.seed, {10, static_cast<std::uint64_t>(r)}), r));

  // Hyperparameters shared by every cell of a model, if any.
  std::vector<std::optional<Hyperparams>> shared(options.models.size());
  for (std::size_t m = 0; m < options.models.size(); ++m) {
    shared[m] = fixed_for(options, options.models[m]);
    if (!shared[m] && options.tune_once) {
      const auto rows = folds.front().train_rows(0);
      try {
        shared[m] = tune_hyperparameters(select_rows(X, rows), select_labels(y, rows), options.models[m], options,
                                         derive_seed(options.seed, {20, m}))
                        .hyperparams;
      } catch (...) {
        rethrow_with_context("tuning " + to_string(options.models[m]) + " once on '" + name + "'");
      }
    }
  }

  const std::size_t per_model = folds.size() * static_cast<std::size_t>(options.k);
  const std::size_t cells = options.models.size() * per_model;
  EvalOptions inner = options;
  inner.threads = options.threads > 1 && cells > 1 ? 1 : options.threads;

  EvalReport report;
  report.setting = kSettingSingle;
  report.folds.resize(cells);
  run_cells(cells, cells > 1 ? options.threads : 1, [&](std::size_t cell) {
    const std::size_t m = cell / per_model;
    const int r = static_cast<int>((cell % per_model) / static_cast<std::size_t>(options.k));
    const int f = static_cast<int>(cell % static_cast<std::size_t>(options.k));
    const ModelKind kind = options.models[m];
    const auto ur = static_cast<std::uint64_t>(r), uf = static_cast<std::uint64_t>(f);
    try {
      const auto train = folds[static_cast<std::size_t>(r)].train_rows(f);
      const auto test = folds[static_cast<std::size_t>(r)].test_rows(f);
      const Matrix Xtr = select_rows(X, train);
      const Labels ytr = select_labels(y, train);
      Hyperparams hp = shared[m] ? *shared[m]
                                 : tune_hyperparameters(Xtr, ytr, kind, inner, derive_seed(options.seed, {21, m, ur, uf}))
                                       .hyperparams;
      const PipelineModel model = fit_pipeline(Xtr, ytr, kind, hp, derive_seed(options.seed, {30, m, ur, uf}),
                                               Provenance{name, r + 1, f + 1, 0, 0, {}}, options.solver, inner.threads);
      FoldResult res = score_model(model, select_rows(X, test), select_labels(y, test), classes, names);
      res.setting = kSettingSingle;
      res.train_origin = name;
      res.test_origin = name;
      res.repetition = r + 1;
      res.fold = f + 1;
      report.folds[cell] = std::move(res);
    } catch (...) {
      rethrow_with_context(to_string(kind) + " on '" + name + "' (repetition " + std::to_string(r + 1) + ", fold " +
                           std::to_string(f + 1) + ")");
    }
  });
  summarize(report);
  return report;
}

EvalReport run_cross_dataset(const NamedDataset& train, const std::vector<NamedDataset>& tests,
                             const std::vector<std::string>& shared_classes, const EvalOptions& options,
                             std::vector<PipelineModel>* fitted) {
  for (const auto& t : tests)
    if (t.data.get().feature_names != train.data.get().feature_names)
      throw ConfigError("cross-dataset: feature schema of '" + t.name + "' differs from '" + train.name + "'");

  const DerivedDataset tr = restrict_classes(train.data.get(), shared_classes);
  if (tr.rows.empty()) throw DataError("cross-dataset: '" + train.name + "' has no rows in the shared classes");
  std::vector<DerivedDataset> te;
  for (const auto& t : tests) te.push_back(restrict_classes(t.data.get(), shared_classes));

  const Matrix X = to_matrix(tr);
  const Labels y = to_labels(tr);
  std::vector<int> classes(shared_classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) classes[c] = static_cast<int>(c);
  const std::uint64_t base = derive_seed(options.seed, train.name);

  EvalReport report;
  report.setting = kSettingCross;
  for (std::size_t m = 0; m < options.models.size(); ++m) {
    const ModelKind kind = options.models[m];
    PipelineModel model;
    try {
      Hyperparams hp = fixed_for(options, kind)
                           ? *fixed_for(options, kind)
                           : tune_hyperparameters(X, y, kind, options, derive_seed(base, {40, m})).hyperparams;
      model = fit_pipeline(X, y, kind, hp, derive_seed(base, {41, m}), Provenance{train.name, 0, 0, 0, 0, {}},
                           options.solver, options.threads);
    } catch (...) {
      rethrow_with_context(to_string(kind) + " trained on '" + train.name + "'");
    }
    for (std::size_t t = 0; t < tests.size(); ++t) {
      try {
        FoldResult res = score_model(model, to_matrix(te[t]), to_labels(te[t]), classes, shared_classes);
        res.setting = kSettingCross;
        res.train_origin = train.name;
        res.test_origin = tests[t].name;
        report.folds.push_back(std::move(res));
      } catch (...) {
        rethrow_with_context(to_string(kind) + " trained on '" + train.name + "', tested on '" + tests[t].name + "'");
      }
    }
    if (fitted) fitted->push_back(std::move(model));
  }
  summarize(report);
  return report;
}

EvalReport run_cross_rotation(const std::vector<NamedDataset>& datasets,
                              const std::vector<std::string>& shared_classes, const EvalOptions& options,
                              std::vector<PipelineModel>* fitted) {
  EvalReport report;
  report.setting = kSettingCross;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    std::vector<NamedDataset> tests;
    for (std::size_t j = 0; j < datasets.size(); ++j)
      if (j != i) tests.push_back(datasets[j]);
    EvalReport part = run_cross_dataset(datasets[i], tests, shared_classes, options, fitted);
    for (auto& f : part.folds) report.folds.push_back(std::move(f));
  }
  summarize(report);
  return report;
}

void summarize(EvalReport& report) {
  report.summaries.clear();
  report.significance.clear();

  std::vector<std::pair<std::string, std::string>> groups;  // (setting, model) in first-seen order
  for (const auto& f : report.folds)
    if (std::find(groups.begin(), groups.end(), std::pair{f.setting, f.model}) == groups.end())
      groups.emplace_back(f.setting, f.model);

  for (const auto& [setting, model] : groups) {
    ModelSummary s{setting, model, 0, 0.0, 0.0};
    double sum = 0.0;
    for (const auto& f : report.folds)
      if (f.setting == setting && f.model == model) {
        ++s.n;
        sum += f.weighted_auc;
      }
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (const auto& f : report.folds)
      if (f.setting == setting && f.model == model) ss += (f.weighted_auc - s.mean) * (f.weighted_auc - s.mean);
    s.stddev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    report.summaries.push_back(s);
  }

  using Key = std::tuple<std::string, std::string, int, int>;
  for (std::size_t a = 0; a < groups.size(); ++a)
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      if (groups[a].first != groups[b].first) continue;
      const std::string& setting = groups[a].first;
      std::map<Key, double> score_b;
      for (const auto& f : report.folds)
        if (f.setting == setting && f.model == groups[b].second)
          score_b[{f.train_origin, f.test_origin, f.repetition, f.fold}] = f.weighted_auc;
      std::vector<double> xa, xb;
      for (const auto& f : report.folds)
        if (f.setting == setting && f.model == groups[a].second) {
          auto it = score_b.find({f.train_origin, f.test_origin, f.repetition, f.fold});
          if (it == score_b.end()) continue;
          xa.push_back(f.weighted_auc);
          xb.push_back(it->second);
        }
      SignificanceRow row;
      row.setting = setting;
      row.model_a = groups[a].second;
      row.model_b = groups[b].second;
      for (std::size_t i = 0; i < xa.size(); ++i) {
        row.mean_a += xa[i] / static_cast<double>(xa.size());
        row.mean_b += xb[i] / static_cast<double>(xb.size());
      }
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < xa.size(); ++i) nonzero += xa[i] != xb[i] ? 1 : 0;
      if (nonzero > 0 && nonzero < kWilcoxonMinPairs) {
        row.sufficient = false;
        row.result.n = nonzero;
      } else {
        row.result = wilcoxon_signed_rank(xa, xb);
      }
      report.significance.push_back(row);
    }
}

}  // namespace faacflow
