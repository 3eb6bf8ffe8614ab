#include <doctest.h>

#include <set>
#include <tuple>

#include "faacflow/errors.hpp"
#include "faacflow/evaluation.hpp"
#include "support.hpp"

using namespace faacflow;
using namespace faacflow::test;

namespace {

const std::vector<std::string> kTaxonomy{"Background", "DoS", "PortScanning"};

DerivedDataset dataset_from(const Matrix& X, const Labels& y, const std::string& origin) {
  DerivedDataset ds;
  for (Eigen::Index j = 0; j < X.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  ds.classes = kTaxonomy;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    DerivedObservation r;
    for (Eigen::Index j = 0; j < X.cols(); ++j) r.counters.push_back(X(i, j));
    r.label = y[static_cast<std::size_t>(i)];
    r.origin = origin;
    r.batch_size = 10;
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

DerivedDataset blob_dataset(std::size_t n, double sep, std::uint64_t seed, const std::string& origin = "blobs") {
  const auto [X, y] = blobs(n, 4, 3, 2, sep, seed);
  return dataset_from(X, y, origin);
}

EvalOptions fixed_options(std::vector<ModelKind> models, int k, int r) {
  EvalOptions o;
  o.models = std::move(models);
  o.k = k;
  o.repetitions = r;
  o.seed = 7;
  o.fixed_lr = Hyperparams{1e-3, 0, 0, 0};
  o.fixed_rf = Hyperparams{1e-3, 20, 6, 2};
  return o;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("k = 5, R = 20 gives 100 fold results per model") {
  const auto ds = blob_dataset(100, 1.5, 1);
  const auto rep = run_single_dataset(ds, "blobs", fixed_options({ModelKind::lr}, 5, 20));
  REQUIRE(rep.folds.size() == 100);
  std::set<std::pair<int, int>> cells;
  for (const auto& f : rep.folds) {
    CHECK(f.setting == kSettingSingle);
    CHECK(f.model == "lr");
    CHECK(f.train_origin == "blobs");
    CHECK(f.test_origin == "blobs");
    CHECK(f.weighted_auc >= 0.0);
    CHECK(f.weighted_auc <= 1.0);
    std::size_t q = 0;
    for (auto v : f.q) q += v;
    CHECK(q == 20);  // every test fold holds n / k rows
    cells.insert({f.repetition, f.fold});
  }
  CHECK(cells.size() == 100);
  REQUIRE(rep.summaries.size() == 1);
  CHECK(rep.summaries[0].n == 100);
}

TEST_CASE("R = 1, k = 2 on 20 rows gives two folds") {
  const auto ds = blob_dataset(20, 3.0, 2);
  const auto rep = run_single_dataset(ds, "tiny", fixed_options({ModelKind::lr}, 2, 1));
  REQUIRE(rep.folds.size() == 2);
  CHECK(rep.folds[0].fold == 1);
  CHECK(rep.folds[1].fold == 2);
}

TEST_CASE("planted signal is recovered by the forest") {
  Rng rng(3);
  Matrix X(150, 3);
  Labels y(150);
  for (Eigen::Index i = 0; i < 150; ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
    X(i, 0) = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
    X(i, 1) = y[static_cast<std::size_t>(i)] == 2 ? 1.0 : 0.0;
    X(i, 2) = rng.uniform();
  }
  const auto rep = run_single_dataset(dataset_from(X, y, "plant"), "plant", fixed_options({ModelKind::rf}, 5, 2));
  REQUIRE(rep.summaries.size() == 1);
  CHECK(rep.summaries[0].mean >= 0.999);
}

TEST_CASE("fitted parameters depend on training rows only") {
  // A column that is zero on the training rows and equals the label on the
  // test rows must never enter the model.
  auto [X, y] = blobs(120, 4, 3, 2, 1.0, 4);
  Matrix Xl(X.rows(), X.cols() + 1);
  Xl << X, Matrix::Zero(X.rows(), 1);
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < y.size(); ++i) (i % 4 == 0 ? test : train).push_back(i);
  for (auto i : test) Xl(static_cast<Eigen::Index>(i), X.cols()) = y[i];

  const Matrix Xtr = select_rows(Xl, train);
  const Labels ytr = select_labels(y, train);
  const auto model = fit_pipeline(Xtr, ytr, ModelKind::lr, Hyperparams{1e-3, 0, 0, 0}, 11);
  for (int j : model.lasso.support) CHECK(j != X.cols());
  const auto clean = fit_pipeline(select_rows(X, train), ytr, ModelKind::lr, Hyperparams{1e-3, 0, 0, 0}, 11);
  CHECK(model.lasso.support == clean.lasso.support);

  // Standardizer moments are those of the training rows.
  const Matrix sub = select_columns(Xtr, model.lasso.support);
  const Vector mean = sub.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < mean.size(); ++j) CHECK(model.standardizer.mean[j] == doctest::Approx(mean[j]));

  // A test row's score does not depend on the other test rows.
  const Matrix Xte = select_rows(Xl, test);
  const Matrix full = predict_proba(model, Xte);
  const Matrix one = predict_proba(model, Xte.topRows(1));
  CHECK((full.topRows(1) - one).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cross-dataset rotation over three datasets") {
  const auto a = blob_dataset(60, 2.0, 5, "A"), b = blob_dataset(60, 2.0, 6, "B"), c = blob_dataset(60, 2.0, 7, "C");
  const std::vector<NamedDataset> sets{{"A", a}, {"B", b}, {"C", c}};
  std::vector<PipelineModel> fitted;
  const auto rep = run_cross_rotation(sets, kTaxonomy, fixed_options({ModelKind::lr, ModelKind::rf}, 5, 1), &fitted);
  CHECK(rep.folds.size() == 12);
  CHECK(fitted.size() == 6);
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& f : rep.folds) {
    CHECK(f.setting == kSettingCross);
    CHECK(f.train_origin != f.test_origin);
    seen.insert({f.model, f.train_origin, f.test_origin});
  }
  CHECK(seen.size() == 12);
  REQUIRE(rep.summaries.size() == 2);
  CHECK(rep.summaries[0].n == 6);
  CHECK(rep.summaries[1].n == 6);
}

TEST_CASE("self-transfer equals resubstitution") {
  const auto a = blob_dataset(90, 1.0, 8, "A");
  std::vector<PipelineModel> fitted;
  const auto rep =
      run_cross_dataset({"A", a}, {{"A", a}}, kTaxonomy, fixed_options({ModelKind::rf}, 5, 1), &fitted);
  REQUIRE(rep.folds.size() == 1);
  REQUIRE(fitted.size() == 1);
  const auto resub = score_model(fitted[0], to_matrix(a), to_labels(a), {0, 1, 2}, kTaxonomy);
  CHECK(rep.folds[0].weighted_auc == resub.weighted_auc);
}

TEST_CASE("cross-dataset rejects differing feature schemas") {
  const auto a = blob_dataset(30, 1.0, 9, "A");
  auto b = blob_dataset(30, 1.0, 10, "B");
  b.feature_names[0] = "other";
  CHECK_THROWS_AS(run_cross_dataset({"A", a}, {{"B", b}}, kTaxonomy, fixed_options({ModelKind::lr}, 5, 1)),
                  ConfigError);
}

TEST_CASE("restrict_classes relabels to the shared taxonomy") {
  auto ds = blob_dataset(30, 1.0, 11);
  const auto r = restrict_classes(ds, {"PortScanning", "Background"});
  CHECK(r.classes == std::vector<std::string>{"PortScanning", "Background"});
  CHECK(r.rows.size() == 20);
  for (std::size_t i = 0, k = 0; i < ds.rows.size(); ++i) {
    if (ds.rows[i].label == 1) continue;
    CHECK(r.rows[k].counters == ds.rows[i].counters);
    CHECK(r.rows[k].label == (ds.rows[i].label == 2 ? 0 : 1));
    ++k;
  }
  CHECK_THROWS_AS(restrict_classes(ds, {"Worms"}), ConfigError);
}

TEST_CASE("argument checks") {
  const auto ds = blob_dataset(30, 1.0, 12);
  CHECK_THROWS_AS(run_single_dataset(ds, "x", fixed_options({ModelKind::lr}, 1, 1)), ConfigError);
  CHECK_THROWS_AS(run_single_dataset(ds, "x", fixed_options({ModelKind::lr}, 5, 0)), ConfigError);
}

TEST_CASE("tuning returns hyperparameters inside the search space") {
  const auto [X, y] = blobs(80, 4, 3, 2, 1.5, 13);
  EvalOptions o;
  o.budget = {2, 2, 32};
  const auto t = tune_hyperparameters(X, y, ModelKind::rf, o, 5);
  CHECK(t.log.trials.size() == 4);
  CHECK(t.hyperparams.lambda >= 1e-4);
  CHECK(t.hyperparams.lambda <= 10.0);
  CHECK(t.hyperparams.trees >= 50);
  CHECK(t.hyperparams.trees <= 300);
  CHECK(t.hyperparams.max_depth >= 2);
  CHECK(t.hyperparams.max_depth <= 20);
  CHECK(t.hyperparams.features_per_split >= 1);
  CHECK(t.hyperparams.features_per_split <= 4);
}

TEST_CASE("summaries and paired significance") {
  EvalReport rep;
  const double lr[] = {0.80, 0.82, 0.79, 0.85, 0.81, 0.83};
  const double rf[] = {0.90, 0.91, 0.88, 0.93, 0.92, 0.94};
  for (int i = 0; i < 6; ++i) {
    FoldResult a{kSettingSingle, "lr", "D", "D", 1, i + 1, {}, {}, {}, lr[i], "{}"};
    FoldResult b{kSettingSingle, "rf", "D", "D", 1, i + 1, {}, {}, {}, rf[i], "{}"};
    rep.folds.push_back(a);
    rep.folds.push_back(b);
  }
  summarize(rep);
  REQUIRE(rep.summaries.size() == 2);
  CHECK(rep.summaries[0].mean == doctest::Approx(0.8166666666666667));
  CHECK(rep.summaries[0].stddev == doctest::Approx(0.021602468994692866));
  REQUIRE(rep.significance.size() == 1);
  const auto& s = rep.significance[0];
  CHECK(s.sufficient);
  CHECK(s.result.n == 6);
  CHECK(s.result.p_two_sided == 0.03125);
  CHECK(s.result.significant);
  CHECK(s.mean_b > s.mean_a);

  // Fewer than five differing pairs: flagged, no test.
  EvalReport few;
  for (int i = 0; i < 3; ++i) {
    few.folds.push_back({kSettingSingle, "lr", "D", "D", 1, i + 1, {}, {}, {}, lr[i], "{}"});
    few.folds.push_back({kSettingSingle, "rf", "D", "D", 1, i + 1, {}, {}, {}, rf[i], "{}"});
  }
  summarize(few);
  REQUIRE(few.significance.size() == 1);
  CHECK_FALSE(few.significance[0].sufficient);
  CHECK_FALSE(few.significance[0].result.significant);
}

}  // TEST_SUITE
