#include <doctest.h>

#include <sstream>

#include "faacflow/errors.hpp"
#include "faacflow/report.hpp"

using namespace faacflow;

namespace {

FoldResult fold(std::string model, int f, double w, std::optional<double> second_auc = 0.75) {
  FoldResult r;
  r.setting = kSettingSingle;
  r.model = std::move(model);
  r.train_origin = "UNK21";
  r.test_origin = "UNK21";
  r.repetition = 1;
  r.fold = f;
  r.class_names = {"Background", "DoS"};
  r.auc = {0.9, second_auc};
  r.q = {40, 3};
  r.weighted_auc = w;
  r.hyperparams_json = R"({"lambda":0.001})";
  return r;
}

void check_same(const FoldResult& a, const FoldResult& b) {
  CHECK(a.setting == b.setting);
  CHECK(a.model == b.model);
  CHECK(a.train_origin == b.train_origin);
  CHECK(a.test_origin == b.test_origin);
  CHECK(a.repetition == b.repetition);
  CHECK(a.fold == b.fold);
  CHECK(a.class_names == b.class_names);
  CHECK(a.auc == b.auc);
  CHECK(a.q == b.q);
  CHECK(a.weighted_auc == b.weighted_auc);
  CHECK(a.hyperparams_json == b.hyperparams_json);
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("eval CSV round trip, including undefined AUC") {
  const std::vector<FoldResult> folds{fold("lr", 1, 0.1 + 0.2), fold("rf", 1, 1.0 / 3.0, std::nullopt)};
  std::stringstream buf;
  write_eval_csv(buf, folds);
  const std::string text = buf.str();
  CHECK(text.rfind("setting,model,train_origin,test_origin,repetition,fold,class,auc,q,weighted_auc,hyperparams_json\n",
                   0) == 0);
  CHECK(text.find(",DoS,NA,3,") != std::string::npos);
  const auto back = read_eval_csv(buf);
  REQUIRE(back.size() == 2);
  check_same(back[0], folds[0]);
  check_same(back[1], folds[1]);
}

TEST_CASE("eval CSV reader rejects malformed lines") {
  std::istringstream short_line("single-dataset,lr,A,A,1,1,DoS,0.5\n");
  CHECK_THROWS_AS(read_eval_csv(short_line), DataError);
  std::istringstream bad_fold("single-dataset,lr,A,A,1,x,DoS,0.5,3,0.5,{}\n");
  CHECK_THROWS_AS(read_eval_csv(bad_fold), DataError);
}

TEST_CASE("summary, significance and text report") {
  std::vector<FoldResult> folds;
  for (int f = 1; f <= 6; ++f) {
    folds.push_back(fold("lr", f, 0.80 + 0.01 * f));
    folds.push_back(fold("rf", f, 0.90 + 0.01 * f + 0.001 * f * f));
  }
  const auto reports = rebuild_reports(folds);
  REQUIRE(reports.size() == 1);
  const auto& rep = reports[0];

  std::ostringstream summary, sig, text, dist;
  write_summary_csv(summary, rep.summaries);
  CHECK(summary.str().rfind("setting,model,n,mean_weighted_auc,std_weighted_auc\nsingle-dataset,lr,6,", 0) == 0);
  write_significance_csv(sig, rep.significance);
  CHECK(sig.str().find("single-dataset,lr,rf,6,0,0.03125,true") != std::string::npos);
  write_auc_distribution_csv(dist, folds);
  std::size_t lines = 0;
  for (char c : dist.str()) lines += c == '\n';
  CHECK(lines == 13);

  write_text_report(text, rep.summaries, rep.significance);
  const std::string t = text.str();
  CHECK(t.find("rf      6     0.") != std::string::npos);
  const auto rf_line = t.substr(t.find("single-dataset  rf"), t.find('\n', t.find("single-dataset  rf")) -
                                                               t.find("single-dataset  rf"));
  CHECK(rf_line.back() == '*');
  CHECK(t.find("significant") != std::string::npos);
}

TEST_CASE("too few pairs are reported, not tested") {
  std::vector<FoldResult> folds{fold("lr", 1, 0.8), fold("rf", 1, 0.9), fold("lr", 2, 0.7), fold("rf", 2, 0.95)};
  const auto rep = rebuild_reports(folds).at(0);
  std::ostringstream sig, text;
  write_significance_csv(sig, rep.significance);
  CHECK(sig.str().find("lr,rf,2,NA,NA,NA") != std::string::npos);
  write_text_report(text, rep.summaries, rep.significance);
  CHECK(text.str().find("too few pairs") != std::string::npos);
}

}  // TEST_SUITE
