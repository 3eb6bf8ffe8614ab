#include "faacflow/report.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

namespace {

constexpr const char* kEvalHeader =
    "setting,model,train_origin,test_origin,repetition,fold,class,auc,q,weighted_auc,hyperparams_json";

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

int parse_int(const std::string& s, std::size_t line) {
  auto v = csv::parse_number(s);
  if (!v || *v != std::floor(*v)) throw DataError("eval CSV line " + std::to_string(line) + ": bad integer '" + s + "'");
  return static_cast<int>(*v);
}

double parse_double(const std::string& s, std::size_t line) {
  auto v = csv::parse_number(s);
  if (!v) throw DataError("eval CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  return *v;
}

}  // namespace

void write_eval_csv(std::ostream& out, const std::vector<FoldResult>& folds, bool header) {
  if (header) out << kEvalHeader << '\n';
  for (const auto& f : folds) {
    const std::string prefix = csv::escape(f.setting) + ',' + csv::escape(f.model) + ',' + csv::escape(f.train_origin) +
                               ',' + csv::escape(f.test_origin) + ',' + std::to_string(f.repetition) + ',' +
                               std::to_string(f.fold) + ',';
    const std::string suffix = ',' + csv::format_exact(f.weighted_auc) + ',' + csv::escape(f.hyperparams_json);
    for (std::size_t c = 0; c < f.class_names.size(); ++c) {
      out << prefix << csv::escape(f.class_names[c]) << ',' << (f.auc[c] ? csv::format_exact(*f.auc[c]) : "NA") << ','
          << f.q[c] << suffix << '\n';
    }
  }
}

std::vector<FoldResult> read_eval_csv(std::istream& in) {
  std::vector<FoldResult> folds;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == kEvalHeader) continue;
    csv::split(line, fields);
    if (fields.size() != 11)
      throw DataError("eval CSV line " + std::to_string(line_no) + ": expected 11 fields, got " +
                      std::to_string(fields.size()));
    const int rep = parse_int(fields[4], line_no), fold = parse_int(fields[5], line_no);
    const bool same = !folds.empty() && folds.back().setting == fields[0] && folds.back().model == fields[1] &&
                      folds.back().train_origin == fields[2] && folds.back().test_origin == fields[3] &&
                      folds.back().repetition == rep && folds.back().fold == fold;
    if (!same) {
      FoldResult f;
      f.setting = fields[0];
      f.model = fields[1];
      f.train_origin = fields[2];
      f.test_origin = fields[3];
      f.repetition = rep;
      f.fold = fold;
      f.weighted_auc = parse_double(fields[9], line_no);
      f.hyperparams_json = fields[10];
      folds.push_back(std::move(f));
    }
    FoldResult& f = folds.back();
    f.class_names.push_back(fields[6]);
    f.auc.push_back(fields[7] == "NA" ? std::nullopt : std::optional<double>(parse_double(fields[7], line_no)));
    f.q.push_back(static_cast<std::size_t>(parse_int(fields[8], line_no)));
  }
  return folds;
}

void write_significance_csv(std::ostream& out, const std::vector<SignificanceRow>& rows) {
  out << "setting,model_a,model_b,n,W,p_two_sided,significant_at_0.05\n";
  for (const auto& r : rows) {
    out << csv::escape(r.setting) << ',' << csv::escape(r.model_a) << ',' << csv::escape(r.model_b) << ',' << r.result.n
        << ',';
    if (r.sufficient)
      out << csv::format_exact(r.result.w) << ',' << csv::format_exact(r.result.p_two_sided) << ','
          << (r.result.significant ? "true" : "false") << '\n';
    else
      out << "NA,NA,NA\n";
  }
}

void write_summary_csv(std::ostream& out, const std::vector<ModelSummary>& rows) {
  out << "setting,model,n,mean_weighted_auc,std_weighted_auc\n";
  for (const auto& r : rows)
    out << csv::escape(r.setting) << ',' << csv::escape(r.model) << ',' << r.n << ',' << csv::format_exact(r.mean) << ','
        << csv::format_exact(r.stddev) << '\n';
}

void write_auc_distribution_csv(std::ostream& out, const std::vector<FoldResult>& folds) {
  out << "setting,model,train_origin,test_origin,repetition,fold,weighted_auc\n";
  for (const auto& f : folds)
    out << csv::escape(f.setting) << ',' << csv::escape(f.model) << ',' << csv::escape(f.train_origin) << ','
        << csv::escape(f.test_origin) << ',' << f.repetition << ',' << f.fold << ',' << csv::format_exact(f.weighted_auc)
        << '\n';
}

void write_text_report(std::ostream& out, const std::vector<ModelSummary>& summaries,
                       const std::vector<SignificanceRow>& significance) {
  auto better = [&](const ModelSummary& s) {
    for (const auto& r : significance) {
      if (r.setting != s.setting || !r.sufficient || !r.result.significant) continue;
      if (r.model_a == s.model && r.mean_a > r.mean_b) return true;
      if (r.model_b == s.model && r.mean_b > r.mean_a) return true;
    }
    return false;
  };

  out << pad("setting", 16) << pad("model", 8) << pad("n", 6) << "weighted AUC (mean +- std)\n";
  out << std::string(62, '-') << '\n';
  for (const auto& s : summaries) {
    out << pad(s.setting, 16) << pad(s.model, 8) << pad(std::to_string(s.n), 6) << fixed(s.mean, 4) << " +- "
        << fixed(s.stddev, 4) << (better(s) ? " *" : "") << '\n';
  }
  if (!significance.empty()) {
    out << "\nWilcoxon signed-rank (two-sided, alpha = 0.05)\n";
    out << pad("setting", 16) << pad("pair", 12) << pad("n", 6) << pad("W", 10) << "p\n";
    out << std::string(62, '-') << '\n';
    for (const auto& r : significance) {
      out << pad(r.setting, 16) << pad(r.model_a + " vs " + r.model_b, 12) << pad(std::to_string(r.result.n), 6);
      if (!r.sufficient)
        out << pad("-", 10) << "too few pairs\n";
      else
        out << pad(fixed(r.result.w, 1), 10) << fixed(r.result.p_two_sided, 6)
            << (r.result.no_evidence ? " (identical)" : r.result.significant ? " significant" : "") << '\n';
    }
  }
  out << "\n* significantly better than the other model in the same setting\n";
}

std::vector<EvalReport> rebuild_reports(const std::vector<FoldResult>& folds) {
  std::vector<EvalReport> reports;
  for (const auto& f : folds) {
    auto it = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) { return r.setting == f.setting; });
    if (it == reports.end()) {
      reports.push_back(EvalReport{f.setting, {}, {}, {}});
      it = reports.end() - 1;
    }
    it->folds.push_back(f);
  }
  for (auto& r : reports) summarize(r);
  return reports;
}

}  // namespace faacflow
