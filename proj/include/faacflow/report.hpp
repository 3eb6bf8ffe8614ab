#pragma once

#include <istream>
#include <ostream>
#include <vector>

#include "faacflow/evaluation.hpp"

namespace faacflow {

/// `setting,model,train_origin,test_origin,repetition,fold,class,auc,q,weighted_auc,hyperparams_json`
/// One line per (fold result, class); an undefined AUC is written as `NA`.
void write_eval_csv(std::ostream& out, const std::vector<FoldResult>& folds, bool header = true);
std::vector<FoldResult> read_eval_csv(std::istream& in);

/// `setting,model_a,model_b,n,W,p_two_sided,significant_at_0.05`
void write_significance_csv(std::ostream& out, const std::vector<SignificanceRow>& rows);

/// `setting,model,n,mean_weighted_auc,std_weighted_auc`
void write_summary_csv(std::ostream& out, const std::vector<ModelSummary>& rows);

/// Plot data for the AUC distribution figure: one weighted AUC per fold.
void write_auc_distribution_csv(std::ostream& out, const std::vector<FoldResult>& folds);

/// Fixed-width text table; a `*` marks the significantly better model.
void write_text_report(std::ostream& out, const std::vector<ModelSummary>& summaries,
                       const std::vector<SignificanceRow>& significance);

/// Groups fold results by setting and rebuilds summaries + significance.
std::vector<EvalReport> rebuild_reports(const std::vector<FoldResult>& folds);

}  // namespace faacflow
