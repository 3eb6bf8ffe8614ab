#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace faacflow {

/// Stratified k-fold assignment for one repetition.
struct FoldAssignment {
  int repetition = 0;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // row -> fold in [0, k)

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

/// Shuffles each class with `seed`, then deals its rows round-robin over
/// the folds, continuing where the previous class stopped. Throws
/// ConfigError("class too small to stratify") if a class has < k rows.
FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed, int repetition = 0);

/// Stratified holdout: per class, round(fraction * n_c) rows (at least one
/// when n_c >= 2) go to the held-out part. Returns (train, holdout).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const int> labels,
                                                                                  double fraction,
                                                                                  std::uint64_t seed);

/// Mann-Whitney AUC with ties counted as one half. nullopt when either
/// class is absent.
std::optional<double> auc_binary(std::span<const double> scores, std::span<const int> labels01);

/// sum(AUC_i * q_i) / Q over classes whose AUC is defined. Throws
/// std::invalid_argument on length mismatch or Q == 0.
double weighted_avg_auc(std::span<const std::optional<double>> auc, std::span<const std::size_t> q);

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  std::size_t n = 0;  // pairs with non-zero difference
  double w = 0.0;     // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_two_sided = 1.0;
  bool significant = false;
  bool exact = false;
  bool no_evidence = false;  // every difference was zero
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

/// Signed-rank test on paired samples with mid-ranks for tied |d|. Exact
/// null distribution (all 2^n sign patterns) for n <= 20, otherwise the
/// normal approximation with tie and continuity correction. Throws
/// std::invalid_argument on a length mismatch or 0 < n < 5.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::automatic, double alpha = 0.05);

}  // namespace faacflow
