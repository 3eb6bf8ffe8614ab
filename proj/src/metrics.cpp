#include "faacflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "faacflow/errors.hpp"
#include "faacflow/rng.hpp"

namespace faacflow {

std::vector<std::size_t> FoldAssignment::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldAssignment::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) rows.push_back(i);
  return rows;
}

namespace {

std::map<int, std::vector<std::size_t>> rows_by_class(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> by;
  for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(i);
  return by;
}

}  // namespace

FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed, int repetition) {
  if (k < 2) throw ConfigError("stratified folds need k >= 2");
  FoldAssignment fa;
  fa.repetition = repetition;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.assign(labels.size(), -1);

  auto by = rows_by_class(labels);
  for (const auto& [cls, rows] : by)
    if (rows.size() < static_cast<std::size_t>(k))
      throw ConfigError("class too small to stratify (class " + std::to_string(cls) + " has " +
                        std::to_string(rows.size()) + " rows, k = " + std::to_string(k) + ")");

  Rng rng(seed);
  std::size_t offset = 0;
  for (auto& [cls, rows] : by) {
    rng.shuffle(rows.begin(), rows.end());
    for (std::size_t i = 0; i < rows.size(); ++i)
      fa.fold_of[rows[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
    offset = (offset + rows.size()) % static_cast<std::size_t>(k);
  }
  return fa;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const int> labels,
                                                                                  double fraction,
                                                                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must be in (0, 1)");
  std::vector<std::size_t> train, hold;
  Rng rng(seed);
  for (auto& [cls, rows] : rows_by_class(labels)) {
    rng.shuffle(rows.begin(), rows.end());
    std::size_t h = 0;
    if (rows.size() >= 2)
      h = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size()))),
                                  1, rows.size() - 1);
    hold.insert(hold.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(h));
    train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(h), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(hold.begin(), hold.end());
  return {train, hold};
}

std::optional<double> auc_binary(std::span<const double> scores, std::span<const int> labels01) {
  if (scores.size() != labels01.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double n_pos = 0.0, pos_rank2 = 0.0;  // doubled ranks keep the sum integral
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank2 = static_cast<double>(i + 1 + j);  // 2 * midrank
    for (std::size_t t = i; t < j; ++t)
      if (labels01[order[t]] != 0) {
        n_pos += 1.0;
        pos_rank2 += rank2;
      }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  // U counted in half-pairs: 2U = sum(2 r_i) - n_pos (n_pos + 1).
  const double u2 = pos_rank2 - n_pos * (n_pos + 1.0);
  return u2 / (2.0 * n_pos * n_neg);
}

double weighted_avg_auc(std::span<const std::optional<double>> auc, std::span<const std::size_t> q) {
  if (auc.size() != q.size()) throw std::invalid_argument("weighted AUC: lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < auc.size(); ++i) {
    if (!auc[i]) continue;
    num += *auc[i] * static_cast<double>(q[i]);
    den += static_cast<double>(q[i]);
  }
  if (den == 0.0) throw std::invalid_argument("weighted AUC: total count is zero");
  return num / den;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, WilcoxonMethod method,
                                    double alpha) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);

  WilcoxonResult r;
  r.n = d.size();
  if (r.n == 0) {
    r.no_evidence = true;
    return r;
  }
  if (r.n < kWilcoxonMinPairs)
    throw std::invalid_argument("wilcoxon: need at least 5 non-zero differences, got " + std::to_string(r.n));

  const std::size_t n = r.n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

  std::vector<long> rank2(n);  // doubled mid-ranks
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    for (std::size_t t = i; t < j; ++t) rank2[order[t]] = static_cast<long>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long plus2 = 0, minus2 = 0;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0 ? plus2 : minus2) += rank2[i];
  r.w_plus = plus2 / 2.0;
  r.w_minus = minus2 / 2.0;
  r.w = std::min(r.w_plus, r.w_minus);

  const bool exact = method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= kWilcoxonExactLimit);
  if (exact) {
    if (n > 60) throw std::invalid_argument("wilcoxon: exact method supports at most 60 pairs");
    // counts[s]: sign patterns whose doubled positive rank sum is s.
    const long total2 = plus2 + minus2;
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long rk : rank2) {
      for (long s = reach; s >= 0; --s)
        if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + rk)] += counts[static_cast<std::size_t>(s)];
      reach += rk;
    }
    const long w2 = std::min(plus2, minus2);
    double tail = 0.0;
    for (long s = 0; s <= w2; ++s) tail += counts[static_cast<std::size_t>(s)];
    r.p_two_sided = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    r.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(r.w - mean) - 0.5) / std::sqrt(var);
    r.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  r.significant = r.p_two_sided < alpha;
  return r;
}

}  // namespace faacflow
