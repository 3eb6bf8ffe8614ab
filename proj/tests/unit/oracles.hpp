#pragma once

// Independent oracles shared by the unit and acceptance tests. Each one
// recomputes a quantity by brute force rather than through library code.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "faacflow/learning.hpp"
#include "faacflow/rng.hpp"

namespace faacflow::test {


inline Matrix random_matrix(Rng& rng, int n, int p) {
  Matrix X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
  return X;
}

inline bool kkt_holds(const Matrix& X, std::span<const int> y, const LassoResult& r, double tol) {
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    Vector beta(X.cols() + 1);
    beta.head(X.cols()) = r.coef.row(ci).transpose();
    beta[X.cols()] = r.intercept[ci];
    const Vector g = logistic_gradient(X, one_vs_all_target(y, r.classes[c]), beta);
    if (std::abs(g[X.cols()]) > tol) return false;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double b = beta[j];
      if (b == 0.0 ? std::abs(g[j]) > r.lambda + tol : std::abs(g[j] + r.lambda * (b > 0 ? 1 : -1)) > tol)
        return false;
    }
  }
  return true;
}

struct OracleSplit {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

inline double weighted_gini(const Matrix& X, std::span<const int> y, const std::vector<std::size_t>& rows, int classes,
                     int f, double thr) {
  std::vector<double> l(static_cast<std::size_t>(classes), 0.0), r(l);
  for (auto i : rows) (X(static_cast<Eigen::Index>(i), f) <= thr ? l : r)[static_cast<std::size_t>(y[i])] += 1.0;
  double nl = 0, nr = 0;
  for (double v : l) nl += v;
  for (double v : r) nr += v;
  return (nl * gini(l) + nr * gini(r)) / (nl + nr);
}

/// Exhaustive best-Gini split over every feature and every midpoint, by
/// direct partition counting.
inline OracleSplit exhaustive_root(const Matrix& X, std::span<const int> y, const std::vector<std::size_t>& rows,
                            int classes) {
  std::vector<double> parent(static_cast<std::size_t>(classes), 0.0);
  for (auto i : rows) parent[static_cast<std::size_t>(y[i])] += 1.0;
  const double g0 = gini(parent);
  OracleSplit best;
  for (int f = 0; f < X.cols(); ++f) {
    std::set<double> values;
    for (auto i : rows) values.insert(X(static_cast<Eigen::Index>(i), f));
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double thr = 0.5 * (*it + *std::next(it));
      const double dec = g0 - weighted_gini(X, y, rows, classes, f, thr);
      if (dec > best.decrease + 1e-12) best = {f, thr, dec};
    }
  }
  return best;
}


/// (2 * concordant + tied) / (2 * n_pos * n_neg) over all pairs.
inline std::optional<double> pair_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double twice = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.size(); ++i) (y[i] ? pos : neg) += 1;
  if (pos == 0 || neg == 0) return std::nullopt;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) twice += s[i] > s[j] ? 2 : s[i] == s[j] ? 1 : 0;
  return twice / (2 * pos * neg);
}

/// Trapezoidal area under the ROC polyline over all distinct thresholds.
inline double trapezoid_auc(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] > s[b]; });
  double pos = 0, neg = 0;
  for (int v : y) (v ? pos : neg) += 1;
  double tp = 0, fp = 0, area = 0;
  for (std::size_t i = 0; i < idx.size();) {
    double dtp = 0, dfp = 0;
    std::size_t j = i;
    for (; j < idx.size() && s[idx[j]] == s[idx[i]]; ++j) (y[idx[j]] ? dtp : dfp) += 1;
    area += (dfp / neg) * ((tp + tp + dtp) / (2 * pos));
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area;
}

/// Two-sided p by enumerating all 2^n sign patterns over doubled mid-ranks.
inline double enumerate_p(const std::vector<double>& d) {
  const std::size_t n = d.size();
  std::vector<long> rank2(n);
  for (std::size_t i = 0; i < n; ++i) {
    long less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += std::abs(d[j]) < std::abs(d[i]);
      equal += std::abs(d[j]) == std::abs(d[i]);
    }
    rank2[i] = 2 * less + equal + 1;
  }
  long plus = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank2[i];
    if (d[i] > 0) plus += rank2[i];
  }
  const long w = std::min(plus, total - plus);
  long hits = 0;
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    long s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank2[i];
    hits += s <= w;
  }
  return std::min(1.0, 2.0 * static_cast<double>(hits) / static_cast<double>(1ul << n));
}

}  // namespace faacflow::test
