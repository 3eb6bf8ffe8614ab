#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "faacflow/errors.hpp"
#include "faacflow/metrics.hpp"
#include "faacflow/rng.hpp"
#include "oracles.hpp"

using namespace faacflow;
using namespace faacflow::test;

TEST_SUITE("metrics") {

TEST_CASE("AUC hand cases") {
  CHECK(*auc_binary(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75);
  CHECK(*auc_binary(std::vector<double>{0.1, 0.2, 0.3, 0.4}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(*auc_binary(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{0, 1, 1}) == 0.5);
  CHECK_FALSE(auc_binary(std::vector<double>{0.5, 0.2}, std::vector<int>{1, 1}).has_value());
  CHECK_THROWS_AS(auc_binary(std::vector<double>{0.5}, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST_CASE("AUC equals exhaustive pair enumeration and trapezoidal ROC") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const std::uint64_t levels = 1 + rng.below(12);  // few levels force ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t % 2 ? static_cast<double>(rng.below(levels)) : rng.uniform();
      y[i] = static_cast<int>(rng.below(2));
    }
    const auto got = auc_binary(s, y), want = pair_auc(s, y);
    REQUIRE(got.has_value() == want.has_value());
    if (!got) continue;
    REQUIRE(*got == *want);
    REQUIRE(std::abs(*got - trapezoid_auc(s, y)) <= 1e-12);
  }
}

TEST_CASE("weighted average AUC") {
  using O = std::optional<double>;
  const std::vector<std::size_t> q31{3, 1};
  CHECK(weighted_avg_auc(std::vector<O>{1.0, 0.5}, q31) == 0.875);
  CHECK(weighted_avg_auc(std::vector<O>{0.9, 0.8, 0.7}, std::vector<std::size_t>{5, 3, 2}) == doctest::Approx(0.83));
  CHECK(weighted_avg_auc(std::vector<O>{0.6, 0.6, 0.6}, std::vector<std::size_t>{5, 3, 2}) == doctest::Approx(0.6));
  CHECK(weighted_avg_auc(std::vector<O>{std::nullopt, 0.7}, std::vector<std::size_t>{4, 2}) == doctest::Approx(0.7));
  CHECK_THROWS_AS(weighted_avg_auc(std::vector<O>{0.5}, std::vector<std::size_t>{0}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_avg_auc(std::vector<O>{0.5}, q31), std::invalid_argument);

  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 1 + rng.below(6);
    std::vector<O> a(k);
    std::vector<std::size_t> q(k);
    double lo = 1, hi = 0;
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = rng.uniform();
      q[i] = 1 + rng.below(100);
      lo = std::min(lo, *a[i]);
      hi = std::max(hi, *a[i]);
    }
    const double w = weighted_avg_auc(a, q);
    REQUIRE(w >= lo - 1e-15);
    REQUIRE(w <= hi + 1e-15);
  }
}

TEST_CASE("Wilcoxon: six all-positive differences") {
  const std::vector<double> a{1.1, 2.2, 3.3, 4.4, 5.5, 6.6}, b{1, 2, 3, 4, 5, 6};
  const auto r = wilcoxon_signed_rank(a, b);
  CHECK(r.n == 6);
  CHECK(r.w == 0.0);
  CHECK(r.exact);
  CHECK(r.p_two_sided == 0.03125);
  CHECK(r.significant);
}

TEST_CASE("Wilcoxon: identical samples, symmetry, bounds") {
  const std::vector<double> a{0.9, 0.8, 0.7, 0.95, 0.85};
  const auto same = wilcoxon_signed_rank(a, a);
  CHECK(same.no_evidence);
  CHECK(same.p_two_sided == 1.0);
  CHECK_FALSE(same.significant);

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 5 + rng.below(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::round(rng.uniform() * 20) / 20;
      y[i] = std::round(rng.uniform() * 20) / 20;
    }
    x[0] = y[0] + 1;
    for (std::size_t i = 1; i < 5; ++i) x[i] = y[i] + 0.5 * static_cast<double>(i);
    const auto ab = wilcoxon_signed_rank(x, y), ba = wilcoxon_signed_rank(y, x);
    REQUIRE(ab.w == ba.w);
    REQUIRE(ab.p_two_sided == ba.p_two_sided);
    REQUIRE(ab.w >= 0);
    REQUIRE(ab.w <= ab.n * (ab.n + 1) / 4.0);
    REQUIRE(ab.w_plus + ab.w_minus == ab.n * (ab.n + 1) / 2.0);
    REQUIRE(ab.p_two_sided > 0);
    REQUIRE(ab.p_two_sided <= 1);
  }
}

TEST_CASE("Wilcoxon: exact p matches 2^n enumeration for n <= 12") {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 5 + rng.below(8);
    std::vector<double> a(n), b(n, 0.0), d;
    for (auto& v : a) {
      do v = static_cast<double>(static_cast<int>(rng.below(9)) - 4) / 4;  // ties in |d|
      while (v == 0.0);
      d.push_back(v);
    }
    const auto r = wilcoxon_signed_rank(a, b);
    REQUIRE(r.exact);
    REQUIRE(r.p_two_sided == doctest::Approx(enumerate_p(d)).epsilon(1e-12));
  }
}

TEST_CASE("Wilcoxon: exact and normal approximation agree at n = 20") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(20), b(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.uniform() + 0.1 * static_cast<double>(t % 5);
      b[i] = rng.uniform();
    }
    const auto ex = wilcoxon_signed_rank(a, b, WilcoxonMethod::exact);
    const auto nm = wilcoxon_signed_rank(a, b, WilcoxonMethod::normal);
    REQUIRE(ex.exact);
    REQUIRE_FALSE(nm.exact);
    REQUIRE(std::abs(ex.p_two_sided - nm.p_two_sided) <= 0.01);
  }
}

TEST_CASE("Wilcoxon: argument errors") {
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1, 2}, std::vector<double>{1}), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{1, 2, 3}, std::vector<double>{0, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("stratified folds: exact divisibility cases") {
  const std::vector<int> one(10, 0);
  const auto f1 = stratified_folds(one, 5, 1);
  for (int k = 0; k < 5; ++k) CHECK(f1.test_rows(k).size() == 2);

  std::vector<int> two(10, 0);
  two.insert(two.end(), 5, 1);
  const auto f2 = stratified_folds(two, 5, 9);
  for (int k = 0; k < 5; ++k) {
    std::size_t a = 0, b = 0;
    for (auto i : f2.test_rows(k)) (two[i] ? b : a) += 1;
    CHECK(a == 2);
    CHECK(b == 1);
  }
  CHECK_THROWS_WITH_AS(stratified_folds(std::vector<int>{0, 0, 0, 0, 0, 1}, 5, 1),
                       doctest::Contains("class too small to stratify"), ConfigError);
}

TEST_CASE("stratified folds: partition and balance on random labels") {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + static_cast<int>(rng.below(6));
    const int classes = 1 + static_cast<int>(rng.below(4));
    std::vector<int> labels;
    for (int c = 0; c < classes; ++c) labels.insert(labels.end(), k + rng.below(40), c * 3);
    rng.shuffle(labels.begin(), labels.end());
    const auto fa = stratified_folds(labels, k, t);
    std::map<int, std::vector<std::size_t>> per;
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      REQUIRE(fa.fold_of[i] >= 0);
      REQUIRE(fa.fold_of[i] < k);
      auto& v = per[labels[i]];
      v.resize(static_cast<std::size_t>(k), 0);
      ++v[static_cast<std::size_t>(fa.fold_of[i])];
      ++sizes[static_cast<std::size_t>(fa.fold_of[i])];
    }
    for (const auto& [c, v] : per) REQUIRE(*std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end()) <= 1);
    REQUIRE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <=
            static_cast<std::size_t>(classes));
    for (int f = 0; f < k; ++f) REQUIRE(fa.test_rows(f).size() + fa.train_rows(f).size() == labels.size());
  }
}

TEST_CASE("stratified folds: seed determinism") {
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  const auto base = stratified_folds(labels, 5, 1234);
  CHECK(stratified_folds(labels, 5, 1234).fold_of == base.fold_of);
  std::set<std::vector<int>> seen{base.fold_of};
  for (std::uint64_t s = 0; s < 20; ++s) seen.insert(stratified_folds(labels, 5, s).fold_of);
  CHECK(seen.size() == 21);
}

TEST_CASE("stratified holdout") {
  std::vector<int> labels(50, 0);
  labels.insert(labels.end(), 10, 1);
  labels.insert(labels.end(), 2, 2);
  const auto [train, hold] = stratified_holdout(labels, 0.2, 3);
  CHECK(train.size() + hold.size() == labels.size());
  std::map<int, int> h;
  for (auto i : hold) ++h[labels[i]];
  CHECK(h[0] == 10);
  CHECK(h[1] == 2);
  CHECK(h[2] == 1);
  std::vector<std::size_t> all(train);
  all.insert(all.end(), hold.begin(), hold.end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
}

}  // TEST_SUITE
