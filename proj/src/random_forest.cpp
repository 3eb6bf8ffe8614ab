#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "faacflow/errors.hpp"
#include "faacflow/learning.hpp"
#include "faacflow/rng.hpp"

namespace faacflow {

std::uint64_t tree_seed(std::uint64_t forest_seed, int t) {
  return derive_seed(forest_seed, {0x7265u, static_cast<std::uint64_t>(t)});
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t n) {
  Rng rng(derive_seed(seed, {1}));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

double gini(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += (c / total) * (c / total);
  return 1.0 - sq;
}

int DecisionTree::leaf_for(const Matrix& X, Eigen::Index i) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = X(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return node;
}

namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<int>& y_idx, int n_classes, const RFParams& params, int m,
              std::uint64_t seed)
      : X_(X), y_(y_idx), C_(n_classes), params_(params), m_(m), feature_rng_(derive_seed(seed, {2})) {}

  DecisionTree build(std::vector<std::size_t> samples, std::uint64_t seed) {
    DecisionTree tree;
    tree.seed = seed;
    samples_ = std::move(samples);
    tree_ = &tree;
    grow(0, samples_.size(), 0);
    return tree;
  }

 private:
  std::vector<double> class_counts(std::size_t begin, std::size_t end) const {
    std::vector<double> counts(static_cast<std::size_t>(C_), 0.0);
    for (std::size_t i = begin; i < end; ++i) counts[static_cast<std::size_t>(y_[samples_[i]])] += 1.0;
    return counts;
  }

  std::vector<int> pick_features() {
    const int p = static_cast<int>(X_.cols());
    std::vector<int> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), 0);
    if (m_ >= p) return all;
    for (int i = 0; i < m_; ++i) {
      auto j = static_cast<std::size_t>(i) + feature_rng_.below(static_cast<std::uint64_t>(p - i));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    all.resize(static_cast<std::size_t>(m_));
    std::sort(all.begin(), all.end());
    return all;
  }

  SplitCandidate best_split(std::size_t begin, std::size_t end, const std::vector<double>& parent_counts) {
    const std::size_t n = end - begin;
    const double parent = gini(parent_counts);
    SplitCandidate best;
    std::vector<std::pair<double, int>> vals(n);
    std::vector<double> left(static_cast<std::size_t>(C_));
    const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_leaf));

    for (int f : pick_features()) {
      for (std::size_t i = 0; i < n; ++i) vals[i] = {X_(static_cast<Eigen::Index>(samples_[begin + i]), f), y_[samples_[begin + i]]};
      std::sort(vals.begin(), vals.end());
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left[static_cast<std::size_t>(vals[i].second)] += 1.0;
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        double sl = 0.0, sr = 0.0;
        for (int c = 0; c < C_; ++c) {
          const double l = left[static_cast<std::size_t>(c)];
          const double r = parent_counts[static_cast<std::size_t>(c)] - l;
          sl += l * l;
          sr += r * r;
        }
        const double gl = 1.0 - sl / (double(nl) * double(nl));
        const double gr = 1.0 - sr / (double(nr) * double(nr));
        const double decrease = parent - (double(nl) * gl + double(nr) * gr) / double(n);
        if (decrease > best.decrease + 1e-12) {
          double thr = 0.5 * (vals[i].first + vals[i + 1].first);
          if (!(thr < vals[i + 1].first)) thr = vals[i].first;
          best = {f, thr, decrease};
        }
      }
    }
    return best;
  }

  int make_leaf(const std::vector<double>& counts) {
    TreeNode leaf;
    leaf.counts.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) leaf.counts[c] = static_cast<std::uint32_t>(counts[c]);
    tree_->nodes.push_back(std::move(leaf));
    return static_cast<int>(tree_->nodes.size() - 1);
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    tree_->depth = std::max(tree_->depth, depth);
    const auto counts = class_counts(begin, end);
    const std::size_t n = end - begin;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    if (pure || !depth_ok || n < 2 * static_cast<std::size_t>(std::max(1, params_.min_leaf)) || X_.cols() == 0)
      return make_leaf(counts);

    const SplitCandidate split = best_split(begin, end, counts);
    if (split.feature < 0) return make_leaf(counts);

    auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                              samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t s) {
                                return X_(static_cast<Eigen::Index>(s), split.feature) <= split.threshold;
                              });
    const auto cut = static_cast<std::size_t>(mid - samples_.begin());

    const int id = static_cast<int>(tree_->nodes.size());
    tree_->nodes.push_back(TreeNode{split.feature, split.threshold, -1, -1, {}});
    const int l = grow(begin, cut, depth + 1);
    const int r = grow(cut, end, depth + 1);
    tree_->nodes[static_cast<std::size_t>(id)].left = l;
    tree_->nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Matrix& X_;
  const std::vector<int>& y_;
  int C_;
  const RFParams& params_;
  int m_;
  Rng feature_rng_;
  std::vector<std::size_t> samples_;
  DecisionTree* tree_ = nullptr;
};

}  // namespace

RFModel fit_rf(const Matrix& X, std::span<const int> y, const RFParams& params) {
  if (X.rows() == 0) throw EvaluationError("rf: empty training set");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw EvaluationError("rf: X and y sizes differ");
  if (params.trees < 1) throw EvaluationError("rf: need at least one tree");
  const int p = static_cast<int>(X.cols());
  int m = params.features_per_split;
  if (m <= 0) m = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
  if (p > 0 && m > p) throw EvaluationError("rf: features per split exceeds feature count");
  if (p == 0) m = 0;

  RFModel model;
  model.classes = distinct_classes(y);
  model.n_features = p;
  model.features_per_split = m;
  model.max_depth = params.max_depth;
  model.min_leaf = params.min_leaf;
  model.bootstrap = params.bootstrap;
  model.seed = params.seed;

  std::vector<int> y_idx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y_idx[i] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(), y[i]) - model.classes.begin());
  const int C = static_cast<int>(model.classes.size());
  const auto n = static_cast<std::size_t>(X.rows());

  model.trees.resize(static_cast<std::size_t>(params.trees));
  auto fit_one = [&](int t) {
    const std::uint64_t seed = tree_seed(params.seed, t);
    std::vector<std::size_t> samples;
    if (params.bootstrap) {
      samples = bootstrap_indices(seed, n);
    } else {
      samples.resize(n);
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeBuilder builder(X, y_idx, C, params, m, seed);
    model.trees[static_cast<std::size_t>(t)] = builder.build(std::move(samples), seed);
  };

  const int workers = std::clamp(params.threads, 1, params.trees);
  if (workers == 1) {
    for (int t = 0; t < params.trees; ++t) fit_one(t);
  } else {
    // Each tree owns its seed and output slot, so the worker count does not
    // change the result.
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int t = w; t < params.trees; t += workers) fit_one(t);
      });
    for (auto& th : pool) th.join();
  }
  return model;
}

Matrix predict_proba_rf(const RFModel& model, const Matrix& X) {
  if (X.cols() != model.n_features) throw EvaluationError("rf: feature count mismatch");
  const auto C = static_cast<Eigen::Index>(model.classes.size());
  Matrix votes = Matrix::Zero(X.rows(), C);
  for (const auto& tree : model.trees) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const auto& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_for(X, i))];
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < C; ++c)
        if (leaf.counts[static_cast<std::size_t>(c)] > leaf.counts[static_cast<std::size_t>(best)]) best = c;
      votes(i, best) += 1.0;
    }
  }
  votes /= static_cast<double>(model.trees.size());
  return votes;
}

}  // namespace faacflow
