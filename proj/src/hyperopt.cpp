#include "faacflow/hyperopt.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "faacflow/csv.hpp"
#include "faacflow/errors.hpp"
#include "faacflow/rng.hpp"

namespace faacflow {

void SearchSpace::validate() const {
  if (dims.empty()) throw ConfigError("search space has no dimensions");
  for (const auto& d : dims) {
    if (!(d.lo < d.hi)) throw ConfigError("search dimension '" + d.name + "': need lo < hi");
    if (d.scale == Scale::log && !(d.lo > 0.0)) throw ConfigError("search dimension '" + d.name + "': log scale needs lo > 0");
  }
}

Configuration SearchSpace::from_unit(std::span<const double> u) const {
  if (u.size() != dims.size()) throw ConfigError("unit point has the wrong dimension");
  Configuration config;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    const double t = std::clamp(u[i], 0.0, 1.0);
    double v = d.scale == Scale::log ? std::exp(std::log(d.lo) + t * (std::log(d.hi) - std::log(d.lo)))
                                     : d.lo + t * (d.hi - d.lo);
    if (d.kind == DimKind::integer) v = std::round(v);
    config[d.name] = std::clamp(v, d.lo, d.hi);
  }
  return config;
}

UnitPoint SearchSpace::to_unit(const Configuration& config) const {
  UnitPoint u(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    auto it = config.find(d.name);
    if (it == config.end()) throw ConfigError("configuration lacks '" + d.name + "'");
    const double v = std::clamp(it->second, d.lo, d.hi);
    u[i] = d.scale == Scale::log ? (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo))
                                 : (v - d.lo) / (d.hi - d.lo);
  }
  return u;
}

std::string configuration_json(const Configuration& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config) j[k] = v;
  return j.dump();
}

// ------------------------------------------------------------------ GP

double GPSurrogate::kernel(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return kernel_.signal_variance * std::exp(-0.5 * d2 / (kernel_.length_scale * kernel_.length_scale));
}

GPSurrogate GPSurrogate::fit(std::vector<UnitPoint> points, std::vector<double> values, KernelParams kernel) {
  if (points.empty()) throw EvaluationError("gp: no observations");
  if (points.size() != values.size()) throw EvaluationError("gp: points and values differ in length");
  if (!(kernel.length_scale > 0.0) || !(kernel.signal_variance > 0.0) || kernel.noise_variance < 0.0)
    throw ConfigError("gp: invalid kernel parameters");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw EvaluationError("gp: points differ in dimension");
    for (double x : p)
      if (!(x >= 0.0 && x <= 1.0)) throw EvaluationError("gp: point outside the unit cube");
  }
  for (double v : values)
    if (!std::isfinite(v)) throw EvaluationError("gp: non-finite observation");

  if (kernel.noise_variance == 0.0)
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        if (points[i] == points[j] && values[i] != values[j])
          throw EvaluationError("gp: duplicate points with conflicting values and zero noise");

  GPSurrogate gp(kernel);
  gp.points_ = std::move(points);
  const auto n = static_cast<Eigen::Index>(gp.points_.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = gp.kernel(gp.points_[static_cast<std::size_t>(i)], gp.points_[static_cast<std::size_t>(j)]);
      K(i, j) = k;
      K(j, i) = k;
    }
  K.diagonal().array() += kernel.noise_variance;

  gp.chol_.compute(K);
  // Escalating jitter for numerically duplicated points.
  double jitter = 1e-12 * kernel.signal_variance;
  while (gp.chol_.info() != Eigen::Success) {
    if (jitter > 1e-4 * kernel.signal_variance) throw EvaluationError("gp: kernel matrix is not positive definite");
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    gp.chol_.compute(Kj);
    gp.jitter_ = jitter;
    jitter *= 10.0;
  }
  const Eigen::Map<const Eigen::VectorXd> y(values.data(), n);
  gp.alpha_ = gp.chol_.solve(y);
  return gp;
}

std::pair<double, double> GPSurrogate::predict(std::span<const double> x) const {
  if (points_.empty()) return {0.0, kernel_.signal_variance};
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(points_[static_cast<std::size_t>(i)], x);
  const double mean = ks.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(ks);
  const double var = kernel_.signal_variance - v.squaredNorm();
  return {mean, std::max(0.0, var)};
}

// ------------------------------------------------------------ candidates

namespace {

constexpr std::array<unsigned, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

bool same_point(const UnitPoint& a, const UnitPoint& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-12) return false;
  return true;
}

}  // namespace

std::vector<UnitPoint> candidate_set(std::size_t dims, std::size_t count, std::uint64_t seed) {
  if (dims > kPrimes.size()) throw ConfigError("candidate set supports at most 16 dimensions");
  Rng rng(derive_seed(seed, {2}));
  std::vector<double> shift(dims);
  for (auto& s : shift) s = rng.uniform();
  std::vector<UnitPoint> out(count, UnitPoint(dims));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < dims; ++d) {
      double v = radical_inverse(i + 1, kPrimes[d]) + shift[d];
      out[i][d] = v - std::floor(v);
    }
  return out;
}

std::vector<UnitPoint> initial_design(std::size_t dims, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {1}));
  std::vector<UnitPoint> out(count, UnitPoint(dims));
  for (auto& p : out)
    for (auto& v : p) v = rng.uniform();
  return out;
}

UnitPoint propose_next(const GPSurrogate& surrogate, const SearchSpace& space, std::size_t candidate_budget,
                       std::uint64_t seed) {
  const std::size_t dims = space.dims.size();
  if (surrogate.empty()) return initial_design(dims, 1, seed).front();
  if (candidate_budget == 0) throw ConfigError("candidate budget must be positive");

  const auto candidates = candidate_set(dims, candidate_budget, seed);
  std::vector<bool> observed(candidates.size(), false);
  bool any_free = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (const auto& p : surrogate.points())
      if (same_point(candidates[i], p)) {
        observed[i] = true;
        break;
      }
    any_free = any_free || !observed[i];
  }

  std::size_t best = candidates.size();
  double best_var = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (any_free && observed[i]) continue;
    const double var = surrogate.predict(candidates[i]).second;
    if (var > best_var) {
      best_var = var;
      best = i;
    }
  }
  return candidates[best];
}

// ------------------------------------------------------------- optimize

namespace {

// The evaluated point: integer dimensions snap to the unit image of the
// rounded value, continuous ones keep the proposal.
UnitPoint evaluated_point(const SearchSpace& space, const UnitPoint& u, const Configuration& config) {
  UnitPoint snapped = space.to_unit(config);
  UnitPoint out = u;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (space.dims[i].kind == DimKind::integer) out[i] = snapped[i];
    out[i] = std::clamp(out[i], 0.0, 1.0);
  }
  return out;
}

}  // namespace

TrialLog optimize(const Objective& objective, const SearchSpace& space, const Budget& budget, std::uint64_t seed,
                  const KernelParams& kernel) {
  space.validate();
  if (budget.n_init + budget.n_iter == 0) throw ConfigError("optimize: budget must allow at least one evaluation");
  TrialLog log;

  auto run = [&](const UnitPoint& proposal) {
    Trial t;
    t.index = log.trials.size();
    t.config = space.from_unit(proposal);
    t.unit = evaluated_point(space, proposal, t.config);
    const auto start = std::chrono::steady_clock::now();
    t.score = objective(t.config);
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    t.failed = !std::isfinite(t.score);
    if (!t.failed && (!log.best || t.score > log.trials[*log.best].score)) log.best = t.index;
    log.trials.push_back(std::move(t));
  };

  const auto init = initial_design(space.dims.size(), budget.n_init, seed);
  for (const auto& u : init) run(u);

  const std::uint64_t candidate_seed = derive_seed(seed, {3});
  for (std::size_t it = 0; it < budget.n_iter; ++it) {
    std::vector<UnitPoint> points;
    std::vector<double> values;
    for (const auto& t : log.trials)
      if (!t.failed) {
        points.push_back(t.unit);
        values.push_back(t.score);
      }
    GPSurrogate gp = points.empty() ? GPSurrogate(kernel) : GPSurrogate::fit(points, values, kernel);
    run(propose_next(gp, space, budget.candidates, candidate_seed));
  }
  return log;
}

void write_trial_log_csv(std::ostream& out, const TrialLog& log) {
  out << "trial,config_json,score,seconds\n";
  for (const auto& t : log.trials) {
    out << t.index << ',' << csv::escape(configuration_json(t.config)) << ','
        << (t.failed ? std::string("NA") : csv::format_exact(t.score)) << ',' << csv::format_sig(t.seconds, 6)
        << '\n';
  }
}

}  // namespace faacflow
