#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace faacflow {

enum class Scale { linear, log };
enum class DimKind { continuous, integer };

struct Dimension {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::linear;
  DimKind kind = DimKind::continuous;
};

using Configuration = std::map<std::string, double>;
using UnitPoint = std::vector<double>;

struct SearchSpace {
  std::vector<Dimension> dims;

  /// lo < hi for every dimension; log scale needs lo > 0.
  void validate() const;
  Configuration from_unit(std::span<const double> u) const;
  UnitPoint to_unit(const Configuration& config) const;
};

std::string configuration_json(const Configuration& config);

struct KernelParams {
  double length_scale = 0.2;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

/// Zero-mean GP regression with a squared-exponential kernel on the unit
/// cube.
class GPSurrogate {
 public:
  GPSurrogate() = default;
  explicit GPSurrogate(KernelParams kernel) : kernel_(kernel) {}

  /// Throws EvaluationError when the kernel matrix is singular because of
  /// duplicated points with different values and zero noise.
  static GPSurrogate fit(std::vector<UnitPoint> points, std::vector<double> values, KernelParams kernel = {});

  /// Posterior (mean, variance); the prior when no data is held.
  std::pair<double, double> predict(std::span<const double> x) const;

  double kernel(std::span<const double> a, std::span<const double> b) const;
  const std::vector<UnitPoint>& points() const { return points_; }
  const KernelParams& kernel_params() const { return kernel_; }
  bool empty() const { return points_.empty(); }
  /// Diagonal jitter that had to be added to factorize, 0 if none.
  double jitter() const { return jitter_; }

 private:
  KernelParams kernel_;
  std::vector<UnitPoint> points_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Halton points with a seeded Cranley-Patterson shift.
std::vector<UnitPoint> candidate_set(std::size_t dims, std::size_t count, std::uint64_t seed);
/// Uniform random points used before the surrogate has data.
std::vector<UnitPoint> initial_design(std::size_t dims, std::size_t count, std::uint64_t seed);

/// Candidate with the largest posterior variance (first index on ties),
/// skipping candidates equal to an observed point while unobserved ones
/// remain. With no observations, returns the first initial-design point.
UnitPoint propose_next(const GPSurrogate& surrogate, const SearchSpace& space, std::size_t candidate_budget,
                       std::uint64_t seed);

struct Trial {
  std::size_t index = 0;
  Configuration config;
  UnitPoint unit;
  double score = 0.0;
  double seconds = 0.0;
  bool failed = false;
};

struct TrialLog {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;  // arg-max over non-failed trials
};

struct Budget {
  std::size_t n_init = 5;
  std::size_t n_iter = 20;
  std::size_t candidates = 512;
};

using Objective = std::function<double(const Configuration&)>;

/// n_init random trials, then n_iter rounds of refit / max-variance
/// proposal / evaluation. Non-finite scores are logged as failed and kept
/// out of the surrogate.
TrialLog optimize(const Objective& objective, const SearchSpace& space, const Budget& budget, std::uint64_t seed,
                  const KernelParams& kernel = {});

/// `trial,config_json,score,seconds`
void write_trial_log_csv(std::ostream& out, const TrialLog& log);

}  // namespace faacflow
