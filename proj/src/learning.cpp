#include "faacflow/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <json.hpp>

#include "faacflow/digest.hpp"
#include "faacflow/errors.hpp"

namespace faacflow {

std::vector<int> distinct_classes(std::span<const int> y) {
  std::set<int> s(y.begin(), y.end());
  return {s.begin(), s.end()};
}

Matrix select_rows(const Matrix& X, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Matrix select_columns(const Matrix& X, std::span<const int> cols) {
  Matrix out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

Labels select_labels(std::span<const int> y, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

// ------------------------------------------------------------- standardizer

StandardizerParams StandardizerParams::restricted(std::span<const int> cols) const {
  StandardizerParams out;
  out.mean.resize(static_cast<Eigen::Index>(cols.size()));
  out.stddev.resize(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.mean[static_cast<Eigen::Index>(j)] = mean[cols[j]];
    out.stddev[static_cast<Eigen::Index>(j)] = stddev[cols[j]];
  }
  return out;
}

StandardizerParams fit_standardizer(const Matrix& X) {
  if (X.rows() == 0) throw EvaluationError("standardizer: no rows");
  StandardizerParams p;
  p.mean = X.colwise().mean().transpose();
  p.stddev.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double var = (X.col(j).array() - p.mean[j]).square().mean();
    double sd = std::sqrt(var);
    // Rounding in the mean of a constant column leaves a tiny residual.
    if (sd <= 1e-12 * std::max(1.0, std::abs(p.mean[j]))) sd = 0.0;
    p.stddev[j] = sd;
  }
  return p;
}

Matrix apply_standardizer(const StandardizerParams& params, const Matrix& X) {
  if (X.cols() != params.mean.size())
    throw EvaluationError("standardizer: expected " + std::to_string(params.mean.size()) + " columns, got " +
                          std::to_string(X.cols()));
  Matrix Z(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (params.stddev[j] > 0.0)
      Z.col(j) = (X.col(j).array() - params.mean[j]) / params.stddev[j];
    else
      Z.col(j).setZero();
  }
  return Z;
}

// -------------------------------------------------------- logistic objective

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

Vector linear_predictor(const Matrix& X, const Vector& beta) {
  const Eigen::Index p = X.cols();
  Vector eta = X * beta.head(p);
  eta.array() += beta[p];
  return eta;
}

void check_finite(const Matrix& X, const char* who) {
  if (!X.allFinite()) throw EvaluationError(std::string(who) + ": non-finite values in X");
}

}  // namespace

Vector one_vs_all_target(std::span<const int> y, int cls) {
  Vector t(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) t[static_cast<Eigen::Index>(i)] = y[i] == cls ? 1.0 : 0.0;
  return t;
}

double logistic_objective(const Matrix& X, const Vector& y01, const Vector& beta, double l1, double ridge) {
  const Eigen::Index p = X.cols();
  const Vector eta = linear_predictor(X, beta);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) loss += softplus(eta[i]) - y01[i] * eta[i];
  loss /= static_cast<double>(eta.size());
  if (l1 > 0) loss += l1 * beta.head(p).lpNorm<1>();
  if (ridge > 0) loss += 0.5 * ridge * beta.head(p).squaredNorm();
  return loss;
}

Vector logistic_gradient(const Matrix& X, const Vector& y01, const Vector& beta, double ridge) {
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());
  Vector r = linear_predictor(X, beta);
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]) - y01[i];
  Vector g(p + 1);
  g.head(p) = X.transpose() * r / n;
  g[p] = r.sum() / n;
  if (ridge > 0) g.head(p) += ridge * beta.head(p);
  return g;
}

namespace {

/// State of one binary fit: X with an implicit intercept column.
struct BinaryProblem {
  const Matrix& X;
  const Vector& y;
  double n;

  Matrix hessian(const Vector& beta, double ridge) const {
    const Eigen::Index p = X.cols();
    Vector eta = linear_predictor(X, beta);
    Vector w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      double s = sigmoid(eta[i]);
      w[i] = std::max(s * (1.0 - s), 1e-12);
    }
    Matrix H(p + 1, p + 1);
    Matrix Xw = X.array().colwise() * w.array();
    H.topLeftCorner(p, p) = X.transpose() * Xw / n;
    Vector cross = Xw.colwise().sum().transpose() / n;
    H.block(0, p, p, 1) = cross;
    H.block(p, 0, 1, p) = cross.transpose();
    H(p, p) = w.sum() / n;
    if (ridge > 0) H.topLeftCorner(p, p).diagonal().array() += ridge;
    return H;
  }
};

double initial_intercept(const Vector& y) {
  double m = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  return std::log(m / (1.0 - m));
}

bool kkt_satisfied(const Vector& g, const Vector& beta, double lambda, double tol) {
  const Eigen::Index p = beta.size() - 1;
  if (std::abs(g[p]) > tol) return false;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta[j] == 0.0) {
      if (std::abs(g[j]) > lambda + tol) return false;
    } else {
      double s = beta[j] > 0 ? 1.0 : -1.0;
      if (std::abs(g[j] + lambda * s) > tol) return false;
    }
  }
  return true;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct L1Fit {
  Vector beta;
  bool converged = false;
};

/// Proximal Newton: each outer step minimizes the quadratic model plus the
/// l1 term by cyclic coordinate descent, then backtracks on the true
/// objective.
L1Fit fit_binary_l1(const Matrix& X, const Vector& y, double lambda, const SolverOptions& opts) {
  const Eigen::Index p = X.cols();
  BinaryProblem prob{X, y, static_cast<double>(X.rows())};
  L1Fit fit;
  fit.beta = Vector::Zero(p + 1);
  fit.beta[p] = initial_intercept(y);

  double f = logistic_objective(X, y, fit.beta, lambda);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector g = logistic_gradient(X, y, fit.beta);
    if (kkt_satisfied(g, fit.beta, lambda, opts.opt_tol)) {
      fit.converged = true;
      break;
    }
    const Matrix H = prob.hessian(fit.beta, 0.0);

    // Coordinate descent directly on the candidate point x = beta + d, so
    // coordinates thresholded to zero are exactly zero.
    Vector x = fit.beta;
    Vector Hd = Vector::Zero(p + 1);
    for (int sweep = 0; sweep < 500; ++sweep) {
      double max_step = 0.0;
      for (Eigen::Index j = 0; j <= p; ++j) {
        const double a = H(j, j);
        if (a <= 1e-14) continue;
        const double gq = g[j] + Hd[j];
        const double cur = x[j];
        const double next = j == p ? cur - gq / a : soft_threshold(cur - gq / a, lambda / a);
        const double step = next - cur;
        if (step != 0.0) {
          x[j] = next;
          Hd += step * H.col(j);
          max_step = std::max(max_step, std::abs(step) * std::sqrt(a));
        }
      }
      if (max_step < 1e-13) break;
    }
    const Vector d = x - fit.beta;

    const double decrease = g.dot(d) + lambda * (x.head(p).lpNorm<1>() - fit.beta.head(p).lpNorm<1>());
    if (!(decrease < 0.0)) break;  // no descent direction left at machine precision
    double t = 1.0;
    Vector trial = x;
    double ft = logistic_objective(X, y, trial, lambda);
    while (ft > f + 0.25 * t * decrease && t > 1e-12) {
      t *= 0.5;
      trial = fit.beta + t * d;
      for (Eigen::Index j = 0; j < p; ++j)
        if (x[j] == 0.0 && fit.beta[j] == 0.0) trial[j] = 0.0;
      ft = logistic_objective(X, y, trial, lambda);
    }
    if (t <= 1e-12) break;
    fit.beta = trial;
    f = logistic_objective(X, y, fit.beta, lambda);
  }
  if (!fit.converged) {
    const Vector g = logistic_gradient(X, y, fit.beta);
    fit.converged = kkt_satisfied(g, fit.beta, lambda, opts.opt_tol);
  }
  return fit;
}

struct NewtonFit {
  Vector beta;
  bool ridge = false;
  bool converged = false;
};

NewtonFit fit_binary_newton(const Matrix& X, const Vector& y, const SolverOptions& opts) {
  const Eigen::Index p = X.cols();
  BinaryProblem prob{X, y, static_cast<double>(X.rows())};
  NewtonFit fit;
  fit.beta = Vector::Zero(p + 1);
  fit.beta[p] = initial_intercept(y);
  double ridge = 0.0;
  constexpr double kRidge = 1e-8;

  double f = logistic_objective(X, y, fit.beta, 0.0, ridge);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector g = logistic_gradient(X, y, fit.beta, ridge);
    if (g.norm() <= opts.opt_tol) {
      fit.converged = true;
      break;
    }
    Matrix H = prob.hessian(fit.beta, ridge);
    Eigen::LLT<Matrix> llt(H);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
      const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
      ok = diag.minCoeff() > 0 && (diag.minCoeff() / diag.maxCoeff()) > 1e-7;
    }
    if (!ok && ridge == 0.0) {
      ridge = kRidge;
      fit.ridge = true;
      f = logistic_objective(X, y, fit.beta, 0.0, ridge);
      continue;
    }
    Vector d;
    if (ok) {
      d = -llt.solve(g);
    } else {
      // Still singular with the ridge: regularized solve of the step only.
      Matrix Hr = H;
      Hr.diagonal().array() += 1e-6 * std::max(1.0, H.diagonal().maxCoeff());
      d = -Hr.ldlt().solve(g);
    }
    const double slope = g.dot(d);
    if (!(slope < 0)) d = -g;
    double t = 1.0;
    Vector trial = fit.beta + d;
    double ft = logistic_objective(X, y, trial, 0.0, ridge);
    while (ft > f + 1e-4 * t * g.dot(d) && t > 1e-12) {
      t *= 0.5;
      trial = fit.beta + t * d;
      ft = logistic_objective(X, y, trial, 0.0, ridge);
    }
    if (t <= 1e-12) break;
    fit.beta = trial;
    f = ft;
  }
  if (!fit.converged) fit.converged = logistic_gradient(X, y, fit.beta, ridge).norm() <= opts.opt_tol;
  return fit;
}

}  // namespace

// ------------------------------------------------------------------- LASSO

LassoResult fit_lasso(const Matrix& X, std::span<const int> y, double lambda, const SolverOptions& opts) {
  if (!(lambda >= 0.0)) throw EvaluationError("lasso: lambda must be non-negative");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw EvaluationError("lasso: X and y sizes differ");
  check_finite(X, "lasso");
  LassoResult res;
  res.lambda = lambda;
  res.classes = distinct_classes(y);
  if (res.classes.size() < 2) throw EvaluationError("lasso: degenerate label set");

  const auto C = static_cast<Eigen::Index>(res.classes.size());
  res.coef = Matrix::Zero(C, X.cols());
  res.intercept = Vector::Zero(C);
  std::vector<bool> used(static_cast<std::size_t>(X.cols()), false);
  for (Eigen::Index c = 0; c < C; ++c) {
    const Vector t = one_vs_all_target(y, res.classes[static_cast<std::size_t>(c)]);
    L1Fit fit = fit_binary_l1(X, t, lambda, opts);
    res.converged = res.converged && fit.converged;
    res.coef.row(c) = fit.beta.head(X.cols()).transpose();
    res.intercept[c] = fit.beta[X.cols()];
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (std::abs(fit.beta[j]) > kSupportEpsilon) used[static_cast<std::size_t>(j)] = true;
  }
  for (std::size_t j = 0; j < used.size(); ++j)
    if (used[j]) res.support.push_back(static_cast<int>(j));
  return res;
}

double lasso_lambda_max(const Matrix& X, std::span<const int> y) {
  double best = 0.0;
  const double n = static_cast<double>(X.rows());
  for (int cls : distinct_classes(y)) {
    Vector t = one_vs_all_target(y, cls);
    t.array() -= t.mean();
    best = std::max(best, (X.transpose() * t / n).cwiseAbs().maxCoeff());
  }
  return best;
}

// ----------------------------------------------------- logistic regression

LRModel fit_lr(const Matrix& X, std::span<const int> y, const SolverOptions& opts) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw EvaluationError("lr: X and y sizes differ");
  check_finite(X, "lr");
  LRModel m;
  m.classes = distinct_classes(y);
  if (m.classes.size() < 2) throw EvaluationError("lr: degenerate label set");
  const auto C = static_cast<Eigen::Index>(m.classes.size());
  m.weights = Matrix::Zero(C, X.cols());
  m.intercepts = Vector::Zero(C);
  for (Eigen::Index c = 0; c < C; ++c) {
    const Vector t = one_vs_all_target(y, m.classes[static_cast<std::size_t>(c)]);
    NewtonFit fit = fit_binary_newton(X, t, opts);
    m.weights.row(c) = fit.beta.head(X.cols()).transpose();
    m.intercepts[c] = fit.beta[X.cols()];
    m.ridge_fallback = m.ridge_fallback || fit.ridge;
    m.converged = m.converged && fit.converged;
  }
  return m;
}

void normalize_rows(Matrix& scores) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double s = scores.row(i).sum();
    if (s > 0 && std::isfinite(s))
      scores.row(i) /= s;
    else
      scores.row(i).setConstant(1.0 / static_cast<double>(scores.cols()));
  }
}

Matrix predict_proba_lr(const LRModel& model, const Matrix& X) {
  if (X.cols() != model.weights.cols()) throw EvaluationError("lr: feature count mismatch");
  Matrix s = X * model.weights.transpose();
  s.rowwise() += model.intercepts.transpose();
  s = s.unaryExpr([](double v) { return sigmoid(v); });
  normalize_rows(s);
  return s;
}

std::vector<int> predict_classes(const Matrix& proba, std::span<const int> classes) {
  std::vector<int> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < proba.cols(); ++c)
      if (proba(i, c) > proba(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

// ---------------------------------------------------------------- pipeline

std::string to_string(ModelKind kind) { return kind == ModelKind::lr ? "lr" : "rf"; }

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "lr") return ModelKind::lr;
  if (name == "rf") return ModelKind::rf;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected lr or rf)");
}

std::string Hyperparams::to_json(ModelKind kind) const {
  nlohmann::json j;
  j["lambda"] = lambda;
  if (kind == ModelKind::rf) {
    j["trees"] = trees;
    j["max_depth"] = max_depth;
    j["features_per_split"] = features_per_split;
  }
  return j.dump();
}

std::string training_digest(const Matrix& X, std::span<const int> y) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(X.size()) * sizeof(double) + y.size() * sizeof(int));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double v = X(i, j);
      char buf[sizeof(double)];
      std::memcpy(buf, &v, sizeof v);
      bytes.append(buf, sizeof buf);
    }
  for (int v : y) {
    char buf[sizeof(int)];
    std::memcpy(buf, &v, sizeof v);
    bytes.append(buf, sizeof buf);
  }
  return sha256_hex(bytes);
}

PipelineModel fit_pipeline(const Matrix& X, std::span<const int> y, ModelKind kind, const Hyperparams& hp,
                           std::uint64_t seed, Provenance provenance, const SolverOptions& opts, int threads) {
  if (X.rows() == 0) throw EvaluationError("pipeline: empty training set");
  PipelineModel m;
  m.kind = kind;
  m.hyperparams = hp;
  m.input_features = static_cast<std::size_t>(X.cols());

  const StandardizerParams full = fit_standardizer(X);
  const Matrix Z = apply_standardizer(full, X);
  m.lasso = fit_lasso(Z, y, hp.lambda, opts);
  m.standardizer = full.restricted(m.lasso.support);
  const Matrix Zs = select_columns(Z, m.lasso.support);

  if (kind == ModelKind::lr) {
    LRModel lr = fit_lr(Zs, y, opts);
    m.classes = lr.classes;
    m.classifier = std::move(lr);
  } else {
    RFParams rp;
    rp.trees = std::max(1, hp.trees);
    rp.max_depth = hp.max_depth;
    const int sel = static_cast<int>(m.lasso.support.size());
    rp.features_per_split = sel == 0 ? 0 : std::clamp(hp.features_per_split <= 0 ? 1 : hp.features_per_split, 1, sel);
    rp.seed = seed;
    rp.threads = threads;
    RFModel rf = fit_rf(Zs, y, rp);
    m.classes = rf.classes;
    m.classifier = std::move(rf);
  }
  m.hyperparams.features_per_split =
      kind == ModelKind::rf ? std::get<RFModel>(m.classifier).features_per_split : hp.features_per_split;

  provenance.seed = seed;
  provenance.training_rows = static_cast<std::size_t>(X.rows());
  provenance.training_digest = training_digest(X, y);
  m.provenance = std::move(provenance);
  return m;
}

Matrix predict_proba(const PipelineModel& model, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model.input_features)
    throw EvaluationError("pipeline: expected " + std::to_string(model.input_features) + " features, got " +
                          std::to_string(X.cols()));
  const Matrix Zs = apply_standardizer(model.standardizer, select_columns(X, model.lasso.support));
  if (const auto* lr = std::get_if<LRModel>(&model.classifier)) return predict_proba_lr(*lr, Zs);
  return predict_proba_rf(std::get<RFModel>(model.classifier), Zs);
}

}  // namespace faacflow
