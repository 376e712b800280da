#include "volasso/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace volasso {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWellConditioned = 1e6;
constexpr double kRankDeficient = 1e12;

struct Centered {
  Matrix x;
  Vector y;
  Vector x_means;
  double y_mean = 0.0;
  Vector col_sq;  // ||x_j||^2 / n
  double n = 0.0;
};

Centered center(const Dataset& d) {
  Centered c;
  c.n = static_cast<double>(d.n());
  c.x_means = d.x().colwise().mean().transpose();
  c.y_mean = d.y().mean();
  c.x = d.x().rowwise() - c.x_means.transpose();
  c.y = d.y().array() - c.y_mean;
  c.col_sq = c.x.colwise().squaredNorm().transpose() / c.n;
  return c;
}

double condition_number(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(s.size() - 1) > 0.0)) return kInf;
  return s(0) / s(s.size() - 1);
}

FitResult make_fit(const Centered& c, Vector beta, ModelKind kind, double lambda) {
  FitResult f;
  f.intercept = c.y_mean - beta.dot(c.x_means);
  f.coefficients = std::move(beta);
  f.model_kind = kind;
  f.lambda = lambda;
  return f;
}

double centered_objective(const Centered& c, const Vector& beta, double lambda,
                          const Vector& factors) {
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) penalty += factors(j) * std::abs(beta(j));
  }
  return (c.y - c.x * beta).squaredNorm() / (2.0 * c.n) + lambda * penalty;
}

struct Descent {
  Vector beta;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

Descent coordinate_descent(const Centered& c, double lambda, const Vector& factors,
                           const SolverConfig& cfg, const Vector* warm_start) {
  const auto p = c.x.cols();
  Descent out;
  out.beta = Vector::Zero(p);
  if (warm_start != nullptr) {
    out.beta = *warm_start;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::isinf(factors(j))) out.beta(j) = 0.0;
    }
  }
  Vector residual = c.y - c.x * out.beta;
  if (cfg.record_trace) out.trace.push_back(centered_objective(c, out.beta, lambda, factors));

  for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (std::isinf(factors(j)) || !(c.col_sq(j) > 0.0)) continue;
      const double z = c.x.col(j).dot(residual) / c.n + c.col_sq(j) * out.beta(j);
      const double updated = soft_threshold(z, lambda * factors(j)) / c.col_sq(j);
      const double delta = updated - out.beta(j);
      if (delta != 0.0) {
        residual.noalias() -= delta * c.x.col(j);
        out.beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    out.iterations = sweep;
    if (cfg.record_trace) out.trace.push_back(centered_objective(c, out.beta, lambda, factors));
    if (max_change < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double centered_lambda_max(const Centered& c, const Vector& factors) {
  const auto p = c.x.cols();
  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (factors(j) == 0.0) free_cols.push_back(j);
  }
  Vector residual = c.y;
  if (!free_cols.empty()) {
    Matrix xf(c.x.rows(), static_cast<Eigen::Index>(free_cols.size()));
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      xf.col(static_cast<Eigen::Index>(k)) = c.x.col(free_cols[k]);
    }
    residual = c.y - xf * xf.colPivHouseholderQr().solve(c.y);
  }
  double top = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (factors(j) > 0.0 && std::isfinite(factors(j))) {
      top = std::max(top, std::abs(c.x.col(j).dot(residual) / c.n) / factors(j));
    }
  }
  // Guard against the quotient rounding below |z_j| / w_j.
  return top * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
}

void check_factors(const Vector& factors, Eigen::Index p) {
  if (factors.size() != p) throw DimensionMismatch("penalty factors have wrong length");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::isnan(factors(j)) || factors(j) < 0.0) {
      throw InvalidDataset("penalty factors must be nonnegative");
    }
  }
}

std::vector<double> log_grid(double top, double ratio, int size) {
  std::vector<double> grid;
  if (!(top > 0.0)) return {0.0};
  grid.reserve(static_cast<std::size_t>(size));
  const double step = size > 1 ? std::log(ratio) / (size - 1) : 0.0;
  for (int k = 0; k < size; ++k) grid.push_back(top * std::exp(step * k));
  grid.front() = top;
  return grid;
}

// Contiguous blocks: fold k trains on rows [0, train_end) and validates on
// [train_end, val_end); validation always follows training in time.
struct Fold {
  std::size_t train_end;
  std::size_t val_end;
};

std::vector<Fold> rolling_folds(std::size_t n, int folds) {
  const auto k = static_cast<std::size_t>(folds);
  const std::size_t block = n / (k + 1);
  if (block < 2) {
    throw InvalidDataset("rolling_cv: " + std::to_string(n) + " rows are too few for " +
                         std::to_string(folds) + " folds");
  }
  std::vector<Fold> out;
  for (std::size_t f = 1; f <= k; ++f) {
    out.push_back({f * block, f == k ? n : (f + 1) * block});
  }
  return out;
}

std::size_t argmin_prefer_first(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

double information_criterion(Selection s, double rss, double n, int k) {
  const double fit_term = n * std::log(std::max(rss / n, std::numeric_limits<double>::min()));
  return s == Selection::aic ? fit_term + 2.0 * k : fit_term + k * std::log(n);
}

FitResult finish_weighted(FitResult f, const Vector& factors, ModelKind kind) {
  f.model_kind = kind;
  if (kind == ModelKind::adaptive_lasso || kind == ModelKind::vw_lasso) {
    f.weights_used = factors;
  } else {
    f.weights_used.reset();
  }
  return f;
}

ModelKind kind_for(WeightSource source) {
  switch (source) {
    case WeightSource::volatility: return ModelKind::vw_lasso;
    case WeightSource::adaptive: return ModelKind::adaptive_lasso;
    case WeightSource::unit: return ModelKind::lasso;
  }
  return ModelKind::lasso;
}

}  // namespace

std::string_view to_string(Selection s) noexcept {
  switch (s) {
    case Selection::bic: return "bic";
    case Selection::aic: return "aic";
    case Selection::rolling_cv: return "rolling_cv";
  }
  return "unknown";
}

Selection parse_selection(std::string_view name) {
  for (auto s : {Selection::bic, Selection::aic, Selection::rolling_cv}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown selection criterion '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ConfigError("lambda_min_ratio must lie in (0, 1)");
  }
  if (lambda_grid_size < 1) throw ConfigError("lambda_grid_size must be at least 1");
  if (cv_folds < 1) throw ConfigError("cv_folds must be at least 1");
  if (!(gamma_adaptive > 0.0)) throw ConfigError("gamma_adaptive must be positive");
}

FitResult fit_ols(const Dataset& d) {
  if (d.n() <= d.p()) {
    throw RankDeficient("fit_ols: n=" + std::to_string(d.n()) + " must exceed p=" +
                        std::to_string(d.p()));
  }
  const auto c = center(d);
  const double cond = condition_number(c.x);
  if (!(cond < kRankDeficient)) {
    throw RankDeficient("fit_ols: design condition number " + std::to_string(cond));
  }
  Vector beta = c.x.colPivHouseholderQr().solve(c.y);
  return make_fit(c, std::move(beta), ModelKind::ols, 0.0);
}

FitResult fit_ridge(const Dataset& d, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("fit_ridge: lambda must be nonnegative");
  const auto c = center(d);
  Matrix gram = c.x.transpose() * c.x / c.n;
  gram.diagonal().array() += 2.0 * lambda;
  Vector beta = gram.ldlt().solve(c.x.transpose() * c.y / c.n);
  return make_fit(c, std::move(beta), ModelKind::ridge, lambda);
}

FitResult fit_weighted_lasso(const Dataset& d, double lambda, const Vector& factors,
                             const SolverConfig& cfg, const Vector* warm_start) {
  if (!(lambda >= 0.0)) throw ConfigError("fit_weighted_lasso: lambda must be nonnegative");
  check_factors(factors, d.p());
  if (warm_start != nullptr && warm_start->size() != d.p()) {
    throw DimensionMismatch("warm start has wrong length");
  }
  const auto c = center(d);
  auto descent = coordinate_descent(c, lambda, factors, cfg, warm_start);
  FitResult f = make_fit(c, std::move(descent.beta), ModelKind::lasso, lambda);
  f.iterations = descent.iterations;
  f.converged = descent.converged;
  f.objective_trace = std::move(descent.trace);
  if (!f.converged && cfg.strict) throw NotConverged(f);
  return f;
}

FitResult fit_weighted_lasso(const Dataset& d, double lambda, const PenaltyWeights& w,
                             const SolverConfig& cfg) {
  w.validate();
  return finish_weighted(fit_weighted_lasso(d, lambda, w.weights, cfg), w.weights,
                         kind_for(w.source));
}

FitResult fit_lasso(const Dataset& d, double lambda, const SolverConfig& cfg) {
  return fit_weighted_lasso(d, lambda, PenaltyWeights::unit(d.p()), cfg);
}

Vector adaptive_factors(const Vector& initial, double gamma) {
  Vector factors(initial.size());
  for (Eigen::Index j = 0; j < initial.size(); ++j) {
    const double magnitude = std::abs(initial(j));
    factors(j) = magnitude < 1e-10 ? kInf : 1.0 / std::pow(magnitude, gamma);
  }
  return factors;
}

Vector adaptive_initial_estimate(const Dataset& d, const SolverConfig& cfg) {
  if (d.n() > 2 * d.p()) {
    const auto c = center(d);
    if (condition_number(c.x) < kWellConditioned) return fit_ols(d).coefficients;
  }
  SolverConfig stage_one = cfg;
  stage_one.selection = Selection::bic;
  return fit_lasso_selected(d, stage_one).fit.coefficients;
}

FitResult fit_adaptive_lasso_from_initial(const Dataset& d, double lambda, const Vector& initial,
                                          const SolverConfig& cfg) {
  if (initial.size() != d.p()) throw DimensionMismatch("initial estimate has wrong length");
  const Vector factors = adaptive_factors(initial, cfg.gamma_adaptive);
  if (factors.array().isInf().all()) {
    const auto c = center(d);
    FitResult f = make_fit(c, Vector::Zero(d.p()), ModelKind::adaptive_lasso, lambda);
    f.all_weights_infinite = true;
    f.weights_used = factors;
    return f;
  }
  return finish_weighted(fit_weighted_lasso(d, lambda, factors, cfg), factors,
                         ModelKind::adaptive_lasso);
}

FitResult fit_adaptive_lasso(const Dataset& d, double lambda, const SolverConfig& cfg) {
  return fit_adaptive_lasso_from_initial(d, lambda, adaptive_initial_estimate(d, cfg), cfg);
}

FitResult fit_vw_lasso(const Dataset& d, double lambda, const PenaltyWeights& w,
                       const SolverConfig& cfg) {
  if (w.source != WeightSource::volatility) {
    throw ConfigError("fit_vw_lasso: weights must come from volatility_weights");
  }
  return fit_weighted_lasso(d, lambda, w, cfg);
}

double lambda_max(const Dataset& d, const Vector& factors) {
  check_factors(factors, d.p());
  return centered_lambda_max(center(d), factors);
}

LambdaPath select_lambda(const Dataset& d, const Vector& factors, const SolverConfig& cfg) {
  cfg.validate();
  check_factors(factors, d.p());
  const auto c = center(d);
  LambdaPath path;
  path.lambdas =
      log_grid(centered_lambda_max(c, factors), cfg.lambda_min_ratio, cfg.lambda_grid_size);
  const std::size_t grid = path.lambdas.size();
  path.scores.assign(grid, 0.0);
  path.nonzeros.assign(grid, 0);

  Vector warm = Vector::Zero(d.p());
  for (std::size_t k = 0; k < grid; ++k) {
    auto descent = coordinate_descent(c, path.lambdas[k], factors, cfg, &warm);
    warm = descent.beta;
    const int nz = static_cast<int>((warm.array() != 0.0).count());
    path.nonzeros[k] = nz;
    if (cfg.selection != Selection::rolling_cv) {
      const double rss = (c.y - c.x * warm).squaredNorm();
      path.scores[k] = information_criterion(cfg.selection, rss, c.n, nz);
    }
  }

  if (cfg.selection == Selection::rolling_cv) {
    const auto folds = rolling_folds(static_cast<std::size_t>(d.n()), cfg.cv_folds);
    for (const auto& fold : folds) {
      const Dataset train = d.rows(0, fold.train_end);
      const Dataset valid = d.rows(fold.train_end, fold.val_end);
      Vector fold_warm = Vector::Zero(d.p());
      for (std::size_t k = 0; k < grid; ++k) {
        const auto f = fit_weighted_lasso(train, path.lambdas[k], factors, cfg, &fold_warm);
        fold_warm = f.coefficients;
        const double mse = (valid.y() - predict(f, valid)).squaredNorm() /
                           static_cast<double>(valid.n());
        path.scores[k] += mse / static_cast<double>(folds.size());
      }
    }
  }
  path.chosen_index = argmin_prefer_first(path.scores);
  return path;
}

LambdaPath select_lambda(const Dataset& d, const PenaltyWeights& w, const SolverConfig& cfg) {
  w.validate();
  return select_lambda(d, w.weights, cfg);
}

LambdaPath select_ridge_lambda(const Dataset& d, const SolverConfig& cfg) {
  cfg.validate();
  const auto c = center(d);
  const double top = 1e3 * std::max(c.col_sq.mean(), std::numeric_limits<double>::min());
  LambdaPath path;
  path.lambdas = log_grid(top, cfg.lambda_min_ratio * cfg.lambda_min_ratio, cfg.lambda_grid_size);
  path.scores.assign(path.lambdas.size(), 0.0);
  path.nonzeros.assign(path.lambdas.size(), static_cast<int>(d.p()));
  const auto folds = rolling_folds(static_cast<std::size_t>(d.n()), cfg.cv_folds);
  for (const auto& fold : folds) {
    const Dataset train = d.rows(0, fold.train_end);
    const Dataset valid = d.rows(fold.train_end, fold.val_end);
    for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
      const auto f = fit_ridge(train, path.lambdas[k]);
      const double mse =
          (valid.y() - predict(f, valid)).squaredNorm() / static_cast<double>(valid.n());
      path.scores[k] += mse / static_cast<double>(folds.size());
    }
  }
  path.chosen_index = argmin_prefer_first(path.scores);
  return path;
}

SelectedFit fit_lasso_selected(const Dataset& d, const SolverConfig& cfg) {
  const auto unit = PenaltyWeights::unit(d.p());
  auto path = select_lambda(d, unit, cfg);
  auto fit = fit_weighted_lasso(d, path.chosen(), unit, cfg);
  return {std::move(path), std::move(fit)};
}

SelectedFit fit_adaptive_lasso_selected(const Dataset& d, const SolverConfig& cfg) {
  const Vector initial = adaptive_initial_estimate(d, cfg);
  const Vector factors = adaptive_factors(initial, cfg.gamma_adaptive);
  LambdaPath path;
  if (factors.array().isInf().all()) {
    path.lambdas = {0.0};
    path.scores = {0.0};
    path.nonzeros = {0};
  } else {
    path = select_lambda(d, factors, cfg);
  }
  auto fit = fit_adaptive_lasso_from_initial(d, path.chosen(), initial, cfg);
  return {std::move(path), std::move(fit)};
}

SelectedFit fit_vw_lasso_selected(const Dataset& d, const PenaltyWeights& w,
                                  const SolverConfig& cfg) {
  auto path = select_lambda(d, w, cfg);
  auto fit = fit_vw_lasso(d, path.chosen(), w, cfg);
  return {std::move(path), std::move(fit)};
}

SelectedFit fit_ridge_selected(const Dataset& d, const SolverConfig& cfg) {
  auto path = select_ridge_lambda(d, cfg);
  auto fit = fit_ridge(d, path.chosen());
  return {std::move(path), std::move(fit)};
}

double weighted_lasso_objective(const Dataset& d, const FitResult& f, double lambda,
                                const Vector& factors) {
  check_factors(factors, d.p());
  const Vector residual = d.y() - predict(f, d);
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    if (f.coefficients(j) != 0.0) penalty += factors(j) * std::abs(f.coefficients(j));
  }
  return residual.squaredNorm() / (2.0 * static_cast<double>(d.n())) + lambda * penalty;
}

}  // namespace volasso
