#include "volasso/garch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "volasso/parallel.hpp"

namespace volasso {
namespace {

constexpr double kMaxPersistence = 1.0 - 1e-6;
constexpr std::size_t kMinObservations = 30;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

// u = (log omega, logit(persistence / kMaxPersistence), logit(alpha share))
using Point = std::array<double, 3>;

GarchParams to_params(const Point& u) {
  const double persistence = kMaxPersistence * logistic(u[1]);
  const double share = logistic(u[2]);
  GarchParams g;
  g.omega = std::exp(u[0]);
  g.alpha = persistence * share;
  g.beta = persistence - g.alpha;
  // Rounding can push the sum a hair past the boundary; project back.
  if (g.alpha + g.beta > kMaxPersistence) g.beta = kMaxPersistence - g.alpha;
  return g;
}

Point from_params(const GarchParams& g) {
  const double persistence = g.alpha + g.beta;
  return {std::log(g.omega), logit(persistence / kMaxPersistence), logit(g.alpha / persistence)};
}

double negative_loglik(const Vector& e, const GarchParams& g, double init_var) {
  if (!(g.omega > 0.0) || !std::isfinite(g.omega)) return std::numeric_limits<double>::infinity();
  double s2 = init_var;
  double total = 0.0;
  for (Eigen::Index t = 0; t < e.size(); ++t) {
    if (t > 0) s2 = g.omega + g.alpha * e(t - 1) * e(t - 1) + g.beta * s2;
    if (!(s2 > 0.0) || !std::isfinite(s2)) return std::numeric_limits<double>::infinity();
    total += std::log(s2) + e(t) * e(t) / s2;
  }
  return 0.5 * (static_cast<double>(e.size()) * std::log(2.0 * std::numbers::pi) + total);
}

struct SimplexResult {
  Point best;
  double value;
  int iterations;
  bool converged;
};

template <typename F>
SimplexResult nelder_mead(F&& f, const Point& start, double step, int max_iterations,
                          double tolerance) {
  constexpr int dim = 3;
  std::array<Point, dim + 1> x;
  std::array<double, dim + 1> fx;
  x[0] = start;
  for (int i = 0; i < dim; ++i) {
    x[i + 1] = start;
    x[i + 1][i] += step;
  }
  for (int i = 0; i <= dim; ++i) fx[i] = f(x[i]);

  std::array<int, dim + 1> order;
  auto sort_simplex = [&] {
    for (int i = 0; i <= dim; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    auto xs = x;
    auto fs = fx;
    for (int i = 0; i <= dim; ++i) {
      x[i] = xs[order[i]];
      fx[i] = fs[order[i]];
    }
  };
  auto affine = [](const Point& a, const Point& b, double t) {
    Point r;
    for (int i = 0; i < dim; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  int iter = 0;
  bool converged = false;
  sort_simplex();
  for (; iter < max_iterations; ++iter) {
    double diameter = 0.0;
    for (int i = 1; i <= dim; ++i) {
      for (int k = 0; k < dim; ++k) diameter = std::max(diameter, std::abs(x[i][k] - x[0][k]));
    }
    if (std::isfinite(fx[dim]) && (fx[dim] - fx[0] < tolerance || diameter < 1e-10)) {
      converged = true;
      break;
    }
    Point centroid{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) {
      for (int k = 0; k < dim; ++k) centroid[k] += x[i][k] / dim;
    }
    const Point reflected = affine(centroid, x[dim], -1.0);
    const double f_reflected = f(reflected);
    if (f_reflected < fx[0]) {
      const Point expanded = affine(centroid, x[dim], -2.0);
      const double f_expanded = f(expanded);
      if (f_expanded < f_reflected) {
        x[dim] = expanded;
        fx[dim] = f_expanded;
      } else {
        x[dim] = reflected;
        fx[dim] = f_reflected;
      }
    } else if (f_reflected < fx[dim - 1]) {
      x[dim] = reflected;
      fx[dim] = f_reflected;
    } else {
      const bool outside = f_reflected < fx[dim];
      const Point contracted =
          outside ? affine(centroid, reflected, 0.5) : affine(centroid, x[dim], 0.5);
      const double f_contracted = f(contracted);
      if (f_contracted < (outside ? f_reflected : fx[dim])) {
        x[dim] = contracted;
        fx[dim] = f_contracted;
      } else {
        for (int i = 1; i <= dim; ++i) {
          x[i] = affine(x[0], x[i], 0.5);
          fx[i] = f(x[i]);
        }
      }
    }
    sort_simplex();
  }
  return {x[0], fx[0], iter, converged};
}

}  // namespace

GarchLoglik garch_loglik(const Vector& series, const GarchParams& params, double init_var) {
  if (series.size() < 2) throw SeriesTooShort("garch_loglik: need at least two observations");
  if (!(init_var > 0.0)) throw NonPositiveVariance("garch_loglik: init_var must be positive");
  GarchLoglik out;
  out.cond_var.resize(series.size());
  out.cond_var(0) = init_var;
  double total = 0.0;
  for (Eigen::Index t = 0; t < series.size(); ++t) {
    if (t > 0) {
      out.cond_var(t) = params.omega + params.alpha * series(t - 1) * series(t - 1) +
                        params.beta * out.cond_var(t - 1);
    }
    const double s2 = out.cond_var(t);
    if (!(s2 > 0.0) || !std::isfinite(s2)) {
      throw NonPositiveVariance("garch_loglik: conditional variance " + std::to_string(s2) +
                                " at t=" + std::to_string(t + 1));
    }
    total += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(s2) + series(t) * series(t) / s2);
  }
  out.value = total;
  return out;
}

GarchFit garch_fit(const Vector& series, const GarchOptions& opts) {
  if (static_cast<std::size_t>(series.size()) < kMinObservations) {
    throw SeriesTooShort("garch_fit: " + std::to_string(series.size()) +
                         " observations, need at least " + std::to_string(kMinObservations));
  }
  if (!series.allFinite()) throw DegenerateSeries("garch_fit: non-finite observation");
  Vector e = series;
  if (opts.demean) e.array() -= e.mean();
  const double n = static_cast<double>(e.size());
  const double variance = e.squaredNorm() / n;
  const double magnitude = series.squaredNorm() / n;
  if (!(variance > 1e-14 * std::max(magnitude, 1e-300)) || !(variance > 0.0)) {
    throw DegenerateSeries("garch_fit: zero sample variance");
  }

  GarchParams start;
  start.alpha = 0.05;
  start.beta = 0.90;
  start.omega = variance * (1.0 - start.alpha - start.beta);
  const double start_value = negative_loglik(e, start, variance);

  auto objective = [&](const Point& u) { return negative_loglik(e, to_params(u), variance); };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, 0.5);
  const Point origin = from_params(start);

  GarchParams best_params = start;
  double best_value = start_value;
  bool best_converged = false;
  int total_iterations = 0;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Point u = origin;
    if (r > 0) {
      for (double& coord : u) coord += jitter(rng);
    }
    const auto result = nelder_mead(objective, u, 0.5, opts.max_iterations, opts.tolerance);
    total_iterations += result.iterations;
    if (result.value < best_value) {
      best_value = result.value;
      best_params = to_params(result.best);
      best_converged = result.converged;
    }
  }

  GarchFit fit;
  fit.params = best_params;
  auto evaluated = garch_loglik(e, best_params, variance);
  fit.loglik = evaluated.value;
  fit.cond_var = std::move(evaluated.cond_var);
  fit.start_loglik = -start_value;
  fit.converged = best_converged;
  fit.iterations = total_iterations;
  return fit;
}

Vector simulate_garch(const GarchParams& params, std::size_t n, std::uint64_t seed) {
  if (!params.valid()) throw ConfigError("simulate_garch: invalid GARCH parameters");
  if (n < 1) throw ConfigError("simulate_garch: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector e(static_cast<Eigen::Index>(n));
  double s2 = params.unconditional_variance();
  for (Eigen::Index t = 0; t < e.size(); ++t) {
    if (t > 0) s2 = params.omega + params.alpha * e(t - 1) * e(t - 1) + params.beta * s2;
    e(t) = std::sqrt(s2) * normal(rng);
  }
  return e;
}

std::string_view to_string(SeriesTransform t) noexcept {
  switch (t) {
    case SeriesTransform::levels: return "levels";
    case SeriesTransform::diff: return "diff";
    case SeriesTransform::log_diff: return "log_diff";
  }
  return "unknown";
}

SeriesTransform parse_series_transform(std::string_view name) {
  for (auto t : {SeriesTransform::levels, SeriesTransform::diff, SeriesTransform::log_diff}) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown series transform '" + std::string(name) + "'");
}

Vector transform_series(const Vector& column, SeriesTransform t) {
  const auto n = column.size();
  switch (t) {
    case SeriesTransform::levels: return column;
    case SeriesTransform::diff:
      if (n < 2) throw SeriesTooShort("diff: need at least two observations");
      return column.tail(n - 1) - column.head(n - 1);
    case SeriesTransform::log_diff: {
      if (n < 2) throw SeriesTooShort("log_diff: need at least two observations");
      if ((column.array() <= 0.0).any()) {
        throw DegenerateSeries("log_diff: series has non-positive values");
      }
      const Vector logs = column.array().log();
      return logs.tail(n - 1) - logs.head(n - 1);
    }
  }
  return column;
}

PenaltyWeights PenaltyWeights::unit(Eigen::Index p) {
  return {Vector::Ones(p), 0.0, WeightSource::unit};
}

void PenaltyWeights::validate() const {
  if (weights.size() == 0) throw InvalidDataset("PenaltyWeights: empty");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InvalidDataset("PenaltyWeights: weights must be finite and nonnegative");
  }
  if (!(weights.maxCoeff() > 0.0)) throw InvalidDataset("PenaltyWeights: all weights are zero");
}

PenaltyWeights weights_from_volatility(const Vector& mean_volatility, double gamma) {
  if (mean_volatility.size() == 0 || !(mean_volatility.array() > 0.0).all() ||
      !mean_volatility.allFinite()) {
    throw InvalidDataset("weights_from_volatility: volatilities must be positive and finite");
  }
  PenaltyWeights w;
  w.gamma = gamma;
  w.source = WeightSource::volatility;
  if (gamma == 0.0) {
    w.weights = Vector::Ones(mean_volatility.size());
    return w;
  }
  w.weights = mean_volatility.array().inverse().pow(gamma);
  w.weights /= w.weights.mean();
  w.validate();
  return w;
}

std::vector<ColumnVolatility> analyze_volatility(const Dataset& d, const VolatilityOptions& opts) {
  const auto p = static_cast<std::size_t>(d.p());
  std::vector<ColumnVolatility> out(p);
  parallel_for(p, opts.threads, [&](std::size_t j) {
    auto& slot = out[j];
    slot.column = d.column_names()[j];
    try {
      const Vector series = transform_series(d.x().col(static_cast<Eigen::Index>(j)), opts.transform);
      GarchFit fit = garch_fit(series, opts.garch);
      slot.mean_volatility = fit.cond_var.array().sqrt().mean();
      slot.fit = std::move(fit);
    } catch (const Error& e) {
      slot.error = e.what();
    }
  });
  return out;
}

PenaltyWeights volatility_weights(const Dataset& d, const VolatilityOptions& opts) {
  const auto columns = analyze_volatility(d, opts);
  Vector vols(d.p());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (!columns[j].error.empty()) throw ColumnError(columns[j].column, columns[j].error);
    vols(static_cast<Eigen::Index>(j)) = columns[j].mean_volatility;
  }
  return weights_from_volatility(vols, opts.gamma);
}

PenaltyWeights volatility_weights(const Dataset& d, double gamma, SeriesTransform transform) {
  VolatilityOptions opts;
  opts.gamma = gamma;
  opts.transform = transform;
  return volatility_weights(d, opts);
}

PenaltyWeights training_volatility_weights(const Dataset& raw, const Dataset& standardized,
                                           const VolatilityOptions& opts) {
  return volatility_weights(opts.transform == SeriesTransform::log_diff ? raw : standardized, opts);
}

}  // namespace volasso
