#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volasso/core.hpp"

namespace volasso {

/// sigma2_t = omega + alpha * e_{t-1}^2 + beta * sigma2_{t-1}
struct GarchParams {
  double omega = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  bool valid() const noexcept {
    return omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0;
  }
  double unconditional_variance() const noexcept { return omega / (1.0 - alpha - beta); }
};

struct GarchFit {
  GarchParams params;
  Vector cond_var;
  double loglik = 0.0;
  // Log-likelihood at the variance-targeted starting point.
  double start_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct GarchOptions {
  bool demean = true;
  int restarts = 5;
  int max_iterations = 2000;
  // Simplex objective spread below which a restart counts as converged.
  double tolerance = 1e-8;
  std::uint64_t seed = 20230601;
};

struct GarchLoglik {
  double value = 0.0;
  Vector cond_var;
};

/// Gaussian log-likelihood of `series` with the variance recursion seeded at
/// init_var. Throws NonPositiveVariance if the recursion leaves (0, inf).
GarchLoglik garch_loglik(const Vector& series, const GarchParams& params, double init_var);

/// Maximum-likelihood GARCH(1,1) by Nelder-Mead over an unconstrained
/// reparameterization of (omega, alpha, beta). Requires at least 30
/// observations and nonzero sample variance.
GarchFit garch_fit(const Vector& series, const GarchOptions& opts = {});

/// e_t = sigma_t * z_t with sigma2_1 at the unconditional variance.
Vector simulate_garch(const GarchParams& params, std::size_t n, std::uint64_t seed);

enum class SeriesTransform { levels, diff, log_diff };
std::string_view to_string(SeriesTransform t) noexcept;
SeriesTransform parse_series_transform(std::string_view name);

Vector transform_series(const Vector& column, SeriesTransform t);

enum class WeightSource { volatility, adaptive, unit };

/// Per-variable multipliers of the l1 penalty. Volatility weights are
/// normalized to mean one.
struct PenaltyWeights {
  Vector weights;
  double gamma = 1.0;
  WeightSource source = WeightSource::unit;

  static PenaltyWeights unit(Eigen::Index p);
  void validate() const;
};

struct VolatilityOptions {
  double gamma = 1.0;
  SeriesTransform transform = SeriesTransform::diff;
  GarchOptions garch;
  unsigned threads = 1;
};

/// w_j = (1 / v_j)^gamma rescaled to mean one.
PenaltyWeights weights_from_volatility(const Vector& mean_volatility, double gamma);

struct ColumnVolatility {
  std::string column;
  std::optional<GarchFit> fit;
  double mean_volatility = 0.0;
  std::string error;  // empty on success
};

/// Per-column GARCH fits; failures are recorded rather than thrown.
std::vector<ColumnVolatility> analyze_volatility(const Dataset& d, const VolatilityOptions& opts);

/// GARCH-based penalty weights for every predictor of `d`. A failing column
/// raises ColumnError naming it.
PenaltyWeights volatility_weights(const Dataset& d, const VolatilityOptions& opts);
PenaltyWeights volatility_weights(const Dataset& d, double gamma, SeriesTransform transform);

/// Weights for a training window: GARCH runs on the standardized predictors,
/// except for log_diff, which needs the positive raw levels (the normalized
/// weights are scale free either way).
PenaltyWeights training_volatility_weights(const Dataset& raw, const Dataset& standardized,
                                           const VolatilityOptions& opts);

}  // namespace volasso
