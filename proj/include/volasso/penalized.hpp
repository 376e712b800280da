#pragma once

#include <cmath>
#include <string_view>
#include <vector>

#include "volasso/core.hpp"
#include "volasso/garch.hpp"

namespace volasso {

enum class Selection { bic, aic, rolling_cv };
std::string_view to_string(Selection s) noexcept;
Selection parse_selection(std::string_view name);

struct SolverConfig {
  int max_iterations = 10000;
  // Convergence: largest absolute coefficient change over one full sweep.
  double tolerance = 1e-8;
  int lambda_grid_size = 100;
  double lambda_min_ratio = 1e-4;
  Selection selection = Selection::bic;
  int cv_folds = 5;
  double gamma_adaptive = 1.0;
  // Throw NotConverged instead of returning an unconverged iterate.
  bool strict = false;
  bool record_trace = false;

  void validate() const;
};

/// Raised only in strict mode; carries the last iterate.
class NotConverged : public Error {
 public:
  explicit NotConverged(FitResult last)
      : Error("coordinate descent did not converge in " + std::to_string(last.iterations) +
              " sweeps"),
        last_(std::move(last)) {}
  const FitResult& last_iterate() const noexcept { return last_; }

 private:
  FitResult last_;
};

struct LambdaPath {
  std::vector<double> lambdas;  // strictly decreasing, lambdas[0] = lambda_max
  std::vector<double> scores;
  std::vector<int> nonzeros;
  std::size_t chosen_index = 0;

  double chosen() const { return lambdas.at(chosen_index); }
};

template <typename Scalar>
constexpr Scalar soft_threshold(Scalar z, Scalar t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return Scalar(0);
}

/// Least squares with intercept. Throws RankDeficient when n <= p or the
/// centered design has condition number >= 1e12.
FitResult fit_ols(const Dataset& d);

/// min ||y - b0 - X b||^2 / (2n) + lambda ||b||^2
FitResult fit_ridge(const Dataset& d, double lambda);

/// Cyclic coordinate descent for
///   min ||y - b0 - X b||^2 / (2n) + lambda * sum_j w_j |b_j|.
/// The intercept is unpenalized and handled by centering. Unconverged fits are
/// returned with converged = false unless cfg.strict is set.
FitResult fit_weighted_lasso(const Dataset& d, double lambda, const PenaltyWeights& w,
                             const SolverConfig& cfg = {});

/// Penalty factors variant: +inf excludes a variable (coefficient pinned to 0),
/// 0 leaves it unpenalized.
FitResult fit_weighted_lasso(const Dataset& d, double lambda, const Vector& factors,
                             const SolverConfig& cfg = {}, const Vector* warm_start = nullptr);

FitResult fit_lasso(const Dataset& d, double lambda, const SolverConfig& cfg = {});

/// Adaptive penalty factors 1 / |b_init|^gamma; +inf where |b_init| < 1e-10.
Vector adaptive_factors(const Vector& initial, double gamma);

/// Stage-one estimate: OLS when n > 2p and the design is well conditioned,
/// otherwise a Lasso fit at its BIC-selected lambda.
Vector adaptive_initial_estimate(const Dataset& d, const SolverConfig& cfg = {});

FitResult fit_adaptive_lasso(const Dataset& d, double lambda, const SolverConfig& cfg = {});
FitResult fit_adaptive_lasso_from_initial(const Dataset& d, double lambda, const Vector& initial,
                                          const SolverConfig& cfg = {});

/// Requires w.source == volatility.
FitResult fit_vw_lasso(const Dataset& d, double lambda, const PenaltyWeights& w,
                       const SolverConfig& cfg = {});

/// Smallest lambda whose weighted-Lasso solution is identically zero on the
/// penalized coordinates.
double lambda_max(const Dataset& d, const Vector& factors);

/// Log-spaced grid from lambda_max down to lambda_max * lambda_min_ratio,
/// scored by BIC, AIC or rolling-origin CV. Ties go to the larger lambda.
LambdaPath select_lambda(const Dataset& d, const PenaltyWeights& w, const SolverConfig& cfg = {});
LambdaPath select_lambda(const Dataset& d, const Vector& factors, const SolverConfig& cfg = {});

/// Ridge lambda by rolling-origin CV on a log grid from 1e3 * mean(diag(X'X/n))
/// down by lambda_min_ratio^2.
LambdaPath select_ridge_lambda(const Dataset& d, const SolverConfig& cfg = {});

struct SelectedFit {
  LambdaPath path;
  FitResult fit;
};

SelectedFit fit_lasso_selected(const Dataset& d, const SolverConfig& cfg = {});
SelectedFit fit_adaptive_lasso_selected(const Dataset& d, const SolverConfig& cfg = {});
SelectedFit fit_vw_lasso_selected(const Dataset& d, const PenaltyWeights& w,
                                  const SolverConfig& cfg = {});
SelectedFit fit_ridge_selected(const Dataset& d, const SolverConfig& cfg = {});

/// ||y - b0 - X b||^2 / (2n) + lambda * sum_j w_j |b_j| (terms with a zero
/// coefficient contribute nothing, so +inf factors are allowed).
double weighted_lasso_objective(const Dataset& d, const FitResult& f, double lambda,
                                const Vector& factors);

}  // namespace volasso
