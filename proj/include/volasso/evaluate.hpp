#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "volasso/core.hpp"
#include "volasso/simulate.hpp"

namespace volasso {

struct SplitSpec {
  double train_fraction = 0.8;
};

/// First floor(n * fraction) rows train, the rest test. Throws SplitTooSmall
/// unless train has at least p + 2 rows and test at least one.
std::pair<Dataset, Dataset> chronological_split(const Dataset& d, const SplitSpec& s);

template <typename A, typename B>
void check_same_length(const Eigen::MatrixBase<A>& y, const Eigen::MatrixBase<B>& yhat) {
  if (y.size() != yhat.size() || y.size() < 1) {
    throw LengthMismatch("metric inputs have lengths " + std::to_string(y.size()) + " and " +
                         std::to_string(yhat.size()));
  }
}

template <typename A, typename B>
typename A::Scalar mae(const Eigen::MatrixBase<A>& y, const Eigen::MatrixBase<B>& yhat) {
  check_same_length(y, yhat);
  return (y - yhat).cwiseAbs().mean();
}

template <typename A, typename B>
typename A::Scalar rmse(const Eigen::MatrixBase<A>& y, const Eigen::MatrixBase<B>& yhat) {
  check_same_length(y, yhat);
  using std::sqrt;
  return sqrt((y - yhat).squaredNorm() / static_cast<typename A::Scalar>(y.size()));
}

/// Table II row order.
const std::vector<ModelKind>& backtest_models();

struct BacktestRow {
  ModelKind model = ModelKind::ols;
  double train_fraction = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::string error;  // non-empty: the cell failed and the metrics are NaN

  bool ok() const noexcept { return error.empty(); }
};

/// Everything a cell learned from its training window.
struct BacktestCell {
  BacktestRow row;
  std::optional<FitResult> fit;  // raw units
  std::optional<LambdaPath> path;
  std::optional<PenaltyWeights> weights;
  std::vector<double> feature_means;  // training means, SHAP background
};

struct BacktestReport {
  std::string dataset_name;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<BacktestRow> rows;    // model-major: each model across all fractions
  std::vector<BacktestCell> cells;  // parallel to rows

  std::size_t failures() const;
};

struct BacktestOptions {
  std::vector<double> fractions{0.7, 0.8, 0.9};
  MethodOptions methods;
  // Replaces the GARCH-derived VW weights when set (e.g. a `garch` output).
  std::optional<PenaltyWeights> fixed_vw_weights;
  std::string dataset_name;
  unsigned threads = 1;
};

/// Five models x len(fractions) cells. Standardization, lambda selection and
/// volatility weights consume training rows only; test rows are predicted with
/// their contemporaneous regressors. Failing cells become error rows.
BacktestReport run_backtest(const Dataset& d, const BacktestOptions& opts);

}  // namespace volasso
