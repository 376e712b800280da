#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "volasso/errors.hpp"

namespace volasso {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered period labels for the rows of a Dataset. `ordinals` carry the
/// ordering; labels are only for display and file round-trips.
class TimeIndex {
 public:
  TimeIndex() = default;
  TimeIndex(std::vector<std::string> labels, std::vector<std::int64_t> ordinals);

  /// Labels "1", "2", ... with ordinals 1..n.
  static TimeIndex sequential(std::size_t n);
  /// Consecutive quarters starting at (year, quarter), labelled "1986Q1".
  static TimeIndex quarterly(int year, int quarter, std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::int64_t>& ordinals() const noexcept { return ordinals_; }
  TimeIndex slice(std::size_t begin, std::size_t end) const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::int64_t> ordinals_;
};

/// Target vector y and predictor matrix x sharing a time index. Immutable
/// once constructed; the constructor enforces shape, finiteness and name
/// uniqueness.
class Dataset {
 public:
  Dataset(TimeIndex index, std::string target_name, Vector y, Matrix x,
          std::vector<std::string> column_names);

  /// Convenience for in-memory problems: sequential index, columns x1..xp.
  static Dataset from_arrays(Vector y, Matrix x);

  const TimeIndex& index() const noexcept { return index_; }
  const std::string& target_name() const noexcept { return target_name_; }
  const Vector& y() const noexcept { return y_; }
  const Matrix& x() const noexcept { return x_; }
  const std::vector<std::string>& column_names() const noexcept { return column_names_; }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index p() const noexcept { return x_.cols(); }

  /// Rows [begin, end) in original order.
  Dataset rows(std::size_t begin, std::size_t end) const;
  Dataset with_target(Vector y) const;
  Dataset with_predictors(Matrix x) const;
  /// Columns reordered so that output column k is input column order[k].
  Dataset permute_columns(const std::vector<std::size_t>& order) const;

 private:
  TimeIndex index_;
  std::string target_name_;
  Vector y_;
  Matrix x_;
  std::vector<std::string> column_names_;
};

/// Affine map from raw to standardized units: x_std = (x - mean) / scale,
/// y_std = y - target_mean.
struct Standardization {
  Vector means;
  Vector scales;
  double target_mean = 0.0;
};

enum class ModelKind { ols, ridge, lasso, adaptive_lasso, vw_lasso };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts the names produced by to_string.
ModelKind parse_model_kind(std::string_view name);

struct FitResult {
  double intercept = 0.0;
  Vector coefficients;
  ModelKind model_kind = ModelKind::ols;
  double lambda = 0.0;
  // Present for adaptive_lasso and vw_lasso. +inf marks a variable excluded
  // from the penalized stage.
  std::optional<Vector> weights_used;
  int iterations = 0;
  bool converged = true;
  // Adaptive Lasso only: every initial coefficient vanished, so the fit is
  // the all-zero model.
  bool all_weights_infinite = false;
  // Penalized objective after each coordinate-descent sweep, when requested.
  std::vector<double> objective_trace;

  /// Throws InvalidDataset when an invariant is broken.
  void validate() const;
};

/// Column means/sample sds (n-1 denominator) of x, mean of y. Throws
/// ConstantColumn for a column whose sd vanishes relative to its magnitude.
std::pair<Dataset, Standardization> standardize(const Dataset& d);

/// Applies a transform estimated elsewhere (e.g. on training rows).
Dataset apply_standardization(const Dataset& d, const Standardization& s);
Dataset invert_standardization(const Dataset& d, const Standardization& s);

/// Maps a fit on standardized data back to raw units so that predictions on
/// raw rows equal predictions of `f` on the corresponding standardized rows.
FitResult destandardize_fit(const FitResult& f, const Standardization& s);

/// Fitted values intercept + x_rows * coefficients.
template <typename Derived>
Vector predict(const FitResult& f, const Eigen::MatrixBase<Derived>& x_rows) {
  if (x_rows.cols() != f.coefficients.size()) {
    throw DimensionMismatch("predict: " + std::to_string(x_rows.cols()) +
                            " columns, fit has " + std::to_string(f.coefficients.size()));
  }
  Vector out = x_rows * f.coefficients;
  out.array() += f.intercept;
  return out;
}

inline Vector predict(const FitResult& f, const Dataset& d) { return predict(f, d.x()); }

}  // namespace volasso
