#pragma once

#include <string>
#include <utility>
#include <vector>

#include "volasso/core.hpp"

namespace volasso {

/// Exact Shapley values of a linear model under feature independence:
/// values(t, j) = b_j * (x_tj - mu_j), base_value = b0 + b' mu.
struct ShapMatrix {
  Matrix values;
  double base_value = 0.0;
  std::vector<std::string> column_names;
};

template <typename Derived>
ShapMatrix linear_shap(const FitResult& f, const Eigen::MatrixBase<Derived>& x,
                       const Vector& background_means, std::vector<std::string> column_names) {
  const auto p = f.coefficients.size();
  if (x.cols() != p || background_means.size() != p ||
      static_cast<Eigen::Index>(column_names.size()) != p) {
    throw DimensionMismatch("linear_shap: fit, data and background disagree on p");
  }
  ShapMatrix s;
  s.values = (x.rowwise() - background_means.transpose()).array().rowwise() *
             f.coefficients.transpose().array();
  s.base_value = f.intercept + f.coefficients.dot(background_means);
  s.column_names = std::move(column_names);
  return s;
}

inline ShapMatrix linear_shap(const FitResult& f, const Dataset& d, const Vector& background_means) {
  return linear_shap(f, d.x(), background_means, d.column_names());
}

struct Importance {
  std::string name;
  double mean_abs_shap = 0.0;
};

/// Descending mean |SHAP|; equal importances keep column order.
std::vector<Importance> importance_ranking(const ShapMatrix& s);

}  // namespace volasso
