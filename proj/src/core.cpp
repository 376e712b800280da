#include "volasso/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace volasso {

TimeIndex::TimeIndex(std::vector<std::string> labels, std::vector<std::int64_t> ordinals)
    : labels_(std::move(labels)), ordinals_(std::move(ordinals)) {
  if (labels_.size() != ordinals_.size()) {
    throw DimensionMismatch("TimeIndex: labels and ordinals differ in length");
  }
  if (labels_.empty()) throw InvalidDataset("TimeIndex: empty index");
  for (std::size_t t = 1; t < ordinals_.size(); ++t) {
    if (ordinals_[t] <= ordinals_[t - 1]) {
      throw InvalidDataset("TimeIndex: periods not strictly increasing at '" + labels_[t] + "'");
    }
  }
}

TimeIndex TimeIndex::sequential(std::size_t n) {
  std::vector<std::string> labels(n);
  std::vector<std::int64_t> ordinals(n);
  for (std::size_t t = 0; t < n; ++t) {
    labels[t] = std::to_string(t + 1);
    ordinals[t] = static_cast<std::int64_t>(t + 1);
  }
  return {std::move(labels), std::move(ordinals)};
}

TimeIndex TimeIndex::quarterly(int year, int quarter, std::size_t n) {
  std::vector<std::string> labels(n);
  std::vector<std::int64_t> ordinals(n);
  std::int64_t q = static_cast<std::int64_t>(year) * 4 + (quarter - 1);
  for (std::size_t t = 0; t < n; ++t, ++q) {
    labels[t] = std::to_string(q / 4) + "Q" + std::to_string(q % 4 + 1);
    ordinals[t] = q;
  }
  return {std::move(labels), std::move(ordinals)};
}

TimeIndex TimeIndex::slice(std::size_t begin, std::size_t end) const {
  return {std::vector<std::string>(labels_.begin() + begin, labels_.begin() + end),
          std::vector<std::int64_t>(ordinals_.begin() + begin, ordinals_.begin() + end)};
}

Dataset::Dataset(TimeIndex index, std::string target_name, Vector y, Matrix x,
                 std::vector<std::string> column_names)
    : index_(std::move(index)),
      target_name_(std::move(target_name)),
      y_(std::move(y)),
      x_(std::move(x)),
      column_names_(std::move(column_names)) {
  const auto n = static_cast<std::size_t>(x_.rows());
  if (n != static_cast<std::size_t>(y_.size()) || n != index_.size()) {
    throw DimensionMismatch("Dataset: rows(x)=" + std::to_string(x_.rows()) +
                            ", len(y)=" + std::to_string(y_.size()) +
                            ", len(index)=" + std::to_string(index_.size()));
  }
  if (x_.cols() < 1) throw InvalidDataset("Dataset: need at least one predictor");
  if (static_cast<std::size_t>(x_.cols()) != column_names_.size()) {
    throw DimensionMismatch("Dataset: column_names size does not match columns of x");
  }
  if (!y_.allFinite() || !x_.allFinite()) throw InvalidDataset("Dataset: non-finite entry");
  std::unordered_set<std::string> seen;
  for (const auto& name : column_names_) {
    if (!seen.insert(name).second) throw InvalidDataset("Dataset: duplicate column '" + name + "'");
  }
}

Dataset Dataset::from_arrays(Vector y, Matrix x) {
  std::vector<std::string> names(static_cast<std::size_t>(x.cols()));
  for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j + 1);
  auto index = TimeIndex::sequential(static_cast<std::size_t>(x.rows()));
  return {std::move(index), "y", std::move(y), std::move(x), std::move(names)};
}

Dataset Dataset::rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > static_cast<std::size_t>(n())) {
    throw DimensionMismatch("Dataset::rows: invalid range");
  }
  const auto len = static_cast<Eigen::Index>(end - begin);
  const auto b = static_cast<Eigen::Index>(begin);
  return {index_.slice(begin, end), target_name_, y_.segment(b, len), x_.middleRows(b, len),
          column_names_};
}

Dataset Dataset::with_target(Vector y) const {
  return {index_, target_name_, std::move(y), x_, column_names_};
}

Dataset Dataset::with_predictors(Matrix x) const {
  return {index_, target_name_, y_, std::move(x), column_names_};
}

Dataset Dataset::permute_columns(const std::vector<std::size_t>& order) const {
  if (order.size() != column_names_.size()) {
    throw DimensionMismatch("permute_columns: order has wrong length");
  }
  Matrix x(n(), p());
  std::vector<std::string> names(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = x_.col(static_cast<Eigen::Index>(order[k]));
    names[k] = column_names_.at(order[k]);
  }
  return {index_, target_name_, y_, std::move(x), std::move(names)};
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::ols: return "ols";
    case ModelKind::ridge: return "ridge";
    case ModelKind::lasso: return "lasso";
    case ModelKind::adaptive_lasso: return "adaptive_lasso";
    case ModelKind::vw_lasso: return "vw_lasso";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::ols, ModelKind::ridge, ModelKind::lasso,
                    ModelKind::adaptive_lasso, ModelKind::vw_lasso}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void FitResult::validate() const {
  if (!coefficients.allFinite() || !std::isfinite(intercept)) {
    throw InvalidDataset("FitResult: non-finite coefficients");
  }
  if (!(lambda >= 0.0)) throw InvalidDataset("FitResult: negative lambda");
  if (iterations < 0) throw InvalidDataset("FitResult: negative iteration count");
  const bool weighted =
      model_kind == ModelKind::adaptive_lasso || model_kind == ModelKind::vw_lasso;
  if (weighted != weights_used.has_value()) {
    throw InvalidDataset("FitResult: weights_used must be present exactly for weighted models");
  }
  if (weights_used && weights_used->size() != coefficients.size()) {
    throw DimensionMismatch("FitResult: weights_used has wrong length");
  }
}

std::pair<Dataset, Standardization> standardize(const Dataset& d) {
  const auto n = d.n();
  if (n < 2) throw InvalidDataset("standardize: need at least two rows");
  Standardization s;
  s.means = d.x().colwise().mean().transpose();
  s.scales.resize(d.p());
  s.target_mean = d.y().mean();
  Matrix x = d.x().rowwise() - s.means.transpose();
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    const double sd = std::sqrt(x.col(j).squaredNorm() / static_cast<double>(n - 1));
    const double magnitude = std::max(1.0, d.x().col(j).cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * magnitude)) {
      throw ConstantColumn(d.column_names()[static_cast<std::size_t>(j)]);
    }
    s.scales(j) = sd;
    x.col(j) /= sd;
  }
  Vector y = d.y().array() - s.target_mean;
  return {Dataset(d.index(), d.target_name(), std::move(y), std::move(x), d.column_names()),
          std::move(s)};
}

Dataset apply_standardization(const Dataset& d, const Standardization& s) {
  if (s.means.size() != d.p() || s.scales.size() != d.p()) {
    throw DimensionMismatch("apply_standardization: transform has wrong dimension");
  }
  Matrix x = (d.x().rowwise() - s.means.transpose()).array().rowwise() /
             s.scales.transpose().array();
  Vector y = d.y().array() - s.target_mean;
  return {d.index(), d.target_name(), std::move(y), std::move(x), d.column_names()};
}

Dataset invert_standardization(const Dataset& d, const Standardization& s) {
  if (s.means.size() != d.p() || s.scales.size() != d.p()) {
    throw DimensionMismatch("invert_standardization: transform has wrong dimension");
  }
  Matrix x = (d.x().array().rowwise() * s.scales.transpose().array()).matrix().rowwise() +
             s.means.transpose();
  Vector y = d.y().array() + s.target_mean;
  return {d.index(), d.target_name(), std::move(y), std::move(x), d.column_names()};
}

FitResult destandardize_fit(const FitResult& f, const Standardization& s) {
  if (f.coefficients.size() != s.scales.size() || s.means.size() != s.scales.size()) {
    throw DimensionMismatch("destandardize_fit: fit and standardization disagree on p");
  }
  FitResult out = f;
  out.coefficients = f.coefficients.cwiseQuotient(s.scales);
  out.intercept = s.target_mean + f.intercept - out.coefficients.dot(s.means);
  return out;
}

}  // namespace volasso
