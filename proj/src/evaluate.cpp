#include "volasso/evaluate.hpp"

#include <cmath>
#include <limits>

#include "volasso/parallel.hpp"

namespace volasso {

std::pair<Dataset, Dataset> chronological_split(const Dataset& d, const SplitSpec& s) {
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  const auto n = static_cast<std::size_t>(d.n());
  const auto train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * s.train_fraction + 1e-9));
  const auto min_train = static_cast<std::size_t>(d.p()) + 2;
  if (train < min_train || train >= n) {
    throw SplitTooSmall("split " + std::to_string(s.train_fraction) + " of n=" +
                        std::to_string(n) + " gives train=" + std::to_string(train) +
                        ", test=" + std::to_string(n - std::min(train, n)) + " (need train >= " +
                        std::to_string(min_train) + ", test >= 1)");
  }
  return {d.rows(0, train), d.rows(train, n)};
}

const std::vector<ModelKind>& backtest_models() {
  static const std::vector<ModelKind> models = {ModelKind::ols, ModelKind::lasso,
                                                ModelKind::ridge, ModelKind::adaptive_lasso,
                                                ModelKind::vw_lasso};
  return models;
}

std::size_t BacktestReport::failures() const {
  std::size_t count = 0;
  for (const auto& row : rows) count += row.ok() ? 0 : 1;
  return count;
}

namespace {

BacktestCell run_cell(const Dataset& d, ModelKind model, double fraction,
                      const BacktestOptions& opts) {
  BacktestCell cell;
  cell.row.model = model;
  cell.row.train_fraction = fraction;
  try {
    auto [train, test] = chronological_split(d, SplitSpec{fraction});
    auto [train_std, scaling] = standardize(train);
    const auto& solver = opts.methods.solver;
    SelectedFit selected;
    switch (model) {
      case ModelKind::ols: selected.fit = fit_ols(train_std); break;
      case ModelKind::ridge: selected = fit_ridge_selected(train_std, solver); break;
      case ModelKind::lasso: selected = fit_lasso_selected(train_std, solver); break;
      case ModelKind::adaptive_lasso: selected = fit_adaptive_lasso_selected(train_std, solver); break;
      case ModelKind::vw_lasso: {
        PenaltyWeights w = opts.fixed_vw_weights
                               ? *opts.fixed_vw_weights
                               : training_volatility_weights(train, train_std, opts.methods.volatility);
        if (w.weights.size() != d.p()) throw DimensionMismatch("VW weights have wrong length");
        w.source = WeightSource::volatility;
        selected = fit_vw_lasso_selected(train_std, w, solver);
        cell.weights = std::move(w);
        break;
      }
    }
    const FitResult raw = destandardize_fit(selected.fit, scaling);
    const Vector forecast = predict(raw, test);
    cell.row.mae = mae(test.y(), forecast);
    cell.row.rmse = rmse(test.y(), forecast);
    if (!std::isfinite(cell.row.mae) || !std::isfinite(cell.row.rmse)) {
      throw InvalidDataset("non-finite forecast error");
    }
    if (model != ModelKind::ols) cell.path = std::move(selected.path);
    cell.feature_means.assign(scaling.means.data(), scaling.means.data() + scaling.means.size());
    cell.fit = raw;
  } catch (const Error& e) {
    cell.row.error = std::string(to_string(model)) + ": " + e.what();
    cell.row.mae = std::numeric_limits<double>::quiet_NaN();
    cell.row.rmse = std::numeric_limits<double>::quiet_NaN();
    cell.fit.reset();
    cell.path.reset();
  }
  return cell;
}

}  // namespace

BacktestReport run_backtest(const Dataset& d, const BacktestOptions& opts) {
  opts.methods.solver.validate();
  for (double f : opts.fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("train fractions must lie in (0, 1)");
  }
  const auto& models = backtest_models();
  const std::size_t k = opts.fractions.size();
  BacktestReport report;
  report.dataset_name = opts.dataset_name.empty() ? d.target_name() : opts.dataset_name;
  report.cells.resize(models.size() * k);

  BacktestOptions inner = opts;
  inner.methods.volatility.threads = 1;
  parallel_for(report.cells.size(), opts.threads, [&](std::size_t i) {
    report.cells[i] = run_cell(d, models[i / k], opts.fractions[i % k], inner);
  });
  for (const auto& cell : report.cells) report.rows.push_back(cell.row);
  return report;
}

}  // namespace volasso
