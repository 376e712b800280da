#include "volasso/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "volasso/parallel.hpp"

namespace volasso {
namespace {

constexpr int kHighVolPredictors = 2;
constexpr double kHighVolAr = 0.2;
constexpr double kLowVolAr = 0.95;
constexpr double kLowVolSd = 0.5;
constexpr GarchParams kHighVolInnovations{0.4, 0.15, 0.75};

const std::vector<ModelKind> kTableMethods = {ModelKind::lasso, ModelKind::adaptive_lasso,
                                              ModelKind::vw_lasso};

std::string table_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::lasso: return "LASSO";
    case ModelKind::adaptive_lasso: return "AD LASSO";
    case ModelKind::vw_lasso: return "VW LASSO";
    default: return std::string(to_string(kind));
  }
}

struct Prepared {
  Dataset standardized;
  Standardization scaling;
};

// One method at its selected lambda, returned in raw units.
SelectedFit fit_method(ModelKind kind, const Dataset& raw, const Prepared& prep,
                       const MethodOptions& opts) {
  SelectedFit out;
  switch (kind) {
    case ModelKind::lasso: out = fit_lasso_selected(prep.standardized, opts.solver); break;
    case ModelKind::adaptive_lasso:
      out = fit_adaptive_lasso_selected(prep.standardized, opts.solver);
      break;
    case ModelKind::vw_lasso: {
      const auto w = training_volatility_weights(raw, prep.standardized, opts.volatility);
      out = fit_vw_lasso_selected(prep.standardized, w, opts.solver);
      break;
    }
    default: throw ConfigError("simulation compares lasso, adaptive_lasso and vw_lasso only");
  }
  out.fit = destandardize_fit(out.fit, prep.scaling);
  return out;
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::baseline: return "baseline";
    case Scenario::signal_on_high_vol: return "signal_on_high_vol";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::baseline, Scenario::signal_on_high_vol}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (n < 10) throw ConfigError("n must be >= 10 (got " + std::to_string(n) + ")");
  if (p < 1) throw ConfigError("p must be >= 1 (got " + std::to_string(p) + ")");
  if (!ar_coeffs_x.empty()) {
    if (ar_coeffs_x.size() != static_cast<std::size_t>(p)) {
      throw ConfigError("ar_coeffs_x must have p entries");
    }
    for (double phi : ar_coeffs_x) {
      if (!(std::abs(phi) < 1.0)) throw ConfigError("ar_coeffs_x entries must lie in (-1, 1)");
    }
  }
  if (!true_beta.empty() && true_beta.size() != static_cast<std::size_t>(p)) {
    throw ConfigError("true_beta must have p entries");
  }
  if (!(std::abs(error_ar) < 1.0)) throw ConfigError("error_ar must lie in (-1, 1)");
  if (!(vol_low > 0.0)) throw ConfigError("vol_low must be positive");
  if (!(vol_high >= vol_low)) throw ConfigError("vol_high must be >= vol_low");
  if (!column_names.empty() && column_names.size() != static_cast<std::size_t>(p)) {
    throw ConfigError("column_names must have p entries");
  }
  if (start_year != 0 && (start_quarter < 1 || start_quarter > 4)) {
    throw ConfigError("start_quarter must lie in 1..4");
  }
}

Vector SimConfig::resolved_ar() const {
  if (!ar_coeffs_x.empty()) return Eigen::Map<const Vector>(ar_coeffs_x.data(), p);
  Vector phi = Vector::Constant(p, 0.5);
  if (scenario == Scenario::signal_on_high_vol) {
    for (int j = 0; j < p; ++j) phi(j) = j < kHighVolPredictors ? kHighVolAr : kLowVolAr;
  }
  return phi;
}

Vector SimConfig::resolved_beta() const {
  if (!true_beta.empty()) return Eigen::Map<const Vector>(true_beta.data(), p);
  Vector beta = Vector::Zero(p);
  beta(0) = 3.0;
  if (p > 1) beta(1) = -2.0;
  return beta;
}

Vector volatility_path(const SimConfig& cfg) {
  Vector sigma(cfg.n);
  for (int t = 1; t <= cfg.n; ++t) {
    const double phase = 2.0 * std::numbers::pi * cfg.vol_cycles * t / cfg.n;
    sigma(t - 1) = cfg.vol_low + (cfg.vol_high - cfg.vol_low) * (1.0 + std::sin(phase)) / 2.0;
  }
  return sigma;
}

SimInstance simulate_dgp(const SimConfig& cfg) {
  cfg.validate();
  const Vector phi = cfg.resolved_ar();
  const Vector beta = cfg.resolved_beta();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix x(cfg.n, cfg.p);
  for (int j = 0; j < cfg.p; ++j) {
    const bool garch_column =
        cfg.scenario == Scenario::signal_on_high_vol && j < kHighVolPredictors;
    const double innovation_var =
        garch_column ? kHighVolInnovations.unconditional_variance()
                     : (cfg.scenario == Scenario::signal_on_high_vol ? kLowVolSd * kLowVolSd : 1.0);
    // Pre-sample value from the stationary distribution.
    double previous = std::sqrt(innovation_var / (1.0 - phi(j) * phi(j))) * normal(rng);
    double h = innovation_var;
    double previous_shock = 0.0;
    for (int t = 0; t < cfg.n; ++t) {
      double shock;
      if (garch_column) {
        if (t > 0) {
          h = kHighVolInnovations.omega + kHighVolInnovations.alpha * previous_shock * previous_shock +
              kHighVolInnovations.beta * h;
        }
        shock = std::sqrt(h) * normal(rng);
        previous_shock = shock;
      } else {
        shock = std::sqrt(innovation_var) * normal(rng);
      }
      previous = phi(j) * previous + shock;
      x(t, j) = previous;
    }
  }

  const Vector sigma = volatility_path(cfg);
  const double rho = cfg.error_ar;
  Vector eps(cfg.n);
  double previous = sigma(0) / std::sqrt(1.0 - rho * rho) * normal(rng);
  for (int t = 0; t < cfg.n; ++t) {
    previous = rho * previous + sigma(t) * normal(rng);
    eps(t) = previous;
  }
  Vector y = x * beta + eps;

  std::vector<std::string> names = cfg.column_names;
  if (names.empty()) {
    for (int j = 0; j < cfg.p; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  auto index = cfg.start_year != 0
                   ? TimeIndex::quarterly(cfg.start_year, cfg.start_quarter,
                                          static_cast<std::size_t>(cfg.n))
                   : TimeIndex::sequential(static_cast<std::size_t>(cfg.n));
  return {Dataset(std::move(index), cfg.target_name, std::move(y), std::move(x), std::move(names)),
          beta, sigma};
}

Table1Result run_table1(const SimInstance& instance, const MethodOptions& opts) {
  auto [standardized, scaling] = standardize(instance.dataset);
  const Prepared prep{std::move(standardized), std::move(scaling)};
  Table1Result out;
  out.table.column_names = instance.dataset.column_names();
  out.table.coefficients.resize(static_cast<Eigen::Index>(kTableMethods.size()),
                                instance.dataset.p());
  for (std::size_t m = 0; m < kTableMethods.size(); ++m) {
    auto selected = fit_method(kTableMethods[m], instance.dataset, prep, opts);
    out.table.methods.push_back(table_label(kTableMethods[m]));
    out.table.coefficients.row(static_cast<Eigen::Index>(m)) = selected.fit.coefficients.transpose();
    out.lambdas.push_back(selected.fit.lambda);
    out.fits.push_back(std::move(selected.fit));
  }
  return out;
}

Table1Result run_table1(const SimConfig& cfg, const MethodOptions& opts) {
  return run_table1(simulate_dgp(cfg), opts);
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t replication) {
  return mix_seed(master, replication);
}

double support_precision(const Vector& estimate, const Vector& truth) {
  int selected = 0;
  int hits = 0;
  for (Eigen::Index j = 0; j < estimate.size(); ++j) {
    if (estimate(j) != 0.0) {
      ++selected;
      if (truth(j) != 0.0) ++hits;
    }
  }
  return selected == 0 ? 1.0 : static_cast<double>(hits) / selected;
}

double support_recall(const Vector& estimate, const Vector& truth) {
  int relevant = 0;
  int hits = 0;
  for (Eigen::Index j = 0; j < truth.size(); ++j) {
    if (truth(j) != 0.0) {
      ++relevant;
      if (estimate(j) != 0.0) ++hits;
    }
  }
  return relevant == 0 ? 1.0 : static_cast<double>(hits) / relevant;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ReplicationReport run_monte_carlo(const SimConfig& cfg, const MethodOptions& opts,
                                  std::size_t reps, unsigned threads) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  cfg.validate();
  opts.solver.validate();
  const std::size_t methods = kTableMethods.size();
  ReplicationReport report;
  report.records.resize(reps * methods);

  MethodOptions inner = opts;
  inner.volatility.threads = 1;
  parallel_for(reps, threads, [&](std::size_t r) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = replication_seed(cfg.seed, r);
    const auto instance = simulate_dgp(rep_cfg);
    std::optional<Prepared> prep;
    std::string prep_error;
    try {
      auto [standardized, scaling] = standardize(instance.dataset);
      prep = Prepared{std::move(standardized), std::move(scaling)};
    } catch (const Error& e) {
      prep_error = e.what();
    }
    for (std::size_t m = 0; m < methods; ++m) {
      auto& rec = report.records[r * methods + m];
      rec.replication = r;
      rec.seed = rep_cfg.seed;
      rec.method = kTableMethods[m];
      if (!prep) {
        rec.error = prep_error;
        continue;
      }
      try {
        const auto fit = fit_method(kTableMethods[m], instance.dataset, *prep, inner).fit;
        rec.l2_error = (fit.coefficients - instance.true_beta).norm();
        rec.precision = support_precision(fit.coefficients, instance.true_beta);
        rec.recall = support_recall(fit.coefficients, instance.true_beta);
        rec.nonzeros = static_cast<int>((fit.coefficients.array() != 0.0).count());
      } catch (const Error& e) {
        rec.error = e.what();
      }
    }
  });

  for (std::size_t m = 0; m < methods; ++m) {
    MethodSummary s;
    s.method = kTableMethods[m];
    std::vector<double> errors;
    double precision = 0.0;
    double recall = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& rec = report.records[r * methods + m];
      ++s.replications;
      if (!rec.error.empty()) {
        ++s.failures;
        continue;
      }
      errors.push_back(rec.l2_error);
      precision += rec.precision;
      recall += rec.recall;
    }
    const auto ok = static_cast<double>(errors.size());
    s.median_l2 = quantile(errors, 0.5);
    s.iqr_l2 = quantile(errors, 0.75) - quantile(errors, 0.25);
    s.mean_precision = ok > 0 ? precision / ok : std::numeric_limits<double>::quiet_NaN();
    s.mean_recall = ok > 0 ? recall / ok : std::numeric_limits<double>::quiet_NaN();
    report.summary.push_back(s);
  }
  return report;
}

}  // namespace volasso
