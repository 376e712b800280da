#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "volasso/core.hpp"
#include "volasso/garch.hpp"
#include "volasso/penalized.hpp"

namespace volasso {

enum class Scenario {
  baseline,
  // Predictors 1-2 carry low-persistence AR(1) dynamics with GARCH(1,1)
  // innovations and all of the signal; the rest are persistent, quiet noise.
  signal_on_high_vol,
};
std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view name);

struct SimConfig {
  int n = 100;
  int p = 5;
  std::vector<double> ar_coeffs_x;  // empty: scenario default
  std::vector<double> true_beta;    // empty: [3, -2, 0, ...]
  double error_ar = 0.5;
  double vol_low = 1.0;
  double vol_high = 2.0 * std::numbers::pi;
  double vol_cycles = 1.0;
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::baseline;
  std::vector<std::string> column_names;  // empty: x1..xp
  std::string target_name = "y";
  // Label rows as consecutive quarters from this period instead of 1..n.
  int start_year = 0;
  int start_quarter = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  Vector resolved_ar() const;
  Vector resolved_beta() const;
};

struct SimInstance {
  Dataset dataset;
  Vector true_beta;
  Vector sigma_path;
};

/// sigma_t = vol_low + (vol_high - vol_low) * (1 + sin(2 pi cycles t / n)) / 2, t = 1..n
Vector volatility_path(const SimConfig& cfg);

SimInstance simulate_dgp(const SimConfig& cfg);

/// Options shared by the simulation and backtest drivers for the VW-Lasso leg.
struct MethodOptions {
  SolverConfig solver;
  VolatilityOptions volatility;
};

struct CoefficientTable {
  std::vector<std::string> methods;  // "LASSO", "AD LASSO", "VW LASSO"
  std::vector<std::string> column_names;
  Matrix coefficients;                // methods x p, raw units
};

struct Table1Result {
  CoefficientTable table;
  std::vector<FitResult> fits;        // raw units, same order as methods
  std::vector<double> lambdas;
};

/// Simulates one instance and fits Lasso, Adaptive Lasso and VW-Lasso at their
/// BIC-selected lambdas on the standardized data.
Table1Result run_table1(const SimInstance& instance, const MethodOptions& opts);
Table1Result run_table1(const SimConfig& cfg, const MethodOptions& opts);

struct ReplicationRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  ModelKind method = ModelKind::lasso;
  double l2_error = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int nonzeros = 0;
  std::string error;  // empty on success
};

struct MethodSummary {
  ModelKind method = ModelKind::lasso;
  std::size_t replications = 0;
  std::size_t failures = 0;
  double median_l2 = 0.0;
  double iqr_l2 = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
};

struct ReplicationReport {
  std::vector<ReplicationRecord> records;  // replication-major, method order as in Table I
  std::vector<MethodSummary> summary;
};

/// Seed for replication r; reports are order-independent because each
/// replication derives its seed from (cfg.seed, r) alone.
std::uint64_t replication_seed(std::uint64_t master, std::size_t replication);

ReplicationReport run_monte_carlo(const SimConfig& cfg, const MethodOptions& opts,
                                  std::size_t reps, unsigned threads = 1);

/// Support precision/recall with the conventions 0/0 -> 1.
double support_precision(const Vector& estimate, const Vector& truth);
double support_recall(const Vector& estimate, const Vector& truth);

/// Linear-interpolated sample quantile (type 7), q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace volasso
