#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "volasso/core.hpp"
#include "volasso/evaluate.hpp"
#include "volasso/explain.hpp"
#include "volasso/garch.hpp"
#include "volasso/penalized.hpp"
#include "volasso/simulate.hpp"

namespace volasso::io {

using json = nlohmann::ordered_json;

enum class ColumnTransform { none, diff, pct_change, log_diff };
std::string_view to_string(ColumnTransform t) noexcept;
ColumnTransform parse_column_transform(std::string_view name);

struct IngestSpec {
  std::filesystem::path path;
  std::string date_column = "date";
  std::string target_column;
  std::optional<std::vector<std::string>> predictor_columns;  // default: all others
  std::map<std::string, ColumnTransform> transform_per_column;
};

/// Quarter ordinal (year * 4 + quarter - 1) of "1986Q1" or a quarter-start
/// date "1986-01-01". Returns nullopt for anything else.
std::optional<std::int64_t> parse_quarter(std::string_view label);

/// Reads a header-first CSV whose date column holds quarters or plain
/// period numbers (decided by the first row). Error coordinates are 1-based file positions
/// (the header is row 1). Differencing-type transforms drop the first row of
/// every column so the regression stays aligned.
Dataset load_csv(const IngestSpec& spec);

/// Fixed six-decimal rendering; NaN renders as "NA".
std::string format_fixed(double value);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// model,split,MAE,RMSE
std::string backtest_csv(const BacktestReport& report);
void write_backtest_csv(const BacktestReport& report, const std::filesystem::path& path);
std::vector<BacktestRow> read_backtest_csv(const std::filesystem::path& path);

/// method,<column names...> in the Table I layout.
void write_coefficient_table(const CoefficientTable& table, const std::filesystem::path& path);

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path,
                       const std::string& date_header = "date");
void write_sim_instance(const SimInstance& instance, const std::filesystem::path& dir);

/// One row per replication (per-method columns) plus a per-method summary.
void write_replications(const ReplicationReport& report, const std::filesystem::path& records,
                        const std::filesystem::path& summary);

void write_lambda_path(const LambdaPath& path, const std::filesystem::path& file);

/// period,<columns...>
void write_shap_csv(const ShapMatrix& s, const TimeIndex& index, const std::filesystem::path& path);
/// rank,variable,mean_abs_shap
void write_ranking_csv(const std::vector<Importance>& ranking, const std::filesystem::path& path);
/// Long format for external plotting: variable,period,feature_value,shap,abs_shap
void write_shap_plot_data(const ShapMatrix& s, const Dataset& d, const std::filesystem::path& path);

json fit_to_json(const FitResult& f, const std::vector<std::string>& column_names,
                 const std::vector<double>& feature_means = {});
struct StoredFit {
  FitResult fit;
  std::vector<std::string> column_names;
  std::vector<double> feature_means;  // empty when not recorded
};
StoredFit fit_from_json(const json& j);
StoredFit read_fit(const std::filesystem::path& path);

json weights_to_json(const PenaltyWeights& w, const std::vector<std::string>& column_names);
PenaltyWeights weights_from_json(const json& j, const std::vector<std::string>& column_names);

/// 16 hex digits of FNV-1a over the compact dump of `config`.
std::string config_hash(const json& config);

/// {"tool", "version", "command", "seed", "config_hash", "config", ...extra}
json sidecar(std::string_view command, const json& config, std::uint64_t seed);
void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

extern const char* const kToolVersion;

}  // namespace volasso::io
