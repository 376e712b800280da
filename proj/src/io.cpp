#include "volasso/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace volasso::io {

const char* const kToolVersion = "0.1.0";

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

std::vector<CsvRow> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (rows.empty() && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    rows.push_back({line_number, std::move(fields)});
  }
  return rows;
}

Vector apply_transform(const Vector& column, ColumnTransform t, const std::string& name) {
  const auto n = column.size();
  switch (t) {
    case ColumnTransform::none: return column;
    case ColumnTransform::diff: return column.tail(n - 1) - column.head(n - 1);
    case ColumnTransform::pct_change: {
      Vector out(n - 1);
      for (Eigen::Index t2 = 1; t2 < n; ++t2) {
        if (column(t2 - 1) == 0.0) {
          throw InvalidDataset("pct_change on '" + name + "': zero value at data row " +
                               std::to_string(t2));
        }
        out(t2 - 1) = (column(t2) - column(t2 - 1)) / column(t2 - 1);
      }
      return out;
    }
    case ColumnTransform::log_diff: {
      if ((column.array() <= 0.0).any()) {
        throw InvalidDataset("log_diff on '" + name + "': non-positive value");
      }
      const Vector logs = column.array().log();
      return logs.tail(n - 1) - logs.head(n - 1);
    }
  }
  return column;
}

// Plain period numbers such as "1", "2", ... as written by simulate.
std::optional<std::int64_t> parse_period_number(const std::string& label) {
  std::int64_t v = 0;
  const auto* end = label.data() + label.size();
  const auto [ptr, ec] = std::from_chars(label.data(), end, v);
  if (label.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view to_string(ColumnTransform t) noexcept {
  switch (t) {
    case ColumnTransform::none: return "none";
    case ColumnTransform::diff: return "diff";
    case ColumnTransform::pct_change: return "pct_change";
    case ColumnTransform::log_diff: return "log_diff";
  }
  return "unknown";
}

ColumnTransform parse_column_transform(std::string_view name) {
  for (auto t : {ColumnTransform::none, ColumnTransform::diff, ColumnTransform::pct_change,
                 ColumnTransform::log_diff}) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown column transform '" + std::string(name) + "'");
}

std::optional<std::int64_t> parse_quarter(std::string_view label) {
  auto digits = [](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  auto to_int = [](std::string_view s) {
    int v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  };
  if (label.size() == 6 && (label[4] == 'Q' || label[4] == 'q') && digits(label.substr(0, 4))) {
    const char q = label[5];
    if (q < '1' || q > '4') return std::nullopt;
    return static_cast<std::int64_t>(to_int(label.substr(0, 4))) * 4 + (q - '1');
  }
  if (label.size() == 10 && label[4] == '-' && label[7] == '-' && digits(label.substr(0, 4)) &&
      digits(label.substr(5, 2)) && digits(label.substr(8, 2))) {
    const int month = to_int(label.substr(5, 2));
    const int day = to_int(label.substr(8, 2));
    if (day != 1 || month < 1 || month > 12 || (month - 1) % 3 != 0) return std::nullopt;
    return static_cast<std::int64_t>(to_int(label.substr(0, 4))) * 4 + (month - 1) / 3;
  }
  return std::nullopt;
}

Dataset load_csv(const IngestSpec& spec) {
  if (spec.target_column.empty()) throw ConfigError("target column is required");
  if (spec.target_column == spec.date_column) {
    throw ConfigError("date and target columns must differ");
  }
  const auto rows = read_rows(spec.path);
  if (rows.empty()) throw InvalidDataset("'" + spec.path.string() + "' has no header row");
  const auto& header = rows.front().fields;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) position.emplace(header[c], c);
  auto locate = [&](const std::string& name) {
    const auto it = position.find(name);
    if (it == position.end()) throw MissingColumn(name);
    return it->second;
  };
  const std::size_t date_col = locate(spec.date_column);
  const std::size_t target_col = locate(spec.target_column);
  std::vector<std::string> names;
  if (spec.predictor_columns) {
    names = *spec.predictor_columns;
  } else {
    for (const auto& h : header) {
      if (h != spec.date_column && h != spec.target_column) names.push_back(h);
    }
  }
  std::vector<std::size_t> predictor_cols;
  for (const auto& name : names) predictor_cols.push_back(locate(name));
  for (const auto& [name, t] : spec.transform_per_column) {
    if (name != spec.target_column) locate(name);
  }
  if (names.empty()) throw InvalidDataset("no predictor columns");

  const std::size_t n = rows.size() - 1;
  if (n == 0) throw EmptyAfterTransform("'" + spec.path.string() + "' has no data rows");
  Vector y(static_cast<Eigen::Index>(n));
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  std::vector<std::string> labels;
  std::vector<std::int64_t> ordinals;
  bool integer_periods = false;
  for (std::size_t r = 1; r <= n; ++r) {
    const auto& fields = rows[r].fields;
    const std::size_t file_row = rows[r].line;
    auto cell = [&](std::size_t c) -> const std::string& {
      static const std::string empty;
      return c < fields.size() ? fields[c] : empty;
    };
    auto number = [&](std::size_t c) {
      const auto v = parse_number(cell(c));
      if (!v) throw NonNumericCell(file_row, c + 1, cell(c));
      return *v;
    };
    const std::string& label = cell(date_col);
    if (r == 1) integer_periods = !parse_quarter(label) && parse_period_number(label);
    const auto ordinal = integer_periods ? parse_period_number(label) : parse_quarter(label);
    if (!ordinal) {
      throw NonMonotonicDates(file_row, "'" + label + "' is not a " +
                                            (integer_periods ? "period number" : "quarterly period"));
    }
    if (!ordinals.empty() && *ordinal <= ordinals.back()) {
      throw NonMonotonicDates(file_row, "'" + label + "' does not follow '" + labels.back() + "'");
    }
    labels.push_back(label);
    ordinals.push_back(*ordinal);
    const auto t = static_cast<Eigen::Index>(r - 1);
    y(t) = number(target_col);
    for (std::size_t j = 0; j < predictor_cols.size(); ++j) {
      x(t, static_cast<Eigen::Index>(j)) = number(predictor_cols[j]);
    }
  }

  auto transform_of = [&](const std::string& name) {
    const auto it = spec.transform_per_column.find(name);
    return it == spec.transform_per_column.end() ? ColumnTransform::none : it->second;
  };
  bool drops_row = transform_of(spec.target_column) != ColumnTransform::none;
  for (const auto& name : names) drops_row = drops_row || transform_of(name) != ColumnTransform::none;
  if (!drops_row) {
    return {TimeIndex(std::move(labels), std::move(ordinals)), spec.target_column, std::move(y),
            std::move(x), std::move(names)};
  }
  if (n < 2) throw EmptyAfterTransform("no rows remain after differencing");
  const auto m = static_cast<Eigen::Index>(n - 1);
  auto shifted = [&](const Vector& column, ColumnTransform t, const std::string& name) -> Vector {
    if (t == ColumnTransform::none) return column.tail(m);
    return apply_transform(column, t, name);
  };
  Vector y_out = shifted(y, transform_of(spec.target_column), spec.target_column);
  Matrix x_out(m, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto& name = names[static_cast<std::size_t>(j)];
    x_out.col(j) = shifted(x.col(j), transform_of(name), name);
  }
  labels.erase(labels.begin());
  ordinals.erase(ordinals.begin());
  return {TimeIndex(std::move(labels), std::move(ordinals)), spec.target_column, std::move(y_out),
          std::move(x_out), std::move(names)};
}

std::string format_fixed(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  std::string s(buffer);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoFailure("write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string backtest_csv(const BacktestReport& report) {
  std::string out = "model,split,MAE,RMSE\n";
  for (const auto& row : report.rows) {
    out += std::string(to_string(row.model)) + "," + format_fixed(row.train_fraction) + "," +
           format_fixed(row.ok() ? row.mae : std::nan("")) + "," +
           format_fixed(row.ok() ? row.rmse : std::nan("")) + "\n";
  }
  return out;
}

void write_backtest_csv(const BacktestReport& report, const std::filesystem::path& path) {
  write_text(path, backtest_csv(report));
}

std::vector<BacktestRow> read_backtest_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty() ||
      rows.front().fields != std::vector<std::string>{"model", "split", "MAE", "RMSE"}) {
    throw InvalidDataset("'" + path.string() + "' is not a backtest report");
  }
  std::vector<BacktestRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != 4) throw InvalidDataset("backtest report line " + std::to_string(rows[r].line));
    BacktestRow row;
    row.model = parse_model_kind(f[0]);
    auto value = [&](std::size_t c) {
      if (f[c] == "NA") return std::numeric_limits<double>::quiet_NaN();
      const auto v = parse_number(f[c]);
      if (!v) throw NonNumericCell(rows[r].line, c + 1, f[c]);
      return *v;
    };
    row.train_fraction = value(1);
    row.mae = value(2);
    row.rmse = value(3);
    if (std::isnan(row.mae)) row.error = "failed";
    out.push_back(row);
  }
  return out;
}

void write_coefficient_table(const CoefficientTable& table, const std::filesystem::path& path) {
  std::string out = "method";
  for (const auto& name : table.column_names) out += "," + name;
  out += "\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out += table.methods[m];
    for (Eigen::Index j = 0; j < table.coefficients.cols(); ++j) {
      out += "," + format_fixed(table.coefficients(static_cast<Eigen::Index>(m), j));
    }
    out += "\n";
  }
  write_text(path, out);
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path,
                       const std::string& date_header) {
  std::string out = date_header + "," + d.target_name();
  for (const auto& name : d.column_names()) out += "," + name;
  out += "\n";
  for (Eigen::Index t = 0; t < d.n(); ++t) {
    out += d.index().labels()[static_cast<std::size_t>(t)] + "," + format_fixed(d.y()(t));
    for (Eigen::Index j = 0; j < d.p(); ++j) out += "," + format_fixed(d.x()(t, j));
    out += "\n";
  }
  write_text(path, out);
}

void write_sim_instance(const SimInstance& instance, const std::filesystem::path& dir) {
  write_dataset_csv(instance.dataset, dir / "sim_dataset.csv");
  std::string sigma = "date,sigma\n";
  const auto& labels = instance.dataset.index().labels();
  for (Eigen::Index t = 0; t < instance.sigma_path.size(); ++t) {
    sigma += labels[static_cast<std::size_t>(t)] + "," + format_fixed(instance.sigma_path(t)) + "\n";
  }
  write_text(dir / "sim_sigma.csv", sigma);
  std::string beta = "variable,true_beta\n";
  for (Eigen::Index j = 0; j < instance.true_beta.size(); ++j) {
    beta += instance.dataset.column_names()[static_cast<std::size_t>(j)] + "," +
            format_fixed(instance.true_beta(j)) + "\n";
  }
  write_text(dir / "sim_true_beta.csv", beta);
}

void write_replications(const ReplicationReport& report, const std::filesystem::path& records,
                        const std::filesystem::path& summary) {
  std::vector<ModelKind> methods;
  for (const auto& m : report.summary) methods.push_back(m.method);
  const std::size_t k = methods.size();
  std::string out = "replication,seed";
  for (auto m : methods) {
    const std::string name(to_string(m));
    out += "," + name + "_l2_error," + name + "_precision," + name + "_recall," + name + "_nonzeros";
  }
  out += ",errors\n";
  for (std::size_t i = 0; k > 0 && i + k <= report.records.size(); i += k) {
    out += std::to_string(report.records[i].replication) + "," + std::to_string(report.records[i].seed);
    std::string errors;
    for (std::size_t m = 0; m < k; ++m) {
      const auto& r = report.records[i + m];
      const bool ok = r.error.empty();
      out += "," + format_fixed(ok ? r.l2_error : std::nan("")) + "," +
             format_fixed(ok ? r.precision : std::nan("")) + "," +
             format_fixed(ok ? r.recall : std::nan("")) + "," + std::to_string(r.nonzeros);
      if (!ok) {
        std::string e = std::string(to_string(r.method)) + ": " + r.error;
        for (char& c : e) {
          if (c == ',' || c == '\n') c = ';';
        }
        errors += (errors.empty() ? "" : " | ") + e;
      }
    }
    out += "," + errors + "\n";
  }
  write_text(records, out);
  std::string s = "method,replications,failures,median_l2,iqr_l2,mean_precision,mean_recall\n";
  for (const auto& m : report.summary) {
    s += std::string(to_string(m.method)) + "," + std::to_string(m.replications) + "," +
         std::to_string(m.failures) + "," + format_fixed(m.median_l2) + "," +
         format_fixed(m.iqr_l2) + "," + format_fixed(m.mean_precision) + "," +
         format_fixed(m.mean_recall) + "\n";
  }
  write_text(summary, s);
}

void write_lambda_path(const LambdaPath& path, const std::filesystem::path& file) {
  std::string out = "index,lambda,score,nonzeros,chosen\n";
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    char lambda[64];
    std::snprintf(lambda, sizeof(lambda), "%.6e", path.lambdas[k]);
    out += std::to_string(k) + "," + lambda + "," + format_fixed(path.scores[k]) + "," +
           std::to_string(k < path.nonzeros.size() ? path.nonzeros[k] : 0) + "," +
           (k == path.chosen_index ? "1" : "0") + "\n";
  }
  write_text(file, out);
}

void write_shap_csv(const ShapMatrix& s, const TimeIndex& index, const std::filesystem::path& path) {
  if (static_cast<Eigen::Index>(index.size()) != s.values.rows()) {
    throw DimensionMismatch("write_shap_csv: index length differs from SHAP rows");
  }
  std::string out = "period";
  for (const auto& name : s.column_names) out += "," + name;
  out += "\n";
  for (Eigen::Index t = 0; t < s.values.rows(); ++t) {
    out += index.labels()[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) out += "," + format_fixed(s.values(t, j));
    out += "\n";
  }
  write_text(path, out);
}

void write_ranking_csv(const std::vector<Importance>& ranking, const std::filesystem::path& path) {
  std::string out = "rank,variable,mean_abs_shap\n";
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    out += std::to_string(k + 1) + "," + ranking[k].name + "," +
           format_fixed(ranking[k].mean_abs_shap) + "\n";
  }
  write_text(path, out);
}

void write_shap_plot_data(const ShapMatrix& s, const Dataset& d, const std::filesystem::path& path) {
  std::string out = "variable,period,feature_value,shap,abs_shap\n";
  for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
    for (Eigen::Index t = 0; t < s.values.rows(); ++t) {
      out += s.column_names[static_cast<std::size_t>(j)] + "," +
             d.index().labels()[static_cast<std::size_t>(t)] + "," + format_fixed(d.x()(t, j)) +
             "," + format_fixed(s.values(t, j)) + "," + format_fixed(std::abs(s.values(t, j))) +
             "\n";
    }
  }
  write_text(path, out);
}

json fit_to_json(const FitResult& f, const std::vector<std::string>& column_names,
                 const std::vector<double>& feature_means) {
  json j;
  j["model"] = std::string(to_string(f.model_kind));
  j["intercept"] = f.intercept;
  j["lambda"] = f.lambda;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["all_weights_infinite"] = f.all_weights_infinite;
  j["columns"] = column_names;
  j["coefficients"] = to_std(f.coefficients);
  if (f.weights_used) {
    json w = json::array();
    for (Eigen::Index k = 0; k < f.weights_used->size(); ++k) w.push_back(nullable((*f.weights_used)(k)));
    j["weights_used"] = w;
  } else {
    j["weights_used"] = nullptr;
  }
  if (!feature_means.empty()) j["feature_means"] = feature_means;
  return j;
}

StoredFit fit_from_json(const json& j) {
  try {
    StoredFit out;
    auto& f = out.fit;
    f.model_kind = parse_model_kind(j.at("model").get<std::string>());
    f.intercept = j.at("intercept").get<double>();
    f.lambda = j.value("lambda", 0.0);
    f.iterations = j.value("iterations", 0);
    f.converged = j.value("converged", true);
    f.all_weights_infinite = j.value("all_weights_infinite", false);
    out.column_names = j.at("columns").get<std::vector<std::string>>();
    const auto coefs = j.at("coefficients").get<std::vector<double>>();
    if (coefs.size() != out.column_names.size()) {
      throw DimensionMismatch("fit file: coefficients and columns differ in length");
    }
    f.coefficients = Eigen::Map<const Vector>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
    if (j.contains("weights_used") && j["weights_used"].is_array()) {
      Vector w(static_cast<Eigen::Index>(j["weights_used"].size()));
      for (std::size_t k = 0; k < j["weights_used"].size(); ++k) {
        const auto& v = j["weights_used"][k];
        w(static_cast<Eigen::Index>(k)) =
            v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
      }
      f.weights_used = w;
    }
    if (j.contains("feature_means")) {
      out.feature_means = j["feature_means"].get<std::vector<double>>();
    }
    f.validate();
    return out;
  } catch (const json::exception& e) {
    throw InvalidDataset(std::string("malformed fit file: ") + e.what());
  }
}

StoredFit read_fit(const std::filesystem::path& path) { return fit_from_json(read_json(path)); }

json weights_to_json(const PenaltyWeights& w, const std::vector<std::string>& column_names) {
  json j;
  j["gamma"] = w.gamma;
  j["source"] = w.source == WeightSource::volatility ? "volatility"
                : w.source == WeightSource::adaptive ? "adaptive"
                                                     : "unit";
  json cols = json::array();
  for (std::size_t k = 0; k < column_names.size(); ++k) {
    cols.push_back({{"name", column_names[k]},
                    {"weight", nullable(w.weights(static_cast<Eigen::Index>(k)))}});
  }
  j["weights"] = cols;
  return j;
}

PenaltyWeights weights_from_json(const json& j, const std::vector<std::string>& column_names) {
  try {
    std::unordered_map<std::string, double> by_name;
    for (const auto& entry : j.at("weights")) {
      const auto& w = entry.at("weight");
      if (w.is_null()) {
        throw InvalidDataset("weights file: no weight for '" + entry.at("name").get<std::string>() + "'");
      }
      by_name[entry.at("name").get<std::string>()] = w.get<double>();
    }
    PenaltyWeights out;
    out.gamma = j.value("gamma", 1.0);
    out.source = WeightSource::volatility;
    out.weights.resize(static_cast<Eigen::Index>(column_names.size()));
    for (std::size_t k = 0; k < column_names.size(); ++k) {
      const auto it = by_name.find(column_names[k]);
      if (it == by_name.end()) throw MissingColumn(column_names[k]);
      out.weights(static_cast<Eigen::Index>(k)) = it->second;
    }
    out.validate();
    return out;
  } catch (const json::exception& e) {
    throw InvalidDataset(std::string("malformed weights file: ") + e.what());
  }
}

std::string config_hash(const json& config) {
  const std::string text = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

json sidecar(std::string_view command, const json& config, std::uint64_t seed) {
  json j;
  j["tool"] = "volasso";
  j["version"] = kToolVersion;
  j["command"] = std::string(command);
  j["seed"] = seed;
  j["config_hash"] = config_hash(config);
  j["config"] = config;
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  write_text(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InvalidDataset("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace volasso::io
