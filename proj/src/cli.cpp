#include "volasso/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "volasso/evaluate.hpp"
#include "volasso/explain.hpp"
#include "volasso/io.hpp"
#include "volasso/parallel.hpp"
#include "volasso/simulate.hpp"

namespace volasso::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  return out;
}

void require(bool ok, const std::string& flag, const std::string& message) {
  if (!ok) throw ConfigError(flag + ": " + message);
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = "out";
  unsigned threads = default_threads();
};

struct SolverFlags {
  int max_iterations = 10000;
  double tolerance = 1e-8;
  int grid_size = 100;
  double lambda_min_ratio = 1e-4;
  std::string selection = "bic";
  int cv_folds = 5;
  double gamma_adaptive = 1.0;
};

struct VolFlags {
  double gamma = 1.0;
  std::string transform = "diff";
  int restarts = 5;
};

struct DataFlags {
  std::string data;
  std::string date_column = "date";
  std::string target;
  std::string predictors;
  std::string transforms;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file of flag values; explicit flags win");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads (results do not depend on it)");
}

void add_solver(CLI::App* sub, SolverFlags& s) {
  sub->add_option("--max-iterations", s.max_iterations, "Coordinate-descent sweep limit");
  sub->add_option("--tolerance", s.tolerance, "Max coefficient change per sweep at convergence");
  sub->add_option("--grid-size", s.grid_size, "Lambda grid size");
  sub->add_option("--lambda-min-ratio", s.lambda_min_ratio, "Smallest lambda / lambda_max");
  sub->add_option("--selection", s.selection, "bic | aic | rolling_cv");
  sub->add_option("--cv-folds", s.cv_folds, "Rolling-origin CV folds");
  sub->add_option("--gamma-adaptive", s.gamma_adaptive, "Adaptive Lasso exponent");
}

void add_vol(CLI::App* sub, VolFlags& v) {
  sub->add_option("--gamma", v.gamma, "Volatility weight exponent");
  sub->add_option("--garch-transform", v.transform, "levels | diff | log_diff");
  sub->add_option("--garch-restarts", v.restarts, "Optimizer restarts per GARCH fit");
}

void add_data(CLI::App* sub, DataFlags& d) {
  sub->add_option("--data", d.data, "Input CSV");
  sub->add_option("--date-column", d.date_column, "Date column name");
  sub->add_option("--target", d.target, "Target column name");
  sub->add_option("--predictors", d.predictors, "Comma-separated predictor columns (default: all)");
  sub->add_option("--transforms", d.transforms, "Per-column transforms, e.g. GDP=diff,WTI=log_diff");
}

SolverConfig resolve_solver(const SolverFlags& s) {
  SolverConfig cfg;
  require(s.max_iterations >= 1, "--max-iterations", "must be >= 1");
  require(s.tolerance > 0.0, "--tolerance", "must be positive");
  require(s.grid_size >= 1, "--grid-size", "must be >= 1");
  require(s.lambda_min_ratio > 0.0 && s.lambda_min_ratio < 1.0, "--lambda-min-ratio",
          "must lie in (0, 1)");
  require(s.cv_folds >= 1, "--cv-folds", "must be >= 1");
  require(s.gamma_adaptive > 0.0, "--gamma-adaptive", "must be positive");
  cfg.max_iterations = s.max_iterations;
  cfg.tolerance = s.tolerance;
  cfg.lambda_grid_size = s.grid_size;
  cfg.lambda_min_ratio = s.lambda_min_ratio;
  try {
    cfg.selection = parse_selection(s.selection);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--selection: ") + e.what());
  }
  cfg.cv_folds = s.cv_folds;
  cfg.gamma_adaptive = s.gamma_adaptive;
  return cfg;
}

VolatilityOptions resolve_vol(const VolFlags& v, const Common& c, bool seeded) {
  VolatilityOptions opts;
  require(std::isfinite(v.gamma), "--gamma", "must be finite");
  require(v.restarts >= 1, "--garch-restarts", "must be >= 1");
  opts.gamma = v.gamma;
  try {
    opts.transform = parse_series_transform(v.transform);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--garch-transform: ") + e.what());
  }
  opts.garch.restarts = v.restarts;
  if (seeded) opts.garch.seed = c.seed;
  opts.threads = c.threads;
  return opts;
}

io::IngestSpec resolve_ingest(const DataFlags& d) {
  require(!d.data.empty(), "--data", "an input CSV is required");
  require(!d.target.empty(), "--target", "a target column is required");
  io::IngestSpec spec;
  spec.path = d.data;
  spec.date_column = d.date_column;
  spec.target_column = d.target;
  if (!d.predictors.empty()) spec.predictor_columns = split_list(d.predictors);
  for (const auto& item : split_list(d.transforms)) {
    const auto eq = item.find('=');
    require(eq != std::string::npos, "--transforms", "expected NAME=KIND, got '" + item + "'");
    try {
      spec.transform_per_column[item.substr(0, eq)] = io::parse_column_transform(item.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--transforms: ") + e.what());
    }
  }
  return spec;
}

json solver_json(const SolverFlags& s) {
  return {{"max_iterations", s.max_iterations}, {"tolerance", s.tolerance},
          {"grid_size", s.grid_size},           {"lambda_min_ratio", s.lambda_min_ratio},
          {"selection", s.selection},           {"cv_folds", s.cv_folds},
          {"gamma_adaptive", s.gamma_adaptive}};
}

json vol_json(const VolFlags& v) {
  return {{"gamma", v.gamma}, {"garch_transform", v.transform}, {"garch_restarts", v.restarts}};
}

json data_json(const DataFlags& d) {
  return {{"data", d.data},
          {"date_column", d.date_column},
          {"target", d.target},
          {"predictors", d.predictors},
          {"transforms", d.transforms}};
}

fs::path prepare_out(const Common& c) {
  require(!c.out.empty(), "--out", "an output directory is required");
  require(c.threads >= 1, "--threads", "must be >= 1");
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw IoFailure("cannot create output directory '" + c.out + "': " + ec.message());
  return c.out;
}

// Flattens a JSON config into flag tokens placed ahead of the user's own
// flags; options keep the last value given, so explicit flags win.
std::vector<std::string> config_tokens(const std::string& path) {
  json j;
  try {
    j = io::read_json(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("--config: ") + e.what());
  }
  require(j.is_object(), "--config", "top level must be an object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    std::string flag = "--" + key;
    for (char& ch : flag) {
      if (ch == '_') ch = '-';
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& item : value) {
        if (!text.empty()) text += ",";
        text += item.is_string() ? item.get<std::string>() : item.dump();
      }
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw ConfigError("--config: unsupported value for '" + key + "'");
    }
    tokens.push_back(flag);
    tokens.push_back(text);
  }
  return tokens;
}

std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

std::uint64_t effective_seed(const CLI::App* sub, const Common& c, std::uint64_t fallback) {
  return sub->count("--seed") > 0 ? c.seed : fallback;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  SolverFlags solver;
  VolFlags vol;
  int n = 100;
  int p = 5;
  std::string scenario = "baseline";
  std::string ar;
  std::string beta;
  double error_ar = 0.5;
  double vol_low = 1.0;
  double vol_high = 2.0 * std::numbers::pi;
  double vol_cycles = 1.0;
  std::size_t reps = 0;
  std::string names;
  std::string target_name = "y";
  std::string start;
};

int cmd_simulate(const CLI::App* sub, const SimulateArgs& a, std::ostream& out) {
  SimConfig cfg;
  require(a.n >= 10, "--n", "must be >= 10 (got " + std::to_string(a.n) + ")");
  require(a.p >= 1, "--p", "must be >= 1 (got " + std::to_string(a.p) + ")");
  require(std::abs(a.error_ar) < 1.0, "--error-ar", "must lie in (-1, 1)");
  require(a.vol_low > 0.0, "--vol-low", "must be positive");
  require(a.vol_high >= a.vol_low, "--vol-high", "must be >= --vol-low");
  cfg.n = a.n;
  cfg.p = a.p;
  try {
    cfg.scenario = parse_scenario(a.scenario);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--scenario: ") + e.what());
  }
  cfg.ar_coeffs_x = parse_doubles(a.ar, "--ar");
  require(cfg.ar_coeffs_x.empty() || cfg.ar_coeffs_x.size() == static_cast<std::size_t>(a.p),
          "--ar", "needs exactly p values");
  for (double phi : cfg.ar_coeffs_x) require(std::abs(phi) < 1.0, "--ar", "values must lie in (-1, 1)");
  cfg.true_beta = parse_doubles(a.beta, "--beta");
  require(cfg.true_beta.empty() || cfg.true_beta.size() == static_cast<std::size_t>(a.p), "--beta",
          "needs exactly p values");
  cfg.error_ar = a.error_ar;
  cfg.vol_low = a.vol_low;
  cfg.vol_high = a.vol_high;
  cfg.vol_cycles = a.vol_cycles;
  cfg.seed = effective_seed(sub, a.common, 1);
  cfg.column_names = split_list(a.names);
  require(cfg.column_names.empty() || cfg.column_names.size() == static_cast<std::size_t>(a.p),
          "--names", "needs exactly p names");
  cfg.target_name = a.target_name;
  if (!a.start.empty()) {
    const auto q = io::parse_quarter(a.start);
    require(q.has_value(), "--start", "expected a quarter such as 1986Q1");
    cfg.start_year = static_cast<int>(*q / 4);
    cfg.start_quarter = static_cast<int>(*q % 4) + 1;
  }
  cfg.validate();

  MethodOptions methods;
  methods.solver = resolve_solver(a.solver);
  methods.volatility = resolve_vol(a.vol, a.common, false);
  const fs::path dir = prepare_out(a.common);

  const auto instance = simulate_dgp(cfg);
  io::write_sim_instance(instance, dir);
  const auto table = run_table1(instance, methods);
  io::write_coefficient_table(table.table, dir / "table1.csv");

  json config = {{"command", "simulate"},
                 {"n", a.n},
                 {"p", a.p},
                 {"scenario", a.scenario},
                 {"ar", a.ar},
                 {"beta", a.beta},
                 {"error_ar", a.error_ar},
                 {"vol_low", a.vol_low},
                 {"vol_high", a.vol_high},
                 {"vol_cycles", a.vol_cycles},
                 {"reps", a.reps},
                 {"names", a.names},
                 {"target_name", a.target_name},
                 {"start", a.start},
                 {"seed", cfg.seed},
                 {"solver", solver_json(a.solver)},
                 {"volatility", vol_json(a.vol)}};
  json meta = io::sidecar("simulate", config, cfg.seed);
  meta["lambdas"] = table.lambdas;
  if (a.reps > 0) {
    const auto report = run_monte_carlo(cfg, methods, a.reps, a.common.threads);
    io::write_replications(report, dir / "replications.csv", dir / "replication_summary.csv");
    json summary = json::array();
    for (const auto& s : report.summary) {
      summary.push_back({{"method", std::string(to_string(s.method))},
                         {"median_l2", s.median_l2},
                         {"iqr_l2", s.iqr_l2},
                         {"failures", s.failures}});
      out << to_string(s.method) << ": median L2 error " << io::format_fixed(s.median_l2)
          << " over " << s.replications - s.failures << " replications\n";
    }
    meta["replication_summary"] = summary;
  }
  io::write_json(meta, dir / "simulate.json");
  out << "wrote " << (dir / "table1.csv").string() << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------- backtest

struct BacktestArgs {
  Common common;
  SolverFlags solver;
  VolFlags vol;
  DataFlags data;
  std::string fractions = "0.7,0.8,0.9";
  std::string weights;
};

int cmd_backtest(const CLI::App* sub, const BacktestArgs& a, std::ostream& out, std::ostream& err) {
  const auto spec = resolve_ingest(a.data);
  BacktestOptions opts;
  opts.fractions = parse_doubles(a.fractions, "--fractions");
  require(!opts.fractions.empty(), "--fractions", "at least one fraction is required");
  for (double f : opts.fractions) require(f > 0.0 && f < 1.0, "--fractions", "values must lie in (0, 1)");
  opts.methods.solver = resolve_solver(a.solver);
  opts.methods.volatility = resolve_vol(a.vol, a.common, sub->count("--seed") > 0);
  opts.threads = a.common.threads;
  const fs::path dir = prepare_out(a.common);

  const Dataset d = io::load_csv(spec);
  if (!a.weights.empty()) {
    opts.fixed_vw_weights = io::weights_from_json(io::read_json(a.weights), d.column_names());
  }
  opts.dataset_name = fs::path(a.data.data).stem().string();

  json config = {{"command", "backtest"},
                 {"input", data_json(a.data)},
                 {"fractions", a.fractions},
                 {"weights", a.weights},
                 {"seed", opts.methods.volatility.garch.seed},
                 {"solver", solver_json(a.solver)},
                 {"volatility", vol_json(a.vol)}};
  auto report = run_backtest(d, opts);
  report.config_hash = io::config_hash(config);
  report.seed = opts.methods.volatility.garch.seed;
  io::write_backtest_csv(report, dir / "backtest_report.csv");

  std::string coefs = "model,split,lambda,intercept";
  for (const auto& name : d.column_names()) coefs += "," + name;
  coefs += "\n";
  json errors = json::array();
  for (const auto& cell : report.cells) {
    const std::string model(to_string(cell.row.model));
    const std::string split = io::format_fixed(cell.row.train_fraction);
    if (!cell.fit) {
      errors.push_back({{"model", model}, {"split", cell.row.train_fraction}, {"error", cell.row.error}});
      err << "warning: " << model << " split " << split << ": " << cell.row.error << "\n";
      continue;
    }
    coefs += model + "," + split + "," + io::format_fixed(cell.fit->lambda) + "," +
             io::format_fixed(cell.fit->intercept);
    for (Eigen::Index j = 0; j < cell.fit->coefficients.size(); ++j) {
      coefs += "," + io::format_fixed(cell.fit->coefficients(j));
    }
    coefs += "\n";
    const auto pct = static_cast<int>(std::lround(cell.row.train_fraction * 100.0));
    io::write_json(io::fit_to_json(*cell.fit, d.column_names(), cell.feature_means),
                   dir / "fits" / (model + "_" + std::to_string(pct) + ".json"));
  }
  io::write_text(dir / "coefficients.csv", coefs);

  json meta = io::sidecar("backtest", config, report.seed);
  meta["dataset"] = report.dataset_name;
  meta["rows"] = report.rows.size();
  meta["errors"] = errors;
  io::write_json(meta, dir / "backtest.json");
  out << "wrote " << report.rows.size() << " rows to " << (dir / "backtest_report.csv").string();
  if (report.failures() > 0) out << " (" << report.failures() << " warnings)";
  out << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------- garch

struct GarchArgs {
  Common common;
  VolFlags vol;
  DataFlags data;
};

int cmd_garch(const CLI::App* sub, const GarchArgs& a, std::ostream& out, std::ostream& err) {
  const auto spec = resolve_ingest(a.data);
  const auto opts = resolve_vol(a.vol, a.common, sub->count("--seed") > 0);
  const fs::path dir = prepare_out(a.common);
  const Dataset raw = io::load_csv(spec);
  const auto [standardized, scaling] = standardize(raw);
  const auto columns = analyze_volatility(
      opts.transform == SeriesTransform::log_diff ? raw : standardized, opts);

  std::vector<std::size_t> ok;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].error.empty()) ok.push_back(j);
  }
  Vector weights = Vector::Constant(static_cast<Eigen::Index>(columns.size()),
                                    std::numeric_limits<double>::quiet_NaN());
  if (!ok.empty()) {
    Vector vols(static_cast<Eigen::Index>(ok.size()));
    for (std::size_t k = 0; k < ok.size(); ++k) {
      vols(static_cast<Eigen::Index>(k)) = columns[ok[k]].mean_volatility;
    }
    const auto w = weights_from_volatility(vols, opts.gamma);
    for (std::size_t k = 0; k < ok.size(); ++k) {
      weights(static_cast<Eigen::Index>(ok[k])) = w.weights(static_cast<Eigen::Index>(k));
    }
  }

  std::string params = "column,omega,alpha,beta,loglik,converged,mean_volatility,weight,status\n";
  std::string series = "column,t,cond_vol\n";
  std::size_t warnings = 0;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& c = columns[j];
    if (!c.fit) {
      ++warnings;
      err << "warning: " << c.column << ": " << c.error << "\n";
      std::string status = c.error;
      for (char& ch : status) {
        if (ch == ',') ch = ';';
      }
      params += c.column + ",NA,NA,NA,NA,0,NA,NA," + status + "\n";
      continue;
    }
    const auto& f = *c.fit;
    params += c.column + "," + io::format_fixed(f.params.omega) + "," +
              io::format_fixed(f.params.alpha) + "," + io::format_fixed(f.params.beta) + "," +
              io::format_fixed(f.loglik) + "," + (f.converged ? "1" : "0") + "," +
              io::format_fixed(c.mean_volatility) + "," +
              io::format_fixed(weights(static_cast<Eigen::Index>(j))) + ",ok\n";
    for (Eigen::Index t = 0; t < f.cond_var.size(); ++t) {
      series += c.column + "," + std::to_string(t + 1) + "," + io::format_fixed(std::sqrt(f.cond_var(t))) + "\n";
    }
  }
  io::write_text(dir / "garch_params.csv", params);
  io::write_text(dir / "garch_volatility.csv", series);
  PenaltyWeights pw;
  pw.weights = weights;
  pw.gamma = opts.gamma;
  pw.source = WeightSource::volatility;
  io::write_json(io::weights_to_json(pw, raw.column_names()), dir / "weights.json");

  json config = {{"command", "garch"},
                 {"input", data_json(a.data)},
                 {"seed", opts.garch.seed},
                 {"volatility", vol_json(a.vol)}};
  json meta = io::sidecar("garch", config, opts.garch.seed);
  meta["warnings"] = warnings;
  io::write_json(meta, dir / "garch.json");
  out << "fitted " << columns.size() - warnings << " of " << columns.size() << " columns";
  if (warnings > 0) out << " (" << warnings << " warnings)";
  out << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  Common common;
  DataFlags data;
  std::string fit;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
  require(!a.fit.empty(), "--fit", "a fit file is required");
  const auto spec = resolve_ingest(a.data);
  if (!fs::exists(a.fit)) throw IoFailure("fit file '" + a.fit + "' does not exist");
  const fs::path dir = prepare_out(a.common);
  const auto stored = io::read_fit(a.fit);
  const Dataset d = io::load_csv(spec);
  if (stored.column_names != d.column_names()) {
    throw DimensionMismatch("fit columns do not match the dataset's predictor columns");
  }
  Vector background = d.x().colwise().mean().transpose();
  if (!stored.feature_means.empty()) {
    if (static_cast<Eigen::Index>(stored.feature_means.size()) != d.p()) {
      throw DimensionMismatch("fit feature_means has wrong length");
    }
    background = Eigen::Map<const Vector>(stored.feature_means.data(), d.p());
  }
  const auto shap = linear_shap(stored.fit, d, background);
  const auto ranking = importance_ranking(shap);
  io::write_shap_csv(shap, d.index(), dir / "shap_values.csv");
  io::write_ranking_csv(ranking, dir / "shap_ranking.csv");
  io::write_shap_plot_data(shap, d, dir / "shap_plot_data.csv");
  json config = {{"command", "explain"}, {"input", data_json(a.data)}, {"fit", a.fit}};
  json meta = io::sidecar("explain", config, 0);
  meta["base_value"] = shap.base_value;
  meta["background"] = stored.feature_means.empty() ? "dataset means" : "training means from fit";
  io::write_json(meta, dir / "explain.json");
  out << "top variable: " << ranking.front().name << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  SolverFlags solver;
  VolFlags vol;
  DataFlags data;
  std::string model = "vw_lasso";
  double lambda = -1.0;
  double fraction = 1.0;
};

int cmd_fit(const CLI::App* sub, const FitArgs& a, std::ostream& out) {
  const auto spec = resolve_ingest(a.data);
  ModelKind kind;
  try {
    kind = parse_model_kind(a.model);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--model: ") + e.what());
  }
  require(a.fraction > 0.0 && a.fraction <= 1.0, "--train-fraction", "must lie in (0, 1]");
  const bool fixed_lambda = sub->count("--lambda") > 0;
  require(!fixed_lambda || a.lambda >= 0.0, "--lambda", "must be nonnegative");
  const auto solver = resolve_solver(a.solver);
  const auto vol = resolve_vol(a.vol, a.common, sub->count("--seed") > 0);
  const fs::path dir = prepare_out(a.common);

  Dataset d = io::load_csv(spec);
  if (a.fraction < 1.0) d = chronological_split(d, SplitSpec{a.fraction}).first;
  const auto [train, scaling] = standardize(d);
  SelectedFit selected;
  bool has_path = !fixed_lambda;
  switch (kind) {
    case ModelKind::ols:
      selected.fit = fit_ols(train);
      has_path = false;
      break;
    case ModelKind::ridge:
      if (fixed_lambda) selected.fit = fit_ridge(train, a.lambda);
      else selected = fit_ridge_selected(train, solver);
      break;
    case ModelKind::lasso:
      if (fixed_lambda) selected.fit = fit_lasso(train, a.lambda, solver);
      else selected = fit_lasso_selected(train, solver);
      break;
    case ModelKind::adaptive_lasso:
      if (fixed_lambda) selected.fit = fit_adaptive_lasso(train, a.lambda, solver);
      else selected = fit_adaptive_lasso_selected(train, solver);
      break;
    case ModelKind::vw_lasso: {
      const auto w = training_volatility_weights(d, train, vol);
      if (fixed_lambda) selected.fit = fit_vw_lasso(train, a.lambda, w, solver);
      else selected = fit_vw_lasso_selected(train, w, solver);
      break;
    }
  }
  const FitResult raw = destandardize_fit(selected.fit, scaling);
  std::vector<double> means(scaling.means.data(), scaling.means.data() + scaling.means.size());
  io::write_json(io::fit_to_json(raw, d.column_names(), means), dir / "fit.json");
  if (has_path) io::write_lambda_path(selected.path, dir / "lambda_path.csv");
  json config = {{"command", "fit"},
                 {"input", data_json(a.data)},
                 {"model", a.model},
                 {"lambda", fixed_lambda ? json(a.lambda) : json(nullptr)},
                 {"train_fraction", a.fraction},
                 {"seed", vol.garch.seed},
                 {"solver", solver_json(a.solver)},
                 {"volatility", vol_json(a.vol)}};
  json meta = io::sidecar("fit", config, vol.garch.seed);
  meta["converged"] = raw.converged;
  io::write_json(meta, dir / "fit_run.json");
  out << "wrote " << (dir / "fit.json").string() << " (lambda " << raw.lambda << ")\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Volatility-weighted Lasso forecasting toolkit", "volasso"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate the AR(1)/heteroskedastic DGP and compare methods");
  add_common(simulate, sim.common);
  add_solver(simulate, sim.solver);
  add_vol(simulate, sim.vol);
  simulate->add_option("--n", sim.n, "Observations (>= 10)");
  simulate->add_option("--p", sim.p, "Predictors");
  simulate->add_option("--scenario", sim.scenario, "baseline | signal_on_high_vol");
  simulate->add_option("--ar", sim.ar, "Comma-separated predictor AR(1) coefficients");
  simulate->add_option("--beta", sim.beta, "Comma-separated true coefficients");
  simulate->add_option("--error-ar", sim.error_ar, "AR(1) coefficient of the error");
  simulate->add_option("--vol-low", sim.vol_low, "Lowest error volatility");
  simulate->add_option("--vol-high", sim.vol_high, "Highest error volatility");
  simulate->add_option("--vol-cycles", sim.vol_cycles, "Volatility cycles over the sample");
  simulate->add_option("--reps", sim.reps, "Monte Carlo replications (0: single instance only)");
  simulate->add_option("--names", sim.names, "Comma-separated predictor names");
  simulate->add_option("--target-name", sim.target_name, "Target column name");
  simulate->add_option("--start", sim.start, "Label rows as quarters starting here, e.g. 1986Q1");

  BacktestArgs bt;
  auto* backtest = app.add_subcommand("backtest", "Chronological train/test backtest of all five models");
  add_common(backtest, bt.common);
  add_solver(backtest, bt.solver);
  add_vol(backtest, bt.vol);
  add_data(backtest, bt.data);
  backtest->add_option("--fractions", bt.fractions, "Comma-separated training fractions");
  backtest->add_option("--weights", bt.weights, "VW weights file from `garch` (overrides GARCH on train)");

  GarchArgs ga;
  auto* garch = app.add_subcommand("garch", "Fit GARCH(1,1) per predictor and emit penalty weights");
  add_common(garch, ga.common);
  add_vol(garch, ga.vol);
  add_data(garch, ga.data);

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "Exact linear SHAP values and importance ranking");
  add_common(explain, ex.common);
  add_data(explain, ex.data);
  explain->add_option("--fit", ex.fit, "Fit JSON written by `fit` or `backtest`");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit one model and write it as JSON");
  add_common(fit, fa.common);
  add_solver(fit, fa.solver);
  add_vol(fit, fa.vol);
  add_data(fit, fa.data);
  fit->add_option("--model", fa.model, "ols | ridge | lasso | adaptive_lasso | vw_lasso");
  fit->add_option("--lambda", fa.lambda, "Fixed lambda (default: selected on the grid)");
  fit->add_option("--train-fraction", fa.fraction, "Fit on this leading share of rows");

  std::vector<std::string> tokens = args;
  try {
    const std::string config = find_config(args);
    if (!config.empty() && !tokens.empty()) {
      auto extra = config_tokens(config);
      tokens.insert(tokens.begin() + 1, extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*simulate) return cmd_simulate(simulate, sim, out);
    if (*backtest) return cmd_backtest(backtest, bt, out, err);
    if (*garch) return cmd_garch(garch, ga, out, err);
    if (*explain) return cmd_explain(ex, out);
    if (*fit) return cmd_fit(fit, fa, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace volasso::cli
