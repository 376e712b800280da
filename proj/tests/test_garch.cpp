#include <algorithm>
#include <iostream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "volasso/garch.hpp"
#include "volasso/simulate.hpp"

using namespace volasso;

namespace {

Vector gaussian(std::uint64_t seed, int n, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

double recursion_residual(const Vector& series, const GarchFit& f, bool demean) {
  Vector e = series;
  if (demean) e.array() -= e.mean();
  double worst = 0.0;
  for (Eigen::Index t = 1; t < e.size(); ++t) {
    const double want = f.params.omega + f.params.alpha * e(t - 1) * e(t - 1) +
                        f.params.beta * f.cond_var(t - 1);
    worst = std::max(worst, std::abs(f.cond_var(t) - want));
  }
  return worst;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_SUITE("garch") {
  TEST_CASE("loglik at zero residuals") {
    Vector s = Vector::Zero(2);
    const auto ll = garch_loglik(s, {1.0, 0.0, 0.0}, 1.0);
    CHECK(ll.value == doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(ll.cond_var(0) == 1.0);
    CHECK(ll.cond_var(1) == 1.0);
  }

  TEST_CASE("loglik plug-in") {
    Vector s = Vector::Ones(2);
    const auto ll = garch_loglik(s, {1.0, 0.0, 0.0}, 1.0);
    CHECK(ll.cond_var(1) == 1.0);
    CHECK(ll.value == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 1.0).epsilon(1e-14));
  }

  TEST_CASE("loglik matches a naive loop") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
      const Vector s = gaussian(500 + rep, 100, 1.5);
      const double alpha = 0.3 * u(rng), beta = (0.95 - alpha) * u(rng), omega = 0.05 + u(rng);
      const double init = 0.5 + u(rng);
      oracle::Vec cv;
      const double want = oracle::garch_loglik(oracle::to_vec(s), omega, alpha, beta, init, &cv);
      const auto got = garch_loglik(s, {omega, alpha, beta}, init);
      CHECK(std::abs(got.value - want) < 1e-10);
      CHECK(oracle::max_abs_diff(got.cond_var, cv) < 1e-10);
    }
  }

  TEST_CASE("loglik rejects non-positive initial variance") {
    CHECK_THROWS_AS(garch_loglik(Vector::Ones(3), {1.0, 0.0, 0.0}, 0.0), NonPositiveVariance);
  }

  TEST_CASE("simulate_garch") {
    const Vector a = simulate_garch({1.0, 0.0, 0.0}, 10000, 4);
    const double var = (a.array() - a.mean()).square().sum() / (a.size() - 1);
    CHECK(std::abs(var - 1.0) < 0.05);
    CHECK(simulate_garch({0.3, 0.1, 0.8}, 50, 17) == simulate_garch({0.3, 0.1, 0.8}, 50, 17));

    // alpha = beta = 0: sqrt(omega) times the raw draws of the same stream
    const Vector unit = simulate_garch({1.0, 0.0, 0.0}, 64, 5);
    const Vector scaled = simulate_garch({4.0, 0.0, 0.0}, 64, 5);
    CHECK(scaled == (2.0 * unit).eval());
  }

  TEST_CASE("parameter recovery") {
    std::vector<double> alphas, betas;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Vector s = simulate_garch({0.1, 0.1, 0.8}, 2000, seed);
      const auto f = garch_fit(s);
      CHECK(f.params.valid());
      CHECK(recursion_residual(s, f, true) < 1e-10);
      CHECK(f.loglik >= f.start_loglik);
      CHECK((f.cond_var.array() > 0.0).all());
      alphas.push_back(f.params.alpha);
      betas.push_back(f.params.beta);
    }
    CHECK(median(alphas) >= 0.02);
    CHECK(median(alphas) <= 0.2);
    CHECK(median(betas) >= 0.65);
    CHECK(median(betas) <= 0.92);
  }

  // Under i.i.d. noise alpha is near zero and beta is not identified, so the
  // persistence bound is often violated even though the variance level is
  // right. The level check below is the identifiable part.
  TEST_CASE("i.i.d. noise: low persistence" * doctest::may_fail()) {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Vector s = gaussian(seed, 2000);
      const auto f = garch_fit(s);
      const double var = (s.array() - s.mean()).square().mean();
      if (f.params.alpha + f.params.beta < 0.3 &&
          std::abs(f.params.unconditional_variance() / var - 1.0) < 0.15) {
        ++hits;
      }
    }
    MESSAGE("low-persistence fits: " << hits << " of 20");
    CHECK(hits >= 18);
  }

  TEST_CASE("i.i.d. noise: fitted variance level") {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Vector s = gaussian(seed, 2000);
      const auto f = garch_fit(s);
      const double var = (s.array() - s.mean()).square().mean();
      if (std::abs(f.cond_var.mean() / var - 1.0) < 0.15) ++hits;
      CHECK(f.params.alpha < 0.05);
    }
    CHECK(hits >= 18);
  }

  TEST_CASE("degenerate and short series") {
    CHECK_THROWS_AS(garch_fit(Vector::Constant(100, 3.0)), DegenerateSeries);
    CHECK_THROWS_AS(garch_fit(gaussian(1, 10)), SeriesTooShort);
  }

  TEST_CASE("fit is deterministic for a fixed seed") {
    const Vector s = simulate_garch({0.2, 0.15, 0.7}, 400, 3);
    const auto a = garch_fit(s), b = garch_fit(s);
    CHECK(a.params.omega == b.params.omega);
    CHECK(a.params.alpha == b.params.alpha);
    CHECK(a.params.beta == b.params.beta);
  }

  TEST_CASE("series transforms") {
    Vector c(4);
    c << 1, 2, 4, 8;
    const Vector d = transform_series(c, SeriesTransform::diff);
    CHECK(d.size() == 3);
    CHECK(d(2) == 4.0);
    const Vector l = transform_series(c, SeriesTransform::log_diff);
    CHECK(l(0) == doctest::Approx(std::log(2.0)));
    CHECK(transform_series(c, SeriesTransform::levels) == c);
    Vector neg = c;
    neg(1) = -1.0;
    CHECK_THROWS_AS(transform_series(neg, SeriesTransform::log_diff), DegenerateSeries);
  }

  TEST_CASE("weights from volatility") {
    Vector v(2);
    v << 1.0, 2.0;
    const auto w = weights_from_volatility(v, 1.0);
    CHECK(w.weights(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(w.weights(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    const auto flat = weights_from_volatility(v, 0.0);
    CHECK((flat.weights.array() == 1.0).all());
    Vector v5(5);
    v5 << 0.3, 1.1, 2.0, 0.7, 5.0;
    CHECK(std::abs(weights_from_volatility(v5, 1.7).weights.mean() - 1.0) < 1e-12);
  }

  TEST_CASE("gamma 0 weights are exactly one") {
    SimConfig cfg;
    cfg.n = 120;
    const auto d = simulate_dgp(cfg).dataset;
    const auto w = volatility_weights(standardize(d).first, 0.0, SeriesTransform::diff);
    CHECK((w.weights.array() == 1.0).all());
  }

  TEST_CASE("similar columns give similar weights") {
    Matrix x(300, 4);
    for (int j = 0; j < 4; ++j) x.col(j) = gaussian(70 + j, 300);
    const auto d = Dataset::from_arrays(Vector::Zero(300), x);
    const auto w = volatility_weights(standardize(d).first, 1.0, SeriesTransform::levels);
    CHECK(w.weights.maxCoeff() / w.weights.minCoeff() < 1.5);
  }

  TEST_CASE("weights follow a column permutation") {
    SimConfig cfg;
    cfg.n = 150;
    cfg.scenario = Scenario::signal_on_high_vol;
    const auto d = standardize(simulate_dgp(cfg).dataset).first;
    const std::vector<std::size_t> order{3, 0, 4, 1, 2};
    const auto w = volatility_weights(d, 1.0, SeriesTransform::diff);
    const auto wp = volatility_weights(d.permute_columns(order), 1.0, SeriesTransform::diff);
    for (std::size_t k = 0; k < order.size(); ++k) {
      CHECK(wp.weights(static_cast<Eigen::Index>(k)) ==
            doctest::Approx(w.weights(static_cast<Eigen::Index>(order[k]))).epsilon(1e-12));
    }
  }

  TEST_CASE("weights ignore column scale after standardization") {
    SimConfig cfg;
    cfg.n = 150;
    cfg.scenario = Scenario::signal_on_high_vol;
    const auto raw = simulate_dgp(cfg).dataset;
    Matrix x = raw.x();
    x.col(1) *= 250.0;
    const auto w = volatility_weights(standardize(raw).first, 1.0, SeriesTransform::diff);
    const auto ws =
        volatility_weights(standardize(raw.with_predictors(x)).first, 1.0, SeriesTransform::diff);
    CHECK((w.weights - ws.weights).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("fitted volatilities follow the constructed ordering") {
    double total = 0.0;
    const int seeds = 10;
    for (int s = 1; s <= seeds; ++s) {
      SimConfig cfg;
      cfg.n = 148;
      cfg.scenario = Scenario::signal_on_high_vol;
      cfg.seed = static_cast<std::uint64_t>(s);
      const auto d = standardize(simulate_dgp(cfg).dataset).first;
      VolatilityOptions opts;
      const auto cols = analyze_volatility(d, opts);
      // Spearman correlation between construction (2 high, 3 low) and fits.
      std::vector<double> vol;
      for (const auto& c : cols) vol.push_back(c.mean_volatility);
      std::vector<std::size_t> order(vol.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vol[a] < vol[b]; });
      std::vector<double> rank(vol.size());
      for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<double>(r + 1);
      const std::vector<double> truth{4.5, 4.5, 2.0, 2.0, 2.0};
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < 5; ++i) {
        mx += truth[i] / 5;
        my += rank[i] / 5;
      }
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t i = 0; i < 5; ++i) {
        sxy += (truth[i] - mx) * (rank[i] - my);
        sxx += (truth[i] - mx) * (truth[i] - mx);
        syy += (rank[i] - my) * (rank[i] - my);
      }
      total += sxy / std::sqrt(sxx * syy);
    }
    CHECK(total / seeds > 0.8);
  }

  TEST_CASE("per-column failures are recorded, not thrown") {
    Matrix x(40, 2);
    x.col(0) = gaussian(1, 40);
    x.col(1) = Vector::LinSpaced(40, 0.0, 39.0);
    const auto d = Dataset::from_arrays(Vector::Zero(40), x);
    const auto cols = analyze_volatility(d, VolatilityOptions{});
    CHECK(cols[0].error.empty());
    CHECK(!cols[1].error.empty());
    CHECK_THROWS_AS(volatility_weights(d, VolatilityOptions{}), ColumnError);
  }

  TEST_CASE("penalty weights validation") {
    PenaltyWeights w = PenaltyWeights::unit(3);
    CHECK_NOTHROW(w.validate());
    w.weights(1) = -1.0;
    CHECK_THROWS(w.validate());
    w.weights = Vector::Zero(3);
    CHECK_THROWS(w.validate());
  }
}
