#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dycop/risk.hpp"
#include "dycop/sim.hpp"
#include "dycop/special.hpp"
#include "support/oracles.hpp"

using namespace dycop;
using risk::ForecastDraws;

namespace {

// constant-copula joint model with identical margins, assembled at known
// parameters on simulated data
est::JointModel known_model(double rho, std::size_t T, std::uint64_t seed,
                            bool gaussian_margins = false) {
  sim::JointDgp dgp = sim::example_dgp();
  dgp.dynamics = cop::Dynamics::constant;
  dgp.delta = rho;
  dgp.margin2 = dgp.margin1;  // identical margins
  if (gaussian_margins) {
    dgp.margin1.innov = dist::SkewTParams{1e9, 0.0};
    dgp.margin2.innov = dist::SkewTParams{1e9, 0.0};
  }
  const auto data = sim::simulate_joint(dgp, T, seed);

  est::ModelSpec spec;
  spec.family = cop::Family::normal;
  spec.dynamics = cop::Dynamics::constant;
  est::CopulaStage stage;
  stage.family = spec.family;
  stage.dynamics = spec.dynamics;
  stage.constant.family = spec.family;
  stage.constant.delta = rho;
  return est::assemble_model(data.panel, spec, dgp.margin1, dgp.margin2, stage);
}

}  // namespace

TEST_CASE("quantile and expected shortfall basics") {
  ForecastDraws d;
  d.y = {-1.0, 0.0, 1.0};
  CHECK(risk::var_forecast(d, 0.5) == doctest::Approx(0.0));

  // shift equivariance
  ForecastDraws shifted = d;
  for (auto& v : shifted.y) v += 2.5;
  CHECK(risk::var_forecast(shifted, 0.5) ==
        doctest::Approx(risk::var_forecast(d, 0.5) + 2.5));

  // point mass
  ForecastDraws mass;
  mass.y.assign(100, -1.0);
  CHECK(risk::es_forecast(mass, 0.10) == doctest::Approx(-1.0));

  CHECK_THROWS(risk::var_forecast(d, 0.0));
  CHECK_THROWS(risk::var_forecast(d, 1.0));
}

TEST_CASE("quantile and es match the standard normal closed forms") {
  Rng rng(70);
  ForecastDraws d;
  d.y.resize(1000000);
  for (auto& v : d.y) v = special::norm_quantile(rng.uniform());

  CHECK(risk::var_forecast(d, 0.05) == doctest::Approx(-1.6449).margin(0.01));
  // ES of the standard normal: -phi(z_alpha)/alpha
  const double z = special::norm_quantile(0.05);
  const double es = -special::norm_pdf(z) / 0.05;
  CHECK(risk::es_forecast(d, 0.05) == doctest::Approx(es).margin(0.02));
  CHECK(es == doctest::Approx(-2.063).margin(0.01));

  // monotone in alpha, ES below VaR
  CHECK(risk::var_forecast(d, 0.01) <= risk::var_forecast(d, 0.05));
  CHECK(risk::var_forecast(d, 0.05) <= risk::var_forecast(d, 0.10));
  CHECK(risk::es_forecast(d, 0.01) <= risk::es_forecast(d, 0.05));
  CHECK(risk::es_forecast(d, 0.05) <= risk::var_forecast(d, 0.05));
}

TEST_CASE("forecast draws: independence and standardization") {
  const est::JointModel model = known_model(0.0, 400, 71);
  const auto panel = sim::simulate_joint(
      [] {
        sim::JointDgp g = sim::example_dgp();
        g.dynamics = cop::Dynamics::constant;
        g.delta = 0.0;
        g.margin2 = g.margin1;
        return g;
      }(),
      400, 71).panel;

  const auto st = risk::state_at(model, panel, panel.size() - 1);
  const auto draws = risk::forecast_joint(model, st, 100000, 72);

  CHECK(oracles::correlation(draws.x1, draws.x2) == doctest::Approx(0.0).margin(0.02));

  std::vector<double> std1(draws.x1.size());
  for (std::size_t s = 0; s < draws.x1.size(); ++s) {
    std1[s] = (draws.x1[s] - draws.mean1_next) / std::sqrt(draws.h1_next);
  }
  CHECK(std::sqrt(oracles::variance(std1)) == doctest::Approx(1.0).margin(0.02));

  // determinism
  const auto again = risk::forecast_joint(model, st, 1000, 72);
  const auto ref = risk::forecast_joint(model, st, 1000, 72);
  CHECK(again.y == ref.y);
}

TEST_CASE("portfolio quantile matches the bivariate normal closed form") {
  const double rho = 0.6042;
  const est::JointModel model = known_model(rho, 300, 73, /*gaussian_margins=*/true);

  sim::JointDgp g = sim::example_dgp();
  g.dynamics = cop::Dynamics::constant;
  g.delta = rho;
  g.margin2 = g.margin1;
  g.margin1.innov = dist::SkewTParams{1e9, 0.0};
  g.margin2.innov = dist::SkewTParams{1e9, 0.0};
  const auto panel = sim::simulate_joint(g, 300, 73).panel;

  const auto st = risk::state_at(model, panel, panel.size() - 1);
  const auto draws = risk::forecast_joint(model, st, 200000, 74);

  const double sd_p = std::sqrt(0.25 * draws.h1_next + 0.25 * draws.h2_next +
                                0.5 * rho * std::sqrt(draws.h1_next * draws.h2_next));
  const double mean_p = 0.5 * draws.mean1_next + 0.5 * draws.mean2_next;
  const double closed = mean_p + sd_p * special::norm_quantile(0.05);
  CHECK(risk::var_forecast(draws, 0.05) == doctest::Approx(closed).epsilon(0.015));
}

TEST_CASE("cdb limits: perfect dependence gives no diversification benefit") {
  const est::JointModel model = known_model(0.999, 300, 75);
  sim::JointDgp g = sim::example_dgp();
  g.dynamics = cop::Dynamics::constant;
  g.delta = 0.999;
  g.margin2 = g.margin1;
  const auto panel = sim::simulate_joint(g, 300, 75).panel;
  const auto st = risk::state_at(model, panel, panel.size() - 1);
  const auto draws = risk::forecast_joint(model, st, 50000, 76);
  const auto pt = risk::cdb_from_draws(draws, 0.05, {});
  CHECK(pt.valid);
  CHECK(pt.cdb < 0.05);
}

TEST_CASE("cdb is positive under independence with gaussian margins") {
  const est::JointModel model = known_model(0.0, 300, 77, true);
  sim::JointDgp g = sim::example_dgp();
  g.dynamics = cop::Dynamics::constant;
  g.delta = 0.0;
  g.margin2 = g.margin1;
  g.margin1.innov = dist::SkewTParams{1e9, 0.0};
  g.margin2.innov = dist::SkewTParams{1e9, 0.0};
  const auto panel = sim::simulate_joint(g, 300, 77).panel;
  const auto st = risk::state_at(model, panel, panel.size() - 1);
  const auto draws = risk::forecast_joint(model, st, 50000, 78);
  const auto pt = risk::cdb_from_draws(draws, 0.05, {});
  CHECK(pt.cdb > 0.1);
  // closed-form Gaussian benchmark at rho = 0
  CHECK(pt.cdb == doctest::Approx(risk::gaussian_cdb(0.0, 0.05, {})).margin(0.05));
}

TEST_CASE("cdb is exactly scale invariant on rescaled draws") {
  const est::JointModel model = known_model(0.5, 300, 79);
  sim::JointDgp g = sim::example_dgp();
  g.dynamics = cop::Dynamics::constant;
  g.delta = 0.5;
  g.margin2 = g.margin1;
  const auto panel = sim::simulate_joint(g, 300, 79).panel;
  const auto st = risk::state_at(model, panel, panel.size() - 1);
  auto draws = risk::forecast_joint(model, st, 30000, 80);
  // zero-mean the draws so scaling is a pure volatility change
  for (auto* v : {&draws.x1, &draws.x2}) {
    const double m = oracles::mean(*v);
    for (auto& x : *v) x -= m;
  }
  for (std::size_t s = 0; s < draws.y.size(); ++s) {
    draws.y[s] = 0.5 * draws.x1[s] + 0.5 * draws.x2[s];
  }
  const auto base = risk::cdb_from_draws(draws, 0.05, {});
  ForecastDraws scaled = draws;
  for (auto* v : {&scaled.x1, &scaled.x2, &scaled.y}) {
    for (auto& x : *v) x *= 3.7;
  }
  const auto after = risk::cdb_from_draws(scaled, 0.05, {});
  CHECK(after.cdb == doctest::Approx(base.cdb).epsilon(1e-12));
}

TEST_CASE("cdb path is flat when the dynamics are frozen") {
  const est::JointModel model = known_model(0.6, 400, 81);
  sim::JointDgp g = sim::example_dgp();
  g.dynamics = cop::Dynamics::constant;
  g.delta = 0.6;
  g.margin2 = g.margin1;
  const auto panel = sim::simulate_joint(g, 400, 81).panel;

  const auto path = risk::cdb_path(model, panel, panel.size() - 60, 0.05, 4000, 82);
  REQUIRE(path.size() == 60);
  std::vector<double> vals;
  for (const auto& pt : path) {
    CHECK(pt.valid);
    CHECK(pt.cdb >= 0.0);
    CHECK(pt.cdb <= 1.0);
    vals.push_back(pt.cdb);
  }
  // variation driven by state changes and MC noise only; the dependence
  // parameter is constant so the path must stay in a narrow band
  CHECK(std::sqrt(oracles::variance(vals)) < 0.05);
}

TEST_CASE("constant cdb band") {
  const auto band = risk::cdb_constant_band(0.6, 1000, 0.05, 4000, 83);
  CHECK(band.lo90 <= band.mean);
  CHECK(band.mean <= band.hi90);

  // rho -> 1 collapses the benefit
  const auto one = risk::cdb_constant_band(1.0, 1000, 0.05, 2000, 84);
  CHECK(one.mean < 0.01);
  CHECK(one.hi90 < 0.02);

  // longer samples tighten the band
  const auto narrow = risk::cdb_constant_band(0.6, 2000, 0.05, 4000, 85);
  const auto wide = risk::cdb_constant_band(0.6, 500, 0.05, 4000, 85);
  CHECK(narrow.hi90 - narrow.lo90 < wide.hi90 - wide.lo90);
}

TEST_CASE("rolling forecast produces coherent series") {
  sim::JointDgp g = sim::example_dgp();
  const auto data = sim::simulate_joint(g, 500, 86);

  est::ModelSpec spec;
  spec.family = cop::Family::normal;
  spec.dynamics = cop::Dynamics::gas;
  est::CopulaStage stage;
  stage.family = spec.family;
  stage.dynamics = spec.dynamics;
  stage.gas.family = spec.family;
  stage.gas.params = g.gas;
  stage.gas.kappa1 = g.gas.w / (1.0 - g.gas.b);
  const auto model = est::assemble_model(data.panel, spec, g.margin1, g.margin2, stage);

  const std::vector<double> alphas = {0.01, 0.05, 0.10, 0.90, 0.95, 0.99};
  const auto roll = risk::rolling_forecast(model, data.panel, 400, alphas, 2000, 87);
  REQUIRE(roll.dates.size() == 100);
  for (std::size_t i = 0; i < roll.dates.size(); ++i) {
    CHECK(roll.var_by_alpha.at(0.01)[i] <= roll.var_by_alpha.at(0.05)[i]);
    CHECK(roll.var_by_alpha.at(0.05)[i] <= roll.var_by_alpha.at(0.10)[i]);
    CHECK(roll.var_by_alpha.at(0.10)[i] <= roll.var_by_alpha.at(0.90)[i]);
    CHECK(roll.es05[i] <= roll.var_by_alpha.at(0.05)[i]);
    CHECK(std::isfinite(roll.copula_logscore[i]));
    CHECK(std::isfinite(roll.margin_logscore[i]));
  }
}
