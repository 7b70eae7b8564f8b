#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dycop/estimation.hpp"
#include "dycop/market_data.hpp"

namespace dycop::risk {

struct PortfolioSpec {
  double w1 = 0.5;
  double w2 = 0.5;
};

// Everything known at date t that the one-step-ahead forecast needs.
struct ForecastState {
  double log_h1 = 0.0, log_rv1 = 0.0;
  double log_h2 = 0.0, log_rv2 = 0.0;
  std::vector<double> lags1;  // x_t, x_{t-1}, ... newest first
  std::vector<double> lags2;
  double kappa = 0.0;    // copula state at t (gas dynamics)
  double u1 = 0.5, u2 = 0.5;  // PIT pair observed at t
};

struct ForecastDraws {
  std::vector<double> x1, x2, y;
  double h1_next = 0.0, h2_next = 0.0;
  double mean1_next = 0.0, mean2_next = 0.0;
  double delta_next = 0.0;
};

// Extracts the state at panel index t from a model assembled on that panel.
ForecastState state_at(const est::JointModel& model, const md::ReturnPanel& panel,
                       std::size_t t);

ForecastDraws forecast_joint(const est::JointModel& model, const ForecastState& state,
                             std::size_t S, std::uint64_t seed,
                             const PortfolioSpec& w = {});

// Linear-interpolation order statistic (type-7) of the portfolio draws.
double empirical_quantile(std::vector<double> values, double alpha);
double var_forecast(const ForecastDraws& draws, double alpha);

// Mean of the draws at or below the alpha quantile.
double expected_shortfall(std::vector<double> values, double alpha);
double es_forecast(const ForecastDraws& draws, double alpha);

struct CdbPoint {
  md::Date date;
  double cdb = 0.0;
  double es_port = 0.0;
  double es_upper = 0.0;  // weighted individual expected shortfalls
  double es_lower = 0.0;  // portfolio alpha quantile
  bool clipped = false;
  bool valid = true;
};

// CDB from one set of joint draws; the individual expected shortfalls reuse
// the same draws so all ingredients share the Monte-Carlo noise.
CdbPoint cdb_from_draws(const ForecastDraws& draws, double alpha, const PortfolioSpec& w);

// Conditional diversification benefit per date over panel indices
// [from, panel.size()-1]; forecasts are made from the state of the previous
// day.
std::vector<CdbPoint> cdb_path(const est::JointModel& model, const md::ReturnPanel& panel,
                               std::size_t from, double alpha, std::size_t S,
                               std::uint64_t seed, const PortfolioSpec& w = {});

struct CdbBand {
  double mean = 0.0;
  double lo90 = 0.0;
  double hi90 = 0.0;
};

// Distribution of the constant diversification benefit when T i.i.d.
// Gaussian return pairs with the given correlation are observed; per
// replicate the correlation is re-estimated and mapped through the
// closed-form Gaussian CDB.
CdbBand cdb_constant_band(double unconditional_rho, std::size_t T, double alpha,
                          std::size_t n_boot = 10000, std::uint64_t seed = 1,
                          const PortfolioSpec& w = {});

// Closed-form CDB of a Gaussian pair with unit variances.
double gaussian_cdb(double rho, double alpha, const PortfolioSpec& w = {});

// Fixed-window out-of-sample forecast path: one-day-ahead VaR for each alpha,
// 5% expected shortfall, realized portfolio return and per-date copula
// log-score. Forecast for panel index t uses the state at t-1.
struct RollingForecast {
  std::vector<md::Date> dates;
  std::vector<double> realized;
  std::map<double, std::vector<double>> var_by_alpha;
  std::vector<double> es05;
  std::vector<double> cdb05;
  std::vector<double> copula_logscore;
  std::vector<double> margin_logscore;  // sum of the two return log densities
};

RollingForecast rolling_forecast(const est::JointModel& model, const md::ReturnPanel& panel,
                                 std::size_t from, std::span<const double> alphas,
                                 std::size_t S, std::uint64_t seed,
                                 const PortfolioSpec& w = {});

}  // namespace dycop::risk
