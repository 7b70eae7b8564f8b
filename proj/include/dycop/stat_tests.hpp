#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dycop/estimation.hpp"

namespace dycop::stats {

struct TestReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
  enum class Method { asymptotic, simulated, bootstrap } method = Method::asymptotic;
  std::size_t n_sim = 0;
  bool degenerate = false;
  std::map<std::string, double> details;
};

std::string method_tag(TestReport::Method m);

struct HitSequence {
  std::vector<int> hits;                 // 1 when y_t < q_t
  std::vector<double> quantile_path;     // q_t^alpha, one per hit
  double alpha = 0.05;
};

HitSequence make_hits(std::span<const double> y, std::span<const double> q, double alpha);

// Newey-West long-run variance of a series (Bartlett kernel, `lag` lags).
double newey_west_lrv(std::span<const double> x, std::size_t lag);

// ARCH-LM style test for time-varying dependence: the product of demeaned
// PITs is regressed on its own lags; Wald statistic from the OLS covariance,
// critical values from an i.i.d. pair bootstrap under constant dependence.
TestReport tv_dependence_test(std::span<const double> u1, std::span<const double> u2,
                              std::size_t max_lag = 10, std::size_t n_boot = 1000,
                              std::uint64_t seed = 1);

// Copula goodness of fit. Constant copulas compare the empirical copula of
// the PITs with the fitted CDF; GAS dynamics first reduce the sample to
// Rosenblatt coordinates and compare against independence. p-values come from
// a refit-on-simulated-data parametric bootstrap.
std::pair<TestReport, TestReport> gof_ks_cvm(const est::JointModel& model,
                                             std::size_t n_sim = 1000,
                                             std::uint64_t seed = 1);

// Conditional predictive ability: mean log-score difference scaled by its
// HAC standard error, asymptotically N(0,1), two sided.
TestReport cpa_test(std::span<const double> loglik1, std::span<const double> loglik2);

// Quantile forecast loss (alpha - 1{y<q}) (y - q); nonnegative.
double gk_loss(double y, double q, double alpha);

// Diebold-Mariano with the alternative "the benchmark (first series) is more
// accurate"; positive statistic favors the benchmark, one-sided p-value.
TestReport dm_test(std::span<const double> loss_benchmark,
                   std::span<const double> loss_competitor);

// Logit autoregression of VaR violations on lagged hits and quantile
// forecasts; LR statistic against exact coverage alpha, p-value simulated
// under i.i.d. Bernoulli(alpha) hits.
TestReport dq_test(const HitSequence& hits, std::size_t n_lags = 4, std::size_t n_sim = 1000,
                   std::uint64_t seed = 1);

}  // namespace dycop::stats
