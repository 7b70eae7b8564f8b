#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dycop/distributions.hpp"
#include "dycop/market_data.hpp"

namespace dycop::margins {

// AR(p) mean with log-linear Realized-GARCH(1,1) variance:
//   x_t      = mu + sum_k ar_k x_{t-k} + sqrt(h_t) z_t
//   log h_t  = omega + beta log h_{t-1} + gamma log rv_{t-1}
//   log rv_t = xi + phi log h_t + tau1 z_t + tau2 (z_t^2 - 1) + u_t,  u ~ N(0, sigma_u2)
struct RealGarchParams {
  double mu = 0.0;
  std::vector<double> ar;  // alpha_1..alpha_p, p <= 5
  double omega = 0.0;
  double beta = 0.6;
  double gamma = 0.35;
  double xi = 0.0;
  double phi = 1.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double sigma_u2 = 0.2;
  dist::SkewTParams innov;

  std::size_t p() const { return ar.size(); }
  // persistence of the log-variance recursion once the measurement equation
  // is substituted in
  double persistence() const { return beta + gamma * phi; }
  bool stationary() const { return persistence() < 1.0 && sigma_u2 > 0.0; }
  double leverage(double z) const { return tau1 * z + tau2 * (z * z - 1.0); }
};

struct FilterOutput {
  std::vector<double> h;        // conditional variances
  std::vector<double> z;        // standardized residuals
  std::vector<double> u_resid;  // measurement-equation residuals
  std::size_t offset = 0;       // panel index of the first filtered entry (= p)
};

struct LogLik {
  double joint = 0.0;    // returns + measurement equation
  double partial = 0.0;  // returns only
};

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double grad_inf_norm = 0.0;
  int n_restarts = 0;
};

struct MarginFit {
  RealGarchParams params;
  double loglik_joint = 0.0;
  double loglik_partial = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n_params = 0;
  std::vector<double> h;  // filtered conditional variances
  std::vector<double> z;  // standardized residuals
  std::vector<double> u;  // PIT values, strictly inside (0,1)
  std::size_t offset = 0;
  FitDiagnostics diag;
};

// Benchmark GARCH(1,1) with normal innovations and the same AR mean.
struct GarchParams {
  double kappa = 0.0;
  double phi_arch = 0.05;
  double psi_garch = 0.9;

  bool stationary() const {
    return kappa >= 0.0 && phi_arch >= 0.0 && psi_garch >= 0.0 &&
           phi_arch + psi_garch < 1.0;
  }
};

struct GarchFit {
  double mu = 0.0;
  std::vector<double> ar;
  GarchParams params;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n_params = 0;
  std::vector<double> h;
  std::size_t offset = 0;
  FitDiagnostics diag;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_point,
                   double best_value, double grad_norm)
      : std::runtime_error(what),
        best_point(std::move(best_point)),
        best_value(best_value),
        grad_inf_norm(grad_norm) {}

  std::vector<double> best_point;
  double best_value;
  double grad_inf_norm;
};

FilterOutput rg_filter(std::span<const md::DailyObservation> obs,
                       const RealGarchParams& params);

LogLik rg_loglik(std::span<const md::DailyObservation> obs, const RealGarchParams& params);

MarginFit rg_fit(std::span<const md::DailyObservation> obs, std::size_t p,
                 const std::optional<RealGarchParams>& init = std::nullopt,
                 std::uint64_t seed = 1, int n_starts = 5);

GarchFit garch_fit(std::span<const md::DailyObservation> obs, std::size_t p,
                   std::uint64_t seed = 1, int n_starts = 3);

// Smallest AR order (0..max_p) minimizing the BIC of the joint fit.
std::size_t ar_order_select(std::span<const md::DailyObservation> obs, std::size_t max_p,
                            std::uint64_t seed = 1);

// Simulates a Realized-GARCH path driven by the given standardized
// innovations and measurement noise (both of length T + burnin); the first
// `burnin` observations are discarded. Dates are synthetic weekdays.
std::vector<md::DailyObservation> simulate_path(const RealGarchParams& params,
                                                std::span<const double> z,
                                                std::span<const double> u_noise,
                                                std::size_t burnin);

std::vector<md::DailyObservation> simulate(const RealGarchParams& params, std::size_t T,
                                           std::uint64_t seed, std::size_t burnin = 500);

}  // namespace dycop::margins
