#include "dycop/margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "dycop/detail/linalg.hpp"
#include "dycop/optim.hpp"
#include "dycop/rng.hpp"
#include "dycop/special.hpp"

namespace dycop::margins {

using detail::solve_dense;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kMaxLogH = 60.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double conditional_mean(std::span<const md::DailyObservation> obs, const RealGarchParams& p,
                        std::size_t t) {
  double m = p.mu;
  for (std::size_t k = 0; k < p.p(); ++k) m += p.ar[k] * obs[t - 1 - k].ret;
  return m;
}

// theta layout: mu, ar_1..ar_p, omega, atanh(beta), gamma, xi, phi, tau1,
// tau2, log(sigma_u2), atanh(lambda), logit(2/nu)
std::vector<double> pack(const RealGarchParams& p) {
  std::vector<double> th;
  th.push_back(p.mu);
  th.insert(th.end(), p.ar.begin(), p.ar.end());
  th.push_back(p.omega);
  th.push_back(std::atanh(std::clamp(p.beta, -0.999999, 0.999999)));
  th.push_back(p.gamma);
  th.push_back(p.xi);
  th.push_back(p.phi);
  th.push_back(p.tau1);
  th.push_back(p.tau2);
  th.push_back(std::log(std::max(p.sigma_u2, 1e-12)));
  th.push_back(std::atanh(std::clamp(p.innov.lambda, -0.999999, 0.999999)));
  const double nu_inv = std::clamp(1.0 / p.innov.nu, 1e-9, 0.499999);
  th.push_back(logit(2.0 * nu_inv));
  return th;
}

RealGarchParams unpack(const std::vector<double>& th, std::size_t p) {
  RealGarchParams out;
  std::size_t i = 0;
  out.mu = th[i++];
  out.ar.assign(th.begin() + 1, th.begin() + 1 + p);
  i += p;
  out.omega = th[i++];
  out.beta = std::tanh(th[i++]);
  out.gamma = th[i++];
  out.xi = th[i++];
  out.phi = th[i++];
  out.tau1 = th[i++];
  out.tau2 = th[i++];
  out.sigma_u2 = std::exp(std::clamp(th[i++], -30.0, 30.0));
  out.innov.lambda = std::tanh(th[i++]);
  const double nu_inv = 0.5 * sigmoid(th[i++]);
  out.innov.nu = nu_inv < 1e-9 ? 2.0 * dist::kNuNormalLimit : 1.0 / nu_inv;
  return out;
}

struct LogLikTerms {
  double joint, partial;
  FilterOutput filt;
};

LogLikTerms loglik_terms(std::span<const md::DailyObservation> obs,
                         const RealGarchParams& params) {
  LogLikTerms out;
  out.filt = rg_filter(obs, params);
  const dist::SkewTKernel kern(params.innov);
  const double log_su2 = std::log(params.sigma_u2);
  double lr = 0.0, lx = 0.0;
  for (std::size_t k = 0; k < out.filt.h.size(); ++k) {
    lr += kern.logpdf(out.filt.z[k]) - 0.5 * std::log(out.filt.h[k]);
    const double u = out.filt.u_resid[k];
    lx += -0.5 * (kLog2Pi + log_su2) - 0.5 * u * u / params.sigma_u2;
  }
  out.partial = lr;
  out.joint = lr + lx;
  return out;
}

RealGarchParams initial_guess(std::span<const md::DailyObservation> obs, std::size_t p) {
  const std::size_t T = obs.size();
  RealGarchParams g;

  double mean_ret = 0.0, mean_lrv = 0.0;
  for (const auto& o : obs) {
    mean_ret += o.ret;
    mean_lrv += std::log(o.rv);
  }
  mean_ret /= static_cast<double>(T);
  mean_lrv /= static_cast<double>(T);

  g.mu = mean_ret;
  g.ar.assign(p, 0.0);
  if (p > 0) {
    // OLS of x_t on [1, x_{t-1..t-p}]
    const std::size_t n = p + 1;
    std::vector<double> XtX(n * n, 0.0), Xty(n, 0.0), row(n);
    for (std::size_t t = p; t < T; ++t) {
      row[0] = 1.0;
      for (std::size_t k = 0; k < p; ++k) row[k + 1] = obs[t - 1 - k].ret;
      for (std::size_t i = 0; i < n; ++i) {
        Xty[i] += row[i] * obs[t].ret;
        for (std::size_t j = 0; j < n; ++j) XtX[i * n + j] += row[i] * row[j];
      }
    }
    const auto coef = solve_dense(XtX, Xty);
    g.mu = coef[0];
    for (std::size_t k = 0; k < p; ++k) g.ar[k] = std::clamp(coef[k + 1], -0.9, 0.9);
  }

  g.beta = 0.6;
  g.gamma = 0.35;
  g.phi = 1.0;
  g.xi = 0.0;
  g.omega = (1.0 - g.beta - g.gamma) * mean_lrv;
  g.tau1 = -0.05;
  g.tau2 = 0.05;

  double var_lrv = 0.0;
  for (const auto& o : obs) {
    const double d = std::log(o.rv) - mean_lrv;
    var_lrv += d * d;
  }
  var_lrv /= static_cast<double>(T);
  g.sigma_u2 = std::max(0.5 * var_lrv, 0.01);

  g.innov = dist::SkewTParams{8.0, 0.0};
  return g;
}

}  // namespace

FilterOutput rg_filter(std::span<const md::DailyObservation> obs,
                       const RealGarchParams& params) {
  const std::size_t p = params.p();
  const std::size_t T = obs.size();
  if (p > 5) throw std::invalid_argument("rg_filter: AR order must be <= 5");
  if (T < p + 2) throw std::invalid_argument("rg_filter: series too short");

  FilterOutput out;
  out.offset = p;
  const std::size_t n = T - p;
  out.h.resize(n);
  out.z.resize(n);
  out.u_resid.resize(n);

  // pre-sample log h and log RV are both proxied by the mean log RV over the
  // first observations, so the recursion applies from the first entry on
  const std::size_t warm = std::min<std::size_t>(50, T);
  double warm_mean = 0.0;
  for (std::size_t t = 0; t < warm; ++t) warm_mean += std::log(obs[t].rv);
  warm_mean /= static_cast<double>(warm);

  double log_h = 0.0;
  for (std::size_t t = p; t < T; ++t) {
    if (t == p) {
      log_h = params.omega + params.beta * warm_mean + params.gamma * warm_mean;
    } else {
      log_h = params.omega + params.beta * log_h + params.gamma * std::log(obs[t - 1].rv);
    }
    if (!(std::fabs(log_h) < kMaxLogH)) {
      throw std::runtime_error("rg_filter: log-variance overflow at index " +
                               std::to_string(t));
    }
    const std::size_t k = t - p;
    out.h[k] = std::exp(log_h);
    out.z[k] = (obs[t].ret - conditional_mean(obs, params, t)) / std::sqrt(out.h[k]);
    out.u_resid[k] = std::log(obs[t].rv) - params.xi - params.phi * log_h -
                     params.leverage(out.z[k]);
  }
  return out;
}

LogLik rg_loglik(std::span<const md::DailyObservation> obs, const RealGarchParams& params) {
  const auto terms = loglik_terms(obs, params);
  return LogLik{terms.joint, terms.partial};
}

MarginFit rg_fit(std::span<const md::DailyObservation> obs, std::size_t p,
                 const std::optional<RealGarchParams>& init, std::uint64_t seed,
                 int n_starts) {
  if (p > 5) throw std::invalid_argument("rg_fit: AR order must be <= 5");

  auto objective = [&obs, p](const std::vector<double>& th) -> double {
    try {
      const RealGarchParams params = unpack(th, p);
      if (!params.innov.valid()) return 1e50;
      return -loglik_terms(obs, params).joint;
    } catch (const std::exception&) {
      return 1e50;
    }
  };
  auto admissible = [&obs, p](const std::vector<double>& th) -> bool {
    try {
      const RealGarchParams params = unpack(th, p);
      if (!params.stationary()) return false;
      rg_filter(obs, params);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };

  RealGarchParams start = init.value_or(initial_guess(obs, p));
  if (start.ar.size() != p) start.ar.resize(p, 0.0);
  const std::vector<double> th0 = pack(start);

  optim::Result best;
  int restarts = 0;
  for (;;) {
    best = optim::multistart_bfgs(objective, th0, n_starts, 0.25 + 0.25 * restarts,
                                  derive_seed(seed, "rg_fit", restarts), admissible);
    if (admissible(best.x) && best.value < 1e49) break;
    if (++restarts > 3) {
      throw ConvergenceError("rg_fit: no admissible optimum found", best.x, best.value,
                             best.grad_inf_norm);
    }
  }

  MarginFit fit;
  fit.params = unpack(best.x, p);
  const auto terms = loglik_terms(obs, fit.params);
  fit.loglik_joint = terms.joint;
  fit.loglik_partial = terms.partial;
  fit.h = terms.filt.h;
  fit.z = terms.filt.z;
  fit.offset = terms.filt.offset;
  fit.n_params = 11 + p;
  const double n_eff = static_cast<double>(obs.size() - p);
  fit.aic = -2.0 * fit.loglik_joint + 2.0 * static_cast<double>(fit.n_params);
  fit.bic = -2.0 * fit.loglik_joint + std::log(n_eff) * static_cast<double>(fit.n_params);

  const dist::SkewTKernel kern(fit.params.innov);
  fit.u.resize(fit.z.size());
  for (std::size_t k = 0; k < fit.z.size(); ++k) {
    fit.u[k] = std::clamp(kern.cdf(fit.z[k]), 1e-12, 1.0 - 1e-12);
  }

  fit.diag.converged = best.converged;
  fit.diag.iterations = best.iterations;
  fit.diag.evaluations = best.evaluations;
  fit.diag.grad_inf_norm = best.grad_inf_norm;
  fit.diag.n_restarts = restarts;
  return fit;
}

namespace {

struct GarchEval {
  double loglik;
  std::vector<double> h;
};

GarchEval garch_loglik(std::span<const md::DailyObservation> obs, double mu,
                       const std::vector<double>& ar, const GarchParams& gp) {
  const std::size_t p = ar.size();
  const std::size_t T = obs.size();
  GarchEval ev;
  ev.h.resize(T - p);

  // initialize at the sample variance of the mean residuals
  double acc = 0.0;
  std::size_t cnt = 0;
  for (std::size_t t = p; t < T; ++t) {
    double m = mu;
    for (std::size_t k = 0; k < p; ++k) m += ar[k] * obs[t - 1 - k].ret;
    const double e = obs[t].ret - m;
    acc += e * e;
    ++cnt;
  }
  double h = std::max(acc / static_cast<double>(cnt), 1e-12);

  double ll = 0.0;
  double prev_eps2 = h;
  for (std::size_t t = p; t < T; ++t) {
    if (t > p) h = gp.kappa + gp.phi_arch * prev_eps2 + gp.psi_garch * h;
    if (!(h > 1e-300) || !std::isfinite(h)) {
      ev.loglik = -1e50;
      return ev;
    }
    double m = mu;
    for (std::size_t k = 0; k < p; ++k) m += ar[k] * obs[t - 1 - k].ret;
    const double e = obs[t].ret - m;
    ll += -0.5 * (kLog2Pi + std::log(h)) - 0.5 * e * e / h;
    ev.h[t - p] = h;
    prev_eps2 = e * e;
  }
  ev.loglik = ll;
  return ev;
}

}  // namespace

GarchFit garch_fit(std::span<const md::DailyObservation> obs, std::size_t p,
                   std::uint64_t seed, int n_starts) {
  const std::size_t T = obs.size();
  if (T < p + 20) throw std::invalid_argument("garch_fit: series too short");

  double mean_ret = 0.0;
  for (const auto& o : obs) mean_ret += o.ret;
  mean_ret /= static_cast<double>(T);
  double var_ret = 0.0;
  for (const auto& o : obs) {
    const double d = o.ret - mean_ret;
    var_ret += d * d;
  }
  var_ret /= static_cast<double>(T);

  // theta: mu, ar_1..p, log kappa, logit(persistence), logit(garch share)
  auto unpack_g = [p](const std::vector<double>& th) {
    double mu = th[0];
    std::vector<double> ar(th.begin() + 1, th.begin() + 1 + p);
    GarchParams gp;
    gp.kappa = std::exp(std::clamp(th[p + 1], -40.0, 40.0));
    const double persist = sigmoid(th[p + 2]);
    const double share = sigmoid(th[p + 3]);
    gp.phi_arch = persist * (1.0 - share);
    gp.psi_garch = persist * share;
    return std::tuple<double, std::vector<double>, GarchParams>{mu, std::move(ar), gp};
  };

  auto objective = [&](const std::vector<double>& th) -> double {
    const auto [mu, ar, gp] = unpack_g(th);
    return -garch_loglik(obs, mu, ar, gp).loglik;
  };

  std::vector<double> th0;
  th0.push_back(mean_ret);
  th0.insert(th0.end(), p, 0.0);
  th0.push_back(std::log(std::max(0.05 * var_ret, 1e-10)));
  th0.push_back(logit(0.95));
  th0.push_back(logit(0.9));

  const auto best = optim::multistart_bfgs(objective, th0, n_starts, 0.3,
                                           derive_seed(seed, "garch_fit"));

  GarchFit fit;
  std::tie(fit.mu, fit.ar, fit.params) = unpack_g(best.x);
  const auto ev = garch_loglik(obs, fit.mu, fit.ar, fit.params);
  fit.loglik = ev.loglik;
  fit.h = ev.h;
  fit.offset = p;
  fit.n_params = 4 + p;
  const double n_eff = static_cast<double>(T - p);
  fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(fit.n_params);
  fit.bic = -2.0 * fit.loglik + std::log(n_eff) * static_cast<double>(fit.n_params);
  fit.diag.converged = best.converged;
  fit.diag.iterations = best.iterations;
  fit.diag.evaluations = best.evaluations;
  fit.diag.grad_inf_norm = best.grad_inf_norm;
  return fit;
}

std::size_t ar_order_select(std::span<const md::DailyObservation> obs, std::size_t max_p,
                            std::uint64_t seed) {
  if (max_p > 5) throw std::invalid_argument("ar_order_select: max_p must be <= 5");
  std::size_t best_p = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p <= max_p; ++p) {
    try {
      const MarginFit fit = rg_fit(obs, p, std::nullopt, derive_seed(seed, "ar_order", p),
                                   /*n_starts=*/1);
      if (fit.bic < best_bic - 1e-9) {
        best_bic = fit.bic;
        best_p = p;
      }
    } catch (const ConvergenceError&) {
      continue;
    }
  }
  if (!std::isfinite(best_bic)) throw std::runtime_error("ar_order_select: all orders failed");
  return best_p;
}

std::vector<md::DailyObservation> simulate_path(const RealGarchParams& params,
                                                std::span<const double> z,
                                                std::span<const double> u_noise,
                                                std::size_t burnin) {
  if (!params.stationary()) {
    throw std::invalid_argument("simulate_path: nonstationary parameters");
  }
  if (z.size() != u_noise.size() || z.size() <= burnin) {
    throw std::invalid_argument("simulate_path: innovation series too short");
  }
  const std::size_t total = z.size();
  const std::size_t p = params.p();

  const double mean_log_h =
      (params.omega + params.gamma * params.xi) / (1.0 - params.persistence());

  std::vector<double> x_hist(p, 0.0);
  double log_h = mean_log_h;
  double log_rv = params.xi + params.phi * mean_log_h;

  std::vector<md::DailyObservation> out;
  out.reserve(total - burnin);
  std::int64_t serial = md::Date{2008, 1, 3}.serial();

  for (std::size_t t = 0; t < total; ++t) {
    if (t > 0) {
      log_h = params.omega + params.beta * log_h + params.gamma * log_rv;
    }
    if (!(std::fabs(log_h) < kMaxLogH)) {
      throw std::runtime_error("simulate_path: log-variance overflow");
    }
    const double h = std::exp(log_h);
    double mean = params.mu;
    for (std::size_t k = 0; k < p; ++k) mean += params.ar[k] * x_hist[k];
    const double x = mean + std::sqrt(h) * z[t];
    log_rv = params.xi + params.phi * log_h + params.leverage(z[t]) + u_noise[t];

    if (p > 0) {
      for (std::size_t k = p; k-- > 1;) x_hist[k] = x_hist[k - 1];
      x_hist[0] = x;
    }

    if (t >= burnin) {
      md::Date d = md::date_from_serial(serial);
      while (d.day_of_week() == 0 || d.day_of_week() == 6) d = md::date_from_serial(++serial);
      out.push_back(md::DailyObservation{d, x, std::max(std::exp(log_rv), md::kRvFloor)});
      ++serial;
    }
  }
  return out;
}

std::vector<md::DailyObservation> simulate(const RealGarchParams& params, std::size_t T,
                                           std::uint64_t seed, std::size_t burnin) {
  const std::size_t total = T + burnin;
  const dist::SkewTKernel kern(params.innov);
  const double sd_u = std::sqrt(params.sigma_u2);

  std::vector<double> z(total), u(total);
  Rng rz(derive_seed(seed, "margin_z"));
  Rng ru(derive_seed(seed, "margin_u"));
  for (std::size_t t = 0; t < total; ++t) {
    z[t] = kern.quantile(rz.uniform());
    u[t] = sd_u * special::norm_quantile(ru.uniform());
  }
  return simulate_path(params, z, u, burnin);
}

}  // namespace dycop::margins
