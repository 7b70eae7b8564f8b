#include "dycop/risk.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "dycop/copulas.hpp"
#include "dycop/distributions.hpp"
#include "dycop/parallel.hpp"
#include "dycop/rng.hpp"
#include "dycop/special.hpp"

namespace dycop::risk {

namespace {

void check_weights(const PortfolioSpec& w) {
  if (std::fabs(w.w1 + w.w2 - 1.0) > 1e-9) {
    throw std::invalid_argument("portfolio weights must sum to 1");
  }
}

double copula_aux(const est::JointModel& model) {
  if (model.spec.family != cop::Family::student_t &&
      model.spec.family != cop::Family::sjc) {
    return 0.0;
  }
  if (model.spec.dynamics == cop::Dynamics::gas) {
    return model.copula.gas.params.nu_inv ? 1.0 / *model.copula.gas.params.nu_inv : 0.0;
  }
  return model.copula.constant.aux;
}

}  // namespace

ForecastState state_at(const est::JointModel& model, const md::ReturnPanel& panel,
                       std::size_t t) {
  const std::size_t p1 = model.margin1.params.p();
  const std::size_t p2 = model.margin2.params.p();
  if (t < model.offset || t >= panel.size()) {
    throw std::invalid_argument("state_at: index outside the filtered range");
  }

  ForecastState st;
  st.log_h1 = std::log(model.margin1.h[t - p1]);
  st.log_h2 = std::log(model.margin2.h[t - p2]);
  st.log_rv1 = std::log(panel.asset1[t].rv);
  st.log_rv2 = std::log(panel.asset2[t].rv);
  for (std::size_t k = 0; k < p1; ++k) st.lags1.push_back(panel.asset1[t - k].ret);
  for (std::size_t k = 0; k < p2; ++k) st.lags2.push_back(panel.asset2[t - k].ret);
  if (model.spec.dynamics == cop::Dynamics::gas) {
    st.kappa = model.copula.gas.path.kappa[t - model.offset];
  }
  st.u1 = model.u1[t - model.offset];
  st.u2 = model.u2[t - model.offset];
  return st;
}

ForecastDraws forecast_joint(const est::JointModel& model, const ForecastState& state,
                             std::size_t S, std::uint64_t seed, const PortfolioSpec& w) {
  check_weights(w);
  if (S < 1) throw std::invalid_argument("forecast_joint: S must be positive");

  const auto& m1 = model.margin1.params;
  const auto& m2 = model.margin2.params;

  ForecastDraws out;
  out.h1_next = std::exp(m1.omega + m1.beta * state.log_h1 + m1.gamma * state.log_rv1);
  out.h2_next = std::exp(m2.omega + m2.beta * state.log_h2 + m2.gamma * state.log_rv2);

  out.mean1_next = m1.mu;
  for (std::size_t k = 0; k < m1.p(); ++k) out.mean1_next += m1.ar[k] * state.lags1[k];
  out.mean2_next = m2.mu;
  for (std::size_t k = 0; k < m2.p(); ++k) out.mean2_next += m2.ar[k] * state.lags2[k];

  const double aux = copula_aux(model);
  if (model.spec.dynamics == cop::Dynamics::gas) {
    const auto& gp = model.copula.gas.params;
    const double delta_t = cop::transform(model.spec.family, state.kappa);
    double update = 0.0;
    if (gp.a > 0.0) {
      const double s = cop::copula_score(model.spec.family, state.u1, state.u2, delta_t, aux);
      update = gp.a * s / std::sqrt(cop::fisher_info(model.spec.family, delta_t, aux));
    }
    out.delta_next = cop::transform(model.spec.family, gp.w + gp.b * state.kappa + update);
  } else {
    out.delta_next = model.copula.constant.delta;
  }

  const dist::SkewTKernel k1(m1.innov);
  const dist::SkewTKernel k2(m2.innov);
  const double sd1 = std::sqrt(out.h1_next);
  const double sd2 = std::sqrt(out.h2_next);

  out.x1.resize(S);
  out.x2.resize(S);
  out.y.resize(S);
  const cop::Family fam = model.spec.family;
  const double delta = out.delta_next;
  parallel_for(S, [&](std::size_t s) {
    Rng rng(derive_seed(seed, "fc_draw", s));
    double u1 = 0.5, u2 = 0.5;
    cop::copula_draw(fam, delta, aux, rng, &u1, &u2);
    const double z1 = k1.quantile(u1);
    const double z2 = k2.quantile(u2);
    out.x1[s] = out.mean1_next + sd1 * z1;
    out.x2[s] = out.mean2_next + sd2 * z2;
    out.y[s] = w.w1 * out.x1[s] + w.w2 * out.x2[s];
  });
  return out;
}

double empirical_quantile(std::vector<double> values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("quantile: alpha outside (0,1)");
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = alpha * static_cast<double>(values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return i + 1 < values.size() ? values[i] * (1.0 - frac) + values[i + 1] * frac
                               : values[i];
}

double var_forecast(const ForecastDraws& draws, double alpha) {
  return empirical_quantile(draws.y, alpha);
}

double expected_shortfall(std::vector<double> values, double alpha) {
  const double q = empirical_quantile(values, alpha);
  double acc = 0.0;
  std::size_t cnt = 0;
  for (double v : values) {
    if (v <= q) {
      acc += v;
      ++cnt;
    }
  }
  if (cnt < 20) {
    std::cerr << "warning: expected shortfall estimated from only " << cnt
              << " tail draws\n";
  }
  return cnt == 0 ? q : acc / static_cast<double>(cnt);
}

double es_forecast(const ForecastDraws& draws, double alpha) {
  return expected_shortfall(draws.y, alpha);
}

CdbPoint cdb_from_draws(const ForecastDraws& draws, double alpha, const PortfolioSpec& w) {
  CdbPoint pt;
  pt.es_port = expected_shortfall(draws.y, alpha);
  const double es1 = expected_shortfall(draws.x1, alpha);
  const double es2 = expected_shortfall(draws.x2, alpha);
  pt.es_upper = w.w1 * es1 + w.w2 * es2;
  pt.es_lower = empirical_quantile(draws.y, alpha);

  const double denom = pt.es_upper - pt.es_lower;
  if (std::fabs(denom) < 1e-12) {
    pt.valid = false;
    pt.cdb = std::numeric_limits<double>::quiet_NaN();
    return pt;
  }
  double cdb = (pt.es_upper - pt.es_port) / denom;
  if (cdb < 0.0 || cdb > 1.0) {
    pt.clipped = true;
    cdb = std::clamp(cdb, 0.0, 1.0);
  }
  pt.cdb = cdb;
  return pt;
}

std::vector<CdbPoint> cdb_path(const est::JointModel& model, const md::ReturnPanel& panel,
                               std::size_t from, double alpha, std::size_t S,
                               std::uint64_t seed, const PortfolioSpec& w) {
  if (from <= model.offset) {
    throw std::invalid_argument("cdb_path: start index must lie past the filter warm-up");
  }
  const std::size_t T = panel.size();
  std::vector<CdbPoint> path(T - from);
  parallel_for(T - from, [&](std::size_t i) {
    const std::size_t t = from + i;
    const ForecastState st = state_at(model, panel, t - 1);
    const ForecastDraws draws =
        forecast_joint(model, st, S, derive_seed(seed, "cdb_date", t), w);
    path[i] = cdb_from_draws(draws, alpha, w);
    path[i].date = panel.dates[t];
  });
  return path;
}

double gaussian_cdb(double rho, double alpha, const PortfolioSpec& w) {
  check_weights(w);
  const double z = special::norm_quantile(alpha);        // negative for small alpha
  const double c = special::norm_pdf(z) / alpha;         // |ES| of a standard normal
  const double sig =
      std::sqrt(std::max(w.w1 * w.w1 + w.w2 * w.w2 + 2.0 * w.w1 * w.w2 * rho, 0.0));
  const double es_upper = -c;
  const double es_port = -sig * c;
  const double es_lower = sig * z;
  const double denom = es_upper - es_lower;
  if (std::fabs(denom) < 1e-14) return 0.0;
  return std::clamp((es_upper - es_port) / denom, 0.0, 1.0);
}

CdbBand cdb_constant_band(double unconditional_rho, std::size_t T, double alpha,
                          std::size_t n_boot, std::uint64_t seed, const PortfolioSpec& w) {
  if (!(unconditional_rho > -1.0 && unconditional_rho <= 1.0)) {
    throw std::domain_error("cdb_constant_band: correlation outside (-1,1]");
  }
  std::vector<double> reps(n_boot);
  const double rho = std::min(unconditional_rho, 1.0 - 1e-12);
  parallel_for(n_boot, [&](std::size_t b) {
    Rng rng(derive_seed(seed, "cdb_band", b));
    double sxx = 0.0, syy = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double z1 = special::norm_quantile(rng.uniform());
      const double z2 = special::norm_quantile(rng.uniform());
      const double x = z1;
      const double y = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double n = static_cast<double>(T);
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    const double rho_hat = cov / std::sqrt(std::max(vx * vy, 1e-300));
    reps[b] = gaussian_cdb(std::clamp(rho_hat, -1.0 + 1e-12, 1.0), alpha, w);
  });

  CdbBand band;
  for (double v : reps) band.mean += v;
  band.mean /= static_cast<double>(n_boot);
  std::vector<double> sorted = reps;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
                                 : sorted[i];
  };
  band.lo90 = q(0.05);
  band.hi90 = q(0.95);
  return band;
}

RollingForecast rolling_forecast(const est::JointModel& model, const md::ReturnPanel& panel,
                                 std::size_t from, std::span<const double> alphas,
                                 std::size_t S, std::uint64_t seed, const PortfolioSpec& w) {
  check_weights(w);
  if (from <= model.offset) {
    throw std::invalid_argument("rolling_forecast: start must lie past the filter warm-up");
  }
  const std::size_t T = panel.size();
  if (from >= T) throw std::invalid_argument("rolling_forecast: start beyond panel end");

  RollingForecast out;
  const std::size_t n = T - from;
  out.dates.resize(n);
  out.realized.resize(n);
  out.es05.resize(n);
  out.cdb05.resize(n);
  out.copula_logscore.resize(n);
  out.margin_logscore.resize(n);
  for (double a : alphas) out.var_by_alpha[a].resize(n);

  const dist::SkewTKernel k1(model.margin1.params.innov);
  const dist::SkewTKernel k2(model.margin2.params.innov);
  const double aux = copula_aux(model);

  parallel_for(n, [&](std::size_t i) {
    const std::size_t t = from + i;
    const ForecastState st = state_at(model, panel, t - 1);
    const ForecastDraws draws =
        forecast_joint(model, st, S, derive_seed(seed, "eval_date", t), w);

    out.dates[i] = panel.dates[t];
    out.realized[i] = w.w1 * panel.asset1[t].ret + w.w2 * panel.asset2[t].ret;
    std::vector<double> sorted = draws.y;
    std::sort(sorted.begin(), sorted.end());
    auto qs = [&](double a) {
      const double pos = a * static_cast<double>(sorted.size() - 1);
      const std::size_t j = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(j);
      return j + 1 < sorted.size() ? sorted[j] * (1.0 - frac) + sorted[j + 1] * frac
                                   : sorted[j];
    };
    for (double a : alphas) out.var_by_alpha[a][i] = qs(a);
    // tail mean from the sorted draws
    const double q05 = qs(0.05);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (double v : sorted) {
      if (v > q05) break;
      acc += v;
      ++cnt;
    }
    out.es05[i] = cnt == 0 ? q05 : acc / static_cast<double>(cnt);
    out.cdb05[i] = cdb_from_draws(draws, 0.05, w).cdb;

    // realized one-step log scores at date t under the frozen parameters
    const std::size_t off = model.offset;
    out.copula_logscore[i] =
        cop::copula_logdensity(model.spec.family, model.u1[t - off], model.u2[t - off],
                               model.copula.delta_path[t - off], aux);
    const double z1 = model.margin1.z[t - model.margin1.params.p()];
    const double z2 = model.margin2.z[t - model.margin2.params.p()];
    const double h1 = model.margin1.h[t - model.margin1.params.p()];
    const double h2 = model.margin2.h[t - model.margin2.params.p()];
    out.margin_logscore[i] = k1.logpdf(z1) - 0.5 * std::log(h1) + k2.logpdf(z2) -
                             0.5 * std::log(h2);
  });
  return out;
}

}  // namespace dycop::risk
