#include "dycop/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dycop/distributions.hpp"
#include "dycop/parallel.hpp"
#include "dycop/rng.hpp"

namespace dycop::est {

using nlohmann::json;

std::string margin_mode_tag(MarginMode m) {
  return m == MarginMode::parametric ? "parametric" : "semiparametric";
}

MarginMode margin_mode_from_tag(const std::string& tag) {
  if (tag == "parametric") return MarginMode::parametric;
  if (tag == "semiparametric") return MarginMode::semiparametric;
  throw std::invalid_argument("unknown margin mode: " + tag);
}

std::string ModelSpec::tag() const {
  return cop::family_tag(family) + "_" + cop::dynamics_tag(dynamics) + "_" +
         margin_mode_tag(margin_mode);
}

namespace {

// PITs for the copula stage. Parametric: skew-t CDF of the residuals (already
// in MarginFit). Semiparametric: rescaled ECDF of the standardized residuals.
std::vector<double> stage_pits(const margins::MarginFit& fit, MarginMode mode) {
  if (mode == MarginMode::parametric) return fit.u;
  const dist::EmpiricalDist ecdf{fit.z};
  std::vector<double> u(fit.z.size());
  for (std::size_t i = 0; i < fit.z.size(); ++i) u[i] = ecdf(fit.z[i]);
  return u;
}

void align_pits(const margins::MarginFit& m1, const margins::MarginFit& m2,
                const std::vector<double>& u1_full, const std::vector<double>& u2_full,
                JointModel* model) {
  const std::size_t off = std::max(m1.offset, m2.offset);
  model->offset = off;
  model->u1.assign(u1_full.begin() + (off - m1.offset), u1_full.end());
  model->u2.assign(u2_full.begin() + (off - m2.offset), u2_full.end());
  if (model->u1.size() != model->u2.size()) {
    throw std::logic_error("align_pits: length mismatch after alignment");
  }
}

CopulaStage fit_copula_stage(cop::Family family, cop::Dynamics dynamics,
                             const std::vector<double>& u1, const std::vector<double>& u2,
                             std::uint64_t seed) {
  CopulaStage stage;
  stage.family = family;
  stage.dynamics = dynamics;
  if (dynamics == cop::Dynamics::constant) {
    stage.constant = cop::constant_fit(family, u1, u2, seed);
    stage.loglik = stage.constant.loglik;
    stage.delta_path.assign(u1.size(), stage.constant.delta);
  } else {
    stage.gas = cop::gas_fit(family, u1, u2, std::nullopt, seed);
    stage.loglik = stage.gas.loglik;
    stage.delta_path = stage.gas.path.delta;
  }
  return stage;
}

}  // namespace

JointModel msml_fit(const md::ReturnPanel& panel, const ModelSpec& spec, std::uint64_t seed) {
  JointModel model;
  model.spec = spec;

  const std::size_t p1 = spec.p1 == kAutoArOrder
                             ? margins::ar_order_select(panel.asset1, spec.max_p,
                                                        derive_seed(seed, "order1"))
                             : spec.p1;
  const std::size_t p2 = spec.p2 == kAutoArOrder
                             ? margins::ar_order_select(panel.asset2, spec.max_p,
                                                        derive_seed(seed, "order2"))
                             : spec.p2;
  model.spec.p1 = p1;
  model.spec.p2 = p2;

  model.margin1 = margins::rg_fit(panel.asset1, p1, std::nullopt, derive_seed(seed, "m1"));
  model.margin2 = margins::rg_fit(panel.asset2, p2, std::nullopt, derive_seed(seed, "m2"));

  align_pits(model.margin1, model.margin2, stage_pits(model.margin1, spec.margin_mode),
             stage_pits(model.margin2, spec.margin_mode), &model);

  model.copula = fit_copula_stage(spec.family, spec.dynamics, model.u1, model.u2,
                                  derive_seed(seed, "copula"));

  model.loglik_margins = model.margin1.loglik_joint + model.margin2.loglik_joint;
  model.loglik_total = spec.margin_mode == MarginMode::semiparametric
                           ? model.copula.loglik
                           : model.loglik_margins + model.copula.loglik;
  return model;
}

JointModel assemble_model(const md::ReturnPanel& panel, const ModelSpec& spec,
                          const margins::RealGarchParams& m1,
                          const margins::RealGarchParams& m2,
                          const CopulaStage& stage_params) {
  JointModel model;
  model.spec = spec;
  model.spec.p1 = m1.p();
  model.spec.p2 = m2.p();

  auto make_fit = [](std::span<const md::DailyObservation> obs,
                     const margins::RealGarchParams& params) {
    margins::MarginFit fit;
    fit.params = params;
    const auto filt = margins::rg_filter(obs, params);
    const auto ll = margins::rg_loglik(obs, params);
    fit.loglik_joint = ll.joint;
    fit.loglik_partial = ll.partial;
    fit.h = filt.h;
    fit.z = filt.z;
    fit.offset = filt.offset;
    fit.n_params = 11 + params.p();
    const double n_eff = static_cast<double>(obs.size() - params.p());
    fit.aic = -2.0 * ll.joint + 2.0 * static_cast<double>(fit.n_params);
    fit.bic = -2.0 * ll.joint + std::log(n_eff) * static_cast<double>(fit.n_params);
    const dist::SkewTKernel kern(params.innov);
    fit.u.resize(fit.z.size());
    for (std::size_t k = 0; k < fit.z.size(); ++k) {
      fit.u[k] = std::clamp(kern.cdf(fit.z[k]), 1e-12, 1.0 - 1e-12);
    }
    fit.diag.converged = true;
    return fit;
  };

  model.margin1 = make_fit(panel.asset1, m1);
  model.margin2 = make_fit(panel.asset2, m2);

  align_pits(model.margin1, model.margin2, stage_pits(model.margin1, spec.margin_mode),
             stage_pits(model.margin2, spec.margin_mode), &model);

  model.copula = stage_params;
  if (spec.dynamics == cop::Dynamics::constant) {
    double ll = 0.0;
    for (std::size_t t = 0; t < model.u1.size(); ++t) {
      ll += cop::copula_logdensity(spec.family, model.u1[t], model.u2[t],
                                   stage_params.constant.delta, stage_params.constant.aux);
    }
    model.copula.constant.loglik = ll;
    model.copula.loglik = ll;
    model.copula.delta_path.assign(model.u1.size(), stage_params.constant.delta);
  } else {
    model.copula.gas.path = cop::gas_filter(spec.family, stage_params.gas.params, model.u1,
                                            model.u2, stage_params.gas.kappa1);
    model.copula.gas.loglik = model.copula.gas.path.loglik;
    model.copula.loglik = model.copula.gas.loglik;
    model.copula.delta_path = model.copula.gas.path.delta;
  }

  model.loglik_margins = model.margin1.loglik_joint + model.margin2.loglik_joint;
  model.loglik_total = spec.margin_mode == MarginMode::semiparametric
                           ? model.copula.loglik
                           : model.loglik_margins + model.copula.loglik;
  return model;
}

namespace {

void margin_params_into(const margins::RealGarchParams& p, const std::string& prefix,
                        std::vector<std::string>* names, std::vector<double>* values) {
  auto push = [&](const std::string& n, double v) {
    names->push_back(prefix + "." + n);
    values->push_back(v);
  };
  push("mu", p.mu);
  for (std::size_t k = 0; k < p.ar.size(); ++k) push("ar" + std::to_string(k + 1), p.ar[k]);
  push("omega", p.omega);
  push("beta", p.beta);
  push("gamma", p.gamma);
  push("xi", p.xi);
  push("phi", p.phi);
  push("tau1", p.tau1);
  push("tau2", p.tau2);
  push("sigma_u2", p.sigma_u2);
  push("nu_inv", 1.0 / p.innov.nu);
  push("lambda", p.innov.lambda);
}

void copula_params_into(const CopulaStage& c, std::vector<std::string>* names,
                        std::vector<double>* values) {
  auto push = [&](const std::string& n, double v) {
    names->push_back("cop." + n);
    values->push_back(v);
  };
  if (c.dynamics == cop::Dynamics::constant) {
    push("delta", c.constant.delta);
    if (c.family == cop::Family::student_t) push("nu_inv", 1.0 / c.constant.aux);
    if (c.family == cop::Family::sjc) push("tau_upper", c.constant.aux);
  } else {
    push("w", c.gas.params.w);
    push("a", c.gas.params.a);
    push("b", c.gas.params.b);
    if (c.gas.params.nu_inv) push("nu_inv", *c.gas.params.nu_inv);
  }
}

}  // namespace

std::vector<std::string> param_names(const JointModel& model) {
  std::vector<std::string> names;
  std::vector<double> values;
  if (model.spec.margin_mode == MarginMode::parametric) {
    margin_params_into(model.margin1.params, "m1", &names, &values);
    margin_params_into(model.margin2.params, "m2", &names, &values);
  }
  copula_params_into(model.copula, &names, &values);
  return names;
}

std::vector<double> param_vector(const JointModel& model) {
  std::vector<std::string> names;
  std::vector<double> values;
  if (model.spec.margin_mode == MarginMode::parametric) {
    margin_params_into(model.margin1.params, "m1", &names, &values);
    margin_params_into(model.margin2.params, "m2", &names, &values);
  }
  copula_params_into(model.copula, &names, &values);
  return values;
}

BootstrapResult block_bootstrap_se(const md::ReturnPanel& panel, const ModelSpec& spec,
                                   std::size_t B, std::size_t block_len, std::uint64_t seed) {
  if (B < 200) throw std::invalid_argument("block_bootstrap_se: need B >= 200");
  const std::size_t T = panel.size();
  if (block_len == 0) {
    block_len = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(T))));
  }

  const JointModel base = msml_fit(panel, spec, seed);
  // bootstrap replicates keep the AR orders and warm-start at the base fit
  ModelSpec rep_spec = base.spec;

  BootstrapResult out;
  out.names = param_names(base);
  out.estimate = param_vector(base);
  out.n_requested = B;
  out.block_length = block_len;

  const std::size_t K = out.estimate.size();
  std::vector<std::vector<double>> draws(B);
  std::vector<char> failed(B, 0);

  const double restart_prob = 1.0 / static_cast<double>(block_len);

  parallel_for(B, [&](std::size_t b) {
    Rng rng(derive_seed(seed, "bootstrap", b));
    md::ReturnPanel rep;
    rep.dates = panel.dates;
    rep.asset1.resize(T);
    rep.asset2.resize(T);
    // stationary bootstrap: geometric blocks, joint day rows
    std::size_t idx = static_cast<std::size_t>(rng.uniform() * T) % T;
    for (std::size_t t = 0; t < T; ++t) {
      rep.asset1[t] = panel.asset1[idx];
      rep.asset2[t] = panel.asset2[idx];
      rep.asset1[t].date = panel.dates[t];
      rep.asset2[t].date = panel.dates[t];
      if (rng.uniform() < restart_prob) {
        idx = static_cast<std::size_t>(rng.uniform() * T) % T;
      } else {
        idx = (idx + 1) % T;
      }
    }
    try {
      JointModel m;
      m.spec = rep_spec;
      m.margin1 = margins::rg_fit(rep.asset1, rep_spec.p1, base.margin1.params,
                                  derive_seed(seed, "boot_m1", b), /*n_starts=*/1);
      m.margin2 = margins::rg_fit(rep.asset2, rep_spec.p2, base.margin2.params,
                                  derive_seed(seed, "boot_m2", b), /*n_starts=*/1);
      std::vector<double> u1_full = stage_pits(m.margin1, rep_spec.margin_mode);
      std::vector<double> u2_full = stage_pits(m.margin2, rep_spec.margin_mode);
      align_pits(m.margin1, m.margin2, u1_full, u2_full, &m);
      if (rep_spec.dynamics == cop::Dynamics::gas) {
        m.copula.family = rep_spec.family;
        m.copula.dynamics = rep_spec.dynamics;
        m.copula.gas = cop::gas_fit(rep_spec.family, m.u1, m.u2, base.copula.gas.params,
                                    derive_seed(seed, "boot_cop", b), /*n_starts=*/1);
        m.copula.loglik = m.copula.gas.loglik;
      } else {
        m.copula = fit_copula_stage(rep_spec.family, rep_spec.dynamics, m.u1, m.u2,
                                    derive_seed(seed, "boot_cop", b));
      }
      draws[b] = param_vector(m);
      if (draws[b].size() != K) failed[b] = 1;
    } catch (const std::exception&) {
      failed[b] = 1;
    }
  });

  for (std::size_t b = 0; b < B; ++b) {
    if (!failed[b]) {
      out.draws.push_back(std::move(draws[b]));
    } else {
      ++out.n_failed;
    }
  }
  if (out.n_failed * 10 > B) {
    throw std::runtime_error("block_bootstrap_se: more than 10% of replicates failed (" +
                             std::to_string(out.n_failed) + "/" + std::to_string(B) + ")");
  }

  const std::size_t R = out.draws.size();
  out.se.assign(K, 0.0);
  out.ci_lo.assign(K, 0.0);
  out.ci_hi.assign(K, 0.0);
  std::vector<double> column(R);
  for (std::size_t k = 0; k < K; ++k) {
    double mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      column[r] = out.draws[r][k];
      mean += column[r];
    }
    mean /= static_cast<double>(R);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    out.se[k] = std::sqrt(ss / static_cast<double>(R - 1));

    std::sort(column.begin(), column.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(R - 1);
      const std::size_t i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      return i + 1 < R ? column[i] * (1.0 - frac) + column[i + 1] * frac : column[i];
    };
    out.ci_lo[k] = quantile(0.05);
    out.ci_hi[k] = quantile(0.95);
  }
  return out;
}

// ----------------------------------------------------------- serialization

namespace {

json margin_to_json(const margins::MarginFit& fit) {
  json j;
  j["mu"] = fit.params.mu;
  j["ar"] = fit.params.ar;
  j["omega"] = fit.params.omega;
  j["beta"] = fit.params.beta;
  j["gamma"] = fit.params.gamma;
  j["xi"] = fit.params.xi;
  j["phi"] = fit.params.phi;
  j["tau1"] = fit.params.tau1;
  j["tau2"] = fit.params.tau2;
  j["sigma_u2"] = fit.params.sigma_u2;
  j["nu"] = fit.params.innov.nu;
  j["lambda"] = fit.params.innov.lambda;
  j["loglik_joint"] = fit.loglik_joint;
  j["loglik_partial"] = fit.loglik_partial;
  j["aic"] = fit.aic;
  j["bic"] = fit.bic;
  j["n_params"] = fit.n_params;
  j["converged"] = fit.diag.converged;
  j["iterations"] = fit.diag.iterations;
  j["grad_inf_norm"] = fit.diag.grad_inf_norm;
  return j;
}

margins::RealGarchParams margin_params_from_json(const json& j) {
  margins::RealGarchParams p;
  p.mu = j.at("mu").get<double>();
  p.ar = j.at("ar").get<std::vector<double>>();
  p.omega = j.at("omega").get<double>();
  p.beta = j.at("beta").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.xi = j.at("xi").get<double>();
  p.phi = j.at("phi").get<double>();
  p.tau1 = j.at("tau1").get<double>();
  p.tau2 = j.at("tau2").get<double>();
  p.sigma_u2 = j.at("sigma_u2").get<double>();
  p.innov.nu = j.at("nu").get<double>();
  p.innov.lambda = j.at("lambda").get<double>();
  return p;
}

}  // namespace

json model_to_json(const JointModel& model, const std::vector<md::Date>& dates) {
  json j;
  j["spec"] = {{"family", cop::family_tag(model.spec.family)},
               {"dynamics", cop::dynamics_tag(model.spec.dynamics)},
               {"margin_mode", margin_mode_tag(model.spec.margin_mode)},
               {"p1", model.spec.p1},
               {"p2", model.spec.p2}};
  j["margin1"] = margin_to_json(model.margin1);
  j["margin2"] = margin_to_json(model.margin2);

  json c;
  c["family"] = cop::family_tag(model.copula.family);
  c["dynamics"] = cop::dynamics_tag(model.copula.dynamics);
  c["loglik"] = model.copula.loglik;
  if (model.copula.dynamics == cop::Dynamics::constant) {
    c["delta"] = model.copula.constant.delta;
    if (model.copula.family == cop::Family::student_t ||
        model.copula.family == cop::Family::sjc) {
      c["aux"] = model.copula.constant.aux;
    }
  } else {
    c["w"] = model.copula.gas.params.w;
    c["a"] = model.copula.gas.params.a;
    c["b"] = model.copula.gas.params.b;
    if (model.copula.gas.params.nu_inv) c["nu_inv"] = *model.copula.gas.params.nu_inv;
    c["kappa1"] = model.copula.gas.kappa1;
  }
  // dependence-parameter path for plotting, one value per aligned date
  json path_dates = json::array();
  for (std::size_t t = model.offset; t < dates.size(); ++t) {
    path_dates.push_back(dates[t].to_string());
  }
  c["path_dates"] = std::move(path_dates);
  c["delta_path"] = model.copula.delta_path;
  j["copula"] = std::move(c);

  j["loglik_margins"] = model.loglik_margins;
  j["loglik_total"] = model.loglik_total;
  j["offset"] = model.offset;
  return j;
}

JointModel model_from_json(const json& j, const md::ReturnPanel& panel) {
  ModelSpec spec;
  const json& s = j.at("spec");
  spec.family = cop::family_from_tag(s.at("family").get<std::string>());
  spec.dynamics = cop::dynamics_from_tag(s.at("dynamics").get<std::string>());
  spec.margin_mode = margin_mode_from_tag(s.at("margin_mode").get<std::string>());
  spec.p1 = s.at("p1").get<std::size_t>();
  spec.p2 = s.at("p2").get<std::size_t>();

  const margins::RealGarchParams m1 = margin_params_from_json(j.at("margin1"));
  const margins::RealGarchParams m2 = margin_params_from_json(j.at("margin2"));

  CopulaStage stage;
  const json& c = j.at("copula");
  stage.family = spec.family;
  stage.dynamics = spec.dynamics;
  if (spec.dynamics == cop::Dynamics::constant) {
    stage.constant.family = spec.family;
    stage.constant.delta = c.at("delta").get<double>();
    if (c.contains("aux")) stage.constant.aux = c.at("aux").get<double>();
  } else {
    stage.gas.family = spec.family;
    stage.gas.params.w = c.at("w").get<double>();
    stage.gas.params.a = c.at("a").get<double>();
    stage.gas.params.b = c.at("b").get<double>();
    if (c.contains("nu_inv")) stage.gas.params.nu_inv = c.at("nu_inv").get<double>();
    stage.gas.kappa1 = c.at("kappa1").get<double>();
  }
  return assemble_model(panel, spec, m1, m2, stage);
}

json bootstrap_to_json(const BootstrapResult& b) {
  json j;
  j["block_length"] = b.block_length;
  j["n_requested"] = b.n_requested;
  j["n_failed"] = b.n_failed;
  json params = json::array();
  for (std::size_t k = 0; k < b.names.size(); ++k) {
    params.push_back({{"name", b.names[k]},
                      {"estimate", b.estimate[k]},
                      {"se", b.se[k]},
                      {"ci90", {b.ci_lo[k], b.ci_hi[k]}}});
  }
  j["parameters"] = std::move(params);
  return j;
}

}  // namespace dycop::est
