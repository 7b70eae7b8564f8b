#include "dycop/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "dycop/rng.hpp"
#include "dycop/special.hpp"

namespace dycop::sim {

using nlohmann::json;

JointSimulation simulate_joint(const JointDgp& dgp, std::size_t T, std::uint64_t seed,
                               std::size_t burnin) {
  const std::size_t total = T + burnin;

  // copula draws first; the margins consume them as innovations
  cop::SamplePair u;
  std::vector<double> delta_path;
  if (dgp.dynamics == cop::Dynamics::gas) {
    cop::GasSimulation gs =
        cop::simulate_gas(dgp.family, dgp.gas, total, derive_seed(seed, "joint_cop"));
    u = std::move(gs.u);
    delta_path = std::move(gs.delta);
  } else {
    u = cop::copula_sample(dgp.family, dgp.delta, total, derive_seed(seed, "joint_cop"),
                           dgp.aux);
    delta_path.assign(total, dgp.delta);
  }

  const dist::SkewTKernel k1(dgp.margin1.innov);
  const dist::SkewTKernel k2(dgp.margin2.innov);
  std::vector<double> z1(total), z2(total), n1(total), n2(total);
  Rng r1(derive_seed(seed, "joint_meas1"));
  Rng r2(derive_seed(seed, "joint_meas2"));
  const double sd1 = std::sqrt(dgp.margin1.sigma_u2);
  const double sd2 = std::sqrt(dgp.margin2.sigma_u2);
  for (std::size_t t = 0; t < total; ++t) {
    z1[t] = k1.quantile(u.u1[t]);
    z2[t] = k2.quantile(u.u2[t]);
    n1[t] = sd1 * special::norm_quantile(r1.uniform());
    n2[t] = sd2 * special::norm_quantile(r2.uniform());
  }

  JointSimulation out;
  out.panel.asset1 = margins::simulate_path(dgp.margin1, z1, n1, burnin);
  out.panel.asset2 = margins::simulate_path(dgp.margin2, z2, n2, burnin);
  out.panel.dates.reserve(T);
  for (const auto& obs : out.panel.asset1) out.panel.dates.push_back(obs.date);
  out.delta_path.assign(delta_path.begin() + burnin, delta_path.end());
  out.u1.assign(u.u1.begin() + burnin, u.u1.end());
  out.u2.assign(u.u2.begin() + burnin, u.u2.end());
  return out;
}

JointDgp example_dgp() {
  JointDgp dgp;
  dgp.margin1.mu = 0.0;
  dgp.margin1.ar = {};
  dgp.margin1.omega = 0.2000;
  dgp.margin1.beta = 0.5746;
  dgp.margin1.gamma = 0.4072;
  dgp.margin1.xi = -0.5376;
  dgp.margin1.phi = 0.9655;
  dgp.margin1.tau1 = -0.1691;
  dgp.margin1.tau2 = 0.0717;
  dgp.margin1.sigma_u2 = 0.16;
  dgp.margin1.innov = dist::SkewTParams{13.6919, -0.1161};

  dgp.margin2.mu = -0.0005;
  dgp.margin2.ar = {0.0842, -0.1069};
  dgp.margin2.omega = 0.1794;
  dgp.margin2.beta = 0.6600;
  dgp.margin2.gamma = 0.3399;
  dgp.margin2.xi = -0.5834;
  dgp.margin2.phi = 0.8996;
  dgp.margin2.tau1 = -0.1414;
  dgp.margin2.tau2 = 0.0943;
  dgp.margin2.sigma_u2 = 0.16;
  dgp.margin2.innov = dist::SkewTParams{7.3569, -0.0830};

  dgp.family = cop::Family::normal;
  dgp.dynamics = cop::Dynamics::gas;
  dgp.gas.w = 0.0121;
  dgp.gas.a = 0.0244;
  dgp.gas.b = 0.9911;
  return dgp;
}

namespace {

json margin_json(const margins::RealGarchParams& p) {
  return json{{"mu", p.mu},       {"ar", p.ar},
              {"omega", p.omega}, {"beta", p.beta},
              {"gamma", p.gamma}, {"xi", p.xi},
              {"phi", p.phi},     {"tau1", p.tau1},
              {"tau2", p.tau2},   {"sigma_u2", p.sigma_u2},
              {"nu", p.innov.nu}, {"lambda", p.innov.lambda}};
}

margins::RealGarchParams margin_from(const json& j) {
  margins::RealGarchParams p;
  p.mu = j.at("mu").get<double>();
  p.ar = j.value("ar", std::vector<double>{});
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

json dgp_to_json(const JointDgp& dgp) {
  json j;
  j["margin1"] = margin_json(dgp.margin1);
  j["margin2"] = margin_json(dgp.margin2);
  j["copula"]["family"] = cop::family_tag(dgp.family);
  j["copula"]["dynamics"] = cop::dynamics_tag(dgp.dynamics);
  if (dgp.dynamics == cop::Dynamics::constant) {
    j["copula"]["delta"] = dgp.delta;
    if (dgp.family == cop::Family::student_t || dgp.family == cop::Family::sjc) {
      j["copula"]["aux"] = dgp.aux;
    }
  } else {
    j["copula"]["w"] = dgp.gas.w;
    j["copula"]["a"] = dgp.gas.a;
    j["copula"]["b"] = dgp.gas.b;
    if (dgp.gas.nu_inv) j["copula"]["nu_inv"] = *dgp.gas.nu_inv;
  }
  return j;
}

JointDgp dgp_from_json(const json& j) {
  JointDgp dgp;
  dgp.margin1 = margin_from(j.at("margin1"));
  dgp.margin2 = margin_from(j.at("margin2"));
  const json& c = j.at("copula");
  dgp.family = cop::family_from_tag(c.at("family").get<std::string>());
  dgp.dynamics = cop::dynamics_from_tag(c.value("dynamics", "constant"));
  if (dgp.dynamics == cop::Dynamics::constant) {
    dgp.delta = c.at("delta").get<double>();
    dgp.aux = c.value("aux", 0.0);
  } else {
    dgp.gas.w = c.at("w").get<double>();
    dgp.gas.a = c.at("a").get<double>();
    dgp.gas.b = c.at("b").get<double>();
    if (c.contains("nu_inv")) dgp.gas.nu_inv = c.at("nu_inv").get<double>();
  }
  return dgp;
}

}  // namespace dycop::sim
