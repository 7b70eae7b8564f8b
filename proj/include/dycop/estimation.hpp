#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dycop/copulas.hpp"
#include "dycop/margins.hpp"
#include "dycop/market_data.hpp"

namespace dycop::est {

enum class MarginMode { parametric, semiparametric };

std::string margin_mode_tag(MarginMode m);
MarginMode margin_mode_from_tag(const std::string& tag);

inline constexpr std::size_t kAutoArOrder = static_cast<std::size_t>(-1);

struct ModelSpec {
  std::size_t p1 = 0;  // AR orders; kAutoArOrder selects by BIC
  std::size_t p2 = 0;
  std::size_t max_p = 5;
  cop::Family family = cop::Family::normal;
  cop::Dynamics dynamics = cop::Dynamics::constant;
  MarginMode margin_mode = MarginMode::parametric;

  std::string tag() const;  // e.g. "normal_gas_parametric"
};

// Stage-2 result; exactly one of the two fit members is meaningful.
struct CopulaStage {
  cop::Family family = cop::Family::normal;
  cop::Dynamics dynamics = cop::Dynamics::constant;
  cop::ConstantFit constant;
  cop::GasFit gas;
  double loglik = 0.0;
  std::vector<double> delta_path;  // per aligned date, constant path included
};

struct JointModel {
  ModelSpec spec;
  margins::MarginFit margin1;
  margins::MarginFit margin2;
  std::vector<double> u1, u2;  // aligned PITs fed to the copula stage
  std::size_t offset = 0;      // panel index of the first aligned PIT
  CopulaStage copula;
  double loglik_margins = 0.0;  // joint (returns + measurement) margin log-lik
  double loglik_total = 0.0;    // margins + copula (copula only when semiparametric)
};

// Two-step estimation: margins by maximum likelihood, then the copula on the
// resulting PITs (parametric CDF transform or rescaled empirical CDF of the
// standardized residuals).
JointModel msml_fit(const md::ReturnPanel& panel, const ModelSpec& spec,
                    std::uint64_t seed = 1);

// Re-assembles a model from known parameters by re-running the filters; no
// optimization. Used when loading a serialized fit.
JointModel assemble_model(const md::ReturnPanel& panel, const ModelSpec& spec,
                          const margins::RealGarchParams& m1,
                          const margins::RealGarchParams& m2, const CopulaStage& stage_params);

struct BootstrapResult {
  std::vector<std::string> names;
  std::vector<double> estimate;             // point estimates on original data
  std::vector<std::vector<double>> draws;   // replicate parameter vectors
  std::vector<double> se;
  std::vector<double> ci_lo;                // 5% quantile
  std::vector<double> ci_hi;                // 95% quantile
  std::size_t n_requested = 0;
  std::size_t n_failed = 0;
  std::size_t block_length = 0;
};

// Stationary block bootstrap over day rows (both assets resampled jointly),
// refitting the full model per replicate. block_len = 0 uses ceil(T^(1/3)).
BootstrapResult block_bootstrap_se(const md::ReturnPanel& panel, const ModelSpec& spec,
                                   std::size_t B, std::size_t block_len = 0,
                                   std::uint64_t seed = 1);

// Parameter vector of a fitted model, with names; backbone of the bootstrap
// and of the parameter report.
std::vector<std::string> param_names(const JointModel& model);
std::vector<double> param_vector(const JointModel& model);

nlohmann::json model_to_json(const JointModel& model, const std::vector<md::Date>& dates);
JointModel model_from_json(const nlohmann::json& j, const md::ReturnPanel& panel);

nlohmann::json bootstrap_to_json(const BootstrapResult& b);

}  // namespace dycop::est
