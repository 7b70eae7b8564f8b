#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dycop/rng.hpp"

namespace dycop::cop {

enum class Family { normal, student_t, clayton, rotated_gumbel, sjc };
enum class Dynamics { constant, gas };

std::string family_tag(Family f);
Family family_from_tag(const std::string& tag);
std::string dynamics_tag(Dynamics d);
Dynamics dynamics_from_tag(const std::string& tag);

// PIT inputs are clamped to this band before any quantile transform.
inline constexpr double kPitClamp = 1e-10;

// Bivariate copula density in the natural parameter delta. For student_t,
// `aux` is the (constant) degrees of freedom; for sjc, delta is the lower
// tail dependence and `aux` the upper one. Inputs are clamped to the PIT band.
double copula_logdensity(Family f, double u1, double u2, double delta, double aux = 0.0);
double copula_density(Family f, double u1, double u2, double delta, double aux = 0.0);

// Copula CDF C(u1,u2). Closed form for the Archimedean families and sjc,
// Gauss-Legendre integration of the conditional CDF for normal/student_t.
double copula_cdf(Family f, double u1, double u2, double delta, double aux = 0.0);

// Conditional CDF P(U2 <= u2 | U1 = u1); the Rosenblatt transform's second
// coordinate.
double copula_conditional(Family f, double u1, double u2, double delta, double aux = 0.0);

// d log c / d delta. Analytic for normal and student_t, central finite
// difference with step 1e-6*max(1,|delta|) otherwise.
double copula_score(Family f, double u1, double u2, double delta, double aux = 0.0);

struct SamplePair {
  std::vector<double> u1;
  std::vector<double> u2;
};

SamplePair copula_sample(Family f, double delta, std::size_t n, std::uint64_t seed,
                         double aux = 0.0);

// Single draw advancing the supplied generator; building block of
// copula_sample and of the Monte-Carlo forecast loops.
void copula_draw(Family f, double delta, double aux, Rng& rng, double* u1, double* u2);

// kappa <-> delta link functions. Normal/t use the inverse Fisher-type map
// rho = (1 - e^-k)/(1 + e^-k); rotated Gumbel delta = 1 + e^k; Clayton
// delta = e^k.
double transform(Family f, double kappa);          // kappa -> delta
double inverse_transform(Family f, double delta);  // delta -> kappa

// Expected squared score I(delta), interpolated from a per-family grid over
// the image of kappa in [-6,6]. Grids are Monte-Carlo built (50,000 common
// random draws per point, fixed seed) on first use; for student_t one grid
// is memoized per 0.01-wide bucket of 1/nu. Deltas outside the grid clamp to
// the edge and bump the clamp counter.
double fisher_info(Family f, double delta, double aux = 0.0);
std::uint64_t fisher_info_clamp_count();

struct GasParams {
  double w = 0.0;  // intercept
  double a = 0.05; // score loading, >= 0
  double b = 0.95; // persistence, |b| < 1
  std::optional<double> nu_inv;  // student_t only

  double nu() const { return nu_inv ? 1.0 / *nu_inv : 0.0; }
};

struct CopulaPath {
  std::vector<double> kappa;
  std::vector<double> delta;
  double loglik = 0.0;
};

// Score-driven recursion kappa_t = w + b kappa_{t-1} + a I^{-1/2} s_{t-1}.
// kappa1 defaults to the fixed point w/(1-b).
CopulaPath gas_filter(Family f, const GasParams& params, std::span<const double> u1,
                      std::span<const double> u2,
                      std::optional<double> kappa1 = std::nullopt);

struct FitDiag {
  bool converged = true;
  int iterations = 0;
  int evaluations = 0;
};

struct ConstantFit {
  Family family = Family::normal;
  double delta = 0.0;
  double aux = 0.0;  // nu for student_t, upper tail for sjc
  double loglik = 0.0;
  FitDiag diag;
};

ConstantFit constant_fit(Family f, std::span<const double> u1, std::span<const double> u2,
                         std::uint64_t seed = 1);

struct GasFit {
  Family family = Family::normal;
  GasParams params;
  double kappa1 = 0.0;
  CopulaPath path;
  double loglik = 0.0;
  FitDiag diag;
};

GasFit gas_fit(Family f, std::span<const double> u1, std::span<const double> u2,
               const std::optional<GasParams>& init = std::nullopt, std::uint64_t seed = 1,
               int n_starts = 3);

// Simulates T pairs from the GAS data-generating process, updating the
// parameter path with the score of each drawn pair.
struct GasSimulation {
  SamplePair u;
  std::vector<double> delta;
};

GasSimulation simulate_gas(Family f, const GasParams& params, std::size_t T,
                           std::uint64_t seed,
                           std::optional<double> kappa1 = std::nullopt);

}  // namespace dycop::cop
