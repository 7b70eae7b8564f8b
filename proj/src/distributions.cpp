#include "dycop/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dycop/rng.hpp"
#include "dycop/special.hpp"

namespace dycop::dist {

using special::norm_cdf;
using special::norm_quantile;
using special::student_t_cdf;
using special::student_t_quantile;

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void check(const SkewTParams& p) {
  if (!p.valid()) throw std::domain_error("skewt: require nu > 2 and |lambda| < 1");
}
}  // namespace

SkewTKernel::SkewTKernel(const SkewTParams& p) : params(p) {
  check(p);
  normal_limit = p.nu > kNuNormalLimit;
  if (normal_limit) {
    logc = -kLogSqrt2Pi;
  } else {
    logc = std::lgamma(0.5 * (p.nu + 1.0)) - std::lgamma(0.5 * p.nu) -
           0.5 * std::log(std::numbers::pi * (p.nu - 2.0));
  }
  const double c = std::exp(logc);
  a = normal_limit ? 4.0 * p.lambda * c
                   : 4.0 * p.lambda * c * (p.nu - 2.0) / (p.nu - 1.0);
  b = std::sqrt(1.0 + 3.0 * p.lambda * p.lambda - a * a);
}

double SkewTKernel::logpdf(double z) const {
  const double side = (z < -a / b) ? (1.0 - params.lambda) : (1.0 + params.lambda);
  const double y = (b * z + a) / side;
  if (normal_limit) return std::log(b) + logc - 0.5 * y * y;
  return std::log(b) + logc -
         0.5 * (params.nu + 1.0) * std::log1p(y * y / (params.nu - 2.0));
}

double SkewTKernel::cdf(double z) const {
  const double lam = params.lambda;
  double v;
  if (z < -a / b) {
    const double y = (b * z + a) / (1.0 - lam);
    if (normal_limit) {
      v = (1.0 - lam) * norm_cdf(y);
    } else {
      v = (1.0 - lam) * student_t_cdf(y * std::sqrt(params.nu / (params.nu - 2.0)), params.nu);
    }
  } else {
    const double y = (b * z + a) / (1.0 + lam);
    if (normal_limit) {
      v = (1.0 + lam) * norm_cdf(y) - lam;
    } else {
      v = (1.0 + lam) * student_t_cdf(y * std::sqrt(params.nu / (params.nu - 2.0)), params.nu) -
          lam;
    }
  }
  return std::clamp(v, 0.0, 1.0);
}

double SkewTKernel::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("skewt_quantile: u outside (0,1)");
  const double lam = params.lambda;
  const double split = 0.5 * (1.0 - lam);  // cdf value at the mode kink -a/b
  double z;
  if (normal_limit) {
    if (u < split) {
      z = ((1.0 - lam) * norm_quantile(u / (1.0 - lam)) - a) / b;
    } else {
      z = ((1.0 + lam) * norm_quantile((u + lam) / (1.0 + lam)) - a) / b;
    }
  } else {
    const double scale = std::sqrt((params.nu - 2.0) / params.nu);
    if (u < split) {
      z = ((1.0 - lam) * scale * student_t_quantile(u / (1.0 - lam), params.nu) - a) / b;
    } else {
      z = ((1.0 + lam) * scale * student_t_quantile((u + lam) / (1.0 + lam), params.nu) - a) / b;
    }
  }

  // Newton polish on the CDF; the closed form already lands within a few ulp,
  // this guards the kink and extreme tails. Tolerance 1e-12 on the u scale.
  for (int it = 0; it < 8; ++it) {
    const double err = cdf(z) - u;
    if (std::fabs(err) < 1e-12) break;
    const double dens = std::exp(logpdf(z));
    if (!(dens > 1e-300)) break;
    z -= err / dens;
  }
  return z;
}

double skewt_pdf(double z, const SkewTParams& p) { return std::exp(SkewTKernel(p).logpdf(z)); }

double skewt_logpdf(double z, const SkewTParams& p) { return SkewTKernel(p).logpdf(z); }

double skewt_cdf(double z, const SkewTParams& p) { return SkewTKernel(p).cdf(z); }

double skewt_quantile(double u, const SkewTParams& p) { return SkewTKernel(p).quantile(u); }

std::vector<double> skewt_sample(std::size_t n, const SkewTParams& p, std::uint64_t seed) {
  const SkewTKernel k(p);
  std::vector<double> out(n);
  Rng rng(derive_seed(seed, "skewt_sample"));
  for (std::size_t i = 0; i < n; ++i) out[i] = k.quantile(rng.uniform());
  return out;
}

EmpiricalDist::EmpiricalDist(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw std::invalid_argument("EmpiricalDist: empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDist::operator()(double z) const {
  const auto cnt = std::upper_bound(sorted_.begin(), sorted_.end(), z) - sorted_.begin();
  return static_cast<double>(cnt) / (static_cast<double>(sorted_.size()) + 1.0);
}

}  // namespace dycop::dist
