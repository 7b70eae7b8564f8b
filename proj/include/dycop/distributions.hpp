#pragma once

#include <cstdint>
#include <vector>

namespace dycop::dist {

// Degrees of freedom above this are treated as the normal limit; keeps the
// likelihood stable when the optimizer pushes 1/nu against its zero bound.
inline constexpr double kNuNormalLimit = 1e7;

// Zero-mean unit-variance skewed-t: nu > 2 tail parameter, lambda in (-1,1)
// asymmetry. lambda = 0 recovers the (standardized) Student-t, nu -> inf the
// skewed normal, both together N(0,1).
struct SkewTParams {
  double nu = 10.0;
  double lambda = 0.0;

  bool valid() const { return nu > 2.0 && lambda > -1.0 && lambda < 1.0; }
};

double skewt_pdf(double z, const SkewTParams& p);
double skewt_logpdf(double z, const SkewTParams& p);
double skewt_cdf(double z, const SkewTParams& p);
double skewt_quantile(double u, const SkewTParams& p);
std::vector<double> skewt_sample(std::size_t n, const SkewTParams& p, std::uint64_t seed);

// Precomputed shape constants; lets a likelihood loop amortize the lgamma
// calls across observations.
struct SkewTKernel {
  explicit SkewTKernel(const SkewTParams& p);
  double logpdf(double z) const;
  double cdf(double z) const;
  double quantile(double u) const;

  SkewTParams params;
  bool normal_limit;
  double a, b, logc;
};

// Rank-rescaled empirical distribution of a (sorted) sample; evaluates to
// count(sample <= z) / (T + 1) so values stay strictly inside (0,1).
class EmpiricalDist {
 public:
  explicit EmpiricalDist(std::vector<double> sample);

  double operator()(double z) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted_sample() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

}  // namespace dycop::dist
