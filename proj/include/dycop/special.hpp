#pragma once

#include <cstddef>
#include <vector>

namespace dycop::special {

double norm_pdf(double x);
double norm_cdf(double x);
// Inverse standard normal CDF, |error| < 1e-14 on (0,1).
double norm_quantile(double u);

// Regularized incomplete beta I_x(a, b).
double inc_beta(double a, double b, double x);

// Student-t with real dof > 0 (standard, not variance-scaled).
double student_t_pdf(double x, double nu);
double student_t_cdf(double x, double nu);
double student_t_quantile(double u, double nu);

struct GaussLegendre {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Nodes/weights of the n-point rule, computed once by Newton iteration.
const GaussLegendre& gauss_legendre(std::size_t n);

}  // namespace dycop::special
