#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace dycop::optim {

using Objective = std::function<double(const std::vector<double>&)>;

struct Options {
  int max_iterations = 500;
  double grad_tolerance = 1e-6;   // infinity norm on the transformed scale
  double fd_step = 1e-6;          // relative central-difference step
};

struct Result {
  std::vector<double> x;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Central finite differences, step = scale * max(1, |x_i|) per coordinate.
std::vector<double> num_gradient(const Objective& f, const std::vector<double>& x,
                                 double scale = 1e-6);

// BFGS with backtracking line search on an unconstrained parameterization.
Result bfgs_minimize(const Objective& f, const std::vector<double>& x0,
                     const Options& opts = {});

// Classic downhill simplex; used where the surface has kinks that defeat
// finite-difference gradients.
Result nelder_mead_minimize(const Objective& f, const std::vector<double>& x0,
                            const std::vector<double>& step, int max_iterations = 2000,
                            double tolerance = 1e-10);

// Runs BFGS from x0 plus (n_starts - 1) deterministically perturbed copies
// and keeps the best admissible result. `admissible` may be null. Starts run
// concurrently; the winner is chosen by value then start index, so the
// outcome does not depend on thread count.
Result multistart_bfgs(const Objective& f, const std::vector<double>& x0, int n_starts,
                       double perturb_scale, std::uint64_t seed,
                       const std::function<bool(const std::vector<double>&)>& admissible = {},
                       const Options& opts = {});

// Brent minimization of a univariate function on [lo, hi].
double brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                      double tolerance = 1e-10, int max_iterations = 200);

}  // namespace dycop::optim
