#include "dycop/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dycop/parallel.hpp"
#include "dycop/rng.hpp"

namespace dycop::optim {

namespace {

double safe_eval(const Objective& f, const std::vector<double>& x, int* evals) {
  if (evals) ++(*evals);
  const double v = f(x);
  return std::isfinite(v) ? v : 1e50;
}

double inf_norm(const std::vector<double>& g) {
  double m = 0.0;
  for (double v : g) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

std::vector<double> num_gradient(const Objective& f, const std::vector<double>& x,
                                 double scale) {
  const std::size_t n = x.size();
  std::vector<double> g(n), xp = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = scale * std::max(1.0, std::fabs(x[i]));
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = safe_eval(f, xp, nullptr);
    xp[i] = xi - h;
    const double fm = safe_eval(f, xp, nullptr);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Result bfgs_minimize(const Objective& f, const std::vector<double>& x0, const Options& opts) {
  const std::size_t n = x0.size();
  Result res;
  res.x = x0;
  res.value = safe_eval(f, res.x, &res.evaluations);

  // inverse Hessian approximation, row-major
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

  std::vector<double> g = num_gradient(f, res.x, opts.fd_step);
  res.evaluations += static_cast<int>(2 * n);
  res.grad_inf_norm = inf_norm(g);

  int stagnation = 0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter + 1;
    if (res.grad_inf_norm < opts.grad_tolerance) {
      res.converged = true;
      break;
    }

    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += H[i * n + j] * g[j];
      d[i] = -s;
    }
    double dir_deriv = std::inner_product(d.begin(), d.end(), g.begin(), 0.0);
    if (dir_deriv >= 0.0) {  // reset to steepest descent
      std::fill(H.begin(), H.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dir_deriv = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }

    // Armijo backtracking
    double step = 1.0;
    const double c1 = 1e-4;
    std::vector<double> xn(n);
    double fn = res.value;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = res.x[i] + step * d[i];
      fn = safe_eval(f, xn, &res.evaluations);
      if (fn <= res.value + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> gn = num_gradient(f, xn, opts.fd_step);
    res.evaluations += static_cast<int>(2 * n);

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - res.x[i];
      y[i] = gn[i] - g[i];
    }
    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12) {
      // H <- (I - s y'/sy) H (I - y s'/sy) + s s'/sy
      std::vector<double> Hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += H[i * n + j] * y[j];
        Hy[i] = acc;
      }
      const double yHy = std::inner_product(y.begin(), y.end(), Hy.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          H[i * n + j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) -
                          (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
        }
      }
    }

    const double f_change = std::fabs(res.value - fn) / std::max(1.0, std::fabs(res.value));
    res.x = xn;
    res.value = fn;
    g = std::move(gn);
    res.grad_inf_norm = inf_norm(g);

    if (f_change < 1e-12) {
      if (++stagnation >= 3) {
        res.converged = true;  // objective flat to machine precision
        break;
      }
    } else {
      stagnation = 0;
    }
  }
  if (res.grad_inf_norm < opts.grad_tolerance) res.converged = true;
  return res;
}

Result nelder_mead_minimize(const Objective& f, const std::vector<double>& x0,
                            const std::vector<double>& step, int max_iterations,
                            double tolerance) {
  const std::size_t n = x0.size();
  Result res;
  std::vector<std::vector<double>> sim(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) sim[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = safe_eval(f, sim[i], &res.evaluations);

  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter + 1;
    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    if (std::fabs(fv[worst] - fv[best]) <=
        tolerance * (std::fabs(fv[best]) + std::fabs(fv[worst]) + 1e-30)) {
      res.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += sim[k][i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = centroid[i] + coef * (sim[worst][i] - centroid[i]);
      return p;
    };

    std::vector<double> xr = blend(-1.0);
    const double fr = safe_eval(f, xr, &res.evaluations);
    if (fr < fv[best]) {
      std::vector<double> xe = blend(-2.0);
      const double fe = safe_eval(f, xe, &res.evaluations);
      if (fe < fr) {
        sim[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        sim[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      sim[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      std::vector<double> xc = blend(0.5);
      const double fc = safe_eval(f, xc, &res.evaluations);
      if (fc < fv[worst]) {
        sim[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        for (std::size_t k = 0; k <= n; ++k) {
          if (k == best) continue;
          for (std::size_t i = 0; i < n; ++i)
            sim[k][i] = sim[best][i] + 0.5 * (sim[k][i] - sim[best][i]);
          fv[k] = safe_eval(f, sim[k], &res.evaluations);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  res.x = sim[best];
  res.value = fv[best];
  return res;
}

Result multistart_bfgs(const Objective& f, const std::vector<double>& x0, int n_starts,
                       double perturb_scale, std::uint64_t seed,
                       const std::function<bool(const std::vector<double>&)>& admissible,
                       const Options& opts) {
  const std::size_t n = x0.size();
  std::vector<Result> results(static_cast<std::size_t>(n_starts));

  parallel_for(static_cast<std::size_t>(n_starts), [&](std::size_t k) {
    std::vector<double> start = x0;
    if (k > 0) {
      Rng rng(derive_seed(seed, "multistart", k));
      for (std::size_t i = 0; i < n; ++i) {
        start[i] += perturb_scale * (2.0 * rng.uniform() - 1.0) * std::max(1.0, std::fabs(start[i]));
      }
    }
    results[k] = bfgs_minimize(f, start, opts);
  });

  int best = -1;
  for (int k = 0; k < n_starts; ++k) {
    const auto& r = results[static_cast<std::size_t>(k)];
    if (admissible && !admissible(r.x)) continue;
    if (best < 0 || r.value < results[static_cast<std::size_t>(best)].value) best = k;
  }
  if (best < 0) best = 0;  // nothing admissible: surface the best raw point
  return results[static_cast<std::size_t>(best)];
}

double brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                      double tolerance, int max_iterations) {
  const double golden = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  for (int iter = 0; iter < max_iterations; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol = tolerance * std::fabs(x) + 1e-12;
    if (std::fabs(x - m) <= 2.0 * tol - 0.5 * (b - a)) break;

    bool parabolic = false;
    if (std::fabs(e) > tol) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      if (std::fabs(p) < std::fabs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x)) {
        e = d;
        d = p / q;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = golden * e;
    }
    const double u = (std::fabs(d) >= tol) ? x + d : x + (d > 0 ? tol : -tol);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) {
        b = x;
      } else {
        a = x;
      }
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) {
        a = u;
      } else {
        b = u;
      }
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace dycop::optim
