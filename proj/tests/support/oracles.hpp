#pragma once

// Independent numeric oracles used by the tests: adaptive quadrature, tensor
// Gauss-Legendre integration, finite differences and rank statistics. Kept
// apart from the library so the checks do not share code with what they
// verify.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "dycop/special.hpp"

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int depth = 60) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, tol, depth);
}

// integral of f over the whole real line via z = s*t/(1-t^2), t in (-1,1)
inline double integrate_real_line(const std::function<double(double)>& f, double tol = 1e-9,
                                  double scale = 8.0) {
  auto g = [&](double t) {
    const double om = 1.0 - t * t;
    const double z = scale * t / om;
    const double jac = scale * (1.0 + t * t) / (om * om);
    const double v = f(z);
    return v == 0.0 ? 0.0 : v * jac;
  };
  const double eps = 1e-12;
  return adaptive_simpson(g, -1.0 + eps, 1.0 - eps, tol);
}

// tensor Gauss-Legendre integral of f over [a,b]^2
inline double integrate_square(const std::function<double(double, double)>& f, double a,
                               double b, std::size_t n = 96) {
  const auto& gl = dycop::special::gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = mid + half * gl.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = mid + half * gl.nodes[j];
      inner += gl.weights[j] * f(x, y);
    }
    acc += gl.weights[i] * inner;
  }
  return acc * half * half;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Kendall's tau by inversion counting, O(n log n)
inline double kendall_tau(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];

  // merge sort counting inversions in ys
  std::vector<double> buf(n);
  std::function<long long(std::size_t, std::size_t)> count =
      [&](std::size_t lo, std::size_t hi) -> long long {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long inv = count(lo, mid) + count(mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
      if (ys[i] <= ys[j]) {
        buf[k++] = ys[i++];
      } else {
        inv += static_cast<long long>(mid - i);
        buf[k++] = ys[j++];
      }
    }
    while (i < mid) buf[k++] = ys[i++];
    while (j < hi) buf[k++] = ys[j++];
    std::copy(buf.begin() + lo, buf.begin() + hi, ys.begin() + lo);
    return inv;
  };
  const long long inv = count(0, n);
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - 2.0 * static_cast<double>(inv) / pairs;
}

inline double mean(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// one-sample Kolmogorov-Smirnov statistic against Uniform(0,1)
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - u[i];
    const double lo = u[i] - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

}  // namespace oracles
