#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dycop/distributions.hpp"
#include "dycop/special.hpp"
#include "support/oracles.hpp"

using dycop::dist::EmpiricalDist;
using dycop::dist::SkewTParams;
using dycop::dist::skewt_cdf;
using dycop::dist::skewt_pdf;
using dycop::dist::skewt_quantile;
using dycop::dist::skewt_sample;

TEST_CASE("normal helpers") {
  CHECK(dycop::special::norm_cdf(0.0) == doctest::Approx(0.5));
  CHECK(dycop::special::norm_quantile(0.975) == doctest::Approx(1.9599639845).epsilon(1e-9));
  for (double u : {1e-8, 1e-3, 0.2, 0.5, 0.77, 1.0 - 1e-6}) {
    const double x = dycop::special::norm_quantile(u);
    CHECK(dycop::special::norm_cdf(x) == doctest::Approx(u).epsilon(1e-11));
  }
}

TEST_CASE("student t cdf matches quadrature of the pdf") {
  for (double nu : {2.5, 7.0, 30.0}) {
    for (double x : {-2.0, -0.3, 1.5}) {
      const double quad = oracles::integrate_real_line(
          [&](double t) { return t <= x ? dycop::special::student_t_pdf(t, nu) : 0.0; },
          1e-10, 4.0);
      CHECK(dycop::special::student_t_cdf(x, nu) == doctest::Approx(quad).epsilon(1e-6));
    }
  }
}

TEST_CASE("student t quantile round trip") {
  for (double nu : {2.2, 5.0, 13.6919, 200.0}) {
    for (double u : {0.001, 0.05, 0.31, 0.5, 0.89, 0.999}) {
      const double x = dycop::special::student_t_quantile(u, nu);
      CHECK(dycop::special::student_t_cdf(x, nu) == doctest::Approx(u).epsilon(1e-10));
    }
  }
  CHECK(dycop::special::student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("skewt pdf approaches the standard normal at large nu, zero skew") {
  const SkewTParams p{1e6, 0.0};
  CHECK(skewt_pdf(0.0, p) == doctest::Approx(0.3989422804).epsilon(1e-4));
}

TEST_CASE("skewt pdf is symmetric when lambda is zero") {
  const SkewTParams p{6.3, 0.0};
  for (double z : {0.1, 0.7, 1.9, 4.2}) {
    CHECK(skewt_pdf(z, p) == doctest::Approx(skewt_pdf(-z, p)).epsilon(1e-13));
  }
}

TEST_CASE("skewt pdf integrates to one at the PX column parameters") {
  const SkewTParams p{7.3569, -0.0830};
  const double mass =
      oracles::integrate_real_line([&](double z) { return skewt_pdf(z, p); }, 1e-9);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("skewt has zero mean and unit variance by quadrature") {
  for (const SkewTParams p : {SkewTParams{2.5, -0.3}, SkewTParams{5.0, 0.0},
                              SkewTParams{10.0, 0.9}, SkewTParams{50.0, -0.9}}) {
    const double m1 =
        oracles::integrate_real_line([&](double z) { return z * skewt_pdf(z, p); }, 1e-10);
    const double m2 = oracles::integrate_real_line(
        [&](double z) { return z * z * skewt_pdf(z, p); }, 1e-10);
    CHECK(m1 == doctest::Approx(0.0).epsilon(0).scale(1).margin(2e-5));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("skewt cdf limits and center") {
  const SkewTParams p{9.0, 0.4};
  CHECK(skewt_cdf(-60.0, p) == doctest::Approx(0.0).margin(1e-10));
  CHECK(skewt_cdf(60.0, p) == doctest::Approx(1.0).epsilon(1e-10));
  const SkewTParams sym{4.4, 0.0};
  CHECK(skewt_cdf(0.0, sym) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("skewt cdf matches quadrature of the pdf") {
  const SkewTParams p{13.6919, -0.1161};
  for (double z : {-2.5, -0.4, 0.9}) {
    const double quad = oracles::integrate_real_line(
        [&](double t) { return t <= z ? skewt_pdf(t, p) : 0.0; }, 1e-10);
    CHECK(skewt_cdf(z, p) == doctest::Approx(quad).epsilon(1e-7));
  }
}

TEST_CASE("skewt cdf/quantile round trips") {
  for (const SkewTParams p : {SkewTParams{13.6919, -0.1161}, SkewTParams{7.3569, -0.0830},
                              SkewTParams{3.0, 0.6}, SkewTParams{1e8, 0.25}}) {
    for (int i = 1; i <= 99; ++i) {
      const double u = i / 100.0;
      CHECK(skewt_cdf(skewt_quantile(u, p), p) == doctest::Approx(u).margin(1e-8));
    }
    for (double z = -5.0; z <= 5.0; z += 0.5) {
      CHECK(skewt_quantile(skewt_cdf(z, p), p) == doctest::Approx(z).margin(1e-8));
    }
  }
}

TEST_CASE("skewt quantile basics") {
  const SkewTParams sym{11.0, 0.0};
  CHECK(skewt_quantile(0.5, sym) == doctest::Approx(0.0).margin(1e-12));
  // left tail fatter than the normal at the DAX column parameters
  const SkewTParams dax{13.6919, -0.1161};
  CHECK(skewt_quantile(0.01, dax) < -2.326);
  CHECK_THROWS_AS(skewt_quantile(0.0, sym), std::domain_error);
  CHECK_THROWS_AS((void)skewt_pdf(0.0, SkewTParams{1.5, 0.0}), std::domain_error);
  CHECK_THROWS_AS((void)skewt_pdf(0.0, SkewTParams{5.0, 1.2}), std::domain_error);
}

TEST_CASE("skewt sampler moments and determinism") {
  const SkewTParams p{8.0, 0.0};
  const auto s = skewt_sample(1000000, p, 42);
  CHECK(oracles::mean(s) == doctest::Approx(0.0).margin(0.01));
  CHECK(oracles::variance(s) == doctest::Approx(1.0).margin(0.02));

  const auto again = skewt_sample(1000000, p, 42);
  CHECK(s == again);

  const SkewTParams skewed{6.0, -0.4};
  const auto s2 = skewt_sample(1000000, skewed, 7);
  CHECK(oracles::variance(s2) == doctest::Approx(1.0).margin(0.02));
}

TEST_CASE("rescaled empirical distribution") {
  const EmpiricalDist d{{1.0, 2.0, 3.0}};
  CHECK(d(2.0) == doctest::Approx(0.5));
  CHECK(d(0.5) == doctest::Approx(0.0));
  CHECK(d(3.5) == doctest::Approx(3.0 / 4.0));

  // rank formula at the sample points
  const EmpiricalDist big{{0.3, -1.2, 2.2, 0.0, 5.5}};
  const auto& sorted = big.sorted_sample();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    CHECK(big(sorted[i]) ==
          doctest::Approx(static_cast<double>(i + 1) / (sorted.size() + 1.0)));
  }
  // strictly inside (0,1) for in-range z
  CHECK(big(sorted.front()) > 0.0);
  CHECK(big(sorted.back()) < 1.0);
}
