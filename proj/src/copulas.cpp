#include "dycop/copulas.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "dycop/optim.hpp"
#include "dycop/parallel.hpp"
#include "dycop/rng.hpp"
#include "dycop/special.hpp"

namespace dycop::cop {

using special::norm_cdf;
using special::norm_quantile;
using special::student_t_cdf;
using special::student_t_quantile;

namespace {

constexpr std::uint64_t kInfoSeed = 0x1f05e9a3c0ffee11ULL;
constexpr std::size_t kInfoDraws = 50000;
constexpr std::size_t kInfoGridSize = 201;
constexpr double kKappaMax = 50.0;

double clamp_pit(double u) { return std::clamp(u, kPitClamp, 1.0 - kPitClamp); }

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------- normal

double logdens_normal(double x, double y, double rho) {
  const double r2 = rho * rho;
  const double om = 1.0 - r2;
  return -0.5 * std::log(om) + rho * (2.0 * x * y - rho * (x * x + y * y)) / (2.0 * om);
}

double score_normal(double x, double y, double rho) {
  const double om = 1.0 - rho * rho;
  return rho / om + (x * y * (1.0 + rho * rho) - rho * (x * x + y * y)) / (om * om);
}

// ---------------------------------------------------------------- student t

struct TConsts {
  double nu;
  double lognorm;  // parameter-only part of log c
  explicit TConsts(double nu_)
      : nu(nu_),
        lognorm(std::lgamma(0.5 * (nu_ + 2.0)) + std::lgamma(0.5 * nu_) -
                2.0 * std::lgamma(0.5 * (nu_ + 1.0))) {}
};

double logdens_t(double x, double y, double rho, const TConsts& tc) {
  const double nu = tc.nu;
  const double om = 1.0 - rho * rho;
  const double q = (x * x - 2.0 * rho * x * y + y * y) / (nu * om);
  return tc.lognorm - 0.5 * std::log(om) - 0.5 * (nu + 2.0) * std::log1p(q) +
         0.5 * (nu + 1.0) * (std::log1p(x * x / nu) + std::log1p(y * y / nu));
}

double score_t(double x, double y, double rho, double nu) {
  const double om = 1.0 - rho * rho;
  const double m = 1.0 + (x * x - 2.0 * rho * x * y + y * y) / (nu * om);
  const double dm = (2.0 * rho * (x * x + y * y) - 2.0 * x * y * (1.0 + rho * rho)) /
                    (nu * om * om);
  return rho / om - 0.5 * (nu + 2.0) * dm / m;
}

// ------------------------------------------------------- (rotated) Gumbel
// Evaluated in the rotated coordinates: xt = -log(1-u), la = log(xt).

double logdens_rgumbel(double xt1, double la1, double xt2, double la2, double delta) {
  if (delta == 1.0) return 0.0;
  const double e1 = delta * la1, e2 = delta * la2;
  const double lw = e1 > e2 ? e1 + std::log1p(std::exp(e2 - e1))
                            : e2 + std::log1p(std::exp(e1 - e2));
  const double logW = lw / delta;
  const double W = std::exp(logW);
  return -W + (delta - 1.0) * (la1 + la2) + xt1 + xt2 + (2.0 / delta - 2.0) * lw +
         std::log1p((delta - 1.0) / W);
}

double logdens_rgumbel_u(double u1, double u2, double delta) {
  const double xt1 = -std::log1p(-u1), xt2 = -std::log1p(-u2);
  return logdens_rgumbel(xt1, std::log(xt1), xt2, std::log(xt2), delta);
}

// Gumbel CDF in its own coordinates
double cdf_gumbel(double u, double v, double delta) {
  const double xt = -std::log(u), yt = -std::log(v);
  const double w = std::pow(xt, delta) + std::pow(yt, delta);
  return std::exp(-std::pow(w, 1.0 / delta));
}

// dC_G/du
double cond_gumbel(double u, double v, double delta) {
  const double xt = -std::log(u), yt = -std::log(v);
  const double e1 = delta * std::log(xt), e2 = delta * std::log(yt);
  const double lw = e1 > e2 ? e1 + std::log1p(std::exp(e2 - e1))
                            : e2 + std::log1p(std::exp(e1 - e2));
  const double W = std::exp(lw / delta);
  // C * w^(1/delta - 1) * xt^(delta-1) / u
  const double lg = -W + (1.0 / delta - 1.0) * lw + (delta - 1.0) * std::log(xt) + xt;
  return std::exp(lg);
}

// ---------------------------------------------------------------- Clayton

double logdens_clayton(double u, double v, double delta) {
  if (delta < 1e-8) return 0.0;
  const double lu = std::log(u), lv = std::log(v);
  const double s = std::exp(-delta * lu) + std::exp(-delta * lv) - 1.0;
  return std::log1p(delta) - (delta + 1.0) * (lu + lv) - (2.0 + 1.0 / delta) * std::log(s);
}

double cdf_clayton(double u, double v, double delta) {
  if (delta < 1e-8) return u * v;
  const double s = std::pow(u, -delta) + std::pow(v, -delta) - 1.0;
  return s <= 0.0 ? 0.0 : std::pow(s, -1.0 / delta);
}

double cond_clayton(double u, double v, double delta) {
  if (delta < 1e-8) return v;
  const double s = std::pow(u, -delta) + std::pow(v, -delta) - 1.0;
  if (s <= 0.0) return 0.0;
  return std::pow(u, -delta - 1.0) * std::pow(s, -1.0 / delta - 1.0);
}

// ------------------------------------------------- symmetrized Joe-Clayton

struct JcParams {
  double kap, gam;
};

JcParams jc_from_taus(double tau_upper, double tau_lower) {
  const double tu = std::clamp(tau_upper, 1e-6, 1.0 - 1e-6);
  const double tl = std::clamp(tau_lower, 1e-6, 1.0 - 1e-6);
  return JcParams{1.0 / std::log2(2.0 - tu), -1.0 / std::log2(tl)};
}

double jc_cdf(double u, double v, const JcParams& p) {
  const double au = 1.0 - std::pow(1.0 - u, p.kap);
  const double av = 1.0 - std::pow(1.0 - v, p.kap);
  const double s = std::pow(au, -p.gam) + std::pow(av, -p.gam) - 1.0;
  const double b = std::pow(s, -1.0 / p.gam);
  return 1.0 - std::pow(1.0 - b, 1.0 / p.kap);
}

// density and dC/du of the Joe-Clayton copula
void jc_dens_cond(double u, double v, const JcParams& p, double* dens, double* cond) {
  const double kap = p.kap, gam = p.gam;
  const double au = std::clamp(1.0 - std::pow(1.0 - u, kap), 1e-300, 1.0);
  const double av = std::clamp(1.0 - std::pow(1.0 - v, kap), 1e-300, 1.0);
  const double dau = kap * std::pow(1.0 - u, kap - 1.0);
  const double dav = kap * std::pow(1.0 - v, kap - 1.0);
  const double s = std::pow(au, -gam) + std::pow(av, -gam) - 1.0;
  const double b = std::pow(s, -1.0 / gam);
  const double bu = std::pow(s, -1.0 / gam - 1.0) * std::pow(au, -gam - 1.0) * dau;
  const double bv = std::pow(s, -1.0 / gam - 1.0) * std::pow(av, -gam - 1.0) * dav;
  const double buv = (1.0 + gam) * std::pow(s, -1.0 / gam - 2.0) *
                     std::pow(au, -gam - 1.0) * dau * std::pow(av, -gam - 1.0) * dav;
  const double omb = std::max(1.0 - b, 1e-300);
  if (cond) *cond = (1.0 / kap) * std::pow(omb, 1.0 / kap - 1.0) * bu;
  if (dens) {
    *dens = (1.0 / kap) * ((1.0 - 1.0 / kap) * std::pow(omb, 1.0 / kap - 2.0) * bu * bv +
                           std::pow(omb, 1.0 / kap - 1.0) * buv);
  }
}

double logdens_sjc(double u, double v, double tau_lower, double tau_upper) {
  const JcParams p1 = jc_from_taus(tau_upper, tau_lower);
  const JcParams p2 = jc_from_taus(tau_lower, tau_upper);
  double d1 = 0.0, d2 = 0.0;
  jc_dens_cond(u, v, p1, &d1, nullptr);
  jc_dens_cond(1.0 - u, 1.0 - v, p2, &d2, nullptr);
  const double dens = 0.5 * (d1 + d2);
  return std::log(std::max(dens, 1e-300));
}

double cdf_sjc(double u, double v, double tau_lower, double tau_upper) {
  const JcParams p1 = jc_from_taus(tau_upper, tau_lower);
  const JcParams p2 = jc_from_taus(tau_lower, tau_upper);
  return 0.5 * (jc_cdf(u, v, p1) + u + v - 1.0 + jc_cdf(1.0 - u, 1.0 - v, p2));
}

double cond_sjc(double u, double v, double tau_lower, double tau_upper) {
  const JcParams p1 = jc_from_taus(tau_upper, tau_lower);
  const JcParams p2 = jc_from_taus(tau_lower, tau_upper);
  double c1 = 0.0, c2 = 0.0;
  jc_dens_cond(u, v, p1, nullptr, &c1);
  jc_dens_cond(1.0 - u, 1.0 - v, p2, nullptr, &c2);
  return 0.5 * (c1 + 1.0 - c2);
}

// ------------------------------------------------------------- validation

void check_delta(Family f, double delta, double aux) {
  switch (f) {
    case Family::normal:
      if (!(delta > -1.0 && delta < 1.0)) throw std::domain_error("normal copula: |rho| < 1");
      return;
    case Family::student_t:
      if (!(delta > -1.0 && delta < 1.0)) throw std::domain_error("t copula: |rho| < 1");
      if (!(aux > 2.0)) throw std::domain_error("t copula: nu > 2");
      return;
    case Family::clayton:
      if (!(delta > 0.0)) throw std::domain_error("clayton copula: delta > 0");
      return;
    case Family::rotated_gumbel:
      if (!(delta >= 1.0)) throw std::domain_error("rotated gumbel copula: delta >= 1");
      return;
    case Family::sjc:
      if (!(delta > 0.0 && delta < 1.0 && aux > 0.0 && aux < 1.0)) {
        throw std::domain_error("sjc copula: tail dependences in (0,1)");
      }
      return;
  }
  throw std::domain_error("unknown copula family");
}

// ------------------------------------------------------------- samplers

double gamma_draw(Rng& rng, double a) {
  if (a < 1.0) {
    const double u = rng.uniform();
    return gamma_draw(rng, a + 1.0) * std::pow(u, 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = norm_quantile(rng.uniform());
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

// positive stable St(alpha) frailty with Laplace transform exp(-t^alpha)
double stable_draw(Rng& rng, double alpha) {
  const double theta = rng.uniform() * std::numbers::pi;
  const double w = -std::log(rng.uniform());
  const double s1 = std::sin(alpha * theta);
  const double s2 = std::sin((1.0 - alpha) * theta);
  const double s = std::sin(theta);
  return (s1 / std::pow(s, 1.0 / alpha)) * std::pow(s2 / w, (1.0 - alpha) / alpha);
}

void draw_pair(Family f, double delta, double aux, Rng& rng, double* u1, double* u2) {
  switch (f) {
    case Family::normal: {
      const double z1 = norm_quantile(rng.uniform());
      const double z2 = norm_quantile(rng.uniform());
      *u1 = norm_cdf(z1);
      *u2 = norm_cdf(delta * z1 + std::sqrt(1.0 - delta * delta) * z2);
      return;
    }
    case Family::student_t: {
      const double z1 = norm_quantile(rng.uniform());
      const double z2 = norm_quantile(rng.uniform());
      const double q = 2.0 * gamma_draw(rng, 0.5 * aux);  // chi^2_nu
      const double scale = std::sqrt(aux / q);
      const double x = z1 * scale;
      const double y = (delta * z1 + std::sqrt(1.0 - delta * delta) * z2) * scale;
      *u1 = student_t_cdf(x, aux);
      *u2 = student_t_cdf(y, aux);
      return;
    }
    case Family::clayton: {
      if (delta < 1e-8) {
        *u1 = rng.uniform();
        *u2 = rng.uniform();
        return;
      }
      const double v = gamma_draw(rng, 1.0 / delta);
      const double e1 = -std::log(rng.uniform());
      const double e2 = -std::log(rng.uniform());
      *u1 = std::pow(1.0 + e1 / v, -1.0 / delta);
      *u2 = std::pow(1.0 + e2 / v, -1.0 / delta);
      return;
    }
    case Family::rotated_gumbel: {
      if (delta <= 1.0 + 1e-12) {
        *u1 = rng.uniform();
        *u2 = rng.uniform();
        return;
      }
      const double alpha = 1.0 / delta;
      const double v = stable_draw(rng, alpha);
      const double e1 = -std::log(rng.uniform());
      const double e2 = -std::log(rng.uniform());
      const double g1 = std::exp(-std::pow(e1 / v, alpha));
      const double g2 = std::exp(-std::pow(e2 / v, alpha));
      *u1 = 1.0 - g1;
      *u2 = 1.0 - g2;
      return;
    }
    case Family::sjc: {
      *u1 = rng.uniform();
      const double target = rng.uniform();
      double lo = kPitClamp, hi = 1.0 - kPitClamp;
      for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cond_sjc(clamp_pit(*u1), mid, delta, aux) < target) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      *u2 = 0.5 * (lo + hi);
      return;
    }
  }
  throw std::domain_error("unknown copula family");
}

}  // namespace

std::string family_tag(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::student_t: return "student_t";
    case Family::clayton: return "clayton";
    case Family::rotated_gumbel: return "rotated_gumbel";
    case Family::sjc: return "sjc";
  }
  return "?";
}

Family family_from_tag(const std::string& tag) {
  if (tag == "normal") return Family::normal;
  if (tag == "student_t" || tag == "t") return Family::student_t;
  if (tag == "clayton") return Family::clayton;
  if (tag == "rotated_gumbel" || tag == "rgumbel") return Family::rotated_gumbel;
  if (tag == "sjc") return Family::sjc;
  throw std::invalid_argument("unknown copula family: " + tag);
}

std::string dynamics_tag(Dynamics d) { return d == Dynamics::constant ? "constant" : "gas"; }

Dynamics dynamics_from_tag(const std::string& tag) {
  if (tag == "constant") return Dynamics::constant;
  if (tag == "gas") return Dynamics::gas;
  throw std::invalid_argument("unknown dynamics: " + tag);
}

double copula_logdensity(Family f, double u1, double u2, double delta, double aux) {
  check_delta(f, delta, aux);
  u1 = clamp_pit(u1);
  u2 = clamp_pit(u2);
  switch (f) {
    case Family::normal:
      return logdens_normal(norm_quantile(u1), norm_quantile(u2), delta);
    case Family::student_t: {
      const TConsts tc(aux);
      return logdens_t(student_t_quantile(u1, aux), student_t_quantile(u2, aux), delta, tc);
    }
    case Family::clayton:
      return logdens_clayton(u1, u2, delta);
    case Family::rotated_gumbel:
      return logdens_rgumbel_u(u1, u2, delta);
    case Family::sjc:
      return logdens_sjc(u1, u2, delta, aux);
  }
  throw std::domain_error("unknown copula family");
}

double copula_density(Family f, double u1, double u2, double delta, double aux) {
  return std::exp(copula_logdensity(f, u1, u2, delta, aux));
}

double copula_cdf(Family f, double u1, double u2, double delta, double aux) {
  check_delta(f, delta, aux);
  u1 = clamp_pit(u1);
  u2 = clamp_pit(u2);
  switch (f) {
    case Family::clayton:
      return cdf_clayton(u1, u2, delta);
    case Family::rotated_gumbel:
      return delta <= 1.0 + 1e-12 ? u1 * u2
                                  : u1 + u2 - 1.0 + cdf_gumbel(1.0 - u1, 1.0 - u2, delta);
    case Family::sjc:
      return cdf_sjc(u1, u2, delta, aux);
    case Family::normal:
    case Family::student_t: {
      // integrate the conditional CDF over (0, u1)
      const auto& gl = special::gauss_legendre(64);
      const double y = f == Family::normal ? norm_quantile(u2)
                                           : student_t_quantile(u2, aux);
      const double om = std::sqrt(1.0 - delta * delta);
      double acc = 0.0;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double s = 0.5 * u1 * (gl.nodes[k] + 1.0);
        double cond;
        if (f == Family::normal) {
          cond = norm_cdf((y - delta * norm_quantile(clamp_pit(s))) / om);
        } else {
          const double x = student_t_quantile(clamp_pit(s), aux);
          cond = student_t_cdf((y - delta * x) * std::sqrt((aux + 1.0) / (aux + x * x)) / om,
                               aux + 1.0);
        }
        acc += gl.weights[k] * cond;
      }
      return 0.5 * u1 * acc;
    }
  }
  throw std::domain_error("unknown copula family");
}

double copula_conditional(Family f, double u1, double u2, double delta, double aux) {
  check_delta(f, delta, aux);
  u1 = clamp_pit(u1);
  u2 = clamp_pit(u2);
  switch (f) {
    case Family::normal: {
      const double x = norm_quantile(u1), y = norm_quantile(u2);
      return norm_cdf((y - delta * x) / std::sqrt(1.0 - delta * delta));
    }
    case Family::student_t: {
      const double x = student_t_quantile(u1, aux), y = student_t_quantile(u2, aux);
      const double scale = std::sqrt((aux + 1.0) / (aux + x * x));
      return student_t_cdf((y - delta * x) * scale / std::sqrt(1.0 - delta * delta),
                           aux + 1.0);
    }
    case Family::clayton:
      return cond_clayton(u1, u2, delta);
    case Family::rotated_gumbel:
      return delta <= 1.0 + 1e-12 ? u2 : 1.0 - cond_gumbel(1.0 - u1, 1.0 - u2, delta);
    case Family::sjc:
      return cond_sjc(u1, u2, delta, aux);
  }
  throw std::domain_error("unknown copula family");
}

double copula_score(Family f, double u1, double u2, double delta, double aux) {
  check_delta(f, delta, aux);
  u1 = clamp_pit(u1);
  u2 = clamp_pit(u2);
  switch (f) {
    case Family::normal:
      return score_normal(norm_quantile(u1), norm_quantile(u2), delta);
    case Family::student_t:
      return score_t(student_t_quantile(u1, aux), student_t_quantile(u2, aux), delta, aux);
    default: {
      double h = 1e-6 * std::max(1.0, std::fabs(delta));
      if (f == Family::rotated_gumbel) h = std::min(h, 0.5 * std::max(delta - 1.0, 1e-9));
      if (f == Family::clayton) h = std::min(h, 0.5 * delta);
      const double up = copula_logdensity(f, u1, u2, delta + h, aux);
      const double dn = copula_logdensity(f, u1, u2, delta - h, aux);
      return (up - dn) / (2.0 * h);
    }
  }
}

SamplePair copula_sample(Family f, double delta, std::size_t n, std::uint64_t seed,
                         double aux) {
  check_delta(f, delta, aux);
  SamplePair out;
  out.u1.resize(n);
  out.u2.resize(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, "copula_sample", i));
    draw_pair(f, delta, aux, rng, &out.u1[i], &out.u2[i]);
  });
  return out;
}

void copula_draw(Family f, double delta, double aux, Rng& rng, double* u1, double* u2) {
  check_delta(f, delta, aux);
  draw_pair(f, delta, aux, rng, u1, u2);
}

double transform(Family f, double kappa) {
  switch (f) {
    case Family::normal:
    case Family::student_t:
      return std::tanh(0.5 * kappa);  // (1 - e^-k) / (1 + e^-k)
    case Family::rotated_gumbel:
      return 1.0 + std::exp(kappa);
    case Family::clayton:
      return std::exp(kappa);
    case Family::sjc:
      break;
  }
  throw std::domain_error("transform: no scalar link for this family");
}

double inverse_transform(Family f, double delta) {
  switch (f) {
    case Family::normal:
    case Family::student_t:
      return 2.0 * std::atanh(std::clamp(delta, -1.0 + 1e-12, 1.0 - 1e-12));
    case Family::rotated_gumbel:
      return std::log(std::max(delta - 1.0, 1e-300));
    case Family::clayton:
      return std::log(std::max(delta, 1e-300));
    case Family::sjc:
      break;
  }
  throw std::domain_error("inverse_transform: no scalar link for this family");
}

// --------------------------------------------------------- Fisher info grid

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};

struct InfoGrid {
  double kappa_lo = -6.0, kappa_hi = 6.0;
  std::vector<double> info;  // indexed by uniform kappa grid

  double eval(Family f, double delta) const {
    double kappa = inverse_transform(f, delta);
    if (kappa < kappa_lo || kappa > kappa_hi) {
      g_clamp_count.fetch_add(1, std::memory_order_relaxed);
      kappa = std::clamp(kappa, kappa_lo, kappa_hi);
    }
    const double step = (kappa_hi - kappa_lo) / static_cast<double>(info.size() - 1);
    const double pos = (kappa - kappa_lo) / step;
    const std::size_t i0 =
        std::min(static_cast<std::size_t>(pos), info.size() - 2);
    const double frac = pos - static_cast<double>(i0);
    return info[i0] * (1.0 - frac) + info[i0 + 1] * frac;
  }
};

InfoGrid build_info_grid(Family f, double nu) {
  InfoGrid grid;
  grid.info.resize(kInfoGridSize);

  // common random numbers across grid points keep the curve smooth in delta
  std::vector<double> z1(kInfoDraws), z2(kInfoDraws), q(kInfoDraws);
  std::vector<double> th(kInfoDraws), w(kInfoDraws), e1(kInfoDraws), e2(kInfoDraws);
  Rng rng(derive_seed(kInfoSeed, family_tag(f)));
  for (std::size_t i = 0; i < kInfoDraws; ++i) {
    switch (f) {
      case Family::normal:
        z1[i] = norm_quantile(rng.uniform());
        z2[i] = norm_quantile(rng.uniform());
        break;
      case Family::student_t:
        z1[i] = norm_quantile(rng.uniform());
        z2[i] = norm_quantile(rng.uniform());
        q[i] = 2.0 * gamma_draw(rng, 0.5 * nu);
        break;
      case Family::rotated_gumbel:
        th[i] = rng.uniform();
        w[i] = rng.uniform();
        e1[i] = -std::log(rng.uniform());
        e2[i] = -std::log(rng.uniform());
        break;
      case Family::clayton:
      case Family::sjc:
        throw std::domain_error("fisher_info: GAS dynamics not available for this family");
    }
  }

  const double step = (grid.kappa_hi - grid.kappa_lo) / static_cast<double>(kInfoGridSize - 1);
  std::vector<double> kappas(kInfoGridSize);
  for (std::size_t g = 0; g < kInfoGridSize; ++g) kappas[g] = grid.kappa_lo + step * g;

  parallel_for(kInfoGridSize, [&](std::size_t g) {
    const double delta = transform(f, kappas[g]);
    double acc = 0.0;
    for (std::size_t i = 0; i < kInfoDraws; ++i) {
      double s = 0.0;
      switch (f) {
        case Family::normal: {
          const double x = z1[i];
          const double y = delta * z1[i] + std::sqrt(1.0 - delta * delta) * z2[i];
          s = score_normal(x, y, delta);
          break;
        }
        case Family::student_t: {
          const double scale = std::sqrt(nu / q[i]);
          const double x = z1[i] * scale;
          const double y = (delta * z1[i] + std::sqrt(1.0 - delta * delta) * z2[i]) * scale;
          s = score_t(x, y, delta, nu);
          break;
        }
        case Family::rotated_gumbel: {
          const double alpha = 1.0 / delta;
          const double s1 = std::sin(alpha * th[i] * std::numbers::pi);
          const double s2 = std::sin((1.0 - alpha) * th[i] * std::numbers::pi);
          const double sn = std::sin(th[i] * std::numbers::pi);
          const double wexp = -std::log(w[i]);
          const double v = (s1 / std::pow(sn, 1.0 / alpha)) *
                           std::pow(s2 / wexp, (1.0 - alpha) / alpha);
          // rotated-gumbel coordinates: xt = -log(1-u) = (E/V)^alpha
          const double xt1 = std::pow(e1[i] / v, alpha);
          const double xt2 = std::pow(e2[i] / v, alpha);
          const double h = std::min(1e-6 * std::max(1.0, delta),
                                    0.5 * std::max(delta - 1.0, 1e-9));
          const double la1 = std::log(std::max(xt1, 1e-300));
          const double la2 = std::log(std::max(xt2, 1e-300));
          s = (logdens_rgumbel(xt1, la1, xt2, la2, delta + h) -
               logdens_rgumbel(xt1, la1, xt2, la2, delta - h)) /
              (2.0 * h);
          break;
        }
        default:
          break;
      }
      acc += s * s;
    }
    grid.info[g] = std::max(acc / static_cast<double>(kInfoDraws), 1e-12);
  });
  return grid;
}

const InfoGrid& info_grid_for(Family f, double nu) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, InfoGrid> cache;
  int bucket = 0;
  double grid_nu = 0.0;
  if (f == Family::student_t) {
    if (!(nu > 2.0)) throw std::domain_error("fisher_info: t copula needs nu > 2");
    bucket = static_cast<int>(std::lround(std::clamp(1.0 / nu, 1e-4, 0.499) * 100.0));
    grid_nu = bucket == 0 ? 1000.0 : 100.0 / bucket;
  }
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(static_cast<int>(f), bucket);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, build_info_grid(f, grid_nu)).first;
  }
  return it->second;
}

}  // namespace

double fisher_info(Family f, double delta, double aux) {
  check_delta(f, delta, aux);
  return info_grid_for(f, aux).eval(f, delta);
}

std::uint64_t fisher_info_clamp_count() {
  return g_clamp_count.load(std::memory_order_relaxed);
}

// ------------------------------------------------------------- GAS filter

namespace {

// family-specific per-observation cache so the filter does not redo
// quantile transforms at every step
struct Prepared {
  Family family;
  double nu = 0.0;
  std::vector<double> a1, a2, b1, b2;

  Prepared(Family f, std::span<const double> u1, std::span<const double> u2, double nu_)
      : family(f), nu(nu_) {
    const std::size_t T = u1.size();
    a1.resize(T);
    a2.resize(T);
    switch (f) {
      case Family::normal:
        for (std::size_t t = 0; t < T; ++t) {
          a1[t] = norm_quantile(clamp_pit(u1[t]));
          a2[t] = norm_quantile(clamp_pit(u2[t]));
        }
        break;
      case Family::student_t:
        for (std::size_t t = 0; t < T; ++t) {
          a1[t] = student_t_quantile(clamp_pit(u1[t]), nu);
          a2[t] = student_t_quantile(clamp_pit(u2[t]), nu);
        }
        break;
      case Family::rotated_gumbel:
        b1.resize(T);
        b2.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
          a1[t] = -std::log1p(-clamp_pit(u1[t]));
          a2[t] = -std::log1p(-clamp_pit(u2[t]));
          b1[t] = std::log(a1[t]);
          b2[t] = std::log(a2[t]);
        }
        break;
      case Family::clayton:
      case Family::sjc:
        for (std::size_t t = 0; t < T; ++t) {
          a1[t] = clamp_pit(u1[t]);
          a2[t] = clamp_pit(u2[t]);
        }
        break;
    }
  }

  double logdens(std::size_t t, double delta, double aux, const TConsts* tc) const {
    switch (family) {
      case Family::normal:
        return logdens_normal(a1[t], a2[t], delta);
      case Family::student_t:
        return logdens_t(a1[t], a2[t], delta, *tc);
      case Family::rotated_gumbel:
        return logdens_rgumbel(a1[t], b1[t], a2[t], b2[t], delta);
      case Family::clayton:
        return logdens_clayton(a1[t], a2[t], delta);
      case Family::sjc:
        return logdens_sjc(a1[t], a2[t], delta, aux);
    }
    return 0.0;
  }

  double score(std::size_t t, double delta) const {
    switch (family) {
      case Family::normal:
        return score_normal(a1[t], a2[t], delta);
      case Family::student_t:
        return score_t(a1[t], a2[t], delta, nu);
      case Family::rotated_gumbel: {
        const double h = std::min(1e-6 * std::max(1.0, delta),
                                  0.5 * std::max(delta - 1.0, 1e-9));
        return (logdens_rgumbel(a1[t], b1[t], a2[t], b2[t], delta + h) -
                logdens_rgumbel(a1[t], b1[t], a2[t], b2[t], delta - h)) /
               (2.0 * h);
      }
      default:
        throw std::domain_error("gas dynamics unsupported for this family");
    }
  }
};

CopulaPath gas_filter_prepared(Family f, const GasParams& params, const Prepared& prep,
                               std::optional<double> kappa1) {
  if (!(std::fabs(params.b) < 1.0)) throw std::domain_error("gas_filter: |b| < 1 required");
  if (params.a < 0.0) throw std::domain_error("gas_filter: a >= 0 required");

  const std::size_t T = prep.a1.size();
  CopulaPath path;
  path.kappa.resize(T);
  path.delta.resize(T);

  const double nu = f == Family::student_t ? prep.nu : 0.0;
  const TConsts tc(f == Family::student_t ? nu : 4.0);
  const InfoGrid* grid = params.a > 0.0 ? &info_grid_for(f, nu) : nullptr;

  double kappa = kappa1 ? *kappa1
                        : (std::fabs(1.0 - params.b) < 1e-12 ? params.w
                                                             : params.w / (1.0 - params.b));
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (!(std::fabs(kappa) < kKappaMax)) {
      throw std::runtime_error("gas_filter: kappa overflow at index " + std::to_string(t));
    }
    const double delta = transform(f, kappa);
    path.kappa[t] = kappa;
    path.delta[t] = delta;
    ll += prep.logdens(t, delta, nu, &tc);
    if (t + 1 < T) {
      double update = 0.0;
      if (params.a > 0.0) {
        const double s = prep.score(t, delta);
        const double info = grid->eval(f, delta);
        update = params.a * s / std::sqrt(info);
      }
      kappa = params.w + params.b * kappa + update;
    }
  }
  path.loglik = ll;
  return path;
}

}  // namespace

CopulaPath gas_filter(Family f, const GasParams& params, std::span<const double> u1,
                      std::span<const double> u2, std::optional<double> kappa1) {
  if (u1.size() != u2.size()) throw std::invalid_argument("gas_filter: length mismatch");
  if (u1.empty()) throw std::invalid_argument("gas_filter: empty input");
  const double nu = f == Family::student_t
                        ? (params.nu_inv ? 1.0 / *params.nu_inv : 0.0)
                        : 0.0;
  if (f == Family::student_t && !(nu > 2.0)) {
    throw std::domain_error("gas_filter: t copula requires nu_inv in (0, 0.5)");
  }
  const Prepared prep(f, u1, u2, nu);
  return gas_filter_prepared(f, params, prep, kappa1);
}

// ------------------------------------------------------------ constant fit

ConstantFit constant_fit(Family f, std::span<const double> u1, std::span<const double> u2,
                         std::uint64_t seed) {
  if (u1.size() != u2.size() || u1.empty()) {
    throw std::invalid_argument("constant_fit: bad input lengths");
  }
  ConstantFit fit;
  fit.family = f;

  auto loglik_at = [&](double delta, double aux) {
    const Prepared prep(f, u1, u2, f == Family::student_t ? aux : 0.0);
    const TConsts tc(f == Family::student_t ? aux : 4.0);
    double ll = 0.0;
    for (std::size_t t = 0; t < u1.size(); ++t) ll += prep.logdens(t, delta, aux, &tc);
    return ll;
  };

  switch (f) {
    case Family::normal:
    case Family::clayton:
    case Family::rotated_gumbel: {
      const Prepared prep(f, u1, u2, 0.0);
      const TConsts tc(4.0);
      auto neg = [&](double kappa) {
        const double delta = transform(f, kappa);
        double ll = 0.0;
        for (std::size_t t = 0; t < u1.size(); ++t) ll += prep.logdens(t, delta, 0.0, &tc);
        return -ll;
      };
      const double lo = f == Family::normal ? -7.0 : -8.0;
      const double hi = f == Family::normal ? 7.0 : 5.0;
      const double kappa = optim::brent_minimize(neg, lo, hi, 1e-10);
      fit.delta = transform(f, kappa);
      fit.loglik = -neg(kappa);
      return fit;
    }
    case Family::student_t: {
      // warm start rho from the normal fit
      const ConstantFit nfit = constant_fit(Family::normal, u1, u2, seed);
      auto obj = [&](const std::vector<double>& th) {
        const double rho = std::tanh(0.5 * th[0]);
        const double nu_inv = 0.5 * sigmoid(th[1]);
        if (nu_inv < 1e-4) return 1e50;  // keep nu finite; cap handled below
        return -loglik_at(rho, 1.0 / nu_inv);
      };
      std::vector<double> th0{inverse_transform(Family::normal, nfit.delta), logit(0.2)};
      const auto res = optim::multistart_bfgs(obj, th0, 2, 0.3, derive_seed(seed, "t_const"));
      fit.delta = std::tanh(0.5 * res.x[0]);
      fit.aux = 1.0 / (0.5 * sigmoid(res.x[1]));
      fit.loglik = -res.value;
      fit.diag.converged = res.converged;
      fit.diag.iterations = res.iterations;
      fit.diag.evaluations = res.evaluations;
      return fit;
    }
    case Family::sjc: {
      auto obj = [&](const std::vector<double>& th) {
        const double tl = sigmoid(th[0]);
        const double tu = sigmoid(th[1]);
        if (tl < 5e-3 || tl > 0.995 || tu < 5e-3 || tu > 0.995) return 1e50;
        return -loglik_at(tl, tu);
      };
      std::vector<double> th0{logit(0.3), logit(0.3)};
      const auto res =
          optim::nelder_mead_minimize(obj, th0, std::vector<double>{0.5, 0.5}, 400, 1e-12);
      fit.delta = sigmoid(res.x[0]);
      fit.aux = sigmoid(res.x[1]);
      fit.loglik = -res.value;
      fit.diag.converged = res.converged;
      fit.diag.iterations = res.iterations;
      fit.diag.evaluations = res.evaluations;
      return fit;
    }
  }
  throw std::domain_error("unknown copula family");
}

// ----------------------------------------------------------------- GAS fit

GasFit gas_fit(Family f, std::span<const double> u1, std::span<const double> u2,
               const std::optional<GasParams>& init, std::uint64_t seed, int n_starts) {
  if (f == Family::clayton || f == Family::sjc) {
    throw std::domain_error("gas_fit: dynamics implemented for normal, student_t, "
                            "rotated_gumbel only");
  }
  const ConstantFit cfit = constant_fit(f, u1, u2, seed);
  const double kappa1 = inverse_transform(f, cfit.delta);

  const bool is_t = f == Family::student_t;

  // theta: w, log a, atanh b [, logit(2/nu)]
  auto unpack_g = [&](const std::vector<double>& th) {
    GasParams gp;
    gp.w = th[0];
    gp.a = std::exp(std::clamp(th[1], -25.0, 5.0));
    gp.b = std::tanh(th[2]);
    if (is_t) gp.nu_inv = 0.5 * sigmoid(th[3]);
    return gp;
  };

  auto objective = [&](const std::vector<double>& th) -> double {
    try {
      const GasParams gp = unpack_g(th);
      if (is_t && *gp.nu_inv < 1e-4) return 1e50;
      const double nu = is_t ? 1.0 / *gp.nu_inv : 0.0;
      const Prepared prep(f, u1, u2, nu);
      return -gas_filter_prepared(f, gp, prep, kappa1).loglik;
    } catch (const std::exception&) {
      return 1e50;
    }
  };

  std::vector<double> th0;
  if (init) {
    th0 = {init->w, std::log(std::max(init->a, 1e-10)),
           std::atanh(std::clamp(init->b, -0.999999, 0.999999))};
    if (is_t) th0.push_back(logit(2.0 * std::clamp(init->nu_inv.value_or(0.1), 1e-3, 0.49)));
  } else {
    const double b0 = 0.95;
    th0 = {kappa1 * (1.0 - b0), std::log(0.05), std::atanh(b0)};
    if (is_t) {
      const double ni = std::clamp(cfit.aux > 2.0 ? 1.0 / cfit.aux : 0.1, 2e-3, 0.49);
      th0.push_back(logit(2.0 * ni));
    }
  }

  const auto res = optim::multistart_bfgs(objective, th0, n_starts, 0.3,
                                          derive_seed(seed, "gas_fit"));

  GasFit fit;
  fit.family = f;
  fit.params = unpack_g(res.x);
  fit.kappa1 = kappa1;
  const double nu = is_t ? 1.0 / *fit.params.nu_inv : 0.0;
  const Prepared prep(f, u1, u2, nu);
  fit.path = gas_filter_prepared(f, fit.params, prep, kappa1);
  fit.loglik = fit.path.loglik;
  fit.diag.converged = res.converged;
  fit.diag.iterations = res.iterations;
  fit.diag.evaluations = res.evaluations;
  return fit;
}

GasSimulation simulate_gas(Family f, const GasParams& params, std::size_t T,
                           std::uint64_t seed, std::optional<double> kappa1) {
  if (f == Family::clayton || f == Family::sjc) {
    throw std::domain_error("simulate_gas: dynamics implemented for normal, student_t, "
                            "rotated_gumbel only");
  }
  const double nu = f == Family::student_t
                        ? (params.nu_inv ? 1.0 / *params.nu_inv : 0.0)
                        : 0.0;
  if (f == Family::student_t && !(nu > 2.0)) {
    throw std::domain_error("simulate_gas: t copula requires nu_inv in (0, 0.5)");
  }

  GasSimulation sim;
  sim.u.u1.resize(T);
  sim.u.u2.resize(T);
  sim.delta.resize(T);

  const InfoGrid& grid = info_grid_for(f, nu);
  Rng rng(derive_seed(seed, "simulate_gas"));

  double kappa = kappa1 ? *kappa1
                        : (std::fabs(1.0 - params.b) < 1e-12 ? params.w
                                                             : params.w / (1.0 - params.b));
  for (std::size_t t = 0; t < T; ++t) {
    if (!(std::fabs(kappa) < kKappaMax)) {
      throw std::runtime_error("simulate_gas: kappa overflow at index " + std::to_string(t));
    }
    const double delta = transform(f, kappa);
    sim.delta[t] = delta;
    draw_pair(f, delta, nu, rng, &sim.u.u1[t], &sim.u.u2[t]);
    const double s = copula_score(f, sim.u.u1[t], sim.u.u2[t], delta, nu);
    kappa = params.w + params.b * kappa + params.a * s / std::sqrt(grid.eval(f, delta));
  }
  return sim;
}

}  // namespace dycop::cop
