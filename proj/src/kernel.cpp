#include "gps/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gps {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper incomplete gamma: integral of t^(a-1) e^(-t) over [x, inf), x > 0.
// Continued fraction for x > a+1 (valid for any real a), series for the rest
// (only reached when a > 0).
double upper_gamma(double a, double x) {
  double scale = std::exp(a * std::log(x) - x);
  if (x > a + 1.0) {
    // Modified Lentz on the standard continued fraction.
    double tiny = 1e-300;
    double f = tiny, C = f, D = 0.0;
    for (int i = 0; i < 500; ++i) {
      double an = (i == 0) ? 1.0 : -static_cast<double>(i) * (static_cast<double>(i) - a);
      double bn = (i == 0) ? x + 1.0 - a : x + 2.0 * i + 1.0 - a;
      D = bn + an * D;
      if (std::fabs(D) < tiny) D = tiny;
      C = bn + an / C;
      if (std::fabs(C) < tiny) C = tiny;
      D = 1.0 / D;
      double delta = C * D;
      f *= delta;
      if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return scale * f;
  }
  // gamma(a,x) series, then complement.
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  double lower = scale * sum;
  return std::max(0.0, std::tgamma(a) - lower);
}

// Closed form of integral over [c, inf) of c0 (log x)^kappa x^(-p) dx, p > 1.
double psi_integral(double c0, double kappa, double p, double c) {
  double lc = std::log(c);
  if (kappa == 0.0) return c0 * std::exp(-(p - 1.0) * lc) / (p - 1.0);
  double y = (p - 1.0) * lc;
  return c0 * upper_gamma(kappa + 1.0, y) * std::exp(-(kappa + 1.0) * std::log(p - 1.0));
}

// Pure-power comparison integrand c0 (log x)^kappa x^(-p).
double psi_point(double c0, double kappa, double p, double x) {
  double lx = std::log(x);
  double v = c0 * std::exp(-p * lx);
  if (kappa != 0.0) v *= std::exp(kappa * std::log(lx));
  return v;
}

bool tail_valid(const SlowlyVaryingSpec& sv, double p, double T) {
  if (p <= 1.0) return false;
  if (sv.family == SvFamily::constant || sv.kappa == 0.0) return T >= 4.0;
  double need = 4.0 * (std::fabs(sv.kappa) + 1.0) / std::min(p - 1.0, 1.0);
  return T >= 1000.0 && std::log(T) >= need;
}

struct LongSum {
  long double s = 0.0L;
  void add(double x) { s += x; }
  double value() const { return static_cast<double>(s); }
};

}  // namespace

double SlowlyVaryingSpec::operator()(double n) const {
  if (family == SvFamily::constant) return c0;
  double l = std::log(n + 1.0);
  if (kappa == 0.0) return c0;
  return c0 * std::exp(kappa * std::log(l));
}

Bracket tail_sum_power(const SlowlyVaryingSpec& sv, double p, int64_t T) {
  if (!tail_valid(sv, p, static_cast<double>(T)))
    throw InconclusiveBracket("tail_sum_power: horizon too small for a valid bracket");
  double kap = (sv.family == SvFamily::constant) ? 0.0 : sv.kappa;
  double x0 = static_cast<double>(T) + 0.5;
  double s0 = 0.0;
  if (kap != 0.0) s0 = std::min(0.5, 2.0 * std::fabs(kap) / (x0 * std::log(x0)));
  double I = psi_integral(sv.c0, kap, p, x0);
  // Second-derivative correction for the midpoint lower bound.
  double xm = static_cast<double>(T) - 0.5;
  double corr =
      (1.0 + s0) * psi_point(sv.c0, kap, p, xm) * (p + std::fabs(kap)) / xm / 24.0;
  Bracket b;
  b.lo = std::max(0.0, ((1.0 - s0) * I - corr) * (1.0 - 1e-12));
  b.hi = (1.0 + s0) * I * (1.0 + 1e-12);
  return b;
}

namespace {

// Bracket of sum_{t>T} (t-1) L(t) t^(-(2+alpha)).
Bracket persistence_tail(const SlowlyVaryingSpec& sv, double alpha, int64_t T) {
  Bracket b1 = tail_sum_power(sv, 1.0 + alpha, T);
  Bracket b2 = tail_sum_power(sv, 2.0 + alpha, T);
  Bracket r;
  r.lo = std::max(0.0, b1.lo - b2.hi);
  r.hi = std::max(r.lo, b1.hi - b2.lo);
  return r;
}

// Upper envelope of sum_{n>=T} n * sum_{t>n} L(t) t^-(2+alpha), alpha > 1.
double mu_remainder_upper(const SlowlyVaryingSpec& sv, double alpha, int64_t T) {
  double kap = (sv.family == SvFamily::constant) ? 0.0 : sv.kappa;
  double logT = std::log(static_cast<double>(T));
  double s0 = (kap != 0.0) ? std::min(0.5, 2.0 * std::fabs(kap) / (T * logT)) : 0.0;
  double r = std::max(0.0, kap) / ((1.0 + alpha) * logT);
  if (r >= 0.5) return kInf;
  if (!tail_valid(sv, alpha, static_cast<double>(T - 1))) return kInf;
  Bracket tail = tail_sum_power(sv, alpha, T - 1);
  return (1.0 + s0) / (1.0 - r) / (1.0 + alpha) * tail.hi;
}

}  // namespace

double KernelSpec::K_uncached(int64_t t) const {
  if (t < 2) return 0.0;
  return sv(static_cast<double>(t)) *
         std::exp(-(2.0 + alpha) * std::log(static_cast<double>(t))) / norm;
}

double KernelSpec::logK(int64_t t) const {
  if (t < 2) return -kInf;
  if (t <= t_max) return logK_cache[t];
  return std::log(sv(static_cast<double>(t))) - std::log(norm) -
         (2.0 + alpha) * std::log(static_cast<double>(t));
}

double KernelSpec::range_K(int64_t a, int64_t b) const {
  a = std::max<int64_t>(a, 2);
  b = std::min<int64_t>(b, t_max);
  if (a > b) return 0.0;
  return prefix_K[b] - prefix_K[a - 1];
}

double KernelSpec::range_tK(int64_t a, int64_t b) const {
  a = std::max<int64_t>(a, 2);
  b = std::min<int64_t>(b, t_max);
  if (a > b) return 0.0;
  return prefix_tK[b] - prefix_tK[a - 1];
}

namespace {
// Suffix tables are stored in the cache vectors' slack fields; kept separate
// here to keep KernelSpec a plain aggregate.
}  // namespace

KernelSpec build_kernel(double alpha, const SlowlyVaryingSpec& sv, int64_t t_max) {
  if (!(alpha > 0.0)) throw ConfigError("kernel: alpha must be positive");
  if (alpha == 1.0) throw ConfigError("kernel: alpha = 1 (marginal case) is not supported");
  if (t_max < 1000) throw ConfigError("kernel: t_max must be at least 1000");
  if (!(sv.c0 > 0.0)) throw ConfigError("kernel: c0 must be positive");

  KernelSpec k;
  k.alpha = alpha;
  k.sv = sv;
  k.t_max = t_max;

  const double p_pers = 2.0 + alpha;

  // Unnormalized summation horizon, escalated until the remainder bracket is
  // narrow enough: the construction must account for all but 1e-9 of the mass.
  int64_t T_big = std::max<int64_t>(t_max, 1000000);
  const int64_t T_cap = 50000000;
  double S_raw = 0.0, S_at_tmax = 0.0;
  Bracket rem;
  bool ok = false;
  while (true) {
    if (tail_valid(sv, 1.0 + alpha, static_cast<double>(T_big))) {
      LongSum s;
      LongSum s_tm;
      for (int64_t t = 2; t <= T_big; ++t) {
        double x = static_cast<double>(t);
        double term = (x - 1.0) * sv(x) * std::exp(-p_pers * std::log(x));
        s.add(term);
        if (t <= t_max) s_tm.add(term);
      }
      S_raw = s.value();
      S_at_tmax = s_tm.value();
      rem = persistence_tail(sv, alpha, T_big);
      double norm_try = S_raw + rem.hi;
      if (rem.width() / norm_try <= 1e-9) {
        ok = true;
        break;
      }
    }
    if (T_big >= T_cap) break;
    T_big = std::min(T_cap, T_big * 4);
  }
  if (!ok)
    throw ConfigError(
        "kernel: summation horizon capped before the tail bracket reached 1e-9 "
        "of total mass; this (alpha, L) pair is out of numerical reach");

  k.norm = S_raw + rem.hi;
  k.remainder_bound = (k.norm - S_at_tmax) / k.norm;
  k.remainder_width = rem.width() / k.norm;

  // mu via the marginal route: sum_n n P(tau1_coord = n) with
  // P(tau1_coord = n) = sum_{t > n} K(t), swept descending with a bracketed
  // seed so the infinite part stays rigorous.
  if (alpha > 1.0) {
    int64_t T_mu = T_big;
    while (T_mu < T_cap) {
      double env = mu_remainder_upper(sv, alpha, T_mu);
      if (env / k.norm <= 1e-10 || T_mu >= 30000000) break;
      T_mu = std::min<int64_t>(T_cap, T_mu * 4);
    }
    double env = mu_remainder_upper(sv, alpha, T_mu);
    Bracket kb = tail_sum_power(sv, p_pers, T_mu);
    long double acc_lo = 0.0L, acc_hi = 0.0L;
    long double run_lo = kb.lo, run_hi = kb.hi;  // sum_{t>n} L(t) t^-(2+a)
    for (int64_t n = T_mu - 1; n >= 1; --n) {
      double x = static_cast<double>(n + 1);
      double term = sv(x) * std::exp(-p_pers * std::log(x));
      run_lo += term;
      run_hi += term;
      acc_lo += static_cast<long double>(n) * run_lo;
      acc_hi += static_cast<long double>(n) * run_hi;
    }
    k.mu_bracket.lo = static_cast<double>(acc_lo) / k.norm * (1.0 - 1e-13);
    if (std::isfinite(env)) {
      k.mu_bracket.hi = static_cast<double>(acc_hi + env) / k.norm * (1.0 + 1e-13);
      k.mu = k.mu_bracket.mid();
    } else {
      k.mu_bracket.hi = kInf;
      k.mu = k.mu_bracket.lo;
    }
  } else {
    k.mu = kInf;
    k.mu_bracket = {kInf, kInf};
  }

  // Cached values and prefix sums over [0, t_max].
  k.K_cache.assign(t_max + 1, 0.0);
  k.logK_cache.assign(t_max + 1, -kInf);
  k.prefix_K.assign(t_max + 1, 0.0);
  k.prefix_tK.assign(t_max + 1, 0.0);
  {
    LongSum pk, ptk;
    for (int64_t t = 2; t <= t_max; ++t) {
      double x = static_cast<double>(t);
      double val = sv(x) * std::exp(-p_pers * std::log(x)) / k.norm;
      k.K_cache[t] = val;
      k.logK_cache[t] = std::log(val);
      pk.add(val);
      ptk.add(x * val);
      k.prefix_K[t] = pk.value();
      k.prefix_tK[t] = ptk.value();
    }
  }

  // Suffix tables, swept descending from analytic midpoint seeds at T_big,
  // where the closed-form brackets were already established valid; box
  // complements then stay accurate at tail scale.
  k.suffix_K.assign(t_max + 1, 0.0);
  k.suffix_tK.assign(t_max + 1, 0.0);
  k.suffix_pers.assign(t_max + 1, 0.0);
  {
    Bracket bk = tail_sum_power(sv, p_pers, T_big);
    Bracket bt = tail_sum_power(sv, 1.0 + alpha, T_big);
    long double rk = bk.mid() / k.norm;
    long double rt = bt.mid() / k.norm;
    long double rp = rt - rk;
    for (int64_t t = T_big; t >= 1; --t) {
      if (t <= t_max) {
        k.suffix_K[t] = static_cast<double>(rk);
        k.suffix_tK[t] = static_cast<double>(rt);
        k.suffix_pers[t] = static_cast<double>(rp);
      }
      double v = (t <= t_max) ? k.K_cache[t]
                              : sv(static_cast<double>(t)) *
                                    std::exp(-p_pers * std::log(static_cast<double>(t))) /
                                    k.norm;
      rk += v;
      rt += static_cast<double>(t) * v;
      rp += static_cast<double>(t - 1) * v;
    }
    k.suffix_K[0] = static_cast<double>(rk);
    k.suffix_tK[0] = static_cast<double>(rt);
    k.suffix_pers[0] = static_cast<double>(rp);
  }
  return k;
}

Bracket half_second_factorial_moment(const KernelSpec& k) {
  if (k.alpha <= 1.0) return {kInf, kInf};
  const double p_pers = 2.0 + k.alpha;
  int64_t T = std::max<int64_t>(k.t_max, 1000000);
  // Escalate past the validity horizon and until the brackets are narrow.
  while (T < 30000000) {
    if (tail_valid(k.sv, k.alpha, static_cast<double>(T))) {
      Bracket wa = tail_sum_power(k.sv, k.alpha, T);
      Bracket wb = tail_sum_power(k.sv, k.alpha + 1.0, T);
      if ((wa.width() + wb.width()) / k.norm <= 1e-10) break;
    }
    T *= 4;
  }
  if (!tail_valid(k.sv, k.alpha, static_cast<double>(T)))
    throw InconclusiveBracket(
        "half second factorial moment: no valid tail bracket within the horizon cap");
  LongSum s;
  for (int64_t t = 2; t <= T; ++t) {
    double x = static_cast<double>(t);
    s.add(0.5 * x * (x - 1.0) * k.sv(x) * std::exp(-p_pers * std::log(x)));
  }
  // Tail: (1/2) sum_{t>T} t(t-1) L t^-(2+a) = (1/2)(S_alpha - S_{alpha+1}).
  Bracket ba = tail_sum_power(k.sv, k.alpha, T);
  Bracket bb = tail_sum_power(k.sv, k.alpha + 1.0, T);
  double lo = (s.value() + 0.5 * std::max(0.0, ba.lo - bb.hi)) / k.norm;
  double hi = (s.value() + 0.5 * (ba.hi - std::min(bb.lo, ba.hi))) / k.norm;
  return {lo * (1.0 - 1e-13), hi * (1.0 + 1e-13)};
}

TailSumTable build_tail_sums(const KernelSpec& k, double delta, int64_t s_max) {
  if (!(delta > 0.0 && delta < 1.0) && delta != 1.0)
    throw ConfigError("tail sums: delta must lie in (0,1]");
  double p = (2.0 + k.alpha) * delta;
  if (p <= 2.0)
    throw ConfigError("tail sums: (2+alpha)*delta must exceed 2 for convergence");
  if (s_max < 2) throw ConfigError("tail sums: s_max must be at least 2");

  TailSumTable t;
  t.delta = delta;
  t.s_max = s_max;
  t.alpha_gt2_condition = (k.alpha > 2.0) ? (p > 4.0) : true;
  t.T1.assign(s_max + 1, 0.0);
  t.T2.assign(s_max + 1, 0.0);

  SlowlyVaryingSpec svd{k.sv.family, std::exp(delta * std::log(k.sv.c0 / k.norm)),
                        (k.sv.family == SvFamily::constant) ? 0.0 : k.sv.kappa * delta};
  int64_t T_start = std::max<int64_t>({k.t_max, 2000000, 10 * s_max});
  while (T_start < 50000000 && !tail_valid(svd, p, static_cast<double>(T_start)))
    T_start *= 4;
  if (!tail_valid(svd, p, static_cast<double>(T_start)))
    throw InconclusiveBracket(
        "tail sums: no valid closed-form seed within the horizon cap");
  Bracket r1 = tail_sum_power(svd, p, T_start);
  // Seed for T2 at s = T_start+1: sum_{t>T} (t-T) K^delta, bounded above by
  // the integral of (x-T+1) x^(-p) with the log factor absorbed into a small
  // exponent shift eta (safe since (log t)^k <= (log T)^k (t/T)^(k/log T)).
  double t2_seed;
  {
    double Td = static_cast<double>(T_start);
    double kd = (svd.family == SvFamily::constant) ? 0.0 : svd.kappa;
    double eta = std::max(0.0, kd) / std::log(Td);
    double pe = p - eta;
    if (pe <= 2.0)
      throw InconclusiveBracket("tail sums: seed exponent collapsed below 2");
    double lf = (kd != 0.0) ? std::exp(kd * std::log(std::log(Td))) : 1.0;
    t2_seed = svd.c0 * lf * std::exp(-eta * std::log(Td)) *
              (std::exp(-(pe - 2.0) * std::log(Td)) / ((pe - 1.0) * (pe - 2.0)) +
               std::exp(-(pe - 1.0) * std::log(Td)) / (pe - 1.0));
  }

  long double run1 = r1.hi;
  long double run2 = t2_seed;
  const double dl = delta;
  for (int64_t s = T_start; s >= 2; --s) {
    double x = static_cast<double>(s);
    double kd = std::exp(dl * (std::log(k.sv(x)) - std::log(k.norm) -
                               (2.0 + k.alpha) * std::log(x)));
    run1 += kd;
    run2 += run1;
    if (s <= s_max) {
      t.T1[s] = static_cast<double>(run1) * (1.0 + 1e-12);
      t.T2[s] = static_cast<double>(run2) * (1.0 + 1e-12);
    }
  }
  return t;
}

double KernelSpec::exit_weight(int64_t A, int64_t B) const {
  int64_t a = std::min(A, B), b = std::max(A, B);
  if (a <= 0) return 1.0;
  if (a + b > t_max)
    throw RangeError("exit weight: box exceeds the cached kernel range");
  // The complement of the box in jump space, grouped by jump total t:
  //   t in [a+2, b+1]: t-1-a placements; t in [b+2, a+b]: 2t-a-b-2; t > a+b: t-1.
  double piece1 = (suffix_tK[a + 1] - suffix_tK[b + 1]) -
                  static_cast<double>(1 + a) * (suffix_K[a + 1] - suffix_K[b + 1]);
  double piece2 = 2.0 * (suffix_tK[b + 1] - suffix_tK[a + b]) -
                  static_cast<double>(a + b + 2) * (suffix_K[b + 1] - suffix_K[a + b]);
  double piece3 = suffix_pers[a + b];
  double e = piece1 + piece2 + piece3;
  return std::min(1.0, std::max(0.0, e));
}

}  // namespace gps
