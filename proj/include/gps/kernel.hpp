#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gps {

// Error taxonomy shared across modules; the CLI maps these to exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InconclusiveBracket : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

enum class SvFamily { constant, log_power };

// Slowly varying multiplier L(n): c0 for the constant family,
// c0 * (log(n+1))^kappa for log_power.
struct SlowlyVaryingSpec {
  SvFamily family = SvFamily::constant;
  double c0 = 1.0;
  double kappa = 0.0;

  double operator()(double n) const;
};

// Normalized inter-arrival kernel K(t) = L(t) / (norm * t^(2+alpha)) with the
// persistence normalization sum_{t>=2} (t-1) K(t) = 1; the tail beyond the
// internal summation horizon is handled by closed-form integral brackets.
struct KernelSpec {
  double alpha = 0.0;
  SlowlyVaryingSpec sv;
  int64_t t_max = 0;
  double norm = 0.0;
  double mu = 0.0;  // E of one coordinate of the first jump; +inf when alpha < 1
  Bracket mu_bracket;
  double remainder_bound = 0.0;  // upper bound on sum_{t>t_max} (t-1) K(t)
  double remainder_width = 0.0;  // rigorous width of the unaccounted-mass bracket

  std::vector<double> K_cache;     // K[t], t in [0, t_max]; zero below t=2
  std::vector<double> logK_cache;  // natural logs, -inf below t=2
  std::vector<double> prefix_K;    // prefix_K[t] = sum_{s<=t} K(s)
  std::vector<double> prefix_tK;   // prefix_tK[t] = sum_{s<=t} s*K(s)
  // Suffix tables over [0, t_max]; entry t holds the sum over s > t with the
  // part beyond t_max folded in via the analytic remainder, so complements of
  // box sums never go through a cancelling 1-minus-prefix step.
  std::vector<double> suffix_K;     // sum_{s>t} K(s)
  std::vector<double> suffix_tK;    // sum_{s>t} s*K(s)
  std::vector<double> suffix_pers;  // sum_{s>t} (s-1)*K(s)

  double K(int64_t t) const { return t >= 2 && t <= t_max ? K_cache[t] : K_uncached(t); }
  double logK(int64_t t) const;
  double K_uncached(int64_t t) const;

  // sum_{s in [a,b]} K(s), clipped to the cached range.
  double range_K(int64_t a, int64_t b) const;
  double range_tK(int64_t a, int64_t b) const;

  // P(no renewal point of a fresh trajectory falls in [1,A] x [1,B]);
  // the weight attached to the last renewal point in a free partition sum.
  double exit_weight(int64_t A, int64_t B) const;
};

KernelSpec build_kernel(double alpha, const SlowlyVaryingSpec& sv, int64_t t_max);

// (1/2) sum_n n(n-1) K(n), bracketed; +inf bracket when alpha <= 1.
Bracket half_second_factorial_moment(const KernelSpec& k);

// Upper bounds on the tail sums T1(s) = sum_{t>=s} K(t)^delta and
// T2(s) = sum_{t>=s} (t-s+1) K(t)^delta, for 2 <= s <= s_max.
struct TailSumTable {
  double delta = 0.0;
  int64_t s_max = 0;
  bool alpha_gt2_condition = false;  // (2+alpha)*delta > 4, reported for alpha > 2
  std::vector<double> T1;
  std::vector<double> T2;
};

TailSumTable build_tail_sums(const KernelSpec& k, double delta, int64_t s_max);

// Bracket of sum_{t>T} L(t) * t^(-p) for p > 1; exposed for oracle tests.
Bracket tail_sum_power(const SlowlyVaryingSpec& sv, double p, int64_t T);

}  // namespace gps
