#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "gps/intersection.hpp"

using namespace gps;

namespace {

const KernelSpec& cached_kernel(double alpha) {
  static std::map<double, KernelSpec> cache;
  auto it = cache.find(alpha);
  if (it == cache.end())
    it = cache.emplace(alpha, build_kernel(alpha, {SvFamily::constant, 1.0, 0.0}, 2200))
             .first;
  return it->second;
}

const IntersectionTables& small_tables(double alpha, int64_t N, int64_t q_cap) {
  static std::map<std::tuple<double, int64_t, int64_t>, IntersectionTables> cache;
  auto key = std::make_tuple(alpha, N, q_cap);
  auto it = cache.find(key);
  if (it == cache.end()) {
    RenewalMassGrid u = renewal_mass(cached_kernel(alpha), N, N);
    it = cache.emplace(key, intersection_tables(u, q_cap)).first;
  }
  return it->second;
}

double rel_err(double a, double b) {
  double s = std::max(std::fabs(a), std::fabs(b));
  return s == 0.0 ? 0.0 : std::fabs(a - b) / s;
}

}  // namespace

TEST_CASE("inter-arrival inversion: hand values and axis support") {
  for (double alpha : {0.5, 1.5}) {
    const KernelSpec& k = cached_kernel(alpha);
    const IntersectionTables& t = small_tables(alpha, 16, 16);
    double K2 = k.K(2), K4 = k.K(4);
    CHECK(t.v[0][0] == 1.0);
    CHECK(t.q[1][1] == doctest::Approx(K2 * K2).epsilon(1e-14));
    CHECK(t.q[2][2] ==
          doctest::Approx((K4 + K2 * K2) * (K4 + K2 * K2) - K2 * K2 * K2 * K2)
              .epsilon(1e-13));
    for (int64_t i = 0; i <= t.q_size; ++i) {
      CHECK(t.q[0][i] == 0.0);
      CHECK(t.q[i][0] == 0.0);
    }
    CHECK(t.tail[0] == 1.0);
    CHECK(t.tail[1] == 1.0);
    CHECK(t.tail[2] == doctest::Approx(1.0 - t.q[1][1]).epsilon(1e-14));
    CHECK(t.sigma_total_mass <= 1.0 + 1e-12);
    CHECK(t.clamped_q < 10);
  }
}

TEST_CASE("forward convolution reconstructs the squared renewal mass") {
  for (double alpha : {0.5, 1.5}) {
    const IntersectionTables& t = small_tables(alpha, 64, 64);
    double worst = 0.0;
    for (int64_t n = 0; n <= 64; ++n)
      for (int64_t m = 0; m <= 64; ++m) {
        long double conv = (n == 0 && m == 0) ? 1.0L : 0.0L;
        for (int64_t i = 1; i <= n; ++i)
          for (int64_t j = 1; j <= m; ++j)
            conv += static_cast<long double>(t.q[i][j]) * t.v[n - i][m - j];
        worst = std::max(worst, rel_err(static_cast<double>(conv), t.v[n][m]));
      }
    CHECK(worst < 1e-12);
    // Same identity for the one-dimensional reduction.
    double worst1 = 0.0;
    for (int64_t s = 2; s <= t.s_max; ++s) {
      long double conv = 0.0L;
      for (int64_t r = 2; r <= s; ++r) conv += static_cast<long double>(t.kbar[r]) * t.ubar[s - r];
      worst1 = std::max(worst1, rel_err(static_cast<double>(conv), t.ubar[s]));
    }
    CHECK(worst1 < 1e-12);
  }
}

TEST_CASE("running sums, monotonicity, and diagonal reduction") {
  const IntersectionTables& t = small_tables(0.5, 64, 16);
  long double brute = 0.0L;
  for (int64_t n = 0; n <= 9; ++n)
    for (int64_t m = 0; m <= 13; ++m) brute += t.v[n][m];
  CHECK(rel_err(static_cast<double>(brute), t.U[9][13]) < 1e-13);
  for (int64_t n = 1; n <= 64; ++n) {
    CHECK(t.U[n][n] >= t.U[n - 1][n - 1]);
    CHECK(t.tail[n] <= t.tail[n - 1] + 1e-15);
    CHECK(t.tail[n] >= 0.0);
    CHECK(t.tail[n] <= 1.0);
  }
  for (int64_t s = 0; s <= t.s_max; ++s) {
    long double d = 0.0L;
    for (int64_t n = std::max<int64_t>(0, s - 64); n <= std::min<int64_t>(64, s); ++n)
      d += t.v[n][s - n];
    CHECK(rel_err(static_cast<double>(d), t.ubar[s]) < 1e-13);
  }
}

TEST_CASE("overlap MGF: degeneracy, one-cell box, monotonicity, batch identity") {
  const IntersectionTables& t = small_tables(1.5, 48, 48);
  double q11 = t.q[1][1];
  CHECK(overlap_mgf(t, 0.0, 32, 32) == 1.0);
  for (double lam : {0.7, -0.3})
    CHECK(overlap_mgf(t, lam, 1, 1) ==
          doctest::Approx(1.0 + (std::exp(lam) - 1.0) * q11).epsilon(1e-13));
  double a = overlap_mgf(t, 0.05, 32, 32);
  double b = overlap_mgf(t, 0.1, 32, 32);
  double c = overlap_mgf(t, 0.2, 32, 32);
  CHECK(a > 1.0);
  CHECK(a <= b);
  CHECK(b <= c);
  double g16 = overlap_mgf(t, 0.1, 16, 16);
  double g48 = overlap_mgf(t, 0.1, 48, 48);
  CHECK(g16 <= b + 1e-12);
  CHECK(b <= g48 + 1e-12);
  // One shared tilted grid reproduces the standalone evaluations bit for bit:
  // rescaling by powers of two is exact in binary floating point.
  auto batch = overlap_mgf_batch(t, 0.1, {{16, 16}, {32, 32}, {48, 48}},
                                 std::numeric_limits<double>::infinity());
  CHECK(batch[0] == g16);
  CHECK(batch[1] == b);
  CHECK(batch[2] == g48);
  auto stopped = overlap_mgf_batch(t, 0.1, {{16, 16}, {32, 32}, {48, 48}}, g16 / 2.0);
  CHECK(stopped[0] == g16);
  CHECK(std::isinf(stopped[1]));
  CHECK(std::isinf(stopped[2]));
}

TEST_CASE("overlap MGF matches a sampled path-pair oracle") {
  const KernelSpec& k = cached_kernel(1.5);
  const IntersectionTables& t = small_tables(1.5, 64, 64);
  double exact = overlap_mgf(t, 0.1, 64, 64);
  JumpSampler js(k);
  const int n_pairs = 10000;
  double sum = 0.0, sum2 = 0.0;
  std::vector<char> hitA(65 * 65);
  for (int p = 0; p < n_pairs; ++p) {
    RngStream ra(777001, static_cast<uint32_t>(2 * p));
    RngStream rb(777001, static_cast<uint32_t>(2 * p + 1));
    std::fill(hitA.begin(), hitA.end(), 0);
    for (auto [n, m] : sample_renewal(js, 64, 64, ra)) hitA[n * 65 + m] = 1;
    int H = 0;
    for (auto [n, m] : sample_renewal(js, 64, 64, rb))
      if ((n || m) && hitA[n * 65 + m]) ++H;
    double e = std::exp(0.1 * H);
    sum += e;
    sum2 += e * e;
  }
  double mean = sum / n_pairs;
  double var = std::max(0.0, sum2 / n_pairs - mean * mean);
  double se = std::sqrt(var / n_pairs);
  CHECK(std::fabs(mean - exact) < 3.0 * se);
}

TEST_CASE("termination report separates the two regimes") {
  const KernelSpec& k15 = cached_kernel(1.5);
  TerminationReport rp = sigma_termination_report(small_tables(1.5, 48, 4), k15);
  CHECK(rp.persistent);
  CHECK(std::isinf(rp.E_abs_sigma.lo));
  CHECK(rp.P_sigma1_finite.lo == 1.0);

  const KernelSpec& k05 = cached_kernel(0.5);
  TerminationReport rt = sigma_termination_report(small_tables(0.5, 256, 256), k05);
  CHECK_FALSE(rt.persistent);
  CHECK(rt.E_abs_sigma.lo > 1.0);
  CHECK(rt.E_abs_sigma.hi >= rt.E_abs_sigma.lo);
  CHECK(rt.E_abs_sigma.width() / rt.E_abs_sigma.mid() < 0.15);
  CHECK(rt.P_sigma1_finite.lo > 0.0);
  CHECK(rt.P_sigma1_finite.hi < 1.0);
  CHECK(rt.P_sigma1_finite.lo <= rt.P_sigma1_finite.hi);
  // Geometric-law consistency: the q-route mean 1/(1 - sum q) is a lower
  // bound for E|sigma| (q mass beyond the box is missing) and must land
  // inside a modest widening of the U-route bracket.
  double Eq = 1.0 / (1.0 - small_tables(0.5, 256, 256).sigma_total_mass);
  CHECK(Eq <= rt.E_abs_sigma.hi * (1.0 + 1e-9));
  CHECK(Eq >= rt.E_abs_sigma.lo * 0.8);

  CHECK_THROWS_AS(sigma_termination_report(small_tables(0.5, 12, 4), k05),
                  InconclusiveBracket);
  // Near the critical index the dyadic increment ratio sits above the 0.8
  // gate at this size (measured 0.81 at N=256), so the report must refuse.
  const KernelSpec& k09 = cached_kernel(0.9);
  CHECK_THROWS_AS(sigma_termination_report(small_tables(0.9, 256, 4), k09),
                  InconclusiveBracket);
}

TEST_CASE("tail products approach the closed-form constant") {
  CHECK(sigma_tail_constant(0.5) == doctest::Approx(0.900316316157).epsilon(1e-10));
  CHECK(sigma_tail_constant(1.0 / 3.0) ==
        doctest::Approx(1.04194632114).epsilon(1e-10));
  struct Row {
    double alpha, rho;
  } rows[] = {{1.5, 1.0 / 3.0}, {3.0, 0.5}};
  for (auto r : rows) {
    const IntersectionTables& t = small_tables(r.alpha, 1024, 4);
    auto prod = tail_constant_check(t, r.rho, {256, 512, 1024});
    double target = sigma_tail_constant(r.rho);
    CHECK(std::fabs(prod.back() - target) / target < 0.25);
    // The direct log-U fit is biased below rho by the additive constant; it
    // must still see growth and stay under the asymptotic exponent.
    ExponentFit f = fit_U_exponent(t, 64, 1024);
    CHECK(f.slope > 0.0);
    CHECK(f.slope < r.rho);
    // The constant-free increment estimator is already near rho at N=1024
    // (measured 0.257 and 0.478 against 1/3 and 1/2).
    CHECK(std::fabs(u_increment_slope(t, 1024) - r.rho) < 0.1);
  }
  CHECK(u_increment_ratio(small_tables(0.5, 256, 256), 256) < 1e-4);
}

TEST_CASE("intersection guards") {
  const IntersectionTables& t = small_tables(1.5, 48, 16);
  CHECK_THROWS_AS(overlap_mgf(t, 0.1, 32, 32), RangeError);  // beyond q_size
  CHECK_THROWS_AS(overlap_mgf(t, 800.0, 8, 8), RangeError);
  CHECK_THROWS_AS(overlap_mgf(t, std::nan(""), 8, 8), RangeError);
  CHECK_THROWS_AS(fit_U_exponent(t, 16, 48), RangeError);  // two dyadic points
  CHECK_THROWS_AS(tail_constant_check(t, 0.5, {64}), RangeError);
  RenewalMassGrid u = renewal_mass(cached_kernel(1.5), 8, 8);
  CHECK_THROWS_AS(intersection_tables(u, 0), ConfigError);
}
