#include <cmath>
#include <map>

#include "doctest.h"
#include "gps/renewal.hpp"

using namespace gps;

namespace {

const KernelSpec& cached_kernel(double alpha) {
  static std::map<double, KernelSpec> cache;
  auto it = cache.find(alpha);
  if (it == cache.end())
    it = cache.emplace(alpha, build_kernel(alpha, {SvFamily::constant, 1.0, 0.0}, 2000))
             .first;
  return it->second;
}

double rel_err(double a, double b) {
  double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace

TEST_CASE("hand-convolved corner values") {
  for (double alpha : {0.5, 1.5, 3.0}) {
    const KernelSpec& k = cached_kernel(alpha);
    RenewalMassGrid u = renewal_mass(k, 8, 8);
    CHECK(u.at(0, 0).to_double() == 1.0);
    CHECK(u.at(1, 1).to_double() == doctest::Approx(k.K(2)).epsilon(1e-14));
    CHECK(u.at(2, 2).to_double() ==
          doctest::Approx(k.K(4) + k.K(2) * k.K(2)).epsilon(1e-13));
    CHECK(u.at(3, 0).is_zero());
    CHECK(u.at(0, 5).is_zero());
    // One-jump-or-two value off the diagonal.
    double expect12 = k.K(3) + k.K(2) * 0.0;  // (1,2) reachable only directly
    CHECK(u.at(1, 2).to_double() == doctest::Approx(expect12).epsilon(1e-13));
  }
}

TEST_CASE("windowed grid equals the defining recursion, including asymmetric boxes") {
  for (double alpha : {0.5, 1.5, 3.0}) {
    const KernelSpec& k = cached_kernel(alpha);
    RenewalMassGrid u = renewal_mass(k, 48, 48);
    auto naive = renewal_mass_naive(k, 48, 48);
    double worst = 0.0;
    for (int64_t n = 0; n <= 48; ++n)
      for (int64_t m = 0; m <= 48; ++m)
        worst = std::max(worst,
                         rel_err(u.at(n, m).to_double(), naive[n][m].to_double()));
    CHECK(worst < 1e-12);
  }
  const KernelSpec& k = cached_kernel(1.5);
  RenewalMassGrid u = renewal_mass(k, 20, 45);
  auto naive = renewal_mass_naive(k, 20, 45);
  double worst = 0.0;
  for (int64_t n = 0; n <= 20; ++n)
    for (int64_t m = 0; m <= 45; ++m)
      worst =
          std::max(worst, rel_err(u.at(n, m).to_double(), naive[n][m].to_double()));
  CHECK(worst < 1e-12);
}

TEST_CASE("symmetry and anti-diagonal mass bound") {
  const KernelSpec& k = cached_kernel(0.5);
  RenewalMassGrid u = renewal_mass(k, 40, 40);
  for (int64_t n = 0; n <= 40; ++n)
    for (int64_t m = n; m <= 40; ++m) {
      CHECK(u.at(n, m).m == u.at(m, n).m);
      CHECK(u.at(n, m).e == u.at(m, n).e);
    }
  for (int64_t d = 1; d <= 80; ++d) {
    double s = 0.0;
    for (int64_t n = std::max<int64_t>(0, d - 40); n <= std::min<int64_t>(40, d); ++n)
      s += u.at(n, d - n).to_double();
    CHECK(s <= 1.0 + 1e-12);
  }
}

TEST_CASE("jump sampler total-law and first-jump statistics") {
  const KernelSpec& k = cached_kernel(0.5);
  JumpSampler js(k);
  RngStream rng(20240817, 0);
  const int n_draws = 1000000;
  int hits11 = 0;
  int64_t past_table = 0;
  for (int i = 0; i < n_draws; ++i) {
    auto [a, b] = js.next_jump(rng);
    CHECK(a >= 1);
    CHECK(b >= 1);
    if (a == 1 && b == 1) ++hits11;
    if (a + b > k.t_max) ++past_table;
  }
  double p = k.K(2);
  double sigma = std::sqrt(p * (1 - p) / n_draws);
  CHECK(std::fabs(static_cast<double>(hits11) / n_draws - p) < 4.0 * sigma);
  // Heavy alpha=0.5 tail: beyond-table jumps must actually occur.
  CHECK(past_table > 0);
}

TEST_CASE("sampled paths strictly increase and reproduce the renewal mass") {
  const KernelSpec& k = cached_kernel(0.5);
  JumpSampler js(k);
  RenewalMassGrid u = renewal_mass(k, 16, 16);
  const int n_paths = 1000000;
  std::vector<std::vector<int64_t>> freq(17, std::vector<int64_t>(17, 0));
  for (int p = 0; p < n_paths; ++p) {
    RngStream rng(555, static_cast<uint32_t>(p));
    auto pts = sample_renewal(js, 16, 16, rng);
    int64_t pn = -1, pm = -1;
    for (auto [n, m] : pts) {
      CHECK(n > pn);
      CHECK(m > pm);
      pn = n;
      pm = m;
      ++freq[n][m];
    }
  }
  int checked = 0;
  for (int64_t n = 1; n <= 16; ++n)
    for (int64_t m = 1; m <= 16; ++m) {
      double pu = u.at(n, m).to_double();
      double emp = static_cast<double>(freq[n][m]) / n_paths;
      double sigma = std::sqrt(std::max(pu * (1 - pu), 1e-12) / n_paths);
      CHECK(std::fabs(emp - pu) <= 4.0 * sigma);
      ++checked;
    }
  CHECK(checked == 256);
}

TEST_CASE("k-step laws: exact small cases and the mass partition") {
  const KernelSpec& k = cached_kernel(1.5);
  auto layers = k_step_pmf(k, 20, 20);
  REQUIRE(layers.size() == 21);
  CHECK(layers[0].at(0, 0).to_double() == 1.0);
  for (int64_t n = 1; n <= 20; ++n)
    for (int64_t m = 1; m <= 20; ++m)
      CHECK(layers[1].at(n, m).to_double() ==
            doctest::Approx(k.K(n + m)).epsilon(1e-13));
  CHECK(layers[2].at(2, 2).to_double() ==
        doctest::Approx(k.K(2) * k.K(2)).epsilon(1e-13));
  // Total mass per layer is a probability.
  for (const auto& L : layers) {
    double tot = 0.0;
    for (int64_t n = 0; n <= 20; ++n)
      for (int64_t m = 0; m <= 20; ++m) tot += L.at(n, m).to_double();
    CHECK(tot <= 1.0 + 1e-12);
  }
  // Renewal mass decomposes over the number of steps: min(n,m) caps the count.
  RenewalMassGrid u = renewal_mass(k, 20, 20);
  for (int64_t n = 1; n <= 20; ++n)
    for (int64_t m = 1; m <= 20; ++m) {
      double s = 0.0;
      for (const auto& L : layers) s += L.at(n, m).to_double();
      CHECK(rel_err(s, u.at(n, m).to_double()) < 1e-11);
    }
}

TEST_CASE("k-step law obeys the one-big-jump envelope in its validity region") {
  const KernelSpec& k = cached_kernel(2.5);
  const int64_t steps = 6;
  auto layers = k_step_pmf(k, steps, 120);
  double mu = k.mu;
  double cut = mu * steps + 2.0 * std::sqrt(static_cast<double>(steps) *
                                            std::log(static_cast<double>(steps)));
  double worst = 0.0;
  int in_region = 0;
  for (int64_t n = static_cast<int64_t>(std::ceil(cut)); n <= 120; ++n) {
    double x = static_cast<double>(n) - mu * steps;
    double env = static_cast<double>(steps) * k.sv(x) *
                 std::exp(-(2.0 + k.alpha) * std::log(x)) / k.norm;
    double ratio = layers[steps].at(n, n).to_double() / env;
    worst = std::max(worst, ratio);
    ++in_region;
  }
  CHECK(in_region > 50);
  CHECK(worst < 50.0);
  CHECK(worst > 0.0);
}

TEST_CASE("diagonal exponent fits land on the predicted indices") {
  struct Row {
    double alpha, expect, tol;
  } rows[] = {{0.5, -1.5, 0.15}, {1.5, -2.0 / 3.0, 0.1}};
  for (auto r : rows) {
    const KernelSpec& k = cached_kernel(r.alpha);
    RenewalMassGrid u = renewal_mass(k, 512, 512);
    ExponentFit f = fit_diagonal_exponent(u, 32, 512);
    CHECK(std::fabs(f.slope - r.expect) < r.tol);
    CHECK(f.n_points == 5);
  }
}

TEST_CASE("off-diagonal decay is at least as fast as the tail exponent") {
  const KernelSpec& k = cached_kernel(1.5);
  RenewalMassGrid u = renewal_mass(k, 256, 768);
  ExponentFit f = fit_offdiagonal_exponent(u, 256, 32, 512);
  CHECK(f.slope <= -(1.0 + k.alpha) + 0.2);
  CHECK_THROWS_AS(fit_offdiagonal_exponent(u, 256, 32, 128), RangeError);
}

TEST_CASE("contact counts grow like N^alpha for terminating kernels") {
  const KernelSpec& k = cached_kernel(0.5);
  ContactScaling cs =
      contact_count_scaling(k, {64, 128, 256, 512}, 1.0, 400, 20240818);
  for (double m : cs.median) CHECK(m >= 1.0);
  CHECK(std::fabs(cs.fit.slope - 0.5) < 0.2);
  CHECK_THROWS_AS(contact_count_scaling(cached_kernel(1.5), {64, 128, 256, 512}, 1.0,
                                        10, 1),
                  ConfigError);
}

TEST_CASE("budget and range guards") {
  const KernelSpec& k = cached_kernel(1.5);
  CHECK_THROWS_AS(renewal_mass(k, 1500, 1500), RangeError);   // beyond t_max
  CHECK_THROWS_AS(renewal_mass(k, 900, 900, 1e6), BudgetError);
  CHECK_THROWS_AS(renewal_mass_naive(k, 97, 20), BudgetError);
  CHECK_THROWS_AS(k_step_pmf(k, 65, 10), RangeError);
}
