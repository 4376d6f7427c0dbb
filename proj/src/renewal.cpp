#include "gps/renewal.hpp"

#include <algorithm>
#include <cmath>

namespace gps {

RenewalMassGrid renewal_mass(const KernelSpec& k, int64_t N, int64_t M,
                             double max_ops) {
  if (N < 0 || M < 0) throw RangeError("renewal mass: negative dimensions");
  if (N + M > k.t_max)
    throw RangeError("renewal mass: N+M exceeds the cached kernel range");
  DpOptions opt;
  opt.symmetric = (N == M);
  opt.max_ops = max_ops;
  std::vector<double> kg = kernel_gap_table(k, N + M);
  return run_self_dp<PolicyD>(
      N, M, kg, [](int64_t, int64_t) { return 1.0; },
      {DpSeed{0, 0, ScaledNonneg::one()}}, opt);
}

std::vector<std::vector<ScaledNonneg>> renewal_mass_naive(const KernelSpec& k,
                                                          int64_t N, int64_t M) {
  if (N > 96 || M > 96)
    throw BudgetError("naive renewal mass: reference route is capped at 96");
  std::vector<double> kg = kernel_gap_table(k, N + M);
  return naive_window_dp(
      N, M, kg, [](int64_t, int64_t) { return 1.0; }, ScaledNonneg::one());
}

JumpSampler::JumpSampler(const KernelSpec& kk) : k(&kk) {
  cum.assign(kk.t_max + 1, 0.0);
  long double run = 0.0L;
  for (int64_t t = 2; t <= kk.t_max; ++t) {
    run += (t - 1.0L) * kk.K(t);
    cum[t] = static_cast<double>(run);
  }
  table_mass = cum[kk.t_max];
}

std::pair<int64_t, int64_t> JumpSampler::next_jump(RngStream& rng) const {
  double u = rng.next_uniform();
  int64_t t;
  if (u <= table_mass) {
    auto it = std::lower_bound(cum.begin() + 2, cum.end(), u);
    t = it - cum.begin();
  } else {
    // Conditional uniform within the tail, mapped through the regularly
    // varying tail's inverse: continuous Pareto rounded up.
    double v = (1.0 - u) / std::max(1e-300, 1.0 - table_mass);
    v = std::min(1.0, std::max(1e-12, v));
    double raw = static_cast<double>(k->t_max) * std::pow(v, -1.0 / k->alpha);
    raw = std::min(raw, 9e15);
    t = static_cast<int64_t>(std::ceil(raw));
    if (t <= k->t_max) t = k->t_max + 1;
  }
  double u2 = rng.next_uniform();
  int64_t i = 1 + static_cast<int64_t>(std::floor(u2 * static_cast<double>(t - 1)));
  i = std::min(i, t - 1);
  return {i, t - i};
}

std::vector<std::pair<int64_t, int64_t>> sample_renewal(const JumpSampler& js,
                                                        int64_t N, int64_t M,
                                                        RngStream& rng) {
  std::vector<std::pair<int64_t, int64_t>> pts;
  int64_t n = 0, m = 0;
  pts.emplace_back(n, m);
  while (true) {
    auto [dn, dm] = js.next_jump(rng);
    n += dn;
    m += dm;
    if (n > N || m > M) break;
    pts.emplace_back(n, m);
  }
  return pts;
}

std::vector<std::pair<int64_t, int64_t>> sample_renewal(const KernelSpec& k,
                                                        int64_t N, int64_t M,
                                                        RngStream& rng) {
  JumpSampler js(k);
  return sample_renewal(js, N, M, rng);
}

std::vector<DiagGridD> k_step_pmf(const KernelSpec& k, int64_t steps, int64_t N,
                                  double max_ops) {
  if (steps < 0 || steps > 64) throw RangeError("k-step pmf: steps must be in [0,64]");
  if (2 * N > k.t_max) throw RangeError("k-step pmf: 2N exceeds the cached kernel range");
  DpOptions opt;
  opt.max_ops = max_ops;
  double per_layer = static_cast<double>(N + 1) * (N + 1) * N;
  if (per_layer * static_cast<double>(std::max<int64_t>(steps, 1)) > max_ops)
    throw BudgetError("k-step pmf: operation budget exceeded");
  std::vector<double> kg = kernel_gap_table(k, 2 * N);

  std::vector<DiagGridD> out;
  out.reserve(steps + 1);
  // Layer 0: the delta mass at the origin, materialized directly.
  DiagGridD delta;
  delta.N = N;
  delta.M = N;
  delta.val.resize(2 * N + 1);
  delta.F.resize(2 * N + 1);
  delta.B.resize(2 * N + 1);
  delta.base.assign(2 * N + 1, 0);
  for (int64_t s = 0; s <= 2 * N; ++s) {
    int64_t w = diag_hi(s, N) - diag_lo(s, N) + 1;
    delta.val[s].assign(w, 0.0);
    delta.F[s].assign(w, 0.0);
    delta.B[s].assign(w, 0.0);
  }
  delta.val[0][0] = delta.F[0][0] = delta.B[0][0] = 1.0;
  out.push_back(std::move(delta));
  for (int64_t r = 1; r <= steps; ++r)
    out.push_back(run_layered_dp<PolicyD>(
        out.back(), kg, [](int64_t, int64_t) { return 1.0; }, opt));
  return out;
}

namespace {

ExponentFit dyadic_fit(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 4)
    throw RangeError("exponent fit: fewer than four dyadic points in the window");
  return fit_log_log(pts);
}

}  // namespace

ExponentFit fit_diagonal_exponent(const RenewalMassGrid& u, int64_t n_lo, int64_t n_hi) {
  if (n_lo < 1 || n_hi > std::min(u.N, u.M) || n_lo > n_hi)
    throw RangeError("diagonal exponent fit: window outside the grid");
  std::vector<std::pair<double, double>> pts;
  for (int64_t n = n_lo; n <= n_hi; n *= 2)
    pts.emplace_back(static_cast<double>(n), u.at(n, n).to_double());
  return dyadic_fit(pts);
}

ExponentFit fit_offdiagonal_exponent(const RenewalMassGrid& u, int64_t n_fixed,
                                     int64_t r_lo, int64_t r_hi) {
  if (n_fixed < 1 || r_lo < 1 || n_fixed > u.N || n_fixed + r_hi > u.M || r_lo > r_hi)
    throw RangeError("off-diagonal exponent fit: window outside the grid");
  std::vector<std::pair<double, double>> pts;
  for (int64_t r = r_lo; r <= r_hi; r *= 2)
    pts.emplace_back(static_cast<double>(r), u.at(n_fixed, n_fixed + r).to_double());
  return dyadic_fit(pts);
}

ContactScaling contact_count_scaling(const KernelSpec& k,
                                     const std::vector<int64_t>& N_list, double gamma,
                                     int64_t n_paths, uint64_t master_seed) {
  if (!(k.alpha < 1.0))
    throw ConfigError("contact scaling: the terminating-side law needs alpha < 1");
  if (!(gamma > 0.0)) throw ConfigError("contact scaling: gamma must be positive");
  if (n_paths < 1) throw ConfigError("contact scaling: need at least one path");
  JumpSampler js(k);
  ContactScaling out;
  std::vector<std::pair<double, double>> pts;
  for (size_t idx = 0; idx < N_list.size(); ++idx) {
    int64_t N = N_list[idx];
    int64_t M = static_cast<int64_t>(std::floor(gamma * static_cast<double>(N)));
    std::vector<int64_t> counts(n_paths);
    for (int64_t p = 0; p < n_paths; ++p) {
      RngStream rng(master_seed,
                    static_cast<uint32_t>(idx * static_cast<size_t>(n_paths) + p));
      counts[p] = static_cast<int64_t>(sample_renewal(js, N, M, rng).size());
    }
    std::nth_element(counts.begin(), counts.begin() + n_paths / 2, counts.end());
    double med = static_cast<double>(counts[n_paths / 2]);
    out.N.push_back(N);
    out.median.push_back(med);
    pts.emplace_back(static_cast<double>(N), med);
  }
  out.fit = fit_log_log(pts);
  return out;
}

}  // namespace gps
