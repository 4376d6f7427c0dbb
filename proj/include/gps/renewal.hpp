#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gps/disorder.hpp"
#include "gps/dp.hpp"
#include "gps/fit.hpp"
#include "gps/kernel.hpp"

namespace gps {

// The renewal mass grid u[n][m] = P((n,m) in tau) lives in diagonal layout
// with per-diagonal prefix sums (DiagGridD): u decays polynomially, so the
// shared-base representation is exact at the scales where cells matter.
using RenewalMassGrid = DiagGridD;

RenewalMassGrid renewal_mass(const KernelSpec& k, int64_t N, int64_t M,
                             double max_ops = 4e10);

// Defining-recursion route, O(N^2 M^2); the dual of the windowed engine.
std::vector<std::vector<ScaledNonneg>> renewal_mass_naive(const KernelSpec& k,
                                                          int64_t N, int64_t M);

// Inverse-CDF jump sampler: total t with probability (t-1)K(t) from a cached
// cumulative table, continuous Pareto fallback past the table; then the first
// coordinate uniform on {1,...,t-1}. In-box statistics are exact whenever
// t_max >= N+M, because fallback jumps always leave the box.
struct JumpSampler {
  explicit JumpSampler(const KernelSpec& k);
  std::pair<int64_t, int64_t> next_jump(RngStream& rng) const;

  const KernelSpec* k;
  std::vector<double> cum;  // cum[t] = sum_{s<=t} (s-1)K(s)
  double table_mass;
};

// All renewal points tau_0..tau_last with both coordinates inside [0,N]x[0,M],
// starting at the pinned origin.
std::vector<std::pair<int64_t, int64_t>> sample_renewal(const KernelSpec& k,
                                                        int64_t N, int64_t M,
                                                        RngStream& rng);
std::vector<std::pair<int64_t, int64_t>> sample_renewal(const JumpSampler& js,
                                                        int64_t N, int64_t M,
                                                        RngStream& rng);

// Exact laws P(tau_r = (n,m)) for r = 0..steps over the [0,N]^2 box, by
// repeated layered convolution.
std::vector<DiagGridD> k_step_pmf(const KernelSpec& k, int64_t steps, int64_t N,
                                  double max_ops = 4e10);

// Slope of log u[n][n] against log n over the dyadic points of [n_lo, n_hi].
ExponentFit fit_diagonal_exponent(const RenewalMassGrid& u, int64_t n_lo, int64_t n_hi);

// Slope of log u[n][n+r] against log r over the dyadic points of [r_lo, r_hi].
ExponentFit fit_offdiagonal_exponent(const RenewalMassGrid& u, int64_t n_fixed,
                                     int64_t r_lo, int64_t r_hi);

// Median contact count |tau cap box| (origin included) across sampled paths,
// per N, with M = floor(gamma N); slope of log median against log N.
struct ContactScaling {
  std::vector<int64_t> N;
  std::vector<double> median;
  ExponentFit fit;
};
ContactScaling contact_count_scaling(const KernelSpec& k,
                                     const std::vector<int64_t>& N_list, double gamma,
                                     int64_t n_paths, uint64_t master_seed);

}  // namespace gps
