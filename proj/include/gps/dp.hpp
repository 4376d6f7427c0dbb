#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "gps/kernel.hpp"
#include "gps/scaled.hpp"

namespace gps {

// Lattice DP over the rectangle [0,N] x [0,M] for recursions of the shape
//   G(n,m) = site(n,m) * sum_{i<n, j<m} S(i,j) * kgap(n-i+m-j),
// with S = G itself (renewal / partition functions) or a fixed source grid
// (step-count layers). Grids are stored by anti-diagonal s = n+m with
// two-sided prefix sums per diagonal, so the inner sum over a source diagonal
// is one windowed difference; picking the smaller minuend keeps the relative
// error at cell level near machine precision even when the window carries a
// tiny fraction of the diagonal's mass.

inline int64_t diag_lo(int64_t s, int64_t M) { return s > M ? s - M : 0; }
inline int64_t diag_hi(int64_t s, int64_t N) { return s < N ? s : N; }

// Mode D: one shared power-of-two base per diagonal, double mantissas.
// Cheap; cells more than ~2^970 below their diagonal's peak flush to zero, so
// use it only where such cells cannot matter (plain renewal mass, homogeneous
// partition functions, moderately disordered grids).
struct DiagGridD {
  int64_t N = 0, M = 0;
  std::vector<std::vector<double>> val, F, B;
  std::vector<int64_t> base;

  ScaledNonneg at(int64_t n, int64_t m) const {
    int64_t s = n + m;
    double v = val[s][n - diag_lo(s, M)];
    if (v == 0.0) return ScaledNonneg::zero();
    ScaledNonneg r = ScaledNonneg::from_double(v);
    r.e += base[s];
    return r;
  }
  double log_at(int64_t n, int64_t m) const { return at(n, m).log(); }
};

// Mode S: every cell an individually scaled nonnegative; no flush, unbounded
// dynamic range. Roughly 3x the cost of mode D.
struct DiagGridS {
  int64_t N = 0, M = 0;
  std::vector<std::vector<ScaledNonneg>> val, F, B;

  ScaledNonneg at(int64_t n, int64_t m) const { return val[n + m][n - diag_lo(n + m, M)]; }
  double log_at(int64_t n, int64_t m) const { return at(n, m).log(); }
};

struct PolicyD {
  using Grid = DiagGridD;

  static void window_add(ScaledAcc& acc, const Grid& g, int64_t s, int64_t lo,
                         int64_t hi, double kfac) {
    const std::vector<double>& F = g.F[s];
    const std::vector<double>& B = g.B[s];
    double wsum;
    double fmin = F[hi];
    double bmin = B[lo];
    if (fmin <= bmin) {
      wsum = fmin - (lo > 0 ? F[lo - 1] : 0.0);
    } else {
      int64_t w = static_cast<int64_t>(B.size());
      wsum = bmin - (hi + 1 < w ? B[hi + 1] : 0.0);
    }
    if (wsum > 0.0) acc.add_me(kfac * wsum, g.base[s]);
  }

  static void store_diag(Grid& g, int64_t s, const std::vector<ScaledNonneg>& vals) {
    int64_t w = static_cast<int64_t>(vals.size());
    int64_t base = INT64_MIN;
    for (const ScaledNonneg& v : vals)
      if (!v.is_zero() && v.e > base) base = v.e;
    if (base == INT64_MIN) base = 0;
    g.base[s] = base;
    std::vector<double>& val = g.val[s];
    std::vector<double>& F = g.F[s];
    std::vector<double>& B = g.B[s];
    val.assign(w, 0.0);
    F.assign(w, 0.0);
    B.assign(w, 0.0);
    for (int64_t i = 0; i < w; ++i) {
      const ScaledNonneg& v = vals[i];
      if (v.is_zero()) continue;
      int64_t gap = v.e - base;
      if (gap >= -1000) val[i] = v.m * pow2i(gap);
    }
    double run = 0.0;
    for (int64_t i = 0; i < w; ++i) F[i] = (run += val[i]);
    run = 0.0;
    for (int64_t i = w - 1; i >= 0; --i) B[i] = (run += val[i]);
  }
};

struct PolicyS {
  using Grid = DiagGridS;

  static void window_add(ScaledAcc& acc, const Grid& g, int64_t s, int64_t lo,
                         int64_t hi, double kfac) {
    const std::vector<ScaledNonneg>& F = g.F[s];
    const std::vector<ScaledNonneg>& B = g.B[s];
    ScaledNonneg wsum;
    if (F[hi] <= B[lo]) {
      wsum = sub_clamped(F[hi], lo > 0 ? F[lo - 1] : ScaledNonneg::zero());
    } else {
      int64_t w = static_cast<int64_t>(B.size());
      wsum = sub_clamped(B[lo], hi + 1 < w ? B[hi + 1] : ScaledNonneg::zero());
    }
    if (!wsum.is_zero()) acc.add(wsum.mul_double(kfac));
  }

  static void store_diag(Grid& g, int64_t s, const std::vector<ScaledNonneg>& vals) {
    int64_t w = static_cast<int64_t>(vals.size());
    g.val[s] = vals;
    std::vector<ScaledNonneg>& F = g.F[s];
    std::vector<ScaledNonneg>& B = g.B[s];
    F.assign(w, ScaledNonneg::zero());
    B.assign(w, ScaledNonneg::zero());
    ScaledNonneg run;
    for (int64_t i = 0; i < w; ++i) F[i] = (run = run + vals[i]);
    run = ScaledNonneg::zero();
    for (int64_t i = w - 1; i >= 0; --i) B[i] = (run = run + vals[i]);
  }
};

struct DpOptions {
  bool symmetric = false;  // N == M with a symmetric field: mirror half the work
  double max_ops = 4e10;
};

using DpSeed = std::tuple<int64_t, int64_t, ScaledNonneg>;

namespace detail {

inline void check_budget(int64_t N, int64_t M, const DpOptions& opt) {
  double S = static_cast<double>(N + M);
  double ops = static_cast<double>(N + 1) * static_cast<double>(M + 1) * S / 2.0;
  if (opt.symmetric) ops *= 0.5;
  if (ops > opt.max_ops) throw BudgetError("window DP: operation budget exceeded");
}

template <class Pol, class Site>
typename Pol::Grid run_dp(int64_t N, int64_t M, const std::vector<double>& kgap,
                          Site&& site, const std::vector<DpSeed>& seeds,
                          const typename Pol::Grid* source, const DpOptions& opt) {
  if (N < 0 || M < 0) throw RangeError("window DP: negative grid dimension");
  if (static_cast<int64_t>(kgap.size()) < N + M + 1)
    throw RangeError("window DP: kernel-by-gap table shorter than N+M");
  check_budget(N, M, opt);
  bool sym = opt.symmetric && N == M;

  typename Pol::Grid g;
  g.N = N;
  g.M = M;
  int64_t S = N + M;
  g.val.resize(S + 1);
  g.F.resize(S + 1);
  g.B.resize(S + 1);
  if constexpr (std::is_same_v<Pol, PolicyD>) g.base.resize(S + 1, 0);

  std::vector<std::vector<std::pair<int64_t, ScaledNonneg>>> seed_by_diag(S + 1);
  for (const DpSeed& sd : seeds) {
    auto [n, m, v] = sd;
    if (n < 0 || n > N || m < 0 || m > M) throw RangeError("window DP: seed out of grid");
    seed_by_diag[n + m].emplace_back(n, v);
  }

  std::vector<ScaledAcc> acc;
  std::vector<ScaledNonneg> vals;
  for (int64_t s = 0; s <= S; ++s) {
    int64_t a0 = diag_lo(s, M), a1 = diag_hi(s, N);
    int64_t w = a1 - a0 + 1;
    int64_t a_stop = sym ? a0 + (w - 1) / 2 : a1;  // inclusive compute bound
    acc.assign(w, ScaledAcc{});
    const typename Pol::Grid& src = source ? *source : g;
    for (int64_t d = 2; d <= s; ++d) {
      int64_t ssrc = s - d;
      if (ssrc < 0) break;
      double kf = kgap[d];
      if (kf == 0.0) continue;
      int64_t sa0 = diag_lo(ssrc, src.M), sa1 = diag_hi(ssrc, src.N);
      for (int64_t a = a0; a <= a_stop; ++a) {
        int64_t lo = std::max(sa0, a - d + 1);
        int64_t hi = std::min(sa1, a - 1);
        if (lo > hi) continue;
        Pol::window_add(acc[a - a0], src, ssrc, lo - sa0, hi - sa0, kf);
      }
    }
    vals.assign(w, ScaledNonneg::zero());
    for (int64_t a = a0; a <= a_stop; ++a) {
      ScaledNonneg v = acc[a - a0].result();
      if (!v.is_zero()) v = v.mul_double(site(a, s - a));
      vals[a - a0] = v;
    }
    if (sym)
      for (int64_t a = a0; a <= a_stop; ++a) vals[w - 1 - (a - a0)] = vals[a - a0];
    for (auto& [n, v] : seed_by_diag[s]) {
      int64_t i = n - a0;
      vals[i] = vals[i] + v;
    }
    Pol::store_diag(g, s, vals);
  }
  return g;
}

}  // namespace detail

// Self-recursive run: the grid being built feeds its own later diagonals.
template <class Pol, class Site>
typename Pol::Grid run_self_dp(int64_t N, int64_t M, const std::vector<double>& kgap,
                               Site&& site, const std::vector<DpSeed>& seeds,
                               const DpOptions& opt = {}) {
  return detail::run_dp<Pol>(N, M, kgap, std::forward<Site>(site), seeds, nullptr, opt);
}

// Layered run: every target diagonal reads the fixed source grid.
template <class Pol, class Site>
typename Pol::Grid run_layered_dp(const typename Pol::Grid& src,
                                  const std::vector<double>& kgap, Site&& site,
                                  const DpOptions& opt = {}) {
  return detail::run_dp<Pol>(src.N, src.M, kgap, std::forward<Site>(site), {}, &src, opt);
}

// Reference evaluation of the same recursion by the defining quadruple loop,
// kept deliberately independent of the windowed engine.
template <class Site>
std::vector<std::vector<ScaledNonneg>> naive_window_dp(int64_t N, int64_t M,
                                                       const std::vector<double>& kgap,
                                                       Site&& site,
                                                       ScaledNonneg seed00) {
  std::vector<std::vector<ScaledNonneg>> z(N + 1,
                                           std::vector<ScaledNonneg>(M + 1));
  z[0][0] = seed00;
  for (int64_t n = 0; n <= N; ++n)
    for (int64_t m = 0; m <= M; ++m) {
      if (n == 0 || m == 0) continue;
      ScaledAcc acc;
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) {
          if (z[i][j].is_zero()) continue;
          acc.add(z[i][j].mul_double(kgap[n - i + m - j]));
        }
      ScaledNonneg v = acc.result();
      if (!v.is_zero()) v = v.mul_double(site(n, m));
      z[n][m] = v;
    }
  return z;
}

// Kernel gap table covering gaps up to len, taken from the cached kernel.
inline std::vector<double> kernel_gap_table(const KernelSpec& k, int64_t len) {
  if (len > k.t_max)
    throw RangeError("kernel gap table: length exceeds the cached kernel range");
  std::vector<double> kg(len + 1, 0.0);
  for (int64_t d = 2; d <= len; ++d) kg[d] = k.K(d);
  return kg;
}

}  // namespace gps
