#include "gps/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gps {

namespace {

constexpr double kClampFloor = -1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared clamp policy for inversion outputs: cancellation noise in
// [kClampFloor, 0) becomes 0; anything more negative falsifies the
// probabilistic reading of the table and aborts.
double clamp_mass(double x, int64_t& counter, const char* what) {
  if (x >= 0.0) return x;
  if (x < kClampFloor) throw RangeError(std::string(what) + ": cancellation exceeds tolerance");
  ++counter;
  return 0.0;
}

}  // namespace

IntersectionTables intersection_tables(const RenewalMassGrid& u, int64_t q_cap) {
  if (q_cap < 1) throw ConfigError("intersection tables: q_cap must be positive");
  IntersectionTables t;
  t.N = u.N;
  t.M = u.M;
  t.q_size = std::min({u.N, u.M, q_cap});
  t.s_max = std::min(u.N, u.M);

  t.v.assign(t.N + 1, std::vector<double>(t.M + 1, 0.0));
  for (int64_t n = 0; n <= t.N; ++n)
    for (int64_t m = 0; m <= t.M; ++m) {
      double x = u.at(n, m).to_double();
      t.v[n][m] = x * x;
    }

  // Running box sums, one long double accumulator per row sweep.
  t.U.assign(t.N + 1, std::vector<double>(t.M + 1, 0.0));
  for (int64_t n = 0; n <= t.N; ++n) {
    long double row = 0.0L;
    for (int64_t m = 0; m <= t.M; ++m) {
      row += t.v[n][m];
      t.U[n][m] = static_cast<double>(row + (n ? static_cast<long double>(t.U[n - 1][m]) : 0.0L));
    }
  }

  // Sequential inversion of v = delta_0 + q conv v on [1, q_size]^2.  Rows
  // i = n and columns j = m drop out on their own because v vanishes on the
  // axes, so the sum can run over the full open rectangle.
  const int64_t qs = t.q_size;
  t.q.assign(qs + 1, std::vector<double>(qs + 1, 0.0));
  long double qtot = 0.0L;
  for (int64_t n = 1; n <= qs; ++n)
    for (int64_t m = 1; m <= qs; ++m) {
      long double acc = 0.0L;
      for (int64_t i = 1; i < n; ++i) {
        const double* qi = t.q[i].data();
        const double* vr = t.v[n - i].data();
        double inner = 0.0;
        for (int64_t j = 1; j < m; ++j) inner += qi[j] * vr[m - j];
        acc += inner;
      }
      double val = static_cast<double>(t.v[n][m] - acc);
      val = clamp_mass(val, t.clamped_q, "intersection inversion");
      t.q[n][m] = val;
      qtot += val;
    }
  t.sigma_total_mass = static_cast<double>(qtot);

  t.qpre.assign(qs + 1, std::vector<double>(qs + 1, 0.0));
  for (int64_t a = 1; a <= qs; ++a) {
    long double row = 0.0L;
    for (int64_t b = 1; b <= qs; ++b) {
      row += t.q[a][b];
      t.qpre[a][b] = static_cast<double>(row + static_cast<long double>(t.qpre[a - 1][b]));
    }
  }

  // One-dimensional reduction sbar = sigma^{(1)} + sigma^{(2)}.  Anti-diagonal
  // sums of v are exact for s <= min(N, M); beyond that the box truncates them.
  t.ubar.assign(t.s_max + 1, 0.0);
  for (int64_t s = 0; s <= t.s_max; ++s) {
    long double acc = 0.0L;
    for (int64_t n = std::max<int64_t>(0, s - t.M); n <= std::min(t.N, s); ++n)
      acc += t.v[n][s - n];
    t.ubar[s] = static_cast<double>(acc);
  }
  t.kbar.assign(t.s_max + 1, 0.0);
  t.tail.assign(t.s_max + 1, 0.0);
  long double cum = 0.0L;
  t.tail[0] = 1.0;
  if (t.s_max >= 1) t.tail[1] = 1.0;
  for (int64_t s = 2; s <= t.s_max; ++s) {
    long double acc = 0.0L;
    for (int64_t r = 2; r <= s - 2; ++r) acc += t.kbar[r] * t.ubar[s - r];
    double val = static_cast<double>(t.ubar[s] - acc);
    val = clamp_mass(val, t.clamped_kbar, "sbar inversion");
    t.kbar[s] = val;
    cum += val;
    t.tail[s] = std::max(0.0, static_cast<double>(1.0L - cum));
  }
  return t;
}

std::vector<double> overlap_mgf_batch(const IntersectionTables& t, double lambda,
                                      const std::vector<std::pair<int64_t, int64_t>>& boxes,
                                      double stop_above) {
  if (!(lambda == lambda) || lambda > 700.0)
    throw RangeError("overlap mgf: lambda outside the evaluable range");
  int64_t BN = 0, BM = 0;
  for (auto [N, M] : boxes) {
    if (N < 0 || M < 0 || N > t.q_size || M > t.q_size)
      throw RangeError("overlap mgf: box exceeds the inverted q range");
    BN = std::max(BN, N);
    BM = std::max(BM, M);
  }
  std::vector<double> out(boxes.size(), kInf);
  if (boxes.empty()) return out;
  if (lambda == 0.0) {
    // Exit over the last renewal point partitions the whole trajectory space.
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }

  // Tilted kernel entries e^lambda q[i][j], grouped by i+j and pruned at a
  // relative floor; the grouping lets the convolution run contiguously along
  // anti-diagonals with one scale factor per source diagonal.
  const double el = std::exp(lambda);
  double qmax = 0.0;
  for (int64_t i = 1; i <= t.q_size; ++i)
    for (int64_t j = 1; j <= t.q_size; ++j) qmax = std::max(qmax, t.q[i][j]);
  const double cutoff = qmax * 1e-18;
  const int64_t de_max = std::min<int64_t>(2 * t.q_size, BN + BM);
  std::vector<std::vector<std::pair<int64_t, double>>> group(de_max + 1);
  for (int64_t de = 2; de <= de_max; ++de)
    for (int64_t i = std::max<int64_t>(1, de - t.q_size);
         i <= std::min(t.q_size, de - 1); ++i) {
      double qv = t.q[i][de - i];
      if (qv > cutoff) group[de].emplace_back(i, qv * el);
    }

  // ubreve on the box [0,BN]x[0,BM], anti-diagonal layout with a shared power
  // of two per diagonal so mantissas stay in double range.
  const int64_t S = BN + BM;
  auto lo = [&](int64_t s) { return std::max<int64_t>(0, s - BM); };
  auto hi = [&](int64_t s) { return std::min(BN, s); };
  std::vector<std::vector<double>> val(S + 1);
  std::vector<int64_t> base(S + 1, 0);
  std::vector<double> cmax(S + 1, -kInf);  // base + log2(max mantissa), -inf if diag is zero
  for (int64_t s = 0; s <= S; ++s) val[s].assign(hi(s) - lo(s) + 1, 0.0);
  val[0][0] = 1.0;
  cmax[0] = 0.0;

  // Box bookkeeping: evaluate each requested box as soon as its last diagonal
  // is finished, stopping the whole build once a value clears stop_above.
  std::vector<size_t> order(boxes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return boxes[a].first + boxes[a].second < boxes[b].first + boxes[b].second;
  });
  std::vector<ScaledAcc> acc(boxes.size());
  auto absorb_diag = [&](int64_t s) {
    for (size_t i = 0; i < boxes.size(); ++i) {
      auto [N, M] = boxes[i];
      if (s > N + M) continue;
      int64_t a0 = std::max(lo(s), s - M), a1 = std::min(hi(s), N);
      for (int64_t a = a0; a <= a1; ++a) {
        double m = val[s][a - lo(s)];
        if (m == 0.0) continue;
        double w = 1.0 - t.qpre[N - a][M - (s - a)];
        if (w > 0.0) acc[i].add_me(m * w, base[s]);
      }
    }
  };
  auto finalize = [&](size_t i) {
    ScaledNonneg r = acc[i].result();
    if (r.is_zero()) return 0.0;
    double lg = r.log();
    if (lg > 700.0) {
      if (stop_above == kInf) throw RangeError("overlap mgf exceeds double range");
      return kInf;
    }
    return r.to_double();
  };

  size_t next_box = 0;
  absorb_diag(0);
  while (next_box < order.size() &&
         boxes[order[next_box]].first + boxes[order[next_box]].second == 0) {
    out[order[next_box]] = finalize(order[next_box]);
    ++next_box;
  }
  for (int64_t s = 1; s <= S; ++s) {
    int64_t base_t = 0;
    double top = -kInf;
    for (int64_t sd = 0; sd <= s - 2; ++sd) top = std::max(top, cmax[sd]);
    if (top > -kInf) base_t = static_cast<int64_t>(top);
    std::vector<double>& row = val[s];
    if (top > -kInf) {
      for (int64_t de = 2; de <= std::min(de_max, s); ++de) {
        const int64_t sd = s - de;
        if (cmax[sd] == -kInf || group[de].empty()) continue;
        const double f = pow2i(base[sd] - base_t);
        if (f == 0.0) continue;
        const double* src = val[sd].data();
        const int64_t slo = lo(sd), shi = hi(sd);
        for (auto [i, qe] : group[de]) {
          const double c = qe * f;
          int64_t n0 = std::max(lo(s), slo + i);
          int64_t n1 = std::min(hi(s), shi + i);
          double* dst = row.data() + (n0 - lo(s));
          const double* sp = src + (n0 - i - slo);
          for (int64_t n = n0; n <= n1; ++n) *dst++ += c * *sp++;
        }
      }
    }
    double g = 0.0;
    for (double x : row) g = std::max(g, x);
    base[s] = base_t;
    if (g == 0.0) {
      cmax[s] = -kInf;
    } else {
      int k = std::ilogb(g);
      if (k > 512 || k < -512) {
        const double sc = pow2i(-k);
        for (double& x : row) x *= sc;
        base[s] += k;
        g *= sc;
      }
      cmax[s] = static_cast<double>(base[s]) + std::log2(g);
    }
    absorb_diag(s);
    bool tripped = false;
    while (next_box < order.size() &&
           boxes[order[next_box]].first + boxes[order[next_box]].second == s) {
      size_t i = order[next_box];
      out[i] = finalize(i);
      ++next_box;
      if (out[i] > stop_above) tripped = true;
    }
    if (tripped) break;
  }
  return out;
}

double overlap_mgf(const IntersectionTables& t, double lambda, int64_t N, int64_t M) {
  return overlap_mgf_batch(t, lambda, {{N, M}}, kInf)[0];
}

TerminationReport sigma_termination_report(const IntersectionTables& t,
                                           const KernelSpec& k) {
  TerminationReport r;
  if (k.alpha > 1.0) {
    r.persistent = true;
    r.E_abs_sigma = {kInf, kInf};
    r.P_sigma1_finite = {1.0, 1.0};
    return r;
  }
  r.persistent = false;
  const int64_t N = std::min(t.N, t.M);
  if (N < 16) throw InconclusiveBracket("sigma termination: grid too small");
  // Dyadic block increments D(n) = U_{n,n} - U_{n/2,n/2}; when their ratio has
  // dropped below 0.8 the remaining mass is bounded by a geometric series,
  // doubled for safety.
  double D_half = t.U[N / 2][N / 2] - t.U[N / 4][N / 4];
  double D_last = t.U[N][N] - t.U[N / 2][N / 2];
  double U_NN = t.U[N][N];
  if (!(D_half > 0.0) || !(D_last > 0.0))
    throw InconclusiveBracket("sigma termination: vanishing increments");
  double ratio = D_last / D_half;
  if (ratio >= 0.8)
    throw InconclusiveBracket("sigma termination: increments not yet decaying");
  double remainder = 2.0 * D_last * ratio / (1.0 - ratio);
  r.E_abs_sigma = {U_NN, U_NN + remainder};
  r.P_sigma1_finite = {1.0 - 1.0 / r.E_abs_sigma.lo, 1.0 - 1.0 / r.E_abs_sigma.hi};
  return r;
}

double sigma_tail_constant(double rho) {
  const double pi = 3.14159265358979323846;
  return std::pow(2.0, rho) * std::sin(pi * rho) / (pi * rho);
}

std::vector<double> tail_constant_check(const IntersectionTables& t, double rho,
                                        const std::vector<int64_t>& N_list) {
  (void)rho;
  std::vector<double> out;
  out.reserve(N_list.size());
  for (int64_t N : N_list) {
    if (N < 0 || N > std::min(t.N, t.M) || N > t.s_max)
      throw RangeError("tail constant check: N outside the table range");
    out.push_back(t.tail[N] * t.U[N][N]);
  }
  return out;
}

double u_increment_slope(const IntersectionTables& t, int64_t N) {
  if (N < 4 || N % 4 != 0 || N > std::min(t.N, t.M))
    throw RangeError("U increment slope: N must be a multiple of 4 inside the grid");
  double D = t.U[N][N] - t.U[N / 2][N / 2];
  double Dp = t.U[N / 2][N / 2] - t.U[N / 4][N / 4];
  if (!(D > 0.0) || !(Dp > 0.0))
    throw InconclusiveBracket("U increment slope: vanishing increments");
  return std::log2(D / Dp);
}

double u_increment_ratio(const IntersectionTables& t, int64_t N) {
  if (N < 1 || N > std::min(t.N, t.M))
    throw RangeError("U increment ratio: N outside the grid");
  return (t.U[N][N] - t.U[N - 1][N - 1]) / t.U[N][N];
}

ExponentFit fit_U_exponent(const IntersectionTables& t, int64_t n_lo, int64_t n_hi) {
  if (n_lo < 1 || n_hi > std::min(t.N, t.M) || n_lo > n_hi)
    throw RangeError("U exponent fit: window outside the grid");
  std::vector<std::pair<double, double>> pts;
  for (int64_t n = n_lo; n <= n_hi; n *= 2)
    pts.emplace_back(static_cast<double>(n), t.U[n][n]);
  if (pts.size() < 4)
    throw RangeError("exponent fit: fewer than four dyadic points in the window");
  return fit_log_log(pts);
}

}  // namespace gps
