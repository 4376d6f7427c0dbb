#pragma once

// Intersection renewal sigma = tau cap tau': overlap mass U, inter-arrival
// inversion, termination diagnostics, and the exact overlap-count MGF.

#include <cstdint>
#include <utility>
#include <vector>

#include "gps/renewal.hpp"

namespace gps {

// All dense tables are plain doubles: every entry is a probability or a
// partial sum of probabilities over a finite box, so the dynamic range is
// mild.  q is inverted only on [1, q_size]^2 (cost grows like q_size^4),
// while the one-dimensional reduction sbar = sigma1 + sigma2 covers the full
// grid diagonal in O(s_max^2).
struct IntersectionTables {
  int64_t N = 0, M = 0;
  int64_t q_size = 0;       // q and qpre live on [0, q_size]^2
  int64_t s_max = 0;        // ubar/kbar/tail valid for s in [0, s_max]
  std::vector<std::vector<double>> v;     // v[n][m] = u[n][m]^2, renewal mass of sigma
  std::vector<std::vector<double>> q;     // inter-arrival law P(sigma_1 = (n,m))
  std::vector<std::vector<double>> qpre;  // qpre[a][b] = sum_{i<=a, j<=b} q[i][j]
  std::vector<std::vector<double>> U;     // U[a][b] = sum_{n<=a, m<=b} v[n][m]
  std::vector<double> ubar;  // ubar[s] = sum_{n+m=s} v[n][m]
  std::vector<double> kbar;  // one-dimensional inter-arrival law of sbar
  std::vector<double> tail;  // tail[s] = P(sbar_1 > s) = 1 - sum_{t<=s} kbar[t]
  double sigma_total_mass = 0.0;  // sum of q over its box
  int64_t clamped_q = 0;          // tiny negatives clamped during inversion
  int64_t clamped_kbar = 0;
};

// Squares the renewal mass, inverts it into the inter-arrival law (clamping
// cancellation noise in [-1e-14, 0) and aborting on anything more negative),
// and fills the running sums and one-dimensional tail tables.
IntersectionTables intersection_tables(const RenewalMassGrid& u, int64_t q_cap = 512);

// Exact E^{x2}[exp(lambda |sigma cap (0,N]x(0,M]|)] via the tilted renewal
// ubreve = delta_0 + e^lambda (q conv ubreve).  Requires N, M <= q_size.
double overlap_mgf(const IntersectionTables& t, double lambda, int64_t N, int64_t M);

// Batch variant: one tilted-grid build sized to the largest box serves every
// (N, M) in `boxes`.  Boxes are evaluated in order of N+M; once a finished
// value exceeds stop_above the build stops and the remaining entries are
// +infinity.  With the default stop the full batch is computed and a value
// beyond double range raises RangeError.
std::vector<double> overlap_mgf_batch(const IntersectionTables& t, double lambda,
                                      const std::vector<std::pair<int64_t, int64_t>>& boxes,
                                      double stop_above);

struct TerminationReport {
  Bracket E_abs_sigma;       // E|sigma| counting the origin
  Bracket P_sigma1_finite;   // termination parameter p
  bool persistent = false;
};

// alpha>1: persistent, E|sigma| infinite.  alpha<1: brackets E|sigma| between
// U_{N,N} and U_{N,N} plus a doubled geometric extrapolation of the dyadic
// increment ratio; raises InconclusiveBracket when the increments have not
// entered their decaying regime.
TerminationReport sigma_termination_report(const IntersectionTables& t,
                                           const KernelSpec& k);

// Closed form 2^rho sin(pi rho) / (pi rho).
double sigma_tail_constant(double rho);

// Products P(sbar_1 > N) * U_{N,N} for each N; the sequence approaches
// sigma_tail_constant(rho) when the kernel index is alpha = 1/(1-rho) > 1.
std::vector<double> tail_constant_check(const IntersectionTables& t, double rho,
                                        const std::vector<int64_t>& N_list);

// Log-log fit of U_{N,N} over the dyadic points of [n_lo, n_hi].  At any
// feasible grid this direct fit is biased well below the asymptotic growth
// exponent by the additive constant in U (the mass already accumulated at
// small scales); it is reported as-is for diagnostics.
ExponentFit fit_U_exponent(const IntersectionTables& t, int64_t n_lo, int64_t n_hi);

// Constant-free growth-exponent estimator: log2 of the ratio of consecutive
// dyadic block increments, log2((U_N - U_{N/2}) / (U_{N/2} - U_{N/4})).
double u_increment_slope(const IntersectionTables& t, int64_t N);

// Single-step relative increment (U_{N,N} - U_{N-1,N-1}) / U_{N,N}; vanishes
// as the grid grows exactly when U stays bounded (terminating sigma).
double u_increment_ratio(const IntersectionTables& t, int64_t N);

}  // namespace gps
