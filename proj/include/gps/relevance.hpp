#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "gps/intersection.hpp"
#include "gps/polymer.hpp"

namespace gps {

// Disorder-relevance diagnostics and the deterministic fractional-moment
// delocalization certificate.  All bounds produced here are rigorous upper
// bounds up to floating-point rounding, which is compensated by explicit
// upward inflation wherever a comparison against a hard threshold follows.

// E[(Z^f)^2] at the annealed critical point h = -log Q(beta), which reduces
// exactly to the two-replica overlap MGF at lambda = log Q(2 beta)
// - 2 log Q(beta).  Values are exact up to rounding; beta = 0 gives
// identically 1.  Boxes are (N, floor(N p / q)).
struct SecondMomentCurve {
  double beta = 0.0;
  double lambda = 0.0;
  std::vector<int64_t> N_list;
  std::vector<double> values;
};
SecondMomentCurve second_moment_curve(const IntersectionTables& t,
                                      DisorderFamily family, double beta,
                                      const std::vector<int64_t>& N_list,
                                      int64_t gamma_p, int64_t gamma_q,
                                      double stop_above =
                                          std::numeric_limits<double>::infinity());

// Critical disorder strength: the beta at which the overlap MGF excess
// log Q(2 beta) - 2 log Q(beta) reaches -log P(sigma_1 finite).  Requires a
// terminating intersection renewal (alpha < 1); persistent kernels give
// {0, 0}.  The bracket reflects the termination-probability bracket; an
// endpoint is +infinity when the bounded excess of the family never reaches
// the target (bounded-disorder irrelevance at all strengths).
Bracket compute_beta1(const IntersectionTables& t, const KernelSpec& k,
                      DisorderFamily family);

// Largest N on {1, ..., N_max} whose second-moment value stays <= 2, the
// finite-size correlation volume proxy.  When even N_max stays <= 2 the
// result is only a lower bound and is flagged as such.
struct NBetaResult {
  int64_t N_beta = 0;
  bool lower_bound_only = false;
};
NBetaResult compute_N_beta(const IntersectionTables& t, DisorderFamily family,
                           double beta, int64_t gamma_p, int64_t gamma_q,
                           int64_t N_max);

// Fractional-moment bound by Jensen: E[Z^delta] <= (E Z)^delta, with E Z the
// homogeneous partition function at h + log Q(beta).  `coarse` reports the
// weaker e^delta * u_{i,j}^delta comparison value computed from the bare
// renewal mass; it is not used by the certificate.
struct JensenBound {
  double bound = 0.0;
  double coarse = 0.0;
};
JensenBound frac_moment_jensen_bound(const KernelSpec& k,
                                     const ModelParams& params,
                                     DisorderFamily family, int64_t i,
                                     int64_t j, double delta);

// Fractional-moment bound by the diagonal-strip change of measure: a Holder
// split of E[Z^delta] against a measure that tilts each site inside
// {|n - m| <= 2 ell} by -lambda.  Requires |lambda| <= min(1, (1-delta)/delta)
// so the conjugate moment exists; lambda = 0 reduces exactly to Jensen.
double frac_moment_tilt_bound(const KernelSpec& k, const ModelParams& params,
                              DisorderFamily family, int64_t i, int64_t j,
                              double delta, double lambda, double ell);

// Monte Carlo estimate of E[Z^delta] from exact per-replica partition
// functions.  A soundness spot-check for the bounds above; never feeds the
// certificate.
struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;
};
McEstimate frac_moment_mc(const KernelSpec& k, const ModelParams& params,
                          const DisorderSpec& spec, int64_t i, int64_t j,
                          double delta, int64_t replicas);

// The three grouped remainder sums of the coarse-grained fractional-moment
// recursion for a block-corner grid A (k x k, A[0][0] = 1, axis cells 0):
//   rho1 = Ez * sum_{i,j<k} A[i][j] T2(2k-i-j)
//   rho2 = Ez * sum_{n=1}^{k-1} sum_{i<n} sum_{j<k} A[i][j] T1(n-i+k-j)
//   rho3 = the axes-swapped rho2 (equal when A is symmetric).
// Ez_delta is E[z^delta] = e^{delta h} Q(delta beta).  Results carry an
// upward (1 + n u) rounding inflation so that sum() <= 1 is a safe test.
struct RhoTerms {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double sum() const { return rho1 + rho2 + rho3; }
};
RhoTerms rho_terms(const std::vector<std::vector<double>>& A_upper,
                   const TailSumTable& tails, double Ez_delta);

// Exact three-term decomposition of the constrained partition function by the
// last renewal point outside the corner block [N-k, N] x [M-k, M] and the
// first point inside it.  Checks the regrouped sum against the direct value;
// k_scale = 1 degenerates to the last-jump recursion itself.
struct DecompositionCheck {
  double direct_log = 0.0;
  double decomposed_log = 0.0;
  double rel_err = 0.0;
  bool ok = false;
};
DecompositionCheck decomposition_identity_check(
    const KernelSpec& k, const ModelParams& params,
    const std::optional<DisorderField>& field, int64_t N, int64_t M,
    int64_t k_scale, double tol = 1e-10);

// Coarse-graining scale and strip half-width schedules used by the
// certificate driver when alpha > 1; epsilon is the schedule's slack knob.
int64_t def_k_scale(double alpha, double beta, double epsilon);
double def_ell(double alpha, double i, double epsilon);

enum class BoundSource : uint8_t { identity, axis, jensen, holder_tilt };

struct CertificateReport {
  double beta = 0.0, h = 0.0, delta = 0.0;
  int64_t k_scale = 0;
  double h_c_annealed = 0.0;
  double gap = 0.0;  // h - h_c_annealed, the shift being certified
  double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0;
  bool certified = false;
  double shift_lower_bound = 0.0;  // gap when certified, else 0
  bool alpha_gt2_condition = true;
  std::vector<std::vector<double>> A_upper;
  std::vector<std::vector<BoundSource>> which_bound;
  int64_t cells_jensen = 0, cells_tilt = 0;
  int64_t candidates = 0;  // tilt (lambda, ell) pairs evaluated
  double rho_sum() const { return rho1 + rho2 + rho3; }
};

struct CertOptions {
  double epsilon = 0.5;      // schedule slack for def_ell candidates
  int64_t lambda_grid = 8;   // log-spaced lambda candidates per ell
  double max_ops = 4e10;
  // Both non-empty: their cross product replaces the automatic candidate
  // schedule (each lambda must be admissible for the chosen delta).
  std::vector<double> lambda_override;
  std::vector<double> ell_override;
};

// Deterministic delocalization certificate at (beta, h): builds the k x k
// grid of fractional-moment upper bounds (best of Jensen and the admissible
// tilt candidates per cell), folds it through rho_terms, and certifies
// delocalization when rho1 + rho2 + rho3 <= 1.  Preconditions: h above the
// annealed critical point with gap * k_scale <= 1, and (2+alpha)*delta > 2.
CertificateReport deloc_certificate(const KernelSpec& k, DisorderFamily family,
                                    double beta, double h, double delta,
                                    int64_t k_scale,
                                    const CertOptions& opt = {});

}  // namespace gps
