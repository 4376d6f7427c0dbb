#pragma once

// Partition functions of the pinned polymer: constrained, free, and
// rectangle-pinned partition grids, quenched and annealed free-energy
// estimates, and the finite-volume inequalities they obey.

#include <cstdint>
#include <optional>
#include <vector>

#include "gps/disorder.hpp"
#include "gps/dp.hpp"
#include "gps/renewal.hpp"

namespace gps {

// Aspect ratio gamma = p/q kept as a reduced fraction so block sizes in the
// super-additivity structure stay integral.
struct ModelParams {
  double beta = 0.0;
  double h = 0.0;
  int64_t gamma_p = 1;
  int64_t gamma_q = 1;
};

// Validates and reduces; beta must be nonnegative, p and q positive.
ModelParams make_params(double beta, double h, int64_t gamma_p, int64_t gamma_q);

// Second dimension of the gamma-shaped box, floor(N * p / q).
int64_t gamma_M(const ModelParams& pr, int64_t N);

// Exact constrained partition values Z^c_{n,m} on the full grid.  Cells are
// kept in scaled form: far below the pinned phase Z drains through e^{-cN}
// scales that a double cannot hold, while log extraction stays exact.
struct PartitionGrid {
  int64_t N = 0, M = 0;
  ModelParams params;
  std::optional<DisorderField> field;  // empty -> homogeneous weights
  std::vector<std::vector<ScaledNonneg>> z;

  const ScaledNonneg& at(int64_t n, int64_t m) const { return z[n][m]; }
  double logZ(int64_t n, int64_t m) const { return z[n][m].log(); }
};

// Builds the grid by the windowed anti-diagonal recursion with site weights
// z_{n,m} = exp(beta omega_{n,m} + h) (omega absent -> e^h).  The homogeneous
// path runs the faster fixed-exponent engine; disordered grids use fully
// scaled cells.
PartitionGrid constrained_partition(const KernelSpec& k, const ModelParams& params,
                                    const std::optional<DisorderField>& field,
                                    int64_t N, int64_t M, double max_ops = 4e10);

// log Z^f: free-endpoint sum Z^f = sum_{n,m} Z^c_{n,m} P_exit(n,m) with
// P_exit the probability that the next jump leaves the box.
double free_partition(const PartitionGrid& grid, const KernelSpec& k);

// log of the partition pinned at both rectangle corners; conventions:
// coincident corners give 1, agreement in exactly one coordinate gives 0.
double rectangle_partition(const KernelSpec& k, const ModelParams& params,
                           const std::optional<DisorderField>& field,
                           int64_t a1, int64_t b1, int64_t a2, int64_t b2,
                           double max_ops = 4e10);

struct FreeEnergyEstimate {
  int64_t N = 0, M = 0;
  double gamma = 1.0;
  std::vector<double> replica_values;  // (1/N) log Z^c per replica
  double mean = 0.0;
  double ci95 = 0.0;           // 1.96 * replica standard error
  bool is_lower_bound = false; // N divisible by q: super-additive lower bound
};

std::vector<FreeEnergyEstimate> quenched_free_energy(
    const KernelSpec& k, const ModelParams& params, const DisorderSpec& spec,
    const std::vector<int64_t>& N_list, int64_t replicas, double max_ops = 4e10);

struct AnnealedQuantities {
  double h_c_annealed = 0.0;   // -log Q(beta)
  double log_EZ = 0.0;         // exact log E Z^c_{N,M}
  double log_EZ_over_N = 0.0;
};

// E Z^c factorizes over sites, so the annealed value is the homogeneous grid
// at pinning h + log Q(beta); exact, no sampling.
AnnealedQuantities annealed_quantities(const KernelSpec& k, const ModelParams& params,
                                       const DisorderSpec& spec, int64_t N, int64_t M,
                                       double max_ops = 4e10);

struct HomogScanRow {
  double h = 0.0;
  double F_N = 0.0;        // (1/N) log Z^c at this h
  double F_over_h = 0.0;
  bool below_corr_length = false;  // N * F_N < 10: fit unreliable at this h
};

struct HomogScan {
  std::vector<HomogScanRow> rows;
  ExponentFit fit;  // log F against log h over the usable rows
};

HomogScan homogeneous_critical_scan(const KernelSpec& k, const ModelParams& params,
                                    const std::vector<double>& h_list, int64_t N,
                                    double max_ops = 4e10);

struct SandwichReport {
  bool ok = false;
  double log_ratio = 0.0;  // log Z^f - log Z^c, nonnegative
  double envelope = 0.0;
};

// Checks Z^c <= Z^f and the polynomial-plus-boundary-disorder envelope on
// log(Z^f/Z^c).
SandwichReport sandwich_check(const PartitionGrid& grid, const KernelSpec& k);

// Pathwise block inequality Z_{(j1+j2)q,(j1+j2)p} >= Z_{j1 q, j1 p} *
// Z_{j2 q, j2 p}(field shifted by the first block); evaluated exactly.
bool superadditivity_check(const KernelSpec& k, const ModelParams& params,
                           const DisorderSpec& spec, int64_t j1, int64_t j2,
                           uint32_t replica_id, double max_ops = 4e10);

}  // namespace gps
