#include "gps/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<ScaledNonneg>> dense_from(const DiagGridD& g) {
  std::vector<std::vector<ScaledNonneg>> out(g.N + 1,
                                             std::vector<ScaledNonneg>(g.M + 1));
  for (int64_t n = 0; n <= g.N; ++n)
    for (int64_t m = 0; m <= g.M; ++m) out[n][m] = g.at(n, m);
  return out;
}

std::vector<std::vector<ScaledNonneg>> dense_from(const DiagGridS& g) {
  std::vector<std::vector<ScaledNonneg>> out(g.N + 1,
                                             std::vector<ScaledNonneg>(g.M + 1));
  for (int64_t n = 0; n <= g.N; ++n)
    for (int64_t m = 0; m <= g.M; ++m) out[n][m] = g.at(n, m);
  return out;
}

}  // namespace

ModelParams make_params(double beta, double h, int64_t gamma_p, int64_t gamma_q) {
  if (!(beta >= 0.0)) throw ConfigError("model params: beta must be nonnegative");
  if (!std::isfinite(h)) throw ConfigError("model params: h must be finite");
  if (gamma_p < 1 || gamma_q < 1)
    throw ConfigError("model params: gamma must be a positive fraction p/q");
  int64_t g = std::gcd(gamma_p, gamma_q);
  return {beta, h, gamma_p / g, gamma_q / g};
}

int64_t gamma_M(const ModelParams& pr, int64_t N) {
  return N * pr.gamma_p / pr.gamma_q;
}

PartitionGrid constrained_partition(const KernelSpec& k, const ModelParams& params,
                                    const std::optional<DisorderField>& field,
                                    int64_t N, int64_t M, double max_ops) {
  PartitionGrid g;
  g.N = N;
  g.M = M;
  g.params = params;
  g.field = field;
  std::vector<double> kg = kernel_gap_table(k, N + M);
  std::vector<DpSeed> seeds{{0, 0, ScaledNonneg::one()}};
  DpOptions opt;
  opt.max_ops = max_ops;
  if (!field) {
    const double z0 = std::exp(params.h);
    opt.symmetric = (N == M);
    g.z = dense_from(run_self_dp<PolicyD>(
        N, M, kg, [z0](int64_t, int64_t) { return z0; }, seeds, opt));
  } else {
    const DisorderField& f = *field;
    const double beta = params.beta, h = params.h;
    g.z = dense_from(run_self_dp<PolicyS>(
        N, M, kg,
        [&f, beta, h](int64_t n, int64_t m) {
          return std::exp(beta * f.omega(n, m) + h);
        },
        seeds, opt));
  }
  return g;
}

double free_partition(const PartitionGrid& grid, const KernelSpec& k) {
  ScaledAcc acc;
  for (int64_t n = 0; n <= grid.N; ++n)
    for (int64_t m = 0; m <= grid.M; ++m) {
      const ScaledNonneg& z = grid.z[n][m];
      if (z.is_zero()) continue;
      double w = k.exit_weight(grid.N - n, grid.M - m);
      if (w > 0.0) acc.add(z.mul_double(w));
    }
  return acc.result().log();
}

double rectangle_partition(const KernelSpec& k, const ModelParams& params,
                           const std::optional<DisorderField>& field,
                           int64_t a1, int64_t b1, int64_t a2, int64_t b2,
                           double max_ops) {
  if (a1 > a2 || b1 > b2)
    throw RangeError("rectangle partition: corners must be ordered");
  if (a1 == a2 && b1 == b2) return 0.0;
  if (a1 == a2 || b1 == b2) return -kInf;
  std::optional<DisorderField> shifted = field;
  if (shifted) {
    shifted->shift_n += a1;
    shifted->shift_m += b1;
  }
  PartitionGrid g =
      constrained_partition(k, params, shifted, a2 - a1, b2 - b1, max_ops);
  return g.logZ(a2 - a1, b2 - b1);
}

std::vector<FreeEnergyEstimate> quenched_free_energy(
    const KernelSpec& k, const ModelParams& params, const DisorderSpec& spec,
    const std::vector<int64_t>& N_list, int64_t replicas, double max_ops) {
  if (replicas < 1) throw ConfigError("quenched free energy: need replicas >= 1");
  std::vector<FreeEnergyEstimate> out;
  out.reserve(N_list.size());
  for (int64_t N : N_list) {
    FreeEnergyEstimate e;
    e.N = N;
    e.M = gamma_M(params, N);
    e.gamma = static_cast<double>(params.gamma_p) / static_cast<double>(params.gamma_q);
    e.is_lower_bound = (N % params.gamma_q == 0);
    e.replica_values.reserve(replicas);
    long double sum = 0.0L, sum2 = 0.0L;
    for (int64_t r = 0; r < replicas; ++r) {
      DisorderField f{spec, static_cast<uint32_t>(r), 0, 0};
      PartitionGrid g = constrained_partition(k, params, f, N, e.M, max_ops);
      double v = g.logZ(N, e.M) / static_cast<double>(N);
      e.replica_values.push_back(v);
      sum += v;
      sum2 += static_cast<long double>(v) * v;
    }
    double R = static_cast<double>(replicas);
    e.mean = static_cast<double>(sum) / R;
    if (replicas > 1) {
      double var = std::max(0.0, static_cast<double>(sum2 / R) - e.mean * e.mean) *
                   (R / (R - 1.0));
      e.ci95 = 1.96 * std::sqrt(var / R);
    }
    out.push_back(std::move(e));
  }
  return out;
}

AnnealedQuantities annealed_quantities(const KernelSpec& k, const ModelParams& params,
                                       const DisorderSpec& spec, int64_t N, int64_t M,
                                       double max_ops) {
  AnnealedQuantities a;
  double lq = log_mgf(spec.family, params.beta);
  a.h_c_annealed = -lq;
  ModelParams shifted = params;
  shifted.beta = 0.0;
  shifted.h = params.h + lq;
  PartitionGrid g = constrained_partition(k, shifted, std::nullopt, N, M, max_ops);
  a.log_EZ = g.logZ(N, M);
  a.log_EZ_over_N = a.log_EZ / static_cast<double>(N);
  return a;
}

HomogScan homogeneous_critical_scan(const KernelSpec& k, const ModelParams& params,
                                    const std::vector<double>& h_list, int64_t N,
                                    double max_ops) {
  HomogScan scan;
  const int64_t M = gamma_M(params, N);
  std::vector<std::pair<double, double>> pts;
  for (double h : h_list) {
    ModelParams pr = params;
    pr.beta = 0.0;
    pr.h = h;
    PartitionGrid g = constrained_partition(k, pr, std::nullopt, N, M, max_ops);
    HomogScanRow row;
    row.h = h;
    row.F_N = g.logZ(N, M) / static_cast<double>(N);
    row.F_over_h = (h != 0.0) ? row.F_N / h : 0.0;
    row.below_corr_length = !(static_cast<double>(N) * row.F_N >= 10.0);
    scan.rows.push_back(row);
    if (h > 0.0 && row.F_N > 0.0) pts.emplace_back(h, row.F_N);
  }
  // Short scans (single-h slope checks) carry no fit; n_points stays 0.
  if (pts.size() >= 3) scan.fit = fit_log_log(pts);
  return scan;
}

SandwichReport sandwich_check(const PartitionGrid& grid, const KernelSpec& k) {
  SandwichReport r;
  double logZf = free_partition(grid, k);
  double logZc = grid.logZ(grid.N, grid.M);
  r.log_ratio = logZf - logZc;
  double disorder_term = 0.0;
  if (grid.field) {
    const DisorderField& f = *grid.field;
    double boundary = -kInf;
    for (int64_t n = 1; n <= grid.N; ++n) boundary = std::max(boundary, f.omega(n, grid.M));
    for (int64_t m = 1; m <= grid.M; ++m) boundary = std::max(boundary, f.omega(grid.N, m));
    disorder_term =
        grid.params.beta * (std::fabs(f.omega(grid.N, grid.M)) + boundary);
  }
  r.envelope = (3.0 + (k.alpha + 0.1)) * std::log(static_cast<double>(grid.N + grid.M)) +
               disorder_term + 5.0;
  r.ok = (r.log_ratio >= -1e-12) && (r.log_ratio <= r.envelope);
  return r;
}

bool superadditivity_check(const KernelSpec& k, const ModelParams& params,
                           const DisorderSpec& spec, int64_t j1, int64_t j2,
                           uint32_t replica_id, double max_ops) {
  if (j1 < 1 || j2 < 1) throw ConfigError("super-additivity: blocks must be positive");
  const int64_t q = params.gamma_q, p = params.gamma_p;
  DisorderField f{spec, replica_id, 0, 0};
  DisorderField f2{spec, replica_id, j1 * q, j1 * p};
  PartitionGrid whole =
      constrained_partition(k, params, f, (j1 + j2) * q, (j1 + j2) * p, max_ops);
  PartitionGrid left = constrained_partition(k, params, f, j1 * q, j1 * p, max_ops);
  PartitionGrid right = constrained_partition(k, params, f2, j2 * q, j2 * p, max_ops);
  ScaledNonneg product =
      left.at(j1 * q, j1 * p) * right.at(j2 * q, j2 * p);
  return product <= whole.at((j1 + j2) * q, (j1 + j2) * p);
}

}  // namespace gps
