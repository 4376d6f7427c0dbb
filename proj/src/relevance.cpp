#include "gps/relevance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <utility>

#include "gps/dp.hpp"
#include "gps/renewal.hpp"

namespace gps {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamped_lambda(DisorderFamily family, double beta) {
  // The overlap tilt log Q(2b) - 2 log Q(b) is nonnegative; rounding can
  // leave a -1ulp residue for the bounded family.
  return std::max(0.0, log_mgf(family, 2.0 * beta) - 2.0 * log_mgf(family, beta));
}

void check_gamma(int64_t gamma_p, int64_t gamma_q) {
  if (gamma_p < 1 || gamma_q < 1)
    throw ConfigError("relevance: aspect ratio parts must be positive");
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("fractional moment: delta must lie in (0,1)");
}

double admissible_lambda_max(double delta) {
  return std::min(1.0, (1.0 - delta) / delta);
}

// log of the per-strip-cell Holder penalty Q(-l)^d Q(l d/(1-d))^(1-d).
double holder_log_penalty(DisorderFamily f, double delta, double lambda) {
  return delta * log_mgf(f, -lambda) +
         (1.0 - delta) * log_mgf(f, lambda * delta / (1.0 - delta));
}

// #{(n,m) in [1,i] x [1,j] : |n - m| <= W}.
int64_t strip_count(int64_t i, int64_t j, int64_t W) {
  int64_t c = 0;
  for (int64_t n = 1; n <= i; ++n) {
    int64_t lo = std::max<int64_t>(1, n - W), hi = std::min(j, n + W);
    if (hi >= lo) c += hi - lo + 1;
  }
  return c;
}

// Homogeneous grid whose site weight takes one value inside the diagonal
// strip |n - m| <= W and another outside it.
DiagGridD two_weight_grid(const KernelSpec& k, double log_in, double log_out,
                          int64_t W, int64_t Sn, int64_t Sm, double max_ops) {
  std::vector<double> kg = kernel_gap_table(k, Sn + Sm);
  std::vector<DpSeed> seeds{{0, 0, ScaledNonneg::one()}};
  DpOptions opt;
  opt.max_ops = max_ops;
  opt.symmetric = (Sn == Sm);
  const double win = std::exp(log_in), wout = std::exp(log_out);
  return run_self_dp<PolicyD>(
      Sn, Sm, kg,
      [win, wout, W](int64_t n, int64_t m) {
        return (std::llabs(n - m) <= W) ? win : wout;
      },
      seeds, opt);
}

PartitionGrid annealed_grid(const KernelSpec& k, const ModelParams& params,
                            DisorderFamily family, int64_t N, int64_t M,
                            double max_ops = 4e10) {
  ModelParams shifted = params;
  shifted.h = params.h + log_mgf(family, params.beta);
  shifted.beta = 0.0;
  return constrained_partition(k, shifted, std::nullopt, N, M, max_ops);
}

}  // namespace

SecondMomentCurve second_moment_curve(const IntersectionTables& t,
                                      DisorderFamily family, double beta,
                                      const std::vector<int64_t>& N_list,
                                      int64_t gamma_p, int64_t gamma_q,
                                      double stop_above) {
  check_gamma(gamma_p, gamma_q);
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ConfigError("second moment: beta must be finite and nonnegative");
  SecondMomentCurve c;
  c.beta = beta;
  c.lambda = clamped_lambda(family, beta);
  c.N_list = N_list;
  if (c.lambda == 0.0) {
    c.values.assign(N_list.size(), 1.0);
    return c;
  }
  std::vector<std::pair<int64_t, int64_t>> boxes;
  boxes.reserve(N_list.size());
  for (int64_t N : N_list) {
    if (N < 0) throw ConfigError("second moment: N must be nonnegative");
    boxes.emplace_back(N, (N * gamma_p) / gamma_q);
  }
  c.values = overlap_mgf_batch(t, c.lambda, boxes, stop_above);
  return c;
}

Bracket compute_beta1(const IntersectionTables& t, const KernelSpec& k,
                      DisorderFamily family) {
  TerminationReport term = sigma_termination_report(t, k);
  if (term.persistent) return Bracket{0.0, 0.0};
  auto solve = [family](double target) {
    if (!(target > 0.0)) return 0.0;
    if (!std::isfinite(target)) return kInf;
    auto g = [family](double b) { return clamped_lambda(family, b); };
    double hi = 1.0;
    while (g(hi) < target) {
      hi *= 2.0;
      if (hi > 1e9) return kInf;  // bounded excess never reaches the target
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
      double mid = 0.5 * (lo + hi);
      (g(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double p_hi = std::min(term.P_sigma1_finite.hi, 1.0);
  double p_lo = term.P_sigma1_finite.lo;
  double target_lo = -std::log(p_hi);
  double target_hi = (p_lo > 0.0) ? -std::log(p_lo) : kInf;
  return Bracket{solve(target_lo), solve(target_hi)};
}

NBetaResult compute_N_beta(const IntersectionTables& t, DisorderFamily family,
                           double beta, int64_t gamma_p, int64_t gamma_q,
                           int64_t N_max) {
  check_gamma(gamma_p, gamma_q);
  if (N_max < 1) throw ConfigError("N_beta: N_max must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ConfigError("N_beta: beta must be finite and nonnegative");
  double lambda = clamped_lambda(family, beta);
  if (lambda == 0.0) return NBetaResult{N_max, true};
  std::vector<std::pair<int64_t, int64_t>> boxes;
  boxes.reserve(N_max);
  for (int64_t N = 1; N <= N_max; ++N)
    boxes.emplace_back(N, (N * gamma_p) / gamma_q);
  std::vector<double> vals = overlap_mgf_batch(t, lambda, boxes, 2.0);
  NBetaResult r;
  for (int64_t N = N_max; N >= 1; --N)
    if (vals[N - 1] <= 2.0) {
      r.N_beta = N;
      break;
    }
  r.lower_bound_only = (vals[N_max - 1] <= 2.0);
  return r;
}

JensenBound frac_moment_jensen_bound(const KernelSpec& k,
                                     const ModelParams& params,
                                     DisorderFamily family, int64_t i,
                                     int64_t j, double delta) {
  check_delta(delta);
  if (i < 0 || j < 0) throw RangeError("jensen bound: indices must be nonnegative");
  if (i == 0 && j == 0) return JensenBound{1.0, 1.0};
  if (i == 0 || j == 0) return JensenBound{0.0, 0.0};
  PartitionGrid g = annealed_grid(k, params, family, i, j);
  JensenBound b;
  b.bound = std::exp(delta * g.logZ(i, j));
  RenewalMassGrid u = renewal_mass(k, i, j);
  b.coarse = std::exp(delta * (1.0 + u.at(i, j).log()));
  return b;
}

double frac_moment_tilt_bound(const KernelSpec& k, const ModelParams& params,
                              DisorderFamily family, int64_t i, int64_t j,
                              double delta, double lambda, double ell) {
  check_delta(delta);
  if (!(ell >= 0.0)) throw RangeError("tilt bound: ell must be nonnegative");
  if (!(std::fabs(lambda) <= admissible_lambda_max(delta)))
    throw RangeError("tilt bound: lambda outside the Holder-admissible range");
  if (i < 0 || j < 0) throw RangeError("tilt bound: indices must be nonnegative");
  if (i == 0 && j == 0) return 1.0;
  if (i == 0 || j == 0) return 0.0;
  const int64_t W = static_cast<int64_t>(std::floor(2.0 * ell));
  const double log_in = params.h + log_mgf(family, params.beta - lambda) -
                        log_mgf(family, -lambda);
  const double log_out = params.h + log_mgf(family, params.beta);
  DiagGridD g = two_weight_grid(k, log_in, log_out, W, i, j, 4e10);
  const double logpen = holder_log_penalty(family, delta, lambda);
  const double cnt = static_cast<double>(strip_count(i, j, W));
  return std::exp(delta * g.at(i, j).log() + cnt * logpen);
}

McEstimate frac_moment_mc(const KernelSpec& k, const ModelParams& params,
                          const DisorderSpec& spec, int64_t i, int64_t j,
                          double delta, int64_t replicas) {
  check_delta(delta);
  if (replicas < 2) throw ConfigError("fractional moment MC: need at least two replicas");
  if (i < 0 || j < 0) throw RangeError("fractional moment MC: indices must be nonnegative");
  long double sum = 0.0L, sum2 = 0.0L;
  for (int64_t r = 0; r < replicas; ++r) {
    DisorderField f{spec, static_cast<uint32_t>(r), 0, 0};
    double x;
    if (i == 0 && j == 0)
      x = 1.0;
    else if (i == 0 || j == 0)
      x = 0.0;
    else
      x = std::exp(delta * constrained_partition(k, params, f, i, j).logZ(i, j));
    sum += x;
    sum2 += static_cast<long double>(x) * x;
  }
  McEstimate e;
  const long double R = static_cast<long double>(replicas);
  e.mean = static_cast<double>(sum / R);
  long double var = (sum2 - sum * sum / R) / (R - 1.0L);
  e.std_err = static_cast<double>(std::sqrt(std::max(var, 0.0L) / R));
  return e;
}

RhoTerms rho_terms(const std::vector<std::vector<double>>& A_upper,
                   const TailSumTable& tails, double Ez_delta) {
  const int64_t K = static_cast<int64_t>(A_upper.size());
  if (K < 1) throw ConfigError("rho terms: A must be nonempty");
  for (const auto& row : A_upper) {
    if (static_cast<int64_t>(row.size()) != K)
      throw ConfigError("rho terms: A must be square");
    for (double a : row)
      if (!(a >= 0.0) || !std::isfinite(a))
        throw ConfigError("rho terms: A cells must be finite and nonnegative");
  }
  if (tails.s_max < 2 * K)
    throw RangeError("rho terms: tail table must cover s up to 2 k_scale");
  if (!(Ez_delta >= 0.0) || !std::isfinite(Ez_delta))
    throw ConfigError("rho terms: Ez_delta must be finite and nonnegative");

  long double s1 = 0.0L, s2 = 0.0L, s3 = 0.0L;
  int64_t terms = 0;
  for (int64_t i = 0; i < K; ++i)
    for (int64_t j = 0; j < K; ++j) {
      s1 += static_cast<long double>(A_upper[i][j]) * tails.T2[2 * K - i - j];
      ++terms;
    }
  for (int64_t n = 1; n < K; ++n)
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < K; ++j) {
        s2 += static_cast<long double>(A_upper[i][j]) * tails.T1[n - i + K - j];
        ++terms;
      }
  for (int64_t m = 1; m < K; ++m)
    for (int64_t j = 0; j < m; ++j)
      for (int64_t i = 0; i < K; ++i) {
        s3 += static_cast<long double>(A_upper[i][j]) * tails.T1[m - j + K - i];
        ++terms;
      }
  // Upward rounding compensation: the downstream test is the hard threshold
  // rho <= 1, so every sum is inflated past its worst-case rounding error.
  const double infl = 1.0 + 4.0 * static_cast<double>(terms + 2) * 1.11e-16;
  RhoTerms r;
  r.rho1 = static_cast<double>(s1) * Ez_delta * infl;
  r.rho2 = static_cast<double>(s2) * Ez_delta * infl;
  r.rho3 = static_cast<double>(s3) * Ez_delta * infl;
  return r;
}

DecompositionCheck decomposition_identity_check(
    const KernelSpec& k, const ModelParams& params,
    const std::optional<DisorderField>& field, int64_t N, int64_t M,
    int64_t k_scale, double tol) {
  if (N < 1 || M < 1)
    throw RangeError("decomposition check: N and M must be positive");
  if (k_scale < 1 || k_scale > std::min(N, M))
    throw RangeError("decomposition check: k_scale must lie in [1, min(N, M)]");

  PartitionGrid direct = constrained_partition(k, params, field, N, M);
  std::vector<double> kg = kernel_gap_table(k, N + M);

  // Site weights and both-corner-pinned block partitions for the first
  // renewal point (N-i, M-j) inside the corner block, i, j < k_scale.
  const int64_t K = k_scale;
  std::vector<std::vector<double>> zval(K, std::vector<double>(K));
  std::vector<std::vector<ScaledNonneg>> rect(
      K, std::vector<ScaledNonneg>(K, ScaledNonneg::zero()));
  for (int64_t i = 0; i < K; ++i)
    for (int64_t j = 0; j < K; ++j) {
      zval[i][j] =
          field ? std::exp(params.beta * field->omega(N - i, M - j) + params.h)
                : std::exp(params.h);
      if (i == 0 && j == 0) {
        rect[i][j] = ScaledNonneg::one();
      } else if (i > 0 && j > 0) {
        std::optional<DisorderField> sub;
        if (field) {
          sub = *field;
          sub->shift_n += N - i;
          sub->shift_m += M - j;
        }
        rect[i][j] = constrained_partition(k, params, sub, i, j).at(i, j);
      }
    }

  ScaledAcc acc;
  auto add_term = [&](int64_t n, int64_t m, int64_t i, int64_t j) {
    const ScaledNonneg& zout = direct.at(N - n, M - m);
    if (zout.is_zero() || rect[i][j].is_zero()) return;
    ScaledNonneg t = zout * rect[i][j];
    acc.add(t.mul_double(kg[(n - i) + (m - j)] * zval[i][j]));
  };
  for (int64_t n = K; n <= N; ++n)
    for (int64_t m = K; m <= M; ++m)
      for (int64_t i = 0; i < K; ++i)
        for (int64_t j = 0; j < K; ++j) add_term(n, m, i, j);
  for (int64_t n = 1; n < K; ++n)
    for (int64_t m = K; m <= M; ++m)
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < K; ++j) add_term(n, m, i, j);
  for (int64_t n = K; n <= N; ++n)
    for (int64_t m = 1; m < K; ++m)
      for (int64_t i = 0; i < K; ++i)
        for (int64_t j = 0; j < m; ++j) add_term(n, m, i, j);

  DecompositionCheck c;
  c.direct_log = direct.logZ(N, M);
  c.decomposed_log = acc.result().log();
  c.rel_err = std::fabs(std::expm1(c.decomposed_log - c.direct_log));
  c.ok = std::isfinite(c.rel_err) && c.rel_err <= tol;
  return c;
}

int64_t def_k_scale(double alpha, double beta, double epsilon) {
  if (!(alpha > 1.0)) throw RangeError("k schedule: requires alpha > 1");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw RangeError("k schedule: beta must be positive and finite");
  if (!(epsilon >= 0.0)) throw RangeError("k schedule: epsilon must be nonnegative");
  double v;
  if (alpha <= 2.0) {
    v = std::pow(beta, -(1.0 + epsilon) * 2.0 * alpha / (alpha - 1.0));
  } else {
    double lb = std::fabs(std::log(beta));
    v = std::pow(beta, -4.0) * std::pow(lb, 6.0);
  }
  v = std::min(v, 1e15);
  return std::max<int64_t>(1, static_cast<int64_t>(std::ceil(v)));
}

double def_ell(double alpha, double i, double epsilon) {
  if (!(alpha > 1.0)) throw RangeError("ell schedule: requires alpha > 1");
  if (!(i >= 1.0)) throw RangeError("ell schedule: i must be at least 1");
  if (!(epsilon >= 0.0)) throw RangeError("ell schedule: epsilon must be nonnegative");
  if (alpha <= 2.0)
    return std::pow(i, (1.0 + epsilon * epsilon * epsilon) / alpha);
  return std::sqrt(i * std::max(std::log(i), 0.0));
}

CertificateReport deloc_certificate(const KernelSpec& k, DisorderFamily family,
                                    double beta, double h, double delta,
                                    int64_t k_scale, const CertOptions& opt) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ConfigError("certificate: beta must be finite and nonnegative");
  if (!std::isfinite(h)) throw ConfigError("certificate: h must be finite");
  check_delta(delta);
  if (k_scale < 1) throw ConfigError("certificate: k_scale must be positive");

  CertificateReport rep;
  rep.beta = beta;
  rep.h = h;
  rep.delta = delta;
  rep.k_scale = k_scale;
  rep.h_c_annealed = -log_mgf(family, beta);
  rep.gap = h - rep.h_c_annealed;
  if (!(rep.gap > 0.0))
    throw ConfigError("certificate: h must exceed the annealed critical point");
  if (rep.gap * static_cast<double>(k_scale) > 1.0 + 1e-9)
    throw ConfigError("certificate: gap times k_scale must stay at most 1");

  TailSumTable tails = build_tail_sums(k, delta, 2 * k_scale);
  rep.alpha_gt2_condition = tails.alpha_gt2_condition;

  const int64_t S = k_scale - 1;  // grid cells live on [0, S]^2
  rep.A_upper.assign(k_scale, std::vector<double>(k_scale, 0.0));
  rep.which_bound.assign(k_scale,
                         std::vector<BoundSource>(k_scale, BoundSource::axis));
  rep.A_upper[0][0] = 1.0;
  rep.which_bound[0][0] = BoundSource::identity;

  if (S >= 1) {
    ModelParams params;
    params.beta = beta;
    params.h = h;
    PartitionGrid ann = annealed_grid(k, params, family, S, S, opt.max_ops);
    // exp can round below the true bound by an ulp; inflate before comparing.
    const double cell_infl = 1.0 + 1e-13;
    for (int64_t i = 1; i <= S; ++i)
      for (int64_t j = 1; j <= S; ++j) {
        rep.A_upper[i][j] = std::exp(delta * ann.logZ(i, j)) * cell_infl;
        rep.which_bound[i][j] = BoundSource::jensen;
      }

    // Tilt candidates: the schedule pairs (lambda(i), ell(i)) at dyadic i,
    // plus a dyadic-decay lambda grid crossed with power-of-two strip widths.
    struct Cand {
      double lambda;
      int64_t W;
    };
    std::vector<Cand> cands;
    const double lmax = admissible_lambda_max(delta);
    if (opt.lambda_override.empty() != opt.ell_override.empty())
      throw ConfigError(
          "certificate: lambda and ell overrides must be given together");
    if (!opt.lambda_override.empty()) {
      for (double lam : opt.lambda_override) {
        if (!(lam > 0.0 && lam <= lmax))
          throw ConfigError("certificate: override lambda outside the admissible range");
        for (double ell : opt.ell_override) {
          if (!(ell >= 0.0))
            throw ConfigError("certificate: override ell must be nonnegative");
          if (beta > 0.0)
            cands.push_back({lam, std::min<int64_t>(
                                      2 * S, static_cast<int64_t>(std::floor(2.0 * ell)))});
        }
      }
    } else if (beta > 0.0 && lmax > 0.0) {
      auto cap_w = [S](double w) {
        return std::min<int64_t>(2 * S, std::max<int64_t>(0, static_cast<int64_t>(std::floor(w))));
      };
      std::set<int64_t> widths;
      for (int64_t ir = 1; ir <= S; ir *= 2) {
        int64_t w_sqrt = cap_w(2.0 * std::sqrt(static_cast<double>(ir)));
        int64_t w_lin = cap_w(2.0 * static_cast<double>(ir));
        widths.insert(std::bit_ceil(static_cast<uint64_t>(std::max<int64_t>(1, w_sqrt))));
        widths.insert(std::bit_ceil(static_cast<uint64_t>(std::max<int64_t>(1, w_lin))));
        if (k.alpha > 1.0) {
          double ld = def_ell(k.alpha, static_cast<double>(ir), opt.epsilon);
          widths.insert(std::bit_ceil(static_cast<uint64_t>(std::max<int64_t>(1, cap_w(2.0 * ld)))));
          double lp = 1.0 / std::sqrt(static_cast<double>(ir) * std::max(ld, 1.0));
          cands.push_back({std::min(lp, lmax), cap_w(2.0 * ld)});
        }
      }
      for (int64_t w : widths)
        for (int64_t t = 0; t < opt.lambda_grid; ++t)
          cands.push_back({lmax * std::exp2(-static_cast<double>(t)),
                           std::min<int64_t>(w, 2 * S)});
    }

    std::set<std::pair<int64_t, int64_t>> seen;  // (W, lambda quantized)
    std::vector<std::vector<int64_t>> cnt(S + 1, std::vector<int64_t>(S + 1, 0));
    for (const Cand& c : cands) {
      if (c.lambda <= 0.0) continue;
      auto key = std::make_pair(c.W, static_cast<int64_t>(std::llround(c.lambda * 1e12)));
      if (!seen.insert(key).second) continue;
      ++rep.candidates;
      const double log_in = h + log_mgf(family, beta - c.lambda) -
                            log_mgf(family, -c.lambda);
      const double log_out = h + log_mgf(family, beta);
      DiagGridD g = two_weight_grid(k, log_in, log_out, c.W, S, S, opt.max_ops);
      const double logpen = holder_log_penalty(family, delta, c.lambda);
      for (int64_t i = 1; i <= S; ++i) {
        int64_t lo = std::max<int64_t>(1, i - c.W);
        for (int64_t j = 1; j <= S; ++j) {
          int64_t hi_m = std::min(j, i + c.W);
          cnt[i][j] = cnt[i - 1][j] + std::max<int64_t>(0, hi_m - lo + 1);
          double b = std::exp(delta * g.at(i, j).log() +
                              static_cast<double>(cnt[i][j]) * logpen) *
                     cell_infl;
          if (b < rep.A_upper[i][j]) {
            rep.A_upper[i][j] = b;
            rep.which_bound[i][j] = BoundSource::holder_tilt;
          }
        }
      }
    }
    for (int64_t i = 1; i <= S; ++i)
      for (int64_t j = 1; j <= S; ++j)
        (rep.which_bound[i][j] == BoundSource::jensen ? rep.cells_jensen
                                                      : rep.cells_tilt)++;
  }

  const double Ez = std::exp(delta * h + log_mgf(family, delta * beta));
  RhoTerms rho = rho_terms(rep.A_upper, tails, Ez);
  rep.rho1 = rho.rho1;
  rep.rho2 = rho.rho2;
  rep.rho3 = rho.rho3;
  rep.certified = (rho.sum() <= 1.0);
  rep.shift_lower_bound = rep.certified ? rep.gap : 0.0;
  return rep;
}

}  // namespace gps
