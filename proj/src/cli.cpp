#include "gps/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "gps/relevance.hpp"

namespace gps {
namespace {

std::string hex_hash(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 15];
    h >>= 4;
  }
  return s;
}

std::string header_line(const ExperimentConfig& cfg) {
  return std::string("# ") + kToolVersion + " config=" + hex_hash(cfg.config_hash) +
         "\n";
}

double gamma_value(const ExperimentConfig& cfg) {
  return static_cast<double>(cfg.model.gamma_p) /
         static_cast<double>(cfg.model.gamma_q);
}

const std::vector<int64_t>& require_N_list(const ExperimentConfig& cfg,
                                           const char* cmd) {
  if (cfg.run.N_list.empty())
    throw ConfigError(std::string(cmd) + ": run.N_list is required");
  return cfg.run.N_list;
}

// Grid-size ceiling for the fitted-exponent windows: dyadic points of
// [max(4, N/16), N] give at least three abscissae once N >= 16.
int64_t fit_lo(int64_t N_max) { return std::max<int64_t>(4, N_max / 16); }

SubcommandResult cmd_kernel_info(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  std::string csv = header_line(cfg);
  csv += "alpha,family,c0,kappa,t_max,norm,K2,mu,persistence_residual\n";
  csv += format_double(k.alpha) + "," + cfg.kernel.family + "," +
         format_double(cfg.kernel.c0) + "," + format_double(cfg.kernel.kappa) +
         "," + std::to_string(k.t_max) + "," + format_double(k.norm) + "," +
         format_double(k.K(2)) + "," + format_double(k.mu) + "," +
         format_double(k.suffix_pers[1] - 1.0) + "\n";
  return {{{"kernel_info.csv", csv}}, 0};
}

SubcommandResult cmd_renewal_validate(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  const auto& N_list = require_N_list(cfg, "renewal-validate");
  int64_t N_max = *std::max_element(N_list.begin(), N_list.end());
  if (N_max < 16)
    throw ConfigError("renewal-validate: max of run.N_list must be at least 16");
  const int64_t M = N_max + (N_max + 1) / 2;  // room for the off-diagonal column
  RenewalMassGrid u = renewal_mass(k, N_max, M, cfg.run.budget);
  ExponentFit fit = fit_diagonal_exponent(u, fit_lo(N_max), N_max);
  std::string csv = header_line(cfg);
  csv += "n,u_diag,r,u_offdiag,fitted_slope,ci\n";
  for (int64_t n = 4; n <= N_max; n *= 2) {
    int64_t r = std::max<int64_t>(1, n / 2);
    csv += std::to_string(n) + "," + format_double(std::exp(u.at(n, n).log())) +
           "," + std::to_string(r) + "," +
           format_double(std::exp(u.at(n, n + r).log())) + "," +
           format_double(fit.slope) + "," + format_double(fit.ci_half_width) +
           "\n";
  }
  return {{{"renewal_validate.csv", csv}}, 0};
}

SubcommandResult cmd_intersection_stats(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  const auto& N_list = require_N_list(cfg, "intersection-stats");
  int64_t N_max = *std::max_element(N_list.begin(), N_list.end());
  if (N_max < 16)
    throw ConfigError("intersection-stats: max of run.N_list must be at least 16");
  RenewalMassGrid u = renewal_mass(k, N_max, N_max, cfg.run.budget);
  // The q inversion feeds only the overlap MGF; a token box keeps it cheap.
  IntersectionTables t = intersection_tables(u, std::min<int64_t>(N_max, 16));
  ExponentFit fit = fit_U_exponent(t, fit_lo(N_max), N_max);
  double rho = k.alpha > 1.0 ? 1.0 - 1.0 / k.alpha : 0.0;
  std::vector<double> prods = tail_constant_check(t, rho, N_list);
  std::string csv = header_line(cfg);
  csv += "N,U_NN,tail_N,product,fitted_rho\n";
  for (size_t i = 0; i < N_list.size(); ++i) {
    int64_t N = N_list[i];
    csv += std::to_string(N) + "," + format_double(t.U[N][N]) + "," +
           format_double(t.tail[N]) + "," + format_double(prods[i]) + "," +
           format_double(fit.slope) + "\n";
  }
  return {{{"intersection_stats.csv", csv}}, 0};
}

SubcommandResult cmd_homog_scan(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  const auto& N_list = require_N_list(cfg, "homog-scan");
  double h = resolve_h(cfg.model);
  ModelParams p = make_params(0.0, h, cfg.model.gamma_p, cfg.model.gamma_q);
  std::string csv = header_line(cfg);
  csv += "alpha,gamma,h,N,F_N,exit_flag\n";
  for (int64_t N : N_list) {
    HomogScan scan = homogeneous_critical_scan(k, p, {h}, N, cfg.run.budget);
    const HomogScanRow& row = scan.rows.front();
    csv += format_double(k.alpha) + "," + format_double(gamma_value(cfg)) + "," +
           format_double(h) + "," + std::to_string(N) + "," +
           format_double(row.F_N) + "," +
           std::to_string(row.below_corr_length ? 1 : 0) + "\n";
  }
  return {{{"homog.csv", csv}}, 0};
}

SubcommandResult cmd_quenched_scan(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  const auto& N_list = require_N_list(cfg, "quenched-scan");
  double h = resolve_h(cfg.model);
  ModelParams p = make_params(cfg.model.beta, h, cfg.model.gamma_p,
                              cfg.model.gamma_q);
  DisorderSpec spec{disorder_from_config(cfg.model), cfg.model.master_seed};

  size_t n_threads = cfg.run.threads > 0
                         ? static_cast<size_t>(cfg.run.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, N_list.size());

  struct PerN {
    FreeEnergyEstimate est;
    AnnealedQuantities annealed;
  };
  std::vector<PerN> results(N_list.size());
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n_threads);
  auto worker = [&](size_t w) {
    try {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= N_list.size()) break;
        int64_t N = N_list[i];
        results[i].est =
            quenched_free_energy(k, p, spec, {N}, cfg.run.replicas,
                                 cfg.run.budget)
                .front();
        results[i].annealed = annealed_quantities(k, p, spec, N, gamma_M(p, N),
                                                  cfg.run.budget);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w + 1 < n_threads; ++w) pool.emplace_back(worker, w);
  worker(n_threads - 1);
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::string csv = header_line(cfg);
  csv += "alpha,beta,h,N,replica,logZ_over_N\n";
  const std::string prefix = format_double(k.alpha) + "," +
                             format_double(p.beta) + "," + format_double(h) + ",";
  for (size_t i = 0; i < N_list.size(); ++i) {
    const PerN& r = results[i];
    const std::string row0 = prefix + std::to_string(N_list[i]) + ",";
    for (size_t rep = 0; rep < r.est.replica_values.size(); ++rep)
      csv += row0 + std::to_string(rep) + "," +
             format_double(r.est.replica_values[rep]) + "\n";
    csv += row0 + "mean," + format_double(r.est.mean) + "\n";
    csv += row0 + "ci95," + format_double(r.est.ci95) + "\n";
    csv += row0 + "annealed_value," + format_double(r.annealed.log_EZ_over_N) +
           "\n";
    csv += row0 + "is_lower_bound," +
           std::to_string(r.est.is_lower_bound ? 1 : 0) + "\n";
  }
  return {{{"quenched.csv", csv}}, 0};
}

SubcommandResult cmd_second_moment_scan(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  DisorderFamily family = disorder_from_config(cfg.model);
  const auto& N_list = require_N_list(cfg, "second-moment-scan");
  int64_t N_max = *std::max_element(N_list.begin(), N_list.end());
  ModelParams p = make_params(cfg.model.beta, 0.0, cfg.model.gamma_p,
                              cfg.model.gamma_q);
  int64_t box = std::max(N_max, gamma_M(p, N_max));
  RenewalMassGrid u = renewal_mass(k, box, box, cfg.run.budget);
  IntersectionTables t = intersection_tables(u, box);

  Bracket beta1 = compute_beta1(t, k, family);
  NBetaResult nb = compute_N_beta(t, family, p.beta, p.gamma_p, p.gamma_q, N_max);
  SecondMomentCurve curve = second_moment_curve(t, family, p.beta, N_list,
                                                p.gamma_p, p.gamma_q, 1e300);

  std::string csv = header_line(cfg);
  csv += "# beta1_lo=" + format_double(beta1.lo) + "\n";
  csv += "# beta1_hi=" + format_double(beta1.hi) + "\n";
  csv += "# N_beta=" + std::to_string(nb.N_beta) + "\n";
  csv += "# N_beta_lower_bound_only=" + std::to_string(nb.lower_bound_only ? 1 : 0) +
         "\n";
  csv += "alpha,beta,gamma,N,value\n";
  for (size_t i = 0; i < N_list.size(); ++i)
    csv += format_double(k.alpha) + "," + format_double(p.beta) + "," +
           format_double(gamma_value(cfg)) + "," + std::to_string(N_list[i]) +
           "," + format_double(curve.values[i]) + "\n";
  return {{{"second_moment.csv", csv}}, 0};
}

SubcommandResult cmd_certificate(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  DisorderFamily family = disorder_from_config(cfg.model);
  double h = resolve_h(cfg.model);
  double beta = cfg.model.beta;
  int64_t k_scale = cfg.certificate.k_scale;
  if (k_scale == 0)
    k_scale = std::min<int64_t>(
        def_k_scale(k.alpha, beta, cfg.certificate.epsilon), 512);
  CertOptions opt;
  opt.epsilon = cfg.certificate.epsilon;
  opt.max_ops = cfg.run.budget;
  opt.lambda_override = cfg.certificate.lambda_list;
  opt.ell_override = cfg.certificate.ell_list;
  CertificateReport rep =
      deloc_certificate(k, family, beta, h, cfg.certificate.delta, k_scale, opt);

  int64_t hist[4] = {0, 0, 0, 0};
  for (const auto& row : rep.which_bound)
    for (BoundSource s : row) ++hist[static_cast<int>(s)];

  std::string j = "{\n";
  auto num = [&](const char* key, const std::string& v, bool last = false) {
    j += std::string("  \"") + key + "\": " + v + (last ? "\n" : ",\n");
  };
  num("tool_version", std::string("\"") + kToolVersion + "\"");
  num("config_hash", "\"" + hex_hash(cfg.config_hash) + "\"");
  num("alpha", format_double(k.alpha));
  num("beta", format_double(rep.beta));
  num("h", format_double(rep.h));
  num("delta", format_double(rep.delta));
  num("k", std::to_string(rep.k_scale));
  num("h_c_annealed", format_double(rep.h_c_annealed));
  num("gap", format_double(rep.gap));
  num("rho1", format_double(rep.rho1));
  num("rho2", format_double(rep.rho2));
  num("rho3", format_double(rep.rho3));
  num("rho_sum", format_double(rep.rho_sum()));
  num("certified", rep.certified ? "true" : "false");
  num("shift_lower_bound", format_double(rep.shift_lower_bound));
  num("alpha_gt2_condition", rep.alpha_gt2_condition ? "true" : "false");
  num("candidates", std::to_string(rep.candidates));
  j += "  \"per_cell_bound_source\": {\n";
  j += "    \"identity\": " + std::to_string(hist[0]) + ",\n";
  j += "    \"axis\": " + std::to_string(hist[1]) + ",\n";
  j += "    \"jensen\": " + std::to_string(hist[2]) + ",\n";
  j += "    \"holder_tilt\": " + std::to_string(hist[3]) + "\n";
  j += "  }\n}\n";
  return {{{"certificate.json", j}}, 0};
}

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Largest log-scale discrepancy between two partition grids; cells where only
// one side vanishes count as infinite.
template <typename GridA, typename GridB>
double worst_log_gap(const GridA& a, const GridB& b, int64_t N, int64_t M) {
  double worst = 0.0;
  for (int64_t n = 0; n <= N; ++n)
    for (int64_t m = 0; m <= M; ++m) {
      double la = a.at(n, m).log();
      double lb = b[n][m].log();
      bool za = !std::isfinite(la), zb = !std::isfinite(lb);
      if (za && zb) continue;
      if (za != zb) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::fabs(la - lb));
    }
  return worst;
}

SubcommandResult cmd_oracle_suite(const ExperimentConfig& cfg) {
  KernelSpec k = kernel_from_config(cfg.kernel);
  const double budget = cfg.run.budget;
  const DisorderFamily family = disorder_from_config(cfg.model);
  std::vector<CheckRow> rows;

  {  // windowed engine against the defining recursion, bare renewal weights
    RenewalMassGrid u = renewal_mass(k, 24, 18, budget);
    auto naive = renewal_mass_naive(k, 24, 18);
    double worst = worst_log_gap(u, naive, 24, 18);
    rows.push_back({"renewal_dp_vs_naive", worst < 1e-12, format_double(worst)});
  }

  {  // disordered partition grid against the quartic recursion
    ModelParams p = make_params(0.7, 0.1, 1, 1);
    DisorderSpec spec{family, cfg.model.master_seed};
    DisorderField f{spec, 0, 0, 0};
    PartitionGrid g = constrained_partition(k, p, f, 16, 12, budget);
    auto kgap = kernel_gap_table(k, 16 + 12);
    auto naive = naive_window_dp(
        16, 12, kgap,
        [&](int64_t n, int64_t m) {
          return std::exp(p.beta * f.omega(n, m) + p.h);
        },
        ScaledNonneg::one());
    struct View {
      const PartitionGrid* g;
      ScaledNonneg at(int64_t n, int64_t m) const { return g->at(n, m); }
    } view{&g};
    double worst = worst_log_gap(view, naive, 16, 12);
    rows.push_back(
        {"disordered_dp_vs_naive", worst < 1e-12, format_double(worst)});
  }

  {  // free partition of the bare renewal carries total probability one
    ModelParams p = make_params(0.0, 0.0, 1, 1);
    PartitionGrid g = constrained_partition(k, p, std::nullopt, 32, 32, budget);
    double dev = std::fabs(std::expm1(free_partition(g, k)));
    rows.push_back({"free_partition_mass", dev < 1e-9, format_double(dev)});
  }

  {  // corner-block decomposition identity on disordered grids
    ModelParams p = make_params(0.6, 0.1, 1, 1);
    DisorderSpec spec{family, cfg.model.master_seed};
    double worst = 0.0;
    bool ok = true;
    for (uint32_t rep = 0; rep < 3; ++rep) {
      DisorderField f{spec, rep, 0, 0};
      DecompositionCheck c = decomposition_identity_check(k, p, f, 20, 20, 5);
      worst = std::max(worst, c.rel_err);
      ok = ok && c.ok;
    }
    rows.push_back({"decomposition_identity", ok && worst < 1e-10,
                    format_double(worst)});
  }

  {  // grouped remainder sums against the quadruple sum, truncated tables
    const int64_t K = 4, T = 1500;
    const double delta = 0.8, Ez = 1.25;
    TailSumTable tt;
    tt.delta = delta;
    tt.s_max = 2 * K;
    tt.T1.assign(2 * K + 1, 0.0);
    tt.T2.assign(2 * K + 1, 0.0);
    for (int64_t s = 2; s <= 2 * K; ++s)
      for (int64_t t = s; t <= T; ++t) {
        double kd = std::pow(k.K(t), delta);
        tt.T1[s] += kd;
        tt.T2[s] += static_cast<double>(t - s + 1) * kd;
      }
    std::vector<std::vector<double>> A(K, std::vector<double>(K));
    for (int64_t i = 0; i < K; ++i)
      for (int64_t j = 0; j < K; ++j)
        A[i][j] = 1.0 / static_cast<double>(1 + i + 2 * j);
    RhoTerms r = rho_terms(A, tt, Ez);
    long double b1 = 0, b2 = 0, b3 = 0;
    for (int64_t i = 0; i < K; ++i)
      for (int64_t j = 0; j < K; ++j) {
        int64_t s0 = 2 * K - i - j;
        for (int64_t t = s0; t <= T; ++t)
          b1 += static_cast<long double>(A[i][j]) *
                static_cast<long double>(t - s0 + 1) * std::pow(k.K(t), delta);
      }
    for (int64_t n = 1; n < K; ++n)
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < K; ++j) {
          int64_t s0 = n - i + K - j;
          for (int64_t t = s0; t <= T; ++t)
            b2 += static_cast<long double>(A[i][j]) * std::pow(k.K(t), delta);
        }
    for (int64_t m = 1; m < K; ++m)
      for (int64_t j = 0; j < m; ++j)
        for (int64_t i = 0; i < K; ++i) {
          int64_t s0 = K - i + m - j;
          for (int64_t t = s0; t <= T; ++t)
            b3 += static_cast<long double>(A[i][j]) * std::pow(k.K(t), delta);
        }
    double worst = 0.0;
    auto rel = [&](double got, long double want) {
      worst = std::max(
          worst, std::fabs(static_cast<double>((got - Ez * want) / (Ez * want))));
    };
    rel(r.rho1, b1);
    rel(r.rho2, b2);
    rel(r.rho3, b3);
    rows.push_back({"rho_grouped_vs_brute", worst < 1e-10, format_double(worst)});
  }

  {  // fractional-moment bounds against the exhaustive binary-disorder mean
    ModelParams p = make_params(0.8, 0.1, 1, 1);
    const double delta = 0.7;
    auto kgap = kernel_gap_table(k, 4);
    double exact = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
      auto z = naive_window_dp(
          2, 2, kgap,
          [&](int64_t n, int64_t m) {
            double sign = ((mask >> ((n - 1) * 2 + (m - 1))) & 1) ? 1.0 : -1.0;
            return std::exp(p.beta * sign + p.h);
          },
          ScaledNonneg::one());
      exact += std::exp(delta * z[2][2].log());
    }
    exact /= 16.0;
    double jb = frac_moment_jensen_bound(k, p, DisorderFamily::rademacher, 2, 2,
                                         delta)
                    .bound;
    double tb = frac_moment_tilt_bound(k, p, DisorderFamily::rademacher, 2, 2,
                                       delta, 0.2, 1.0);
    DisorderSpec rspec{DisorderFamily::rademacher, cfg.model.master_seed};
    McEstimate mc = frac_moment_mc(k, p, rspec, 2, 2, delta, 2000);
    bool pass = jb >= exact * (1.0 - 1e-12) && tb >= exact * (1.0 - 1e-12) &&
                std::fabs(mc.mean - exact) <= 4.0 * mc.std_err + 1e-12;
    rows.push_back({"exhaustive_frac_moment", pass, format_double(exact)});
  }

  std::string csv = header_line(cfg) + "check,status,detail\n";
  int status = 0;
  for (const CheckRow& row : rows) {
    csv += row.name + "," + (row.pass ? "pass" : "fail") + "," + row.detail + "\n";
    if (!row.pass) status = 1;
  }
  return {{{"oracle_suite.csv", csv}}, status};
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

SubcommandResult run_subcommand(const std::string& name,
                                const ExperimentConfig& cfg) {
  if (name == "kernel-info") return cmd_kernel_info(cfg);
  if (name == "renewal-validate") return cmd_renewal_validate(cfg);
  if (name == "intersection-stats") return cmd_intersection_stats(cfg);
  if (name == "homog-scan") return cmd_homog_scan(cfg);
  if (name == "quenched-scan") return cmd_quenched_scan(cfg);
  if (name == "second-moment-scan") return cmd_second_moment_scan(cfg);
  if (name == "certificate") return cmd_certificate(cfg);
  if (name == "oracle-suite") return cmd_oracle_suite(cfg);
  throw ConfigError("unknown subcommand '" + name + "'");
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Pinning laboratory over heavy-tailed bivariate renewals"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out_override;
  std::optional<int64_t> threads_override;
  std::optional<uint64_t> seed_override;
  static constexpr std::pair<const char*, const char*> kCommands[] = {
      {"kernel-info", "Normalization and moment summary of the jump kernel"},
      {"renewal-validate", "Renewal mass decay against its fitted exponents"},
      {"intersection-stats", "Two-replica overlap growth and tail products"},
      {"homog-scan", "Homogeneous free energy against the pinning strength"},
      {"quenched-scan", "Per-replica quenched free energy with annealed row"},
      {"second-moment-scan", "Second-moment curve, beta1 bracket, N_beta"},
      {"certificate", "Deterministic fractional-moment delocalization bound"},
      {"oracle-suite", "Cross-route consistency checks of the core engines"},
  };
  for (const auto& [name, desc] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "TOML experiment configuration")
        ->required();
    sub->add_option("--out", out_override, "Override run.out_dir");
    sub->add_option("--threads", threads_override, "Override run.threads");
    sub->add_option("--seed", seed_override, "Override model.master_seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (out_override) cfg.run.out_dir = *out_override;
    if (threads_override) {
      if (*threads_override < 0)
        throw ConfigError("cli: --threads must be nonnegative");
      cfg.run.threads = *threads_override;
    }
    if (seed_override) cfg.model.master_seed = *seed_override;

    const std::string name = app.get_subcommands().front()->get_name();
    SubcommandResult res = run_subcommand(name, cfg);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.run.out_dir);
    for (const auto& [fname, content] : res.files) {
      fs::path path = fs::path(cfg.run.out_dir) / fname;
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out)
        throw ConfigError("cli: cannot write output file '" + path.string() + "'");
    }
    return res.status;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InconclusiveBracket& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace gps
