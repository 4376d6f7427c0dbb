#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gps/disorder.hpp"
#include "gps/kernel.hpp"

namespace gps {

// Experiment configuration, parsed from a single-table-depth TOML file with
// sections [kernel], [model], [run], [certificate].  Parsing is fail-closed:
// unknown sections or keys, type mismatches, and duplicates are rejected with
// line diagnostics before any computation starts.

struct KernelSection {
  double alpha = 0.0;  // required
  std::string family = "constant";
  double c0 = 1.0;
  double kappa = 0.0;
  int64_t t_max = 2000;
};

struct ModelSection {
  double beta = 0.0;
  std::optional<double> h;      // exactly one of h / h_gap may be set
  std::optional<double> h_gap;  // offset above the annealed critical point
  int64_t gamma_p = 1;
  int64_t gamma_q = 1;
  std::string disorder = "gaussian";
  uint64_t master_seed = 0;
};

struct RunSection {
  std::vector<int64_t> N_list;
  int64_t replicas = 32;
  double budget = 4e10;
  int64_t threads = 0;  // 0 -> hardware concurrency
  std::string out_dir = ".";
};

struct CertificateSection {
  double delta = 0.9;
  int64_t k_scale = 0;  // 0 -> schedule value from (alpha, beta, epsilon)
  double epsilon = 0.5;
  std::vector<double> lambda_list;  // optional tilt schedule override
  std::vector<double> ell_list;
};

struct ExperimentConfig {
  KernelSection kernel;
  ModelSection model;
  RunSection run;
  CertificateSection certificate;
  uint64_t config_hash = 0;  // FNV-1a of the raw config text
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Section-to-domain adapters.
KernelSpec kernel_from_config(const KernelSection& k);
DisorderFamily disorder_from_config(const ModelSection& m);

// The pinning strength: model.h directly, or the annealed critical point for
// (family, beta) plus model.h_gap.  Errors when neither is set.
double resolve_h(const ModelSection& m);

uint64_t fnv1a_hash(const std::string& text);

}  // namespace gps
