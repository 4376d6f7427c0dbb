#include <cmath>
#include <string>

#include "doctest.h"
#include "gps/config.hpp"

using gps::ConfigError;
using gps::disorder_from_config;
using gps::DisorderFamily;
using gps::ExperimentConfig;
using gps::fnv1a_hash;
using gps::kernel_from_config;
using gps::KernelSpec;
using gps::parse_config_text;
using gps::resolve_h;

namespace {

const char* kFullConfig = R"(# experiment
[kernel]
alpha = 1.5            # tail index
family = "log_power"
c0 = 2.5
kappa = 0.75
t_max = 1500

[model]
beta = 0.6
h = -0.05
gamma_p = 3
gamma_q = 2
disorder = "rademacher"
master_seed = 12345678901234567890

[run]
N_list = [16, 32, 64,]
replicas = 8
budget = 1e9
threads = 2
out_dir = "results"

[certificate]
delta = 0.85
k_scale = 32
epsilon = 0.25
lambda_list = [0.1, 0.05]
ell_list = [1, 2.5]
)";

}  // namespace

TEST_CASE("config: full round trip with comments and trailing commas") {
  ExperimentConfig c = parse_config_text(kFullConfig);
  CHECK(c.kernel.alpha == 1.5);
  CHECK(c.kernel.family == "log_power");
  CHECK(c.kernel.c0 == 2.5);
  CHECK(c.kernel.kappa == 0.75);
  CHECK(c.kernel.t_max == 1500);
  CHECK(c.model.beta == 0.6);
  REQUIRE(c.model.h.has_value());
  CHECK(*c.model.h == -0.05);
  CHECK(!c.model.h_gap.has_value());
  CHECK(c.model.gamma_p == 3);
  CHECK(c.model.gamma_q == 2);
  CHECK(c.model.disorder == "rademacher");
  CHECK(c.model.master_seed == 12345678901234567890ull);
  REQUIRE(c.run.N_list.size() == 3);
  CHECK(c.run.N_list[2] == 64);
  CHECK(c.run.replicas == 8);
  CHECK(c.run.budget == 1e9);
  CHECK(c.run.threads == 2);
  CHECK(c.run.out_dir == "results");
  CHECK(c.certificate.delta == 0.85);
  CHECK(c.certificate.k_scale == 32);
  CHECK(c.certificate.epsilon == 0.25);
  REQUIRE(c.certificate.lambda_list.size() == 2);
  CHECK(c.certificate.ell_list[1] == 2.5);
  CHECK(c.config_hash == fnv1a_hash(kFullConfig));
  CHECK(c.config_hash != 0);
}

TEST_CASE("config: defaults when only alpha is given") {
  ExperimentConfig c = parse_config_text("[kernel]\nalpha = 0.5\n");
  CHECK(c.kernel.family == "constant");
  CHECK(c.kernel.c0 == 1.0);
  CHECK(c.kernel.t_max == 2000);
  CHECK(c.model.beta == 0.0);
  CHECK(!c.model.h.has_value());
  CHECK(c.model.disorder == "gaussian");
  CHECK(c.run.N_list.empty());
  CHECK(c.run.replicas == 32);
  CHECK(c.run.threads == 0);
  CHECK(c.run.out_dir == ".");
  CHECK(c.certificate.delta == 0.9);
  CHECK(c.certificate.k_scale == 0);
  CHECK(c.certificate.epsilon == 0.5);
}

TEST_CASE("config: every rejection carries a line or key diagnostic") {
  auto rejects = [](const std::string& text, const std::string& needle) {
    try {
      parse_config_text(text);
      FAIL_CHECK("accepted: " << text);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                    e.what() << " lacks " << needle);
    }
  };
  rejects("[kernel]\nalpha = 1.5\nbogus = 1\n", "line 3");
  rejects("[kernel]\nalpha = 1.5\nbogus = 1\n", "kernel.bogus");
  rejects("[mystery]\nx = 1\n", "unknown section");
  rejects("alpha = 1.5\n", "outside any section");
  rejects("[kernel]\nalpha = fast\n", "expects a finite number");
  rejects("[kernel]\nalpha = 1.5\nt_max = 2.5\n", "expects an integer");
  rejects("[kernel]\nalpha = 1.5\nfamily = constant\n", "quoted string");
  rejects("[kernel]\nalpha = 1.5\nalpha = 2.0\n", "duplicate");
  rejects("[kernel]\nalpha 1.5\n", "key = value");
  rejects("[kernel\nalpha = 1.5\n", "malformed section");
  rejects("[run]\nN_list = [1,,2]\n", "empty array element");
  rejects("[model]\nmaster_seed = -4\n", "unsigned");
  rejects("[kernel]\nalpha = 1.5\n[run]\nN_list = 16\n", "array");
}

TEST_CASE("config: cross-field validation is fail closed") {
  CHECK_THROWS_AS(parse_config_text(""), ConfigError);  // alpha required
  CHECK_THROWS_AS(parse_config_text("[kernel]\nalpha = 1.5\nfamily = \"exp\"\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[model]\ndisorder = \"cauchy\"\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[model]\nh = 0.1\nh_gap = 0.1\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[model]\ngamma_p = 0\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[model]\nbeta = -0.5\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[run]\nN_list = [16, 0]\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config_text("[kernel]\nalpha = 1.5\n[run]\nreplicas = 0\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("[kernel]\nalpha = 1.5\n[run]\nbudget = 0\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("[kernel]\nalpha = 1.5\n[run]\nthreads = -1\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[certificate]\ndelta = 1\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text("[kernel]\nalpha = 1.5\n[certificate]\nk_scale = -1\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(
          "[kernel]\nalpha = 1.5\n[certificate]\nlambda_list = [0.1]\n"),
      ConfigError);
}

TEST_CASE("config: adapters map sections onto the domain types") {
  ExperimentConfig c = parse_config_text(
      "[kernel]\nalpha = 1.5\nt_max = 1200\n[model]\nbeta = 0.6\n"
      "disorder = \"rademacher\"\nh_gap = 0.25\n");
  KernelSpec k = kernel_from_config(c.kernel);
  CHECK(k.alpha == 1.5);
  CHECK(k.t_max == 1200);
  CHECK(disorder_from_config(c.model) == DisorderFamily::rademacher);
  // h = -log Q(beta) + h_gap with Q the disorder MGF
  double hca = -gps::log_mgf(DisorderFamily::rademacher, 0.6);
  CHECK(resolve_h(c.model) == doctest::Approx(hca + 0.25).epsilon(1e-15));

  ExperimentConfig direct = parse_config_text("[kernel]\nalpha = 1.5\n[model]\nh = -0.3\n");
  CHECK(resolve_h(direct.model) == -0.3);
  ExperimentConfig neither = parse_config_text("[kernel]\nalpha = 1.5\n");
  CHECK_THROWS_AS(resolve_h(neither.model), ConfigError);
}

TEST_CASE("config: hash is a pure function of the raw text") {
  CHECK(fnv1a_hash("") == 14695981039346656037ull);  // FNV-1a offset basis
  CHECK(fnv1a_hash("a") != fnv1a_hash("b"));
  std::string t1 = "[kernel]\nalpha = 1.5\n";
  std::string t2 = "[kernel]\nalpha = 1.50\n";  // same value, different text
  CHECK(parse_config_text(t1).config_hash != parse_config_text(t2).config_hash);
  CHECK(parse_config_text(t1).config_hash == parse_config_text(t1).config_hash);
}
