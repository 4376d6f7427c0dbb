// Python surface of the laboratory: kernel construction, partition values,
// quenched/annealed estimates, overlap tables with the relevance diagnostics,
// and the delocalization certificate.  Thin adapters only; all numerics live
// in the C++ core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "gps/relevance.hpp"

namespace py = pybind11;
using namespace gps;

namespace {

SvFamily sv_family_of(const std::string& name) {
  if (name == "constant") return SvFamily::constant;
  if (name == "log_power") return SvFamily::log_power;
  throw ConfigError("kernel family must be \"constant\" or \"log_power\"");
}

std::optional<DisorderField> field_of(const std::string& family, uint64_t seed,
                                      uint32_t replica) {
  if (family.empty()) return std::nullopt;
  DisorderSpec spec{parse_disorder_family(family), seed};
  return DisorderField{spec, replica, 0, 0};
}

py::dict estimate_dict(const FreeEnergyEstimate& e) {
  py::dict d;
  d["N"] = e.N;
  d["M"] = e.M;
  d["replica_values"] = e.replica_values;
  d["mean"] = e.mean;
  d["ci95"] = e.ci95;
  d["is_lower_bound"] = e.is_lower_bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_gpslab, m) {
  m.doc() = "Pinning-model laboratory over heavy-tailed bivariate renewals";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<BudgetError>(m, "BudgetError", PyExc_RuntimeError);
  py::register_exception<InconclusiveBracket>(m, "InconclusiveBracket",
                                              PyExc_RuntimeError);

  py::class_<KernelSpec>(m, "Kernel")
      .def_readonly("alpha", &KernelSpec::alpha)
      .def_readonly("t_max", &KernelSpec::t_max)
      .def_readonly("norm", &KernelSpec::norm)
      .def_readonly("mu", &KernelSpec::mu)
      .def("K", &KernelSpec::K, py::arg("t"),
           "Inter-arrival mass K(t) of a jump with total length t")
      .def("__repr__", [](const KernelSpec& k) {
        return "<Kernel alpha=" + std::to_string(k.alpha) + " t_max=" +
               std::to_string(k.t_max) + ">";
      });

  m.def(
      "kernel",
      [](double alpha, int64_t t_max, const std::string& family, double c0,
         double kappa) {
        return build_kernel(alpha, {sv_family_of(family), c0, kappa}, t_max);
      },
      py::arg("alpha"), py::arg("t_max") = 2000, py::arg("family") = "constant",
      py::arg("c0") = 1.0, py::arg("kappa") = 0.0,
      "Normalized heavy-tailed jump kernel with persistence mass one");

  m.def(
      "log_partition",
      [](const KernelSpec& k, double beta, double h, int64_t N, int64_t M,
         const std::string& disorder, uint64_t seed, uint32_t replica) {
        ModelParams p = make_params(beta, h, 1, 1);
        PartitionGrid g =
            constrained_partition(k, p, field_of(disorder, seed, replica), N, M);
        return py::make_tuple(g.logZ(N, M), free_partition(g, k));
      },
      py::arg("kernel"), py::arg("beta"), py::arg("h"), py::arg("N"),
      py::arg("M"), py::arg("disorder") = "", py::arg("seed") = 0,
      py::arg("replica") = 0,
      "(log Z_constrained, log Z_free); empty disorder means homogeneous");

  m.def(
      "quenched_free_energy",
      [](const KernelSpec& k, double beta, double h, int64_t N,
         int64_t replicas, uint64_t seed, const std::string& disorder,
         int64_t gamma_p, int64_t gamma_q) {
        ModelParams p = make_params(beta, h, gamma_p, gamma_q);
        DisorderSpec spec{parse_disorder_family(disorder), seed};
        return estimate_dict(
            quenched_free_energy(k, p, spec, {N}, replicas).front());
      },
      py::arg("kernel"), py::arg("beta"), py::arg("h"), py::arg("N"),
      py::arg("replicas"), py::arg("seed") = 0, py::arg("disorder") = "gaussian",
      py::arg("gamma_p") = 1, py::arg("gamma_q") = 1);

  m.def(
      "annealed_free_energy",
      [](const KernelSpec& k, double beta, double h, int64_t N,
         const std::string& disorder, int64_t gamma_p, int64_t gamma_q) {
        ModelParams p = make_params(beta, h, gamma_p, gamma_q);
        DisorderSpec spec{parse_disorder_family(disorder), 0};
        AnnealedQuantities aq =
            annealed_quantities(k, p, spec, N, gamma_M(p, N));
        py::dict d;
        d["h_c_annealed"] = aq.h_c_annealed;
        d["log_EZ"] = aq.log_EZ;
        d["log_EZ_over_N"] = aq.log_EZ_over_N;
        return d;
      },
      py::arg("kernel"), py::arg("beta"), py::arg("h"), py::arg("N"),
      py::arg("disorder") = "gaussian", py::arg("gamma_p") = 1,
      py::arg("gamma_q") = 1,
      "Exact annealed value; annealing shifts h by log Q(beta)");

  py::class_<IntersectionTables>(m, "OverlapTables")
      .def_readonly("N", &IntersectionTables::N)
      .def_readonly("M", &IntersectionTables::M)
      .def_readonly("q_size", &IntersectionTables::q_size)
      .def_readonly("s_max", &IntersectionTables::s_max)
      .def(
          "U",
          [](const IntersectionTables& t, int64_t n, int64_t m) {
            if (n < 0 || n > t.N || m < 0 || m > t.M)
              throw RangeError("U: index outside the table");
            return t.U[n][m];
          },
          py::arg("n"), py::arg("m"), "Running overlap mass U_{n,m}")
      .def(
          "tail",
          [](const IntersectionTables& t, int64_t s) {
            if (s < 0 || s > t.s_max)
              throw RangeError("tail: index outside the table");
            return t.tail[s];
          },
          py::arg("s"), "P(sbar_1 > s) of the diagonal-sum inter-arrival");

  m.def(
      "overlap_tables",
      [](const KernelSpec& k, int64_t box, int64_t q_cap) {
        RenewalMassGrid u = renewal_mass(k, box, box);
        return intersection_tables(u, q_cap > 0 ? q_cap : box);
      },
      py::arg("kernel"), py::arg("box"), py::arg("q_cap") = 0,
      "Two-replica overlap tables on [0, box]^2; q_cap 0 inverts the full box");

  m.def(
      "second_moment_curve",
      [](const IntersectionTables& t, const std::string& family, double beta,
         const std::vector<int64_t>& N_list, int64_t gamma_p, int64_t gamma_q) {
        return second_moment_curve(t, parse_disorder_family(family), beta,
                                   N_list, gamma_p, gamma_q)
            .values;
      },
      py::arg("tables"), py::arg("family"), py::arg("beta"), py::arg("N_list"),
      py::arg("gamma_p") = 1, py::arg("gamma_q") = 1,
      "E[(Z^f)^2] at the annealed critical point, one value per N");

  m.def(
      "beta1",
      [](const IntersectionTables& t, const KernelSpec& k,
         const std::string& family) {
        Bracket b = compute_beta1(t, k, parse_disorder_family(family));
        return py::make_tuple(b.lo, b.hi);
      },
      py::arg("tables"), py::arg("kernel"), py::arg("family"),
      "Bracket of the critical disorder strength; (0, 0) when persistent");

  m.def(
      "n_beta",
      [](const IntersectionTables& t, const std::string& family, double beta,
         int64_t N_max, int64_t gamma_p, int64_t gamma_q) {
        NBetaResult r = compute_N_beta(t, parse_disorder_family(family), beta,
                                       gamma_p, gamma_q, N_max);
        return py::make_tuple(r.N_beta, r.lower_bound_only);
      },
      py::arg("tables"), py::arg("family"), py::arg("beta"), py::arg("N_max"),
      py::arg("gamma_p") = 1, py::arg("gamma_q") = 1,
      "Largest N with second-moment value at most 2, and a saturation flag");

  m.def(
      "deloc_certificate",
      [](const KernelSpec& k, const std::string& family, double beta, double h,
         double delta, int64_t k_scale, double epsilon) {
        CertOptions opt;
        opt.epsilon = epsilon;
        CertificateReport r = deloc_certificate(
            k, parse_disorder_family(family), beta, h, delta, k_scale, opt);
        py::dict d;
        d["beta"] = r.beta;
        d["h"] = r.h;
        d["delta"] = r.delta;
        d["k"] = r.k_scale;
        d["h_c_annealed"] = r.h_c_annealed;
        d["gap"] = r.gap;
        d["rho1"] = r.rho1;
        d["rho2"] = r.rho2;
        d["rho3"] = r.rho3;
        d["rho_sum"] = r.rho_sum();
        d["certified"] = r.certified;
        d["shift_lower_bound"] = r.shift_lower_bound;
        d["cells_jensen"] = r.cells_jensen;
        d["cells_tilt"] = r.cells_tilt;
        d["candidates"] = r.candidates;
        return d;
      },
      py::arg("kernel"), py::arg("family"), py::arg("beta"), py::arg("h"),
      py::arg("delta"), py::arg("k_scale"), py::arg("epsilon") = 0.5,
      "Deterministic delocalization certificate; certified iff rho-sum <= 1");

  m.def(
      "contact_scaling",
      [](const KernelSpec& k, const std::vector<int64_t>& N_list, double gamma,
         int64_t n_paths, uint64_t seed) {
        ContactScaling cs = contact_count_scaling(k, N_list, gamma, n_paths, seed);
        py::dict d;
        d["N"] = cs.N;
        d["median"] = cs.median;
        d["slope"] = cs.fit.slope;
        return d;
      },
      py::arg("kernel"), py::arg("N_list"), py::arg("gamma"),
      py::arg("n_paths"), py::arg("seed"),
      "Median contact count of sampled paths per N with its log-log slope");
}
