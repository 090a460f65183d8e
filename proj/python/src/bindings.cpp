#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nearcrit/estimators.hpp"
#include "nearcrit/hawkes.hpp"
#include "nearcrit/limit_process.hpp"
#include "nearcrit/resolvent.hpp"

namespace py = pybind11;
using namespace nearcrit;

namespace {

KernelSpec kernel_from(const std::string& family, double beta) {
    if (family == "exponential" || family == "exp") return make_exponential_kernel(beta);
    if (family == "gamma2") return make_gamma2_kernel(beta);
    throw InvalidParameter("unknown kernel family: " + family);
}

py::dict estimate_to_dict(const Estimate& e) {
    py::dict d;
    d["value"] = e.value;
    d["stderr"] = e.se;
    d["reps"] = e.reps;
    d["incomplete"] = e.incomplete;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "near-critical self-exciting process simulation and experiments";

    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<OutOfRange>(m, "OutOfRangeError", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
    py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);

    m.def("kernel_moments",
          [](const std::string& family, double beta) {
              auto k = kernel_from(family, beta);
              auto mom = kernel_moments(k);
              py::dict d;
              d["l1"] = mom.l1;
              d["m"] = mom.m;
              d["m2"] = mom.m2;
              d["analytic_m"] = k.m;
              d["analytic_m2"] = k.m2;
              return d;
          },
          py::arg("family"), py::arg("beta"));

    m.def("criticality_factor",
          [](const std::string& regime, double T) {
              return criticality_factor(parse_regime(regime), T);
          },
          py::arg("regime"), py::arg("T"));

    m.def("default_cell_count", &default_cell_count, py::arg("T"));

    m.def("solve_resolvent",
          [](const std::string& family, double beta, const std::string& regime, double T,
             int n) {
              auto sk = scale_kernel(kernel_from(family, beta), parse_regime(regime), T);
              auto rt = solve_resolvent(sk, n);
              py::dict d;
              d["grid"] = rt.grid;
              d["psi"] = rt.psi_values;
              d["rho"] = rt.rho_values;
              d["d"] = rt.d_values;
              d["l2_distance"] = l2_distance_on_unit(rt);
              d["sup_psi"] = rt.sup_psi();
              return d;
          },
          py::arg("family"), py::arg("beta"), py::arg("regime"), py::arg("T"),
          py::arg("n") = 1024);

    m.def("limit_density",
          [](const std::string& regime, double mval, const std::vector<double>& xs) {
              auto rho = limit_density(parse_regime(regime), mval);
              std::vector<double> out;
              out.reserve(xs.size());
              for (double x : xs) out.push_back(rho(x));
              return out;
          },
          py::arg("regime"), py::arg("m"), py::arg("xs"));

    m.def("malthusian_parameter",
          [](const std::string& family, double beta, double T) {
              auto sk = scale_kernel(kernel_from(family, beta), Regime::Supercritical, T);
              auto res = malthusian_parameter(sk);
              py::dict d;
              d["b_T"] = res.b_T;
              d["tilted_l1"] = res.tilted_l1;
              d["m_tilde"] = res.m_tilde;
              return d;
          },
          py::arg("family"), py::arg("beta"), py::arg("T"));

    m.def("comonotone_gaussianize", &comonotone_gaussianize, py::arg("delta"), py::arg("u"),
          py::arg("k"), py::arg("T"));

    m.def("simulate",
          [](const std::string& regime, const std::string& family, double beta, double mu,
             double T, int grid, uint64_t seed) {
              auto sk = scale_kernel(kernel_from(family, beta), parse_regime(regime), T);
              double theta = auto_theta_ceiling(sk, mu);
              for (int attempt = 0; attempt < 8; ++attempt, theta *= 2.0) {
                  try {
                      StreamContext sc{seed, 0, uint64_t(attempt)};
                      auto field = sample_poisson_field(T, theta, default_cell_count(T), sc);
                      auto hp = simulate_hawkes(sk, mu, field, grid);
                      auto rp = rescaled_paths(hp, grid);
                      py::dict d;
                      std::vector<double> ts(grid + 1);
                      for (int i = 0; i <= grid; ++i) ts[i] = double(i) / grid;
                      d["t"] = ts;
                      d["Lambda"] = rp.Lambda;
                      d["H_scaled"] = rp.H_scaled;
                      d["martingale_scaled"] = rp.martingale;
                      d["events"] = int(hp.events.size());
                      return d;
                  } catch (const CapacityError&) {
                      continue;
                  }
              }
              throw CapacityError("simulate: ceiling retries exhausted");
          },
          py::arg("regime"), py::arg("kernel"), py::arg("beta"), py::arg("mu"), py::arg("T"),
          py::arg("grid") = 256, py::arg("seed") = 0);

    m.def("simulate_limit_reference",
          [](const std::string& regime, double mu, double mval, int n, uint64_t seed,
             uint64_t rep) {
              return simulate_cir_reference(parse_regime(regime), mu, mval, seed, rep, n).X;
          },
          py::arg("regime"), py::arg("mu"), py::arg("m"), py::arg("n"), py::arg("seed") = 0,
          py::arg("rep") = 0);

    m.def("simulate_limit_coupled",
          [](const std::string& regime, double mu, double mval, double T, int k, double theta,
             uint64_t seed, uint64_t rep) {
              for (int attempt = 0; attempt < 8; ++attempt, theta *= 2.0) {
                  try {
                      StreamContext sc{seed, rep, uint64_t(attempt)};
                      auto field = sample_poisson_field(T, theta, k, sc);
                      return simulate_limit_coupled(parse_regime(regime), mu, mval, field, sc)
                          .X;
                  } catch (const CapacityError&) {
                      continue;
                  }
              }
              throw CapacityError("simulate_limit_coupled: ceiling retries exhausted");
          },
          py::arg("regime"), py::arg("mu"), py::arg("m"), py::arg("T"), py::arg("k"),
          py::arg("theta") = 8.0, py::arg("seed") = 0, py::arg("rep") = 0);

    m.def("build_yamada",
          [](double eps, double eta, double mval) {
              auto y = build_yamada(eps, eta, mval);
              py::dict d;
              d["eps"] = y.eps;
              d["eta"] = y.eta;
              d["lower"] = y.lower;
              d["evaluate"] = py::cpp_function([y](double x) { return y.evaluate(x); });
              d["first"] = py::cpp_function([y](double x) { return y.first(x); });
              d["second"] = py::cpp_function([y](double x) { return y.second(x); });
              return d;
          },
          py::arg("eps"), py::arg("eta"), py::arg("m"));

    m.def("fit_rate",
          [](const std::vector<double>& xs, const std::vector<double>& ys,
             const std::vector<double>& errs) {
              auto f = fit_rate(xs, ys, errs);
              py::dict d;
              d["slope"] = f.slope;
              d["intercept"] = f.intercept;
              d["r2"] = f.r2;
              return d;
          },
          py::arg("xs"), py::arg("ys"), py::arg("stderrs") = std::vector<double>{});

    m.def("estimate_cell_coupling",
          [](const std::vector<double>& T_list, int k, int reps, uint64_t seed, int threads) {
              McConfig mc{reps, seed, threads};
              auto res = estimate_cell_coupling(T_list, k, mc);
              py::dict d;
              d["T"] = res.T_list;
              py::list est;
              for (auto& e : res.estimates) est.append(estimate_to_dict(e));
              d["estimates"] = est;
              d["slope"] = res.fit.slope;
              return d;
          },
          py::arg("T_list"), py::arg("k"), py::arg("reps") = 10000, py::arg("seed") = 0,
          py::arg("threads") = 0);

    m.def("estimate_intensity_convergence",
          [](const std::string& family, double beta, const std::string& regime, double mu,
             const std::vector<double>& T_list, int reps, uint64_t seed, int threads,
             int k_override) {
              McConfig mc{reps, seed, threads};
              auto conv = estimate_intensity_convergence(kernel_from(family, beta),
                                                         parse_regime(regime), mu, T_list, mc,
                                                         k_override);
              py::dict d;
              d["T"] = conv.T_list;
              d["k"] = conv.k_used;
              py::list intensity, integrated, counting, martingale;
              for (std::size_t i = 0; i < conv.T_list.size(); ++i) {
                  intensity.append(estimate_to_dict(conv.intensity[i]));
                  integrated.append(estimate_to_dict(conv.integrated[i]));
                  counting.append(estimate_to_dict(conv.counting[i]));
                  martingale.append(estimate_to_dict(conv.martingale[i]));
              }
              d["intensity"] = intensity;
              d["integrated_intensity"] = integrated;
              d["counting"] = counting;
              d["martingale"] = martingale;
              d["envelope_C"] = conv.envelope_C;
              d["envelope_ok"] = conv.envelope_ok;
              d["monotone_ok"] = conv.monotone_ok;
              return d;
          },
          py::arg("kernel"), py::arg("beta"), py::arg("regime"), py::arg("mu"),
          py::arg("T_list"), py::arg("reps") = 100, py::arg("seed") = 0,
          py::arg("threads") = 0, py::arg("k") = 0);

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "0.1.0";
#endif
}
