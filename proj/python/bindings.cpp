#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "todarsk/critical.hpp"
#include "todarsk/flows.hpp"
#include "todarsk/grsk.hpp"
#include "todarsk/stochastic.hpp"
#include "todarsk/tauexplicit.hpp"
#include "todarsk/verify.hpp"

namespace py = pybind11;
using namespace todarsk;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows rows_of(const Triangle& x) { return x.to_rows(); }
Triangle triangle_of(const Rows& rows) { return Triangle::from_rows(rows); }

py::tuple path_tuple(const TrianglePath& p) {
    std::vector<Rows> states;
    states.reserve(p.states.size());
    for (const auto& s : p.states) states.push_back(s.to_rows());
    return py::make_tuple(p.grid, states);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Geometric RSK, Toda flows and Whittaker diffusions";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<RangeError>(m, "RangeError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<FactorizationBlowUp>(m, "FactorizationBlowUp", base.ptr());
    py::register_exception<OverflowError>(m, "OverflowError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<SpectrumError>(m, "SpectrumError", base.ptr());
    py::register_exception<DegenerateNodes>(m, "DegenerateNodes", base.ptr());
    py::register_exception<EfficiencyError>(m, "EfficiencyError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    // matrices
    m.def("minor", &minor, py::arg("b"), py::arg("m"), py::arg("k"));
    m.def("matrix_exp", &matrix_exp, py::arg("a"), py::arg("t") = 1.0);
    m.def("epsilon_matrix", &epsilon_matrix, py::arg("lam"));
    m.def("w0_bar", &w0_bar, py::arg("n"));
    m.def(
        "gauss_ldu",
        [](const Matrix& a) {
            const GaussLDU g = gauss_ldu(a);
            return py::make_tuple(g.L.matrix(), g.D, g.U);
        },
        py::arg("a"));

    // triangles
    m.def("f_inv", [](const Rows& x) { return f_inv(triangle_of(x)).matrix(); }, py::arg("x"));
    m.def("f_map", [](const Matrix& b) { return rows_of(f_map(b)); }, py::arg("b"));

    // path transforms
    m.def(
        "pi_n",
        [](const Vector& grid, const Matrix& values) { return path_tuple(pi_n(SampledPath(grid, values))); },
        py::arg("grid"), py::arg("values"));
    m.def(
        "pi_xi",
        [](const Vector& grid, const Matrix& values, const Rows& xi) {
            return path_tuple(pi_xi(SampledPath(grid, values), triangle_of(xi)));
        },
        py::arg("grid"), py::arg("values"), py::arg("xi"));

    // flows
    m.def(
        "s_flow", [](const Rows& x, const Vector& lam, double t) { return rows_of(s_flow(triangle_of(x), lam, t)); },
        py::arg("x"), py::arg("lam"), py::arg("t"));
    m.def(
        "integrate_triangle",
        [](const Rows& x, const Vector& lam, double t_end, double dt, bool local) {
            FlowConfig cfg;
            cfg.t_end = t_end;
            cfg.dt = dt;
            return path_tuple(
                integrate_triangle(triangle_of(x), lam, cfg, local ? TriangleField::local : TriangleField::rsk));
        },
        py::arg("x"), py::arg("lam"), py::arg("t_end"), py::arg("dt") = 1e-3, py::arg("local") = false);
    m.def(
        "lax_matrix", [](const Rows& x, const Vector& lam) { return g_lambda(triangle_of(x), lam).to_matrix(); },
        py::arg("x"), py::arg("lam"));

    // critical points
    m.def(
        "critical_point", [](const Vector& x, const Vector& lam) { return rows_of(critical_point(x, lam)); },
        py::arg("x"), py::arg("lam"));
    m.def(
        "critical_residual", [](const Rows& x, const Vector& lam) { return critical_residual_norm(triangle_of(x), lam); },
        py::arg("x"), py::arg("lam"));
    m.def("F_lambda", [](const Rows& x, const Vector& lam) { return F_lambda(triangle_of(x), lam); }, py::arg("x"),
          py::arg("lam"));
    m.def("u_lambda", &u_lambda, py::arg("x"), py::arg("lam"));
    m.def("grad_u", &grad_u, py::arg("x"), py::arg("lam"));

    // tau functions
    m.def("b_explicit", &b_explicit_matrix, py::arg("lam"), py::arg("t"));
    m.def("tau_k", &tau_k, py::arg("lam"), py::arg("t"), py::arg("k"));
    m.def("tau_hankel", &tau_hankel, py::arg("lam"), py::arg("t"), py::arg("k"));
    m.def("tau_zero_lambda", &tau_zero_lambda, py::arg("n"), py::arg("t"), py::arg("k"));
    m.def("bottom_row_from_tau", &bottom_row_from_tau, py::arg("lam"), py::arg("t"));

    // stochastic
    m.def(
        "whittaker",
        [](const Vector& x, const Vector& lam, double eps) {
            const WhittakerEval w = whittaker_eval(x, lam, eps);
            return py::dict(py::arg("value") = w.value, py::arg("log_value") = w.log_value,
                            py::arg("accurate") = w.accurate, py::arg("warning") = w.warning);
        },
        py::arg("x"), py::arg("lam"), py::arg("eps") = 1.0);
    m.def("hamiltonian_ratio", &hamiltonian_ratio, py::arg("x"), py::arg("lam"), py::arg("eps") = 1.0,
          py::arg("h") = 1e-3);
    m.def(
        "sample_sigma_lambda",
        [](const Vector& x, const Vector& lam, double eps, long count, std::uint64_t seed) {
            auto rng = replica_rng(seed, 0);
            std::vector<Rows> out;
            for (const auto& t : sample_sigma_lambda(x, lam, eps, count, rng)) out.push_back(t.to_rows());
            return out;
        },
        py::arg("x"), py::arg("lam"), py::arg("eps"), py::arg("count"), py::arg("seed") = 1);
    m.def(
        "generator_test_json",
        [](const Vector& lam, double eps, long replicas, double dt, std::uint64_t seed, double drift_scale) {
            SdeConfig cfg;
            cfg.lambda = lam;
            cfg.eps = eps;
            cfg.replicas = replicas;
            cfg.dt = dt;
            cfg.seed = seed;
            return to_json(generator_test(cfg, 0.1, drift_scale)).dump();
        },
        py::arg("lam"), py::arg("eps") = 1.0, py::arg("replicas") = 2000, py::arg("dt") = 1e-3,
        py::arg("seed") = 1, py::arg("drift_scale") = 1.0);

    // verification
    m.def("suite_names", &suite_names);
    m.def(
        "run_suite_json",
        [](const std::string& name, bool quick, std::uint64_t seed) {
            SuiteOptions opts;
            opts.quick = quick;
            opts.seed = seed;
            return to_json(run_suite(name, opts)).dump();
        },
        py::arg("name"), py::arg("quick") = true, py::arg("seed") = 20240611);
}
