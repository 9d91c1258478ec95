#include "mstab/besov.hpp"
#include "mstab/cgo.hpp"
#include "mstab/experiment.hpp"
#include "mstab/field_io.hpp"
#include "mstab/grid.hpp"
#include "mstab/mollify.hpp"
#include "mstab/potential.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace mstab;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using GridHolder = std::shared_ptr<Grid>;

GridHolder held(const GridPtr& g) { return std::const_pointer_cast<Grid>(g); }

/// Copy of a field as a complex array of shape (ncomp, N, N, N).
CArray to_numpy(const Field& u)
{
    const int n = u.grid()->n();
    CArray a({py::ssize_t(u.ncomp()), py::ssize_t(n), py::ssize_t(n), py::ssize_t(n)});
    cplx* p = a.mutable_data();
    const std::size_t sz = u.grid()->size();
    for (int c = 0; c < u.ncomp(); ++c) std::memcpy(p + c * sz, u.comp(c).data(), sz * sizeof(cplx));
    return a;
}

/**
 * @param a array of shape (ncomp, N, N, N) or (N, N, N) for a scalar
 * @param degree form degree; 0 when the array has one component
 */
Field from_numpy(const GridPtr& g, CArray a, int degree)
{
    const int n = g->n();
    if (a.ndim() == 3) a = a.reshape({py::ssize_t(1), py::ssize_t(n), py::ssize_t(n), py::ssize_t(n)});
    if (a.ndim() != 4 || a.shape(1) != n || a.shape(2) != n || a.shape(3) != n)
        throw Error("array shape does not match the grid");
    const int nc = int(a.shape(0));
    if (degree < 0) degree = nc == 1 ? 0 : 1;
    Field u(g, degree);
    if (u.ncomp() != nc) throw Error("array component count does not match the form degree");
    const std::size_t sz = g->size();
    for (int c = 0; c < nc; ++c) std::memcpy(u.comp(c).data(), a.data() + c * sz, sz * sizeof(cplx));
    return u;
}

py::dict zetas_dict(const Zetas& z)
{
    py::dict d;
    d["xi"] = z.xi;
    d["h"] = z.h;
    d["mu1"] = z.mu1;
    d["mu2"] = z.mu2;
    d["zeta1"] = z.zeta1;
    d["zeta2"] = z.zeta2;
    d["zeta0_1"] = z.zeta0_1;
    d["zeta0_2"] = z.zeta0_2;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Bindings for the magnetic Schroedinger stability toolkit";

    py::register_exception<Error>(m, "MstabError", PyExc_ValueError);

    py::class_<Grid, GridHolder>(m, "Grid")
        .def(py::init([](double L, int N) { return held(make_grid(L, N)); }), py::arg("L"), py::arg("N"))
        .def_property_readonly("L", &Grid::half_width)
        .def_property_readonly("N", &Grid::n)
        .def_property_readonly("spacing", &Grid::spacing)
        .def_property_readonly("freq_unit", &Grid::freq_unit)
        .def_property_readonly("nyquist", &Grid::nyquist)
        .def("coords", [](const Grid& g) {
            std::vector<double> x(g.n());
            for (int i = 0; i < g.n(); ++i) x[i] = g.coord(i);
            return py::array_t<double>(py::ssize_t(x.size()), x.data());
        })
        .def("__repr__", [](const Grid& g) {
            return "Grid(L=" + std::to_string(g.half_width()) + ", N=" + std::to_string(g.n()) + ")";
        });

    py::class_<Field>(m, "Field")
        .def(py::init([](const GridHolder& g, CArray a, int degree) { return from_numpy(g, std::move(a), degree); }),
             py::arg("grid"), py::arg("values"), py::arg("degree") = -1)
        .def_property_readonly("grid", [](const Field& u) { return held(u.grid()); })
        .def_property_readonly("degree", &Field::degree)
        .def_property_readonly("ncomp", &Field::ncomp)
        .def("numpy", &to_numpy)
        .def("max_abs", &Field::max_abs)
        .def("conj", &Field::conj)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def("__mul__", [](const Field& u, cplx s) { return s * u; })
        .def("__rmul__", [](const Field& u, cplx s) { return s * u; });

    m.def("d", &d_form, py::arg("u"), "exterior derivative of a 0- or 1-form");
    m.def("delta", &delta_form, py::arg("F"), "codifferential, the adjoint of d");
    m.def("l2_norm", &l2_norm, py::arg("u"));
    m.def("inner_product", &inner_product, py::arg("u"), py::arg("v"));
    m.def("fourier_hat", &fourier_hat, py::arg("u"), py::arg("component"), py::arg("xi"),
          "integral of u_c(x) exp(i x.xi) over the box");

    m.def(
        "besov_norm",
        [](const Field& u, double s, double r) {
            BesovResult b = besov_norm(u, {s, r});
            py::dict d;
            d["value"] = b.value;
            d["j_max"] = b.j_max;
            d["tail_l2"] = b.tail_l2;
            d["blocks"] = b.block_l2;
            return d;
        },
        py::arg("u"), py::arg("s"), py::arg("r") = 2.0);
    m.def("sobolev_norm", &sobolev_norm, py::arg("u"), py::arg("s"));
    m.def(
        "diff_seminorm", [](const Field& u, double eps, double r) { return diff_seminorm(u, eps, r).value; },
        py::arg("u"), py::arg("eps"), py::arg("r") = kRInf);
    m.def("lp_project", &lp_project, py::arg("u"), py::arg("j"));

    m.def(
        "mollify",
        [](const Field& u, double tau) {
            SplitResult r = split(u, tau);
            return py::make_tuple(r.sharp, r.flat);
        },
        py::arg("u"), py::arg("tau"), "split into (smooth, rough) parts at scale tau");

    m.def(
        "generate_pair",
        [](const GridHolder& g, double eps, std::uint64_t seed, double A_amp, double q_amp, double side) {
            PotentialPair P = generate_pair(g, eps, seed, A_amp, q_amp, side);
            return py::make_tuple(P.A, P.q);
        },
        py::arg("grid"), py::arg("eps") = 0.5, py::arg("seed") = 1, py::arg("A_amp") = 0.5, py::arg("q_amp") = 0.5,
        py::arg("side") = 1.0);

    m.def(
        "make_zetas", [](const Vec3& xi, double h, bool reflect) { return zetas_dict(make_zetas(xi, h, reflect)); },
        py::arg("xi"), py::arg("h"), py::arg("reflect") = false);

    m.def("save_field", &save_field, py::arg("path"), py::arg("u"));
    m.def(
        "load_field", [](const std::string& path) { return load_field(path); }, py::arg("path"));

    m.def("default_config_json", [] { return config_to_json(ExperimentConfig{}).dump(); });
    m.def(
        "validate_config_json", [](const std::string& s) { config_from_json(nlohmann::json::parse(s)).validate(); },
        py::arg("config"));
    m.def(
        "run_experiment_json",
        [](const std::string& s) {
            ExperimentConfig c = config_from_json(nlohmann::json::parse(s));
            c.validate();
            ExperimentResult r;
            {
                py::gil_scoped_release nogil;
                r = run_experiment(c);
            }
            return report_json(c, r).dump();
        },
        py::arg("config"), "run calibration and hold-out sweep, return report.json text");
}
