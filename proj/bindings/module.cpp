#include <algorithm>
#include <complex>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tnd/baselines.hpp"
#include "tnd/dense_tensor.hpp"
#include "tnd/disentangler.hpp"
#include "tnd/errors.hpp"
#include "tnd/factorized_layer.hpp"
#include "tnd/manifest.hpp"
#include "tnd/mpo.hpp"
#include "tnd/planted.hpp"
#include "tnd/qten_io.hpp"
#include "tnd/sampling.hpp"

namespace py = pybind11;

namespace {

using tnd::cplx;
using tnd::DenseTensor;

using carray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

DenseTensor from_array(const carray& arr) {
    std::vector<std::size_t> dims(static_cast<std::size_t>(arr.ndim()));
    for (py::ssize_t i = 0; i < arr.ndim(); ++i)
        dims[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arr.shape(i));
    DenseTensor t(dims);
    std::copy(arr.data(), arr.data() + arr.size(), t.data.begin());
    return t;
}

py::array_t<std::complex<double>> to_array(const DenseTensor& t) {
    std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
    py::array_t<std::complex<double>> arr(shape);
    std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
    return arr;
}

tnd::SiteSpec uniform_spec(const DenseTensor& w, std::size_t site_dim) {
    if (w.rank() != 2) throw tnd::validation_error("expected a matrix");
    if (site_dim < 2) throw tnd::validation_error("site_dim must be >= 2");
    auto log_dim = [](std::size_t n, std::size_t d) {
        std::size_t k = 0;
        while (n > 1 && n % d == 0) {
            n /= d;
            ++k;
        }
        return n == 1 ? k : std::size_t{0};
    };
    const std::size_t ka = log_dim(w.rows(), site_dim);
    const std::size_t kb = log_dim(w.cols(), site_dim);
    if (ka == 0 || ka != kb)
        throw tnd::validation_error("matrix shape does not factorize over site_dim " +
                                    std::to_string(site_dim));
    tnd::SiteSpec spec;
    spec.out_dims.assign(ka, site_dim);
    spec.in_dims.assign(ka, site_dim);
    return spec;
}

py::dict report_dict(const tnd::ConvergenceReport& rep) {
    py::dict d;
    d["final_rel_error"] = rep.final_rel_error;
    d["sweep_fidelities"] = rep.sweep_fidelities;
    d["converged"] = rep.converged;
    d["sweeps_used"] = rep.sweeps_used;
    d["restart_index"] = rep.restart_index;
    d["entropy_before_s1"] = rep.entropy_before_s1;
    d["entropy_after_s1"] = rep.entropy_after_s1;
    d["entropy_before_s2"] = rep.entropy_before_s2;
    d["entropy_after_s2"] = rep.entropy_after_s2;
    return d;
}

py::dict param_dict(const tnd::ParamCount& pc) {
    py::dict d;
    d["gates"] = pc.gates;
    d["core"] = pc.core;
    d["total"] = pc.total;
    d["dense_equiv"] = pc.dense_equiv;
    d["ratio"] = pc.ratio;
    return d;
}

tnd::DisentangleConfig make_config(std::size_t layers_u, std::size_t layers_v,
                                   std::size_t chi_new, std::size_t max_sweeps,
                                   double fid_tol, std::uint64_t seed,
                                   const std::string& init) {
    tnd::DisentangleConfig cfg;
    cfg.layers_u = layers_u;
    cfg.layers_v = layers_v;
    cfg.chi_new = chi_new;
    cfg.max_sweeps = max_sweeps;
    cfg.fid_tol = fid_tol;
    cfg.seed = seed;
    if (init == "identity") {
        cfg.init = tnd::GateInit::identity;
    } else if (init == "haar") {
        cfg.init = tnd::GateInit::haar;
    } else {
        throw tnd::validation_error("init must be identity or haar");
    }
    cfg.validate();
    return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "tensor-network disentangler core";

    py::register_exception<tnd::validation_error>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<tnd::guard_error>(m, "GuardError", PyExc_RuntimeError);
    py::register_exception<tnd::numeric_error>(m, "NumericError", PyExc_RuntimeError);

    py::class_<tnd::FactorizedOperator>(m, "FactorizedLayer")
        .def_property_readonly("bond_dims",
                               [](const tnd::FactorizedOperator& f) {
                                   return f.core.bond_dims();
                               })
        .def_property_readonly("layers_u",
                               [](const tnd::FactorizedOperator& f) {
                                   return f.u.num_layers();
                               })
        .def_property_readonly("layers_v",
                               [](const tnd::FactorizedOperator& f) {
                                   return f.v_dag.num_layers();
                               })
        .def_property_readonly("shape",
                               [](const tnd::FactorizedOperator& f) {
                                   return py::make_tuple(f.site_spec.rows(),
                                                         f.site_spec.cols());
                               })
        .def("param_count",
             [](const tnd::FactorizedOperator& f) { return param_dict(tnd::param_count(f)); })
        .def("reconstruct",
             [](const tnd::FactorizedOperator& f) { return to_array(tnd::reconstruct(f)); })
        .def(
            "apply",
            [](const tnd::FactorizedOperator& f, const carray& x) {
                return to_array(tnd::apply_to_batch(f, from_array(x)));
            },
            py::arg("x"))
        .def(
            "save",
            [](const tnd::FactorizedOperator& f, const std::string& path) {
                tnd::save_factorized(path, f, tnd::ordered_json::object(),
                                     tnd::ordered_json::object());
            },
            py::arg("path"))
        .def_static(
            "load",
            [](const std::string& path) { return tnd::load_factorized(path).fac; },
            py::arg("path"));

    m.def(
        "factorize",
        [](const carray& w, std::size_t chi, std::size_t site_dim) {
            const DenseTensor wd = from_array(w);
            const tnd::SiteSpec spec = uniform_spec(wd, site_dim);
            const tnd::MPO mpo =
                tnd::mpo_from_matrix(wd, spec, tnd::near_exact_policy()).first;
            tnd::RestartResult rr =
                tnd::disentangle_restarts(mpo, make_config(0, 0, chi, 200, 1e-9, 0, "identity"), 1);
            return py::make_tuple(rr.fac, report_dict(rr.report));
        },
        py::arg("w"), py::arg("chi"), py::arg("site_dim") = 2,
        "Plain MPO factorization (no circuits) of a square matrix.");

    m.def(
        "disentangle",
        [](const carray& w, std::size_t layers_u, std::size_t layers_v, std::size_t chi_new,
           std::size_t max_sweeps, double fid_tol, std::uint64_t seed, std::size_t restarts,
           const std::string& init, std::size_t site_dim) {
            const DenseTensor wd = from_array(w);
            const tnd::SiteSpec spec = uniform_spec(wd, site_dim);
            const tnd::MPO mpo =
                tnd::mpo_from_matrix(wd, spec, tnd::near_exact_policy()).first;
            tnd::RestartResult rr = tnd::disentangle_restarts(
                mpo, make_config(layers_u, layers_v, chi_new, max_sweeps, fid_tol, seed, init),
                restarts);
            return py::make_tuple(rr.fac, report_dict(rr.report));
        },
        py::arg("w"), py::arg("layers_u") = 1, py::arg("layers_v") = 1,
        py::arg("chi_new") = 1, py::arg("max_sweeps") = 200, py::arg("fid_tol") = 1e-9,
        py::arg("seed") = 0, py::arg("restarts") = 1, py::arg("init") = "identity",
        py::arg("site_dim") = 2,
        "Factorize a square matrix into u * core * v_dag with brickwork circuits.");

    m.def(
        "enhance",
        [](const tnd::FactorizedOperator& fac, std::size_t add_layers_u,
           std::size_t add_layers_v, std::size_t new_chi, double pad_noise,
           std::uint64_t seed) {
            tnd::EnhanceConfig cfg;
            cfg.add_layers_u = add_layers_u;
            cfg.add_layers_v = add_layers_v;
            cfg.new_chi = new_chi == 0 ? fac.core.max_bond() : new_chi;
            cfg.pad_noise = pad_noise;
            cfg.seed = seed;
            return tnd::enhance(fac, cfg);
        },
        py::arg("layer"), py::arg("add_layers_u") = 0, py::arg("add_layers_v") = 0,
        py::arg("new_chi") = 0, py::arg("pad_noise") = 0.0, py::arg("seed") = 0,
        "Grow circuit depth and core bond dimension without changing the operator.");

    m.def(
        "retrain_matrix",
        [](const tnd::FactorizedOperator& fac, const carray& w, std::size_t steps) {
            const DenseTensor wd = from_array(w);
            if (wd.rank() != 2 || wd.rows() != fac.site_spec.rows() ||
                wd.cols() != fac.site_spec.cols())
                throw tnd::validation_error("reference shape disagrees with the layer");
            const tnd::MPO target =
                tnd::mpo_from_matrix(wd, fac.site_spec, tnd::near_exact_policy()).first;
            tnd::EnhanceConfig cfg;
            cfg.retrain_steps = steps;
            cfg.objective = tnd::Objective::matrix_fidelity;
            auto [out, trace] = tnd::retrain(fac, target, cfg);
            return py::make_tuple(out, trace.step_losses);
        },
        py::arg("layer"), py::arg("w"), py::arg("steps"),
        "Alternating sweeps against a dense reference matrix.");

    m.def(
        "retrain_data",
        [](const tnd::FactorizedOperator& fac, const carray& x, const carray& y,
           std::size_t steps, double step_size) {
            tnd::Dataset data{from_array(x), from_array(y)};
            tnd::EnhanceConfig cfg;
            cfg.retrain_steps = steps;
            cfg.step_size = step_size;
            cfg.objective = tnd::Objective::data_mse;
            auto [out, trace] = tnd::retrain(fac, data, cfg);
            return py::make_tuple(out, trace.step_losses);
        },
        py::arg("layer"), py::arg("x"), py::arg("y"), py::arg("steps"),
        py::arg("step_size") = 0.05, "Gradient retraining on (x, y) batch columns.");

    m.def(
        "baselines",
        [](const carray& w, double target_error, std::size_t site_dim, std::uint64_t seed) {
            const DenseTensor wd = from_array(w);
            const tnd::SiteSpec spec = uniform_spec(wd, site_dim);
            tnd::BaselineConfig cfg;
            cfg.seed = seed;
            const auto profiles = tnd::baseline_profiles(wd, spec, target_error, cfg);
            py::list out;
            for (const tnd::BondProfile& p : profiles) {
                py::dict d;
                d["method"] = p.method == tnd::BaselineMethod::disentangler ? "disentangler"
                              : p.method == tnd::BaselineMethod::polar      ? "polar"
                                                                            : "plain_mpo";
                d["target_error"] = p.target_error;
                d["bond_dims"] = p.bond_dims;
                d["circuit_layers"] = p.circuit_layers;
                d["param_count"] = p.param_count;
                d["achieved_error"] = p.achieved_error;
                out.append(d);
            }
            return out;
        },
        py::arg("w"), py::arg("target_error"), py::arg("site_dim") = 2, py::arg("seed") = 0,
        "Parameter-count profiles of plain MPO, polar, and disentangler factorizations.");

    m.def(
        "plant",
        [](std::size_t k, std::size_t site_dim, std::size_t layers_u, std::size_t layers_v,
           std::size_t chi, double noise, std::uint64_t seed) {
            tnd::PlantedSpec spec;
            spec.k = k;
            spec.site_dim = site_dim;
            spec.layers_u = layers_u;
            spec.layers_v = layers_v;
            spec.chi_core = chi;
            spec.noise_level = noise;
            spec.seed = seed;
            tnd::PlantedInstance inst = tnd::plant_instance(spec);
            return py::make_tuple(to_array(inst.w), inst.truth);
        },
        py::arg("k") = 4, py::arg("site_dim") = 2, py::arg("layers_u") = 1,
        py::arg("layers_v") = 1, py::arg("chi") = 1, py::arg("noise") = 0.0,
        py::arg("seed") = 0, "Generate a planted circuit-times-core instance.");

    m.def(
        "shot_study",
        [](const tnd::FactorizedOperator& fac, const std::string& which, const carray& x,
           const std::vector<std::size_t>& shots, std::uint64_t seed) {
            const tnd::Circuit& c = which == "v_dag" ? fac.v_dag : fac.u;
            tnd::ShotStudy st = tnd::shot_noise_study(c, from_array(x), shots, seed);
            return st.l2_errors;
        },
        py::arg("layer"), py::arg("which"), py::arg("x"), py::arg("shots"),
        py::arg("seed") = 0,
        "L2 error between sampled and exact measurement distributions per shot count.");

    m.def(
        "read_qten", [](const std::string& path) { return to_array(tnd::read_qten(path)); },
        py::arg("path"));
    m.def(
        "write_qten",
        [](const std::string& path, const carray& t) { tnd::write_qten(path, from_array(t)); },
        py::arg("path"), py::arg("t"));

    m.attr("__version__") = "0.1.0";
}
