#include "tnd/planted.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tnd/errors.hpp"
#include "tnd/factorized_layer.hpp"
#include "tnd/guard.hpp"

namespace tnd {

namespace {

DenseTensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseTensor m({rows, cols});
    for (cplx& v : m.data) v = cplx(gauss(rng), gauss(rng));
    return m;
}

} // namespace

void PlantedSpec::validate() const {
    if (k < 1) throw validation_error("planted spec: k must be >= 1");
    if (site_dim < 2) throw validation_error("planted spec: site_dim must be >= 2");
    if (chi_core < 1) throw validation_error("planted spec: chi_core must be >= 1");
    if (noise_level < 0.0) throw validation_error("planted spec: noise_level must be >= 0");
}

PlantedInstance plant_instance(const PlantedSpec& spec) {
    spec.validate();
    std::vector<std::size_t> dims(spec.k, spec.site_dim);
    SiteSpec site_spec{dims, dims};
    check_dense_guard(site_spec.rows() * site_spec.cols(), "plant_instance");

    FactorizedOperator truth;
    truth.site_spec = site_spec;
    truth.u = brickwork({spec.k, spec.layers_u, Parity::even}, dims, Side::output,
                        GateInit::haar, derived_seed(spec.seed, 1));
    truth.v_dag = brickwork({spec.k, spec.layers_v, Parity::even}, dims, Side::input,
                            GateInit::haar, derived_seed(spec.seed, 2));

    // Core: random dense operator cut to chi_core, then unit-normalized.
    std::mt19937_64 core_rng(derived_seed(spec.seed, 0));
    DenseTensor raw = random_matrix(site_spec.rows(), site_spec.cols(), core_rng);
    MPO core = mpo_from_matrix(raw, site_spec, chi_policy(spec.chi_core)).first;
    const double norm = std::sqrt(std::max(0.0, mpo_overlap(core, core).real()));
    if (norm <= 0.0) throw numeric_error("plant_instance: degenerate core");
    core.cores[0] = scale(core.cores[0], cplx(1.0 / norm));
    truth.core = std::move(core);

    truth.provenance["kind"] = "planted";
    truth.provenance["k"] = std::to_string(spec.k);
    truth.provenance["site_dim"] = std::to_string(spec.site_dim);
    truth.provenance["layers_u"] = std::to_string(spec.layers_u);
    truth.provenance["layers_v"] = std::to_string(spec.layers_v);
    truth.provenance["chi_core"] = std::to_string(spec.chi_core);
    truth.provenance["noise_level"] = std::to_string(spec.noise_level);
    truth.provenance["seed"] = std::to_string(spec.seed);

    DenseTensor w = reconstruct(truth);
    if (spec.noise_level > 0.0) {
        std::mt19937_64 noise_rng(derived_seed(spec.seed, 3));
        DenseTensor g = random_matrix(site_spec.rows(), site_spec.cols(), noise_rng);
        // Orthogonalize against W0 so the relative distance is exact.
        const double w2 = frob_norm(w) * frob_norm(w);
        const cplx overlap = frob_inner(w, g);
        g = add(g, scale(w, -overlap / w2));
        const double gn = frob_norm(g);
        if (gn <= 0.0) throw numeric_error("plant_instance: degenerate noise draw");
        g = scale(g, cplx(spec.noise_level * frob_norm(w) / gn));
        w = add(w, g);
    }
    return {std::move(w), std::move(truth)};
}

} // namespace tnd
