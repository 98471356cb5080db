#include "tnd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tnd/disentangler.hpp"
#include "tnd/errors.hpp"
#include "tnd/factorized_layer.hpp"

namespace tnd {

namespace {

std::vector<std::size_t> interior_bonds(const MPO& m) {
    std::vector<std::size_t> all = m.bond_dims();
    if (all.size() <= 2) return {};
    return std::vector<std::size_t>(all.begin() + 1, all.end() - 1);
}

double mpo_rel_error(const MPO& approx, const MPO& ref) {
    const double nr = mpo_overlap(ref, ref).real();
    const double na = mpo_overlap(approx, approx).real();
    const double ov = mpo_overlap(approx, ref).real();
    return nr > 0.0 ? std::sqrt(std::max(0.0, nr + na - 2.0 * ov) / nr) : 0.0;
}

std::size_t mpo_params(const MPO& m) {
    std::size_t n = 0;
    for (const DenseTensor& c : m.cores) n += 2 * c.size();
    return n;
}

std::size_t circuit_params(const Circuit& c) {
    std::size_t n = 0;
    for (const auto& layer : c.layers)
        for (const Gate& g : layer) n += 2 * g.matrix.size();
    return n;
}

// Minimal-chi truncation of `exact` reaching the target; falls back to the
// full bond dimension when the target is tighter than numerics allow.
std::pair<MPO, double> minimal_chi_truncation(const MPO& exact, double target) {
    const std::size_t full = std::max<std::size_t>(exact.max_bond(), 1);
    for (std::size_t chi = 1; chi <= full; ++chi) {
        MPO t = truncate_mpo(exact, chi_policy(chi)).first;
        const double err = mpo_rel_error(t, exact);
        if (err <= target || chi == full) return {std::move(t), err};
    }
    return {exact, 0.0}; // unreachable
}

} // namespace

PolarResult polar_decompose(const DenseTensor& w) {
    if (w.rank() != 2 || w.rows() != w.cols())
        throw validation_error("polar_decompose: matrix must be square");
    SvdResult f = svd_exact(w);

    PolarResult out;
    out.u_p = matmul(f.left, f.right); // X Y^dag
    // p = Y S Y^dag = right^dag * diag(s) * right
    DenseTensor v = dagger(f.right);
    out.p = matmul(v, diag_scale_rows(f.singular_values, f.right));
    out.unique = !f.singular_values.empty() && f.singular_values.back() > 1e-12;
    return out;
}

std::vector<BondProfile> baseline_profiles(const DenseTensor& w, const SiteSpec& spec,
                                           double target_error,
                                           const BaselineConfig& cfg) {
    spec.validate();
    if (w.rank() != 2 || w.rows() != spec.rows() || w.cols() != spec.cols())
        throw validation_error("baseline_profiles: matrix shape disagrees with site spec");
    if (spec.rows() != spec.cols())
        throw validation_error("baseline_profiles: square operator required");
    if (!(target_error > 0.0))
        throw validation_error("baseline_profiles: target_error must be > 0");

    MPO exact = mpo_from_matrix(w, spec, near_exact_policy()).first;
    std::vector<BondProfile> out;

    { // (a) plain MPO truncation of W itself.
        auto [t, err] = minimal_chi_truncation(exact, target_error);
        BondProfile prof;
        prof.method = BaselineMethod::plain_mpo;
        prof.target_error = target_error;
        prof.bond_dims = interior_bonds(t);
        prof.circuit_layers = 0;
        prof.param_count = mpo_params(t);
        prof.achieved_error = err;
        out.push_back(std::move(prof));
    }

    { // (b) polar: MPO of P plus a depth cost for u_p.
        PolarResult pol = polar_decompose(w);
        MPO p_exact = mpo_from_matrix(pol.p, spec, near_exact_policy()).first;
        auto [p_trunc, p_err] = minimal_chi_truncation(p_exact, target_error);

        MPO u_mpo = mpo_from_matrix(pol.u_p, spec, near_exact_policy()).first;
        std::size_t best_depth = cfg.depth_cap;
        double best_u_err = std::numeric_limits<double>::infinity();
        std::size_t best_gate_params = 0, best_core_params = 0;
        for (std::size_t d = 0; d <= cfg.depth_cap; ++d) {
            DisentangleConfig dc;
            dc.layers_u = d;
            dc.layers_v = 0;
            dc.chi_new = 1;
            dc.max_sweeps = cfg.max_sweeps;
            dc.fid_tol = cfg.fid_tol;
            dc.seed = derived_seed(cfg.seed, 0xB000 + d);
            RestartResult rr =
                disentangle_restarts(u_mpo, dc, d == 0 ? 1 : cfg.restarts);
            const double err = rr.report.final_rel_error;
            if (err < best_u_err) {
                best_u_err = err;
                best_depth = d;
                best_gate_params = circuit_params(rr.fac.u);
                best_core_params = mpo_params(rr.fac.core);
            }
            if (err <= target_error) break;
        }

        BondProfile prof;
        prof.method = BaselineMethod::polar;
        prof.target_error = target_error;
        prof.bond_dims = interior_bonds(p_trunc);
        prof.circuit_layers = best_depth;
        prof.param_count = mpo_params(p_trunc) + best_gate_params + best_core_params;
        prof.achieved_error = std::max(p_err, best_u_err);
        out.push_back(std::move(prof));
    }

    { // (c) disentangler: minimal params over the (layers, chi) grid.
        const std::size_t full = std::max<std::size_t>(exact.max_bond(), 1);
        bool found = false;
        BondProfile best;
        best.method = BaselineMethod::disentangler;
        best.target_error = target_error;
        best.param_count = std::numeric_limits<std::size_t>::max();
        double fallback_err = std::numeric_limits<double>::infinity();
        BondProfile fallback = best;

        for (std::size_t l = 0; l <= cfg.grid_layers_cap; ++l) {
            for (std::size_t chi = 1; chi <= full * 2; chi *= 2) {
                DisentangleConfig dc;
                dc.layers_u = l;
                dc.layers_v = l;
                dc.chi_new = std::min(chi, full);
                dc.max_sweeps = cfg.max_sweeps;
                dc.fid_tol = cfg.fid_tol;
                dc.seed = derived_seed(cfg.seed, 0xC000 + l * 64 + chi);
                RestartResult rr =
                    disentangle_restarts(exact, dc, l == 0 ? 1 : cfg.restarts);
                const double err = rr.report.final_rel_error;
                const std::size_t params = param_count(rr.fac).total;

                if (err <= target_error) {
                    if (params < best.param_count) {
                        best.bond_dims = interior_bonds(rr.fac.core);
                        best.circuit_layers = l;
                        best.param_count = params;
                        best.achieved_error = err;
                    }
                    found = true;
                    break; // larger chi only adds parameters at this depth
                }
                if (err < fallback_err) {
                    fallback_err = err;
                    fallback.bond_dims = interior_bonds(rr.fac.core);
                    fallback.circuit_layers = l;
                    fallback.param_count = params;
                    fallback.achieved_error = err;
                }
                if (dc.chi_new == full) break;
            }
            // Deeper circuits cannot beat an already-found parameter count
            // with their gate cost alone.
            if (found) {
                DisentangleConfig probe;
                probe.layers_u = l + 1;
                probe.layers_v = l + 1;
                Circuit cu = brickwork({spec.num_sites(), l + 1, Parity::even},
                                       spec.out_dims, Side::output, GateInit::identity, 0);
                if (2 * circuit_params(cu) >= best.param_count) break;
            }
        }
        out.push_back(found ? best : fallback);
    }
    return out;
}

} // namespace tnd
