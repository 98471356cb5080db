#include "tnd/factorized_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tnd/errors.hpp"
#include "tnd/guard.hpp"

namespace tnd {

namespace {

// Transfer environment between conj(m) and t (same site spec), both physical
// legs zipped; result legs (m_bond, t_bond).
DenseTensor left_transfer(const MPO& m, const MPO& t, std::size_t upto) {
    DenseTensor env({1, 1}, {cplx(1.0)});
    for (std::size_t i = 0; i < upto; ++i) {
        DenseTensor a = contract(env, {0}, conj(m.cores[i]), {0}); // (bT, o, p, rM)
        env = contract(a, {0, 1, 2}, t.cores[i], {0, 1, 2});       // (rM, rT)
    }
    return env;
}

DenseTensor right_transfer(const MPO& m, const MPO& t, std::size_t from) {
    DenseTensor env({1, 1}, {cplx(1.0)});
    for (std::size_t i = m.num_sites(); i-- > from;) {
        DenseTensor a = contract(conj(m.cores[i]), {3}, env, {0}); // (lM, o, p, bT)
        env = contract(a, {1, 2, 3}, t.cores[i], {1, 2, 3});       // (lM, lT)
    }
    return env;
}

// Contraction of t against conj of every core of m except `site`, shaped
// like m.cores[site]. With the other cores of m canonical around `site`,
// this is the exact local least-squares solution for that core against t.
DenseTensor frame_project(const MPO& m, const MPO& t, std::size_t site) {
    DenseTensor l = left_transfer(m, t, site);
    DenseTensor r = right_transfer(m, t, site + 1);
    DenseTensor x = contract(l, {1}, t.cores[site], {0}); // (lM, o, p, rT)
    return contract(x, {3}, r, {1});                      // (lM, o, p, rM)
}

// u^dag * T * v: both circuits applied adjoint, no bond cap.
MPO pull_back(const FactorizedOperator& fac, const MPO& target) {
    MPO z = apply_circuit_mpo(target, fac.u, true, near_exact_policy()).first;
    return apply_circuit_mpo(z, fac.v_dag, true, near_exact_policy()).first;
}

// Moves the canonical center from `site` to `site + 1` after the core at
// `site` was replaced (all other frames still isometric).
void shift_center_right(MPO& m, std::size_t site) {
    DenseTensor& c = m.cores[site];
    const std::size_t l = c.dims[0], o = c.dims[1], p = c.dims[2], rd = c.dims[3];
    SvdResult f = svd_exact(reshape(c, {l * o * p, rd}));
    c = reshape(f.left, {l, o, p, f.kept()});
    DenseTensor carry = diag_scale_rows(f.singular_values, f.right);
    m.cores[site + 1] = contract(carry, {1}, m.cores[site + 1], {0});
    m.canonical_center = site + 1;
}

double relative_matrix_loss(const FactorizedOperator& fac, const MPO& target) {
    MPO r = apply_circuit_mpo(fac.core, fac.u, false, near_exact_policy()).first;
    r = apply_circuit_mpo(r, fac.v_dag, false, near_exact_policy()).first;
    const double nt = mpo_overlap(target, target).real();
    const double nr = mpo_overlap(r, r).real();
    const double re_ov = mpo_overlap(r, target).real();
    return nt > 0.0 ? std::max(0.0, nt + nr - 2.0 * re_ov) / nt : 0.0;
}

void check_dataset(const FactorizedOperator& fac, const Dataset& data) {
    if (data.x.rank() != 2 || data.y.rank() != 2)
        throw validation_error("dataset: x and y must be rank-2 column batches");
    if (data.x.rows() != fac.site_spec.cols())
        throw validation_error("dataset: x row count disagrees with operator input dim");
    if (data.y.rows() != fac.site_spec.rows())
        throw validation_error("dataset: y row count disagrees with operator output dim");
    if (data.x.cols() != data.y.cols())
        throw validation_error("dataset: x and y batch sizes disagree");
}

// apply_to_batch without re-validating fac (finite-difference probes
// deliberately carry non-unitary gates).
DenseTensor apply_batch_impl(const FactorizedOperator& fac, const DenseTensor& x) {
    const std::size_t k = fac.site_spec.num_sites();
    const std::size_t batch = x.cols();

    std::vector<std::size_t> ket_dims = fac.site_spec.in_dims;
    ket_dims.push_back(batch);
    DenseTensor t = apply_circuit_ket(fac.v_dag, reshape(x, ket_dims), false);

    std::vector<std::size_t> dims;
    dims.push_back(1); // bond leg rides in front
    dims.insert(dims.end(), fac.site_spec.in_dims.begin(), fac.site_spec.in_dims.end());
    dims.push_back(batch);
    t = reshape(t, dims);

    // Invariant entering step s: legs (o_0..o_{s-1}, bond, i_s.., batch).
    for (std::size_t s = 0; s < k; ++s) {
        DenseTensor r = contract(fac.core.cores[s], {0, 2}, t, {s, s + 1});
        // r legs: (o_s, bond', o_0..o_{s-1}, i_{s+1}.., batch); restore order.
        std::vector<std::size_t> perm(r.rank());
        for (std::size_t j = 0; j < r.rank(); ++j) {
            if (j < s) perm[j] = 2 + j;
            else if (j == s) perm[j] = 0;
            else if (j == s + 1) perm[j] = 1;
            else perm[j] = j;
        }
        t = permute(r, perm);
    }
    // Legs now (o_0..o_{k-1}, bond=1, batch); drop the trivial bond leg.
    std::vector<std::size_t> out_dims = fac.site_spec.out_dims;
    out_dims.push_back(batch);
    t = reshape(t, out_dims);
    t = apply_circuit_ket(fac.u, t, false);
    return reshape(t, {fac.site_spec.rows(), batch});
}

double data_loss_impl(const FactorizedOperator& fac, const Dataset& data) {
    DenseTensor diff = add(apply_batch_impl(fac, data.x), scale(data.y, cplx(-1.0)));
    const double n = frob_norm(diff);
    return n * n / static_cast<double>(data.y.size());
}

// (1/N) (R x - y) x^dag: the derivative of the data loss with respect to
// conj(R), as the linearization target for gate and core gradients.
MPO residual_env_mpo(const FactorizedOperator& fac, const Dataset& data) {
    DenseTensor diff = add(apply_batch_impl(fac, data.x), scale(data.y, cplx(-1.0)));
    const double n = static_cast<double>(data.y.size());
    DenseTensor er = scale(matmul(diff, dagger(data.x)), cplx(1.0 / n));
    return mpo_from_matrix(er, fac.site_spec, near_exact_policy()).first;
}

std::size_t bond_rank_cap(const SiteSpec& spec, std::size_t bond) {
    // Maximal Schmidt rank across bond (bond, bond+1).
    std::size_t left = 1, right = 1;
    bool capped = false;
    for (std::size_t j = 0; j <= bond && !capped; ++j) {
        const std::size_t d = spec.out_dims[j] * spec.in_dims[j];
        if (left > (std::size_t(1) << 40) / d) capped = true;
        else left *= d;
    }
    for (std::size_t j = bond + 1; j < spec.num_sites() && !capped; ++j) {
        const std::size_t d = spec.out_dims[j] * spec.in_dims[j];
        if (right > (std::size_t(1) << 40) / d) capped = true;
        else right *= d;
    }
    return capped ? std::numeric_limits<std::size_t>::max() : std::min(left, right);
}

void append_identity_layers(Circuit& c, std::size_t count) {
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t labs = c.layers.size();
        const std::size_t start = ((c.parity_start == Parity::even ? 0 : 1) + labs) % 2;
        std::vector<Gate> layer;
        for (std::size_t s = start; s + 1 < c.num_sites; s += 2) {
            Gate g;
            g.site = s;
            g.d_left = c.site_dims[s];
            g.d_right = c.site_dims[s + 1];
            g.matrix = DenseTensor::identity(g.d_left * g.d_right);
            layer.push_back(std::move(g));
        }
        c.layers.push_back(std::move(layer));
    }
}

Gate* find_gate(Circuit& c, std::size_t layer, std::size_t site) {
    for (Gate& g : c.layers[layer])
        if (g.site == site) return &g;
    throw validation_error("no gate at the requested (layer, site)");
}

} // namespace

void EnhanceConfig::validate() const {
    if (new_chi < 1) throw validation_error("enhance config: new_chi must be >= 1");
    if (!(step_size > 0.0)) throw validation_error("enhance config: step_size must be > 0");
    if (pad_noise < 0.0) throw validation_error("enhance config: pad_noise must be >= 0");
}

DenseTensor reconstruct(const FactorizedOperator& fac) {
    fac.validate();
    DenseTensor m = mpo_to_matrix(fac.core);
    m = apply_circuit_dense(fac.u, m, false);
    return apply_circuit_dense(fac.v_dag, m, false);
}

DenseTensor apply_to_batch(const FactorizedOperator& fac, const DenseTensor& x) {
    fac.validate();
    if (x.rank() != 2 || x.rows() != fac.site_spec.cols())
        throw validation_error("apply_to_batch: column dim disagrees with operator input");
    return apply_batch_impl(fac, x);
}

ParamCount param_count(const FactorizedOperator& fac) {
    ParamCount p;
    for (const Circuit* c : {&fac.u, &fac.v_dag})
        for (const auto& layer : c->layers)
            for (const Gate& g : layer) p.gates += 2 * g.matrix.size();
    for (const DenseTensor& c : fac.core.cores) p.core += 2 * c.size();
    p.total = p.gates + p.core;
    p.dense_equiv = 2 * fac.site_spec.rows() * fac.site_spec.cols();
    p.ratio = p.dense_equiv > 0
                  ? static_cast<double>(p.total) / static_cast<double>(p.dense_equiv)
                  : 0.0;
    return p;
}

FactorizedOperator enhance(const FactorizedOperator& fac, const EnhanceConfig& cfg) {
    cfg.validate();
    fac.validate();
    if (cfg.new_chi < fac.core.max_bond())
        throw validation_error("enhance: new_chi below current bond (shrink not allowed)");

    FactorizedOperator out = fac;
    append_identity_layers(out.u, cfg.add_layers_u);
    append_identity_layers(out.v_dag, cfg.add_layers_v);

    const std::size_t k = out.core.num_sites();
    std::mt19937_64 rng(derived_seed(cfg.seed, 0xE0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double core_norm =
        std::sqrt(std::max(0.0, mpo_overlap(out.core, out.core).real()));

    std::vector<std::size_t> target(k + 1, 1);
    for (std::size_t b = 0; b + 1 < k; ++b)
        target[b + 1] = std::max(out.core.cores[b].dims[3],
                                 std::min(cfg.new_chi, bond_rank_cap(out.core.site_spec, b)));

    for (std::size_t s = 0; s < k; ++s) {
        const DenseTensor& c = out.core.cores[s];
        const std::size_t l = c.dims[0], o = c.dims[1], p = c.dims[2], rd = c.dims[3];
        const std::size_t nl = target[s], nr = target[s + 1];
        if (nl == l && nr == rd) continue;
        DenseTensor padded = DenseTensor::zeros({nl, o, p, nr});
        const double eps =
            cfg.pad_noise > 0.0
                ? cfg.pad_noise * core_norm / std::sqrt(static_cast<double>(padded.size()))
                : 0.0;
        for (std::size_t a = 0; a < nl; ++a)
            for (std::size_t b = 0; b < o; ++b)
                for (std::size_t d = 0; d < p; ++d)
                    for (std::size_t e = 0; e < nr; ++e) {
                        const std::size_t dst = ((a * o + b) * p + d) * nr + e;
                        if (a < l && e < rd)
                            padded.data[dst] = c.data[((a * o + b) * p + d) * rd + e];
                        else if (eps > 0.0)
                            padded.data[dst] = cplx(gauss(rng), gauss(rng)) * eps;
                    }
        out.core.cores[s] = std::move(padded);
    }
    out.core.canonical_center.reset();
    return out;
}

double data_loss(const FactorizedOperator& fac, const Dataset& data) {
    fac.validate();
    check_dataset(fac, data);
    return data_loss_impl(fac, data);
}

DenseTensor core_gradient(const FactorizedOperator& fac, std::size_t site,
                          const Dataset& data) {
    check_dataset(fac, data);
    if (site >= fac.core.num_sites())
        throw validation_error("core_gradient: site out of range");
    MPO z = pull_back(fac, residual_env_mpo(fac, data));
    return scale(frame_project(fac.core, z, site), cplx(2.0));
}

DenseTensor gate_gradient(const FactorizedOperator& fac, WhichCircuit which,
                          std::size_t layer, std::size_t site, const Dataset& data) {
    check_dataset(fac, data);
    DenseTensor e = gate_environment(residual_env_mpo(fac, data), fac, which, layer, site);
    return scale(dagger(e), cplx(2.0));
}

GradCheckReport run_grad_check(const FactorizedOperator& fac, const Dataset& data) {
    const double h = 1e-6;
    GradCheckReport rep;
    rep.performed = true;

    double worst_core = 0.0;
    for (std::size_t s = 0; s < fac.core.num_sites(); ++s) {
        DenseTensor g = core_gradient(fac, s, data);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (int part = 0; part < 2; ++part) {
                FactorizedOperator fp = fac, fm = fac;
                const cplx delta = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
                fp.core.cores[s].data[i] += delta;
                fm.core.cores[s].data[i] -= delta;
                const double fd =
                    (data_loss_impl(fp, data) - data_loss_impl(fm, data)) / (2.0 * h);
                const double an = part == 0 ? g.data[i].real() : g.data[i].imag();
                const double ref = std::max({std::abs(fd), std::abs(an), 1e-8});
                worst_core = std::max(worst_core, std::abs(fd - an) / ref);
            }
        }
    }
    rep.max_rel_err_core = worst_core;

    double worst_gate = 0.0;
    for (WhichCircuit which : {WhichCircuit::u, WhichCircuit::v_dag}) {
        const Circuit& c = (which == WhichCircuit::u) ? fac.u : fac.v_dag;
        for (const auto& [layer, site] : gate_sequence(c)) {
            DenseTensor g = gate_gradient(fac, which, layer, site, data);
            for (std::size_t i = 0; i < g.size(); ++i) {
                for (int part = 0; part < 2; ++part) {
                    FactorizedOperator fp = fac, fm = fac;
                    Circuit& cp = (which == WhichCircuit::u) ? fp.u : fp.v_dag;
                    Circuit& cm = (which == WhichCircuit::u) ? fm.u : fm.v_dag;
                    const cplx delta = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
                    find_gate(cp, layer, site)->matrix.data[i] += delta;
                    find_gate(cm, layer, site)->matrix.data[i] -= delta;
                    // Probes break unitarity by design; use the unchecked path.
                    const double fd =
                        (data_loss_impl(fp, data) - data_loss_impl(fm, data)) / (2.0 * h);
                    const double an = part == 0 ? g.data[i].real() : g.data[i].imag();
                    const double ref = std::max({std::abs(fd), std::abs(an), 1e-8});
                    worst_gate = std::max(worst_gate, std::abs(fd - an) / ref);
                }
            }
        }
    }
    rep.max_rel_err_gate = worst_gate;
    return rep;
}

std::pair<FactorizedOperator, LossTrace> retrain(const FactorizedOperator& fac,
                                                 const MPO& target,
                                                 const EnhanceConfig& cfg) {
    cfg.validate();
    fac.validate();
    if (cfg.objective != Objective::matrix_fidelity)
        throw validation_error("retrain: MPO target requires the matrix_fidelity objective");
    if (!(fac.site_spec == target.site_spec))
        throw validation_error("retrain: target site spec disagrees");

    FactorizedOperator cur = fac;
    LossTrace trace;
    trace.step_losses.push_back(relative_matrix_loss(cur, target));

    for (std::size_t step = 0; step < cfg.retrain_steps; ++step) {
        // Gates: each Procrustes step maximizes Re tr(R^dag T) with ||R||
        // fixed, so the loss cannot increase.
        for (WhichCircuit which : {WhichCircuit::u, WhichCircuit::v_dag}) {
            Circuit& c = (which == WhichCircuit::u) ? cur.u : cur.v_dag;
            for (const auto& [layer, site] : gate_sequence(c)) {
                DenseTensor env = gate_environment(target, cur, which, layer, site);
                find_gate(c, layer, site)->matrix = procrustes_gate_update(env).first;
            }
        }
        // Core: exact local least-squares in mixed-canonical gauge; each
        // site update is the global minimizer over that tensor.
        MPO z = pull_back(cur, target);
        cur.core = canonicalize(cur.core, 0);
        for (std::size_t s = 0; s < cur.core.num_sites(); ++s) {
            cur.core.cores[s] = frame_project(cur.core, z, s);
            if (s + 1 < cur.core.num_sites()) shift_center_right(cur.core, s);
        }
        const double loss = relative_matrix_loss(cur, target);
        if (!std::isfinite(loss))
            throw retrain_abort("retrain: non-finite loss", std::move(trace));
        trace.step_losses.push_back(loss);
    }
    return {std::move(cur), std::move(trace)};
}

std::pair<FactorizedOperator, LossTrace> retrain(const FactorizedOperator& fac,
                                                 const Dataset& data,
                                                 const EnhanceConfig& cfg) {
    cfg.validate();
    fac.validate();
    if (cfg.objective != Objective::data_mse)
        throw validation_error("retrain: dataset target requires the data_mse objective");
    check_dataset(fac, data);

    FactorizedOperator cur = fac;
    LossTrace trace;
    trace.step_losses.push_back(data_loss_impl(cur, data));

    for (std::size_t step = 0; step < cfg.retrain_steps; ++step) {
        for (WhichCircuit which : {WhichCircuit::u, WhichCircuit::v_dag}) {
            Circuit& c = (which == WhichCircuit::u) ? cur.u : cur.v_dag;
            for (const auto& [layer, site] : gate_sequence(c)) {
                DenseTensor g = gate_gradient(cur, which, layer, site, data);
                Gate* gate = find_gate(c, layer, site);
                gate->matrix =
                    polar_project(add(gate->matrix, scale(g, cplx(-cfg.step_size, 0.0))));
            }
        }
        for (std::size_t s = 0; s < cur.core.num_sites(); ++s) {
            DenseTensor g = core_gradient(cur, s, data);
            cur.core.cores[s] =
                add(cur.core.cores[s], scale(g, cplx(-cfg.step_size, 0.0)));
        }
        cur.core.canonical_center.reset();
        const double loss = data_loss_impl(cur, data);
        if (!std::isfinite(loss))
            throw retrain_abort("retrain: non-finite loss", std::move(trace));
        trace.step_losses.push_back(loss);
    }
    return {std::move(cur), std::move(trace)};
}

} // namespace tnd
