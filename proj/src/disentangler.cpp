#include "tnd/disentangler.hpp"

#include <algorithm>
#include <cmath>

#include "tnd/errors.hpp"
#include "tnd/factorized_layer.hpp"
#include "tnd/guard.hpp"

namespace tnd {

namespace {

// Left/right transfer environments of conj(Q) zipped against P over both
// physical legs; legs (bond_P, bond_Q).
DenseTensor left_env(const MPO& p, const MPO& q, std::size_t upto) {
    DenseTensor env({1, 1}, {cplx(1.0)});
    for (std::size_t i = 0; i < upto; ++i) {
        DenseTensor t = contract(env, {0}, p.cores[i], {0});  // (bQ, o, c, rP)
        env = contract(t, {0, 1, 2}, conj(q.cores[i]), {0, 1, 2}); // (rP, rQ)
    }
    return env;
}

DenseTensor right_env(const MPO& p, const MPO& q, std::size_t from) {
    DenseTensor env({1, 1}, {cplx(1.0)});
    for (std::size_t i = p.num_sites(); i-- > from;) {
        DenseTensor t = contract(p.cores[i], {3}, env, {0});  // (lP, o, c, bQ)
        env = contract(t, {1, 2, 3}, conj(q.cores[i]), {1, 2, 3}); // (lP, lQ)
    }
    return env;
}

// Zip of P against conj(Q) over all legs except the chosen physical axis at
// sites (s, s+1); returns the rank-4 tensor (P_open1, P_open2, Q_open1,
// Q_open2) fused to a matrix [(P pair), (Q pair)].
DenseTensor zip_open(const MPO& p, const MPO& q, std::size_t s, bool open_out) {
    DenseTensor l = left_env(p, q, s);
    DenseTensor r = right_env(p, q, s + 2);
    DenseTensor t = contract(l, {0}, p.cores[s], {0});       // (bQ, o1, i1, m)
    t = contract(t, {3}, p.cores[s + 1], {0});               // (bQ, o1, i1, o2, i2, rP)
    if (open_out) {
        t = contract(t, {0, 2}, conj(q.cores[s]), {0, 2});   // (o1, o2, i2, rP, a1, mQ)
        t = contract(t, {2, 5}, conj(q.cores[s + 1]), {2, 0}); // (o1, o2, rP, a1, a2, rQ)
    } else {
        t = contract(t, {0, 1}, conj(q.cores[s]), {0, 1});   // (i1, o2, i2, rP, a1, mQ)
        t = contract(t, {1, 5}, conj(q.cores[s + 1]), {1, 0}); // (i1, i2, rP, a1, a2, rQ)
    }
    t = contract(t, {2, 5}, r, {0, 1});                      // (p1, p2, q1, q2)
    return fuse_to_matrix(t, {0, 1}, {2, 3});
}

// Applies a subset of one circuit's gates to an MPO. `positions` indexes
// into gate_sequence(c); gates are applied in the order given, optionally
// daggered.
MPO apply_gate_subset(const MPO& m, const Circuit& c,
                      const std::vector<std::size_t>& positions, bool dagger_gates) {
    auto seq = gate_sequence(c);
    MPO r = m;
    for (std::size_t idx : positions) {
        const auto [layer, site] = seq[idx];
        const Gate* g = nullptr;
        for (const Gate& cand : c.layers[layer])
            if (cand.site == site) g = &cand;
        Gate gg = dagger_gates ? dagger_gate(*g) : *g;
        r = apply_gate_mpo(r, gg, c.side, near_exact_policy()).first;
    }
    return r;
}

std::size_t find_position(const Circuit& c, std::size_t layer, std::size_t site) {
    auto seq = gate_sequence(c);
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (seq[i].first == layer && seq[i].second == site) return i;
    throw validation_error("gate_environment: no gate at the requested layer/site");
}

Gate* find_gate(Circuit& c, std::size_t layer, std::size_t site) {
    if (layer >= c.layers.size()) return nullptr;
    for (Gate& g : c.layers[layer])
        if (g.site == site) return &g;
    return nullptr;
}

// Rotates the core by a global phase so that tr(R^dag W) is real positive;
// leaves fidelity and norms unchanged.
void phase_align_core(FactorizedOperator& fac, const MPO& mpo_old) {
    MPO r = fac.core;
    r = apply_circuit_mpo(r, fac.u, false, near_exact_policy()).first;
    r = apply_circuit_mpo(r, fac.v_dag, false, near_exact_policy()).first;
    const cplx ov = mpo_overlap(r, mpo_old);
    const double a = std::abs(ov);
    if (a <= 0.0) return;
    const cplx phase = ov / a;
    // R -> phase * R makes the overlap tr((phase R)^dag W) = conj(phase) ov = |ov|.
    for (auto& v : fac.core.cores[0].data) v *= phase;
}

double rel_error_of(const FactorizedOperator& fac, const MPO& mpo_old,
                    const DenseTensor* w_dense) {
    if (w_dense != nullptr) {
        DenseTensor r = reconstruct(fac);
        return rel_frob_dist(*w_dense, r);
    }
    // ||W - R||^2 = ||W||^2 + ||R||^2 - 2 Re tr(R^dag W), all MPO-side.
    MPO r = fac.core;
    r = apply_circuit_mpo(r, fac.u, false, near_exact_policy()).first;
    r = apply_circuit_mpo(r, fac.v_dag, false, near_exact_policy()).first;
    const double nw = mpo_overlap(mpo_old, mpo_old).real();
    const double nr = mpo_overlap(r, r).real();
    const double re_ov = mpo_overlap(r, mpo_old).real();
    const double d2 = std::max(0.0, nw + nr - 2.0 * re_ov);
    return nw > 0.0 ? std::sqrt(d2 / nw) : 0.0;
}

} // namespace

void FactorizedOperator::validate() const {
    u.validate();
    v_dag.validate();
    core.validate();
    site_spec.validate();
    if (u.side != Side::output || v_dag.side != Side::input)
        throw validation_error("factorized operator: circuit sides are swapped");
    if (u.num_sites != site_spec.num_sites() || v_dag.num_sites != site_spec.num_sites() ||
        core.num_sites() != site_spec.num_sites())
        throw validation_error("factorized operator: site counts disagree");
    if (u.site_dims != site_spec.out_dims || v_dag.site_dims != site_spec.in_dims)
        throw validation_error("factorized operator: circuit site dims disagree with spec");
}

void DisentangleConfig::validate() const {
    if (chi_new < 1) throw validation_error("disentangle config: chi_new must be >= 1");
    if (!(fid_tol > 0.0)) throw validation_error("disentangle config: fid_tol must be > 0");
}

TruncationPolicy chi_policy(std::size_t chi_max) {
    TruncationPolicy p = near_exact_policy();
    p.chi_max = chi_max;
    return p;
}

Circuit empty_circuit(const std::vector<std::size_t>& site_dims, Side side) {
    Circuit c;
    c.num_sites = site_dims.size();
    c.site_dims = site_dims;
    c.side = side;
    return c;
}

FactorizedOperator make_factorized(const MPO& mpo_old, const DisentangleConfig& cfg) {
    cfg.validate();
    mpo_old.validate();
    const SiteSpec& spec = mpo_old.site_spec;
    const std::size_t k = spec.num_sites();

    FactorizedOperator fac;
    fac.site_spec = spec;
    fac.u = (cfg.layers_u == 0 || k < 2)
                ? empty_circuit(spec.out_dims, Side::output)
                : brickwork(CircuitLayout{k, cfg.layers_u, Parity::even}, spec.out_dims,
                            Side::output, cfg.init, derived_seed(cfg.seed, 1));
    fac.v_dag = (cfg.layers_v == 0 || k < 2)
                    ? empty_circuit(spec.in_dims, Side::input)
                    : brickwork(CircuitLayout{k, cfg.layers_v, Parity::even}, spec.in_dims,
                                Side::input, cfg.init, derived_seed(cfg.seed, 2));
    fac.core = residual_mpo(mpo_old, fac.u, fac.v_dag, cfg.chi_new).first;
    return fac;
}

std::pair<MPO, double> residual_mpo(const MPO& mpo_old, const Circuit& u,
                                    const Circuit& v_dag, std::size_t chi_new) {
    if (chi_new < 1) throw validation_error("residual_mpo: chi_new must be >= 1");
    auto [m1, e1] = apply_circuit_mpo(mpo_old, u, true, near_exact_policy());
    auto [m2, e2] = apply_circuit_mpo(m1, v_dag, true, near_exact_policy());
    auto [m3, e3] = truncate_mpo(m2, chi_policy(chi_new));
    return {std::move(m3), std::sqrt(e1 * e1 + e2 * e2 + e3 * e3)};
}

DenseTensor gate_environment(const MPO& mpo_old, const FactorizedOperator& fac,
                             WhichCircuit which, std::size_t layer, std::size_t site) {
    fac.validate();
    const Circuit& c = (which == WhichCircuit::u) ? fac.u : fac.v_dag;
    const std::size_t j = find_position(c, layer, site);
    const std::size_t n = gate_sequence(c).size();
    std::vector<std::size_t> before(j), after;
    for (std::size_t i = 0; i < j; ++i) before[i] = i;
    for (std::size_t i = n; i-- > j + 1;) after.push_back(i); // reversed

    if (which == WhichCircuit::u) {
        // P = (gates of u before g) * core * v_dag; Q = (gates after g)^dag * W.
        MPO p = apply_circuit_mpo(fac.core, fac.v_dag, false, near_exact_policy()).first;
        p = apply_gate_subset(p, fac.u, before, false);
        MPO q = apply_gate_subset(mpo_old, fac.u, after, true);
        return zip_open(p, q, site, true);
    }
    // which == v_dag: P-role = u * core * (v gates before g);
    // Q-role = W * (gates after g)^dag on the input legs.
    MPO p = apply_circuit_mpo(fac.core, fac.u, false, near_exact_policy()).first;
    p = apply_gate_subset(p, fac.v_dag, before, false);
    MPO q = apply_gate_subset(mpo_old, fac.v_dag, after, true);
    DenseTensor z = zip_open(p, q, site, false);
    return permute(z, {1, 0}); // plain transpose
}

std::pair<DenseTensor, double> procrustes_gate_update(const DenseTensor& env) {
    if (env.rank() != 2 || env.rows() != env.cols())
        throw validation_error("procrustes_gate_update: environment must be square");
    if (!env.is_finite()) throw numeric_error("procrustes_gate_update: non-finite environment");
    SvdResult f = svd_exact(env);
    DenseTensor g = dagger(matmul(f.left, f.right));
    double obj = 0.0;
    for (double s : f.singular_values) obj += s;
    return {std::move(g), obj};
}

double fidelity(const FactorizedOperator& fac, const MPO& mpo_old) {
    if (!(fac.site_spec == mpo_old.site_spec))
        throw validation_error("fidelity: site specs disagree");
    MPO r = fac.core;
    r = apply_circuit_mpo(r, fac.u, false, near_exact_policy()).first;
    r = apply_circuit_mpo(r, fac.v_dag, false, near_exact_policy()).first;
    const cplx ov = mpo_overlap(r, mpo_old);
    const double nr = mpo_overlap(r, r).real();
    const double nw = mpo_overlap(mpo_old, mpo_old).real();
    if (nr <= 0.0 || nw <= 0.0) return 0.0;
    return std::norm(ov) / (nr * nw);
}

std::pair<FactorizedOperator, ConvergenceReport> disentangle(const MPO& mpo_old,
                                                             const DisentangleConfig& cfg) {
    cfg.validate();
    mpo_old.validate();

    FactorizedOperator fac = make_factorized(mpo_old, cfg);
    phase_align_core(fac, mpo_old);

    ConvergenceReport rep;
    rep.sweep_fidelities.push_back(fidelity(fac, mpo_old));

    const bool has_gates = fac.u.num_gates() + fac.v_dag.num_gates() > 0;
    for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        if (has_gates) {
            for (WhichCircuit which : {WhichCircuit::u, WhichCircuit::v_dag}) {
                Circuit& c = (which == WhichCircuit::u) ? fac.u : fac.v_dag;
                for (const auto& [layer, site] : gate_sequence(c)) {
                    DenseTensor env = gate_environment(mpo_old, fac, which, layer, site);
                    auto [g, obj] = procrustes_gate_update(env);
                    find_gate(c, layer, site)->matrix = std::move(g);
                }
            }
        }
        // Recompute the residual core; keep the old core if truncation at
        // this chi happens to fit the new circuits worse.
        MPO candidate = residual_mpo(mpo_old, fac.u, fac.v_dag, cfg.chi_new).first;
        FactorizedOperator trial = fac;
        trial.core = std::move(candidate);
        const double f_new = fidelity(trial, mpo_old);
        const double f_keep = fidelity(fac, mpo_old);
        double f = f_keep;
        if (f_new >= f_keep) {
            fac.core = std::move(trial.core);
            f = f_new;
        }
        phase_align_core(fac, mpo_old);
        rep.sweep_fidelities.push_back(f);
        rep.sweeps_used = sweep;
        const double prev = rep.sweep_fidelities[rep.sweep_fidelities.size() - 2];
        if (std::abs(f - prev) < cfg.fid_tol) {
            rep.converged = true;
            break;
        }
    }

    rep.entropy_before_s1.clear();
    for (std::size_t b = 0; b + 1 < mpo_old.num_sites(); ++b) {
        SpectrumReport sb = operator_entanglement(mpo_old, b);
        SpectrumReport sa = operator_entanglement(fac.core, b);
        rep.entropy_before_s1.push_back(sb.entropy_s1);
        rep.entropy_before_s2.push_back(sb.entropy_s2);
        rep.entropy_after_s1.push_back(sa.entropy_s1);
        rep.entropy_after_s2.push_back(sa.entropy_s2);
    }

    const std::size_t dense_elems = mpo_old.site_spec.rows() * mpo_old.site_spec.cols();
    if (dense_elems <= dense_guard()) {
        DenseTensor w = mpo_to_matrix(mpo_old);
        rep.final_rel_error = rel_error_of(fac, mpo_old, &w);
    } else {
        rep.final_rel_error = rel_error_of(fac, mpo_old, nullptr);
    }
    return {std::move(fac), std::move(rep)};
}

RestartResult disentangle_restarts(const MPO& mpo_old, const DisentangleConfig& cfg,
                                   std::size_t restarts) {
    if (restarts < 1) throw validation_error("disentangle_restarts: need at least 1 restart");
    RestartResult best;
    bool have = false;
    for (std::size_t r = 0; r < restarts; ++r) {
        DisentangleConfig c = cfg;
        if (r > 0) {
            c.init = GateInit::haar;
            c.seed = derived_seed(cfg.seed, 0x9000 + r);
        }
        auto [fac, rep] = disentangle(mpo_old, c);
        rep.restart_index = r;
        best.all.push_back(rep);
        if (!have || rep.final_rel_error < best.report.final_rel_error) {
            best.fac = std::move(fac);
            best.report = rep;
            have = true;
        }
    }
    return best;
}

} // namespace tnd
