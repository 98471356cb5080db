#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tnd/circuit.hpp"
#include "tnd/mpo.hpp"

namespace tnd {

/// The factorized form: output circuit u, residual core MPO, input circuit
/// v_dag, i.e. W approx u * core * v_dag with u and v_dag independent.
struct FactorizedOperator {
    Circuit u;      // side = output
    MPO core;       // the residual MPO
    Circuit v_dag;  // side = input
    SiteSpec site_spec;
    std::map<std::string, std::string> provenance;

    void validate() const;
};

struct DisentangleConfig {
    std::size_t layers_u = 1;
    std::size_t layers_v = 1;
    std::size_t chi_new = 1;
    std::size_t max_sweeps = 200;
    double fid_tol = 1e-9;
    std::uint64_t seed = 0;
    GateInit init = GateInit::identity;

    void validate() const;
};

struct ConvergenceReport {
    std::vector<double> sweep_fidelities; // entry 0 = state before any sweep
    double final_rel_error = 0.0;
    std::vector<double> entropy_before_s1, entropy_after_s1;
    std::vector<double> entropy_before_s2, entropy_after_s2;
    std::size_t sweeps_used = 0;
    bool converged = false;
    std::size_t restart_index = 0;
};

/// Initial factorized operator for a config: brickwork circuits plus the
/// residual core at chi_new.
FactorizedOperator make_factorized(const MPO& mpo_old, const DisentangleConfig& cfg);

/// Eq. MPO_new = truncate(U^dag * MPO_old * V): applies u adjoint on the
/// output legs and v_dag adjoint on the input legs, then truncates to
/// chi_new. Returns the accumulated truncation-error bound.
std::pair<MPO, double> residual_mpo(const MPO& mpo_old, const Circuit& u,
                                    const Circuit& v_dag, std::size_t chi_new);

enum class WhichCircuit { u, v_dag };

/// Environment E of one gate in the overlap Re tr[(u*core*v_dag)^dag W]:
/// the overlap as a function of that gate g alone equals Re tr(g * E).
DenseTensor gate_environment(const MPO& mpo_old, const FactorizedOperator& fac,
                             WhichCircuit which, std::size_t layer, std::size_t site);

/// Orthogonal-Procrustes step: for env = X S Y^dag returns g = Y X^dag and
/// the objective sum(S) = max over unitaries of Re tr(g * env).
std::pair<DenseTensor, double> procrustes_gate_update(const DenseTensor& env);

/// Normalized fidelity |tr(R^dag W)|^2 / (||R||^2 ||W||^2) of the
/// reconstruction R = u * core * v_dag against mpo_old; MPO-only.
double fidelity(const FactorizedOperator& fac, const MPO& mpo_old);

/// Alternating optimization: gate sweeps (environment + Procrustes) and
/// residual recomputation, until |dF| < fid_tol or max_sweeps.
std::pair<FactorizedOperator, ConvergenceReport> disentangle(const MPO& mpo_old,
                                                             const DisentangleConfig& cfg);

struct RestartResult {
    FactorizedOperator fac;
    ConvergenceReport report;            // the winner
    std::vector<ConvergenceReport> all;  // one per restart
};

/// Runs disentangle `restarts` times (restart 0 with cfg.init, later ones
/// haar with derived seeds) and keeps the lowest final_rel_error.
RestartResult disentangle_restarts(const MPO& mpo_old, const DisentangleConfig& cfg,
                                   std::size_t restarts);

/// Truncation policy used for a configured bond cap: chi_max plus the
/// near-exact noise cutoff.
TruncationPolicy chi_policy(std::size_t chi_max);

/// Empty circuit (zero layers) on the given sites.
Circuit empty_circuit(const std::vector<std::size_t>& site_dims, Side side);

} // namespace tnd
