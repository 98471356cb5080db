#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tnd/disentangler.hpp"
#include "tnd/errors.hpp"

namespace tnd {

enum class Objective { matrix_fidelity, data_mse };

struct EnhanceConfig {
    std::size_t add_layers_u = 0;
    std::size_t add_layers_v = 0;
    std::size_t new_chi = 1;
    std::size_t retrain_steps = 0;
    double step_size = 0.05;
    Objective objective = Objective::matrix_fidelity;
    std::uint64_t seed = 0;
    /// Relative scale of seeded noise written into zero-padded bond entries;
    /// 0 (default) keeps growth exact.
    double pad_noise = 0.0;

    void validate() const;
};

struct GradCheckReport {
    bool performed = false;
    double max_rel_err_core = 0.0;
    double max_rel_err_gate = 0.0;
};

struct LossTrace {
    std::vector<double> step_losses;
    GradCheckReport grad_check;
};

/// Thrown when retraining hits a non-finite loss; carries the trace so far.
struct retrain_abort : numeric_error {
    LossTrace trace;
    explicit retrain_abort(const std::string& msg, LossTrace t)
        : numeric_error(msg), trace(std::move(t)) {}
};

/// Input/output column pairs: y approx W x columnwise.
struct Dataset {
    DenseTensor x; // product(in_dims) x batch
    DenseTensor y; // product(out_dims) x batch
};

struct ParamCount {
    std::size_t gates = 0;
    std::size_t core = 0;
    std::size_t total = 0;
    std::size_t dense_equiv = 0;
    double ratio = 0.0;
};

/// Dense u * core * v_dag (guard-checked).
DenseTensor reconstruct(const FactorizedOperator& fac);

/// reconstruct(fac) * x without densifying the operator: columns are pushed
/// through v_dag, the core chain, then u.
DenseTensor apply_to_batch(const FactorizedOperator& fac, const DenseTensor& x);

/// Stored real scalars (complex counts 2); dense_equiv = 2*rows*cols.
ParamCount param_count(const FactorizedOperator& fac);

/// Exact capacity growth: appends identity layers (parity continues the
/// brickwork pattern) and zero-pads core bonds to new_chi (capped at each
/// bond's maximal rank). pad_noise > 0 adds seeded noise to padded entries.
FactorizedOperator enhance(const FactorizedOperator& fac, const EnhanceConfig& cfg);

/// Alternating retraining against a target operator: Procrustes gate sweeps
/// plus exact local least-squares core updates. Loss per sweep is
/// ||target - R||_F^2 / ||target||_F^2, non-increasing.
std::pair<FactorizedOperator, LossTrace> retrain(const FactorizedOperator& fac,
                                                 const MPO& target,
                                                 const EnhanceConfig& cfg);

/// Gradient retraining on (x, y) columns: Wirtinger gradient steps with
/// polar retraction for gates. Loss is mean squared residual per entry.
std::pair<FactorizedOperator, LossTrace> retrain(const FactorizedOperator& fac,
                                                 const Dataset& data,
                                                 const EnhanceConfig& cfg);

/// Mean squared residual ||R x - y||^2 / element count of y.
double data_loss(const FactorizedOperator& fac, const Dataset& data);

/// Gradients in the convention Re G = dL/d(Re theta), Im G = dL/d(Im theta)
/// (i.e. twice the conjugate Wirtinger derivative), for finite-difference
/// verification and the descent steps.
DenseTensor core_gradient(const FactorizedOperator& fac, std::size_t site,
                          const Dataset& data);
DenseTensor gate_gradient(const FactorizedOperator& fac, WhichCircuit which,
                          std::size_t layer, std::size_t site, const Dataset& data);

/// Central-finite-difference agreement of both gradient kinds on the given
/// instance (step 1e-6); fills a GradCheckReport.
GradCheckReport run_grad_check(const FactorizedOperator& fac, const Dataset& data);

} // namespace tnd
