#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tnd/dense_tensor.hpp"
#include "tnd/linalg.hpp"
#include "tnd/mpo.hpp"

namespace tnd {

/// Which physical index of the operator the circuit multiplies into:
/// output-side circuits left-multiply (houses U), input-side circuits
/// right-multiply (houses V^dag).
enum class Side { output, input };

enum class Parity { even, odd };

enum class GateInit { identity, haar };

/// Two-site unitary acting on adjacent sites (site, site+1).
struct Gate {
    std::size_t site = 0;
    std::size_t d_left = 2;
    std::size_t d_right = 2;
    DenseTensor matrix; // (d_left*d_right) x (d_left*d_right)

    void validate() const; // shape + unitarity to 1e-10
};

struct CircuitLayout {
    std::size_t num_sites = 2;
    std::size_t num_layers = 1;
    Parity parity_start = Parity::even;
};

/// Brickwork circuit: layer l holds gates on pairs (i, i+1) with
/// i == (parity_start + l) mod 2. Layer 0 is applied to the operator first.
struct Circuit {
    std::size_t num_sites = 0;
    std::vector<std::size_t> site_dims;
    Side side = Side::output;
    Parity parity_start = Parity::even;
    std::vector<std::vector<Gate>> layers;

    std::size_t num_layers() const { return layers.size(); }
    std::size_t num_gates() const;
    void validate() const;
};

/// Gates placed per the layout parity rule; identity init gives exact
/// identity matrices, haar init draws per-gate seeds from `seed`.
Circuit brickwork(const CircuitLayout& layout, const std::vector<std::size_t>& site_dims,
                  Side side, GateInit init, std::uint64_t seed);

/// All gate positions (layer, site) in application order: layer-major,
/// ascending site within a layer.
std::vector<std::pair<std::size_t, std::size_t>> gate_sequence(const Circuit& c);

Gate dagger_gate(const Gate& g);

/// Effective dense matrix of the whole circuit: output side gives
/// L_{n-1}...L_0 (layer 0 innermost), input side gives L_0...L_{n-1}.
DenseTensor circuit_matrix(const Circuit& c);

/// Dense oracle: output-side circuits compute C*w (adjoint: C^dag*w),
/// input-side circuits compute w*C (adjoint: w*C^dag).
DenseTensor apply_circuit_dense(const Circuit& c, const DenseTensor& w, bool adjoint);

/// TEBD step: contracts the gate into cores (g.site, g.site+1) on the
/// physical-out (side=output) or physical-in (side=input) legs and re-splits
/// under the policy. Caller passes the daggered gate for adjoint semantics.
/// Returns the relative truncation error of the split.
std::pair<MPO, double> apply_gate_mpo(const MPO& m, const Gate& g, Side side,
                                      const TruncationPolicy& policy);

/// Applies all layers via apply_gate_mpo (adjoint reverses layer order and
/// daggers gates); error bound is the root-sum-square of step errors.
std::pair<MPO, double> apply_circuit_mpo(const MPO& m, const Circuit& c, bool adjoint,
                                         const TruncationPolicy& policy);

/// Circuit-as-matrix acting on a ket tensor whose first k legs are site
/// legs (any trailing legs ride along): output side applies C (or C^dag),
/// input side applies C~ = L_0...L_{n-1} (or its adjoint).
DenseTensor apply_circuit_ket(const Circuit& c, const DenseTensor& t, bool adjoint);

} // namespace tnd
