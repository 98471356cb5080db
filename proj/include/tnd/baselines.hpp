#pragma once

#include <cstdint>
#include <vector>

#include "tnd/dense_tensor.hpp"
#include "tnd/mpo.hpp"

namespace tnd {

enum class BaselineMethod { disentangler, polar, plain_mpo };

/// Cost profile of one factorization method at a common error target.
struct BondProfile {
    BaselineMethod method = BaselineMethod::plain_mpo;
    double target_error = 0.0;
    std::vector<std::size_t> bond_dims; // interior bonds, length k-1, all >= 1
    std::size_t circuit_layers = 0;
    std::size_t param_count = 0; // stored real scalars (complex counts 2)
    double achieved_error = 0.0;
};

struct PolarResult {
    DenseTensor u_p; // unitary factor
    DenseTensor p;   // Hermitian positive-semidefinite factor
    bool unique = true;
};

/// w = u_p * p via SVD (w = X S Y^dag gives u_p = X Y^dag, p = Y S Y^dag).
/// Rank deficiency (smallest singular value <= 1e-12) clears `unique`.
PolarResult polar_decompose(const DenseTensor& w);

/// Knobs for the optimizer runs inside baseline_profiles.
struct BaselineConfig {
    std::size_t depth_cap = 8;       // minimal-depth search bound for u_p
    std::size_t grid_layers_cap = 4; // disentangler (layers, chi) grid bound
    std::size_t restarts = 2;
    std::size_t max_sweeps = 80;
    double fid_tol = 1e-7;
    std::uint64_t seed = 0;
};

/// Three profiles at the same reconstruction-error target: plain MPO
/// truncation of w, polar (MPO of P plus the minimal brickwork depth at
/// which the disentangler reproduces u_p at chi 1), and the disentangler
/// factorization with minimal parameter count over a (layers, chi) grid.
std::vector<BondProfile> baseline_profiles(const DenseTensor& w, const SiteSpec& spec,
                                           double target_error,
                                           const BaselineConfig& cfg = {});

} // namespace tnd
