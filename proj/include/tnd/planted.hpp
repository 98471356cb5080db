#pragma once

#include <cstdint>

#include "tnd/dense_tensor.hpp"
#include "tnd/disentangler.hpp"

namespace tnd {

/// Ground-truth family: W = U0 * M0 * V0dag (+ optional noise), with haar
/// brickwork circuits and a random core of exact bond chi_core.
struct PlantedSpec {
    std::size_t k = 4;
    std::size_t site_dim = 2;
    std::size_t layers_u = 1;
    std::size_t layers_v = 1;
    std::size_t chi_core = 1;
    double noise_level = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlantedInstance {
    DenseTensor w;
    FactorizedOperator truth;
};

/// W0 = reconstruct(truth) exactly; noise_level > 0 adds a Gaussian
/// perturbation orthogonal to W0 with ||noise|| = noise_level * ||W0||, so
/// ||W - W0||/||W|| <= noise_level always holds.
PlantedInstance plant_instance(const PlantedSpec& spec);

} // namespace tnd
