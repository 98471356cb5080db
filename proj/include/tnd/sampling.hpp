#pragma once

#include <cstdint>
#include <vector>

#include "tnd/circuit.hpp"
#include "tnd/dense_tensor.hpp"

namespace tnd {

/// Normalized amplitude-encoded state; the pre-normalization scale rides
/// along classically in input_norm.
struct StateVector {
    std::size_t num_sites = 0;
    std::vector<std::size_t> site_dims;
    std::vector<cplx> amplitudes; // length = product(site_dims), unit norm
    double input_norm = 0.0;

    std::size_t dim() const { return amplitudes.size(); }
    void validate() const;
};

/// Shot-noise curve: l2_errors[i] is the distance between empirical and
/// exact basis-probability vectors at shots_list[i] shots.
struct ShotStudy {
    std::vector<std::size_t> shots_list;
    std::vector<double> l2_errors;
    std::uint64_t seed = 0;
};

/// Amplitude encoding: amplitudes = x/||x||, input_norm = ||x||. Throws on
/// a zero vector or a length mismatch.
StateVector encode_state(const DenseTensor& x, const std::vector<std::size_t>& site_dims);

/// Exact gate-by-gate unitary evolution (norm preserved to 1e-10);
/// guarded at 2^20 amplitudes.
StateVector apply_circuit_state(const Circuit& c, const StateVector& s);

/// Exact basis probabilities |amplitude_i|^2.
std::vector<double> basis_probabilities(const StateVector& s);

/// Seeded multinomial draw from |amplitudes|^2; the counts sum to shots.
/// Sampling is inverse-CDF over a 53-bit uniform, deterministic across
/// platforms for a fixed seed.
std::vector<std::size_t> sample_counts(const StateVector& s, std::size_t shots,
                                       std::uint64_t seed);

/// Encodes x, evolves through c, then measures at each shot count
/// (per-entry seeds derived from `seed`), recording the l2 error between
/// empirical and exact probability vectors.
ShotStudy shot_noise_study(const Circuit& c, const DenseTensor& x,
                           const std::vector<std::size_t>& shots_list,
                           std::uint64_t seed);

/// Median of a copy of v (mean of middle pair for even length).
double median(std::vector<double> v);

/// Least-squares slope of log(y) against log(x); x and y must be positive.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace tnd
