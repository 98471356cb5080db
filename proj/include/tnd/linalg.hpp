#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "tnd/dense_tensor.hpp"

namespace tnd {

/// Controls bond truncation: keep at most chi_max values and drop every
/// singular value with s_i/s_1 <= rel_cutoff.
struct TruncationPolicy {
    static constexpr std::size_t unbounded = std::numeric_limits<std::size_t>::max();
    std::size_t chi_max = unbounded;
    double rel_cutoff = 0.0;

    void validate() const;
    bool is_trivial() const { return chi_max == unbounded && rel_cutoff <= 0.0; }
};

/// Policy used when applying gates "exactly": keeps everything above noise.
inline TruncationPolicy near_exact_policy() {
    return TruncationPolicy{TruncationPolicy::unbounded, 1e-14};
}

struct SvdResult {
    DenseTensor left;                    // m x r, orthonormal columns
    std::vector<double> singular_values; // non-increasing, length r
    DenseTensor right;                   // r x n, orthonormal rows
    double trunc_error = 0.0;            // sqrt(sum_discarded s^2 / sum_all s^2)

    std::size_t kept() const { return singular_values.size(); }
};

/// Truncated SVD with a deterministic phase convention: in every left
/// singular vector the largest-magnitude entry (lowest index on ties) is
/// made real positive, the compensating phase goes into the right factor.
/// At least one value is always kept.
SvdResult svd_truncate(const DenseTensor& matrix, const TruncationPolicy& policy);

/// Full SVD (keeps all min(m,n) values, zeros included). Used for gauge moves.
SvdResult svd_exact(const DenseTensor& matrix);

/// Nearest unitary in Frobenius norm: X Y^dag for the SVD X S Y^dag.
/// Throws numeric_error if the smallest singular value is <= 1e-12.
DenseTensor polar_project(const DenseTensor& matrix);

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// R-diagonal phase fix.
DenseTensor haar_unitary(std::size_t dim, std::mt19937_64& rng);

/// ||g^dag g - I||_F
double unitarity_residual(const DenseTensor& g);

/// out[i,j] = s[i] * m[i,j] (absorb singular values into the row factor).
DenseTensor diag_scale_rows(const std::vector<double>& s, const DenseTensor& m);
/// out[i,j] = m[i,j] * s[j]
DenseTensor diag_scale_cols(const DenseTensor& m, const std::vector<double>& s);

/// Deterministic stream splitting for seeds.
std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt);

} // namespace tnd
