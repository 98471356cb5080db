#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "tnd/dense_tensor.hpp"
#include "tnd/linalg.hpp"

namespace tnd {

/// Physical dimensions of an operator factorized over k sites: site i
/// carries the pair (out_dims[i], in_dims[i]).
struct SiteSpec {
    std::vector<std::size_t> out_dims;
    std::vector<std::size_t> in_dims;

    std::size_t num_sites() const { return out_dims.size(); }
    std::size_t rows() const; // product(out_dims)
    std::size_t cols() const; // product(in_dims)

    void validate() const;
    bool operator==(const SiteSpec&) const = default;
};

/// k qubit sites (all physical dims 2).
SiteSpec qubit_spec(std::size_t k);

/// Matrix product operator: chain of rank-4 cores with leg order
/// (left_bond, phys_out, phys_in, right_bond); boundary bonds have dim 1.
struct MPO {
    std::vector<DenseTensor> cores;
    SiteSpec site_spec;
    std::optional<std::size_t> canonical_center;

    std::size_t num_sites() const { return cores.size(); }
    /// All k+1 bond dims including the two boundary 1s.
    std::vector<std::size_t> bond_dims() const;
    std::size_t max_bond() const;

    void validate() const;
};

/// Singular-value spectrum across one bond plus derived entropies.
struct SpectrumReport {
    std::size_t bond_index = 0;
    std::vector<double> singular_values; // non-increasing
    double entropy_s1 = 0.0;             // von Neumann, natural log
    double entropy_s2 = 0.0;             // Renyi-2
    double norm = 0.0;                   // Frobenius norm of the operator
};

/// Sequential left-to-right SVD decomposition of a matrix into an MPO,
/// physical legs interleaved per site. Second member is the root-sum-square
/// of per-bond relative truncation errors (an upper bound on the total
/// relative Frobenius error). Result is right-canonical with center 0.
std::pair<MPO, double> mpo_from_matrix(const DenseTensor& w, const SiteSpec& spec,
                                       const TruncationPolicy& policy);

/// Exact dense contraction, regrouped to rows(spec) x cols(spec).
/// Throws guard_error if any intermediate exceeds the dense guard.
DenseTensor mpo_to_matrix(const MPO& m);

/// Gauge move: left cores become left-isometries, right cores become
/// right-isometries, represented operator unchanged.
MPO canonicalize(const MPO& m, std::size_t center);

/// Truncates every bond under the policy (left-to-right sweep in canonical
/// form); error is the root-sum-square of per-bond relative errors. Result
/// is re-canonicalized to center 0.
std::pair<MPO, double> truncate_mpo(const MPO& m, const TruncationPolicy& policy);

/// Schmidt spectrum of the vectorized operator across bond (bond, bond+1),
/// computed in mixed-canonical form.
SpectrumReport operator_entanglement(const MPO& m, std::size_t bond);

/// Per-bond entropy_s1 list (length k-1), convenience over operator_entanglement.
std::vector<double> entropy_profile(const MPO& m);

/// tr(A^dag B) by bond-space transfer contraction; never densifies.
cplx mpo_overlap(const MPO& a, const MPO& b);

/// Identity operator as a bond-1 MPO (requires out_dims == in_dims).
MPO identity_mpo(const SiteSpec& spec);

} // namespace tnd
