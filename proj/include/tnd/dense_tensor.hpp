#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace tnd {

using cplx = std::complex<double>;

/// Dense complex tensor in row-major order (last leg runs fastest).
struct DenseTensor {
    std::vector<std::size_t> dims;
    std::vector<cplx> data;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<std::size_t> d);
    DenseTensor(std::vector<std::size_t> d, std::vector<cplx> values);

    std::size_t rank() const { return dims.size(); }
    std::size_t size() const { return data.size(); }
    std::size_t rows() const; // rank-2 only
    std::size_t cols() const; // rank-2 only

    static DenseTensor zeros(std::vector<std::size_t> d);
    static DenseTensor identity(std::size_t n);

    /// Checks dims non-empty, all >= 1, data length == product(dims).
    void validate() const;
    bool is_finite() const;
};

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims);
std::size_t product(const std::vector<std::size_t>& dims);

/// Same data, new leg grouping. Element count must match.
DenseTensor reshape(const DenseTensor& t, std::vector<std::size_t> new_dims);

/// out[i_perm(0), ..., i_perm(r-1)] = in[i_0, ..., i_(r-1)]; leg j of the
/// result is leg perm[j] of the input.
DenseTensor permute(const DenseTensor& t, const std::vector<std::size_t>& perm);

DenseTensor conj(const DenseTensor& t);
DenseTensor scale(const DenseTensor& t, cplx factor);
DenseTensor add(const DenseTensor& a, const DenseTensor& b);
DenseTensor kron(const DenseTensor& a, const DenseTensor& b); // rank-2 only

double frob_norm(const DenseTensor& t);
cplx frob_inner(const DenseTensor& a, const DenseTensor& b); // tr(a^dag b) elementwise
double rel_frob_dist(const DenseTensor& a, const DenseTensor& b); // ||a-b||_F / ||a||_F

/// Splits a matrix into one leg per site index: result legs are
/// (out_0, ..., out_{ko-1}, in_0, ..., in_{ki-1}).
DenseTensor reshape_split(const DenseTensor& matrix,
                          const std::vector<std::size_t>& out_site_dims,
                          const std::vector<std::size_t>& in_site_dims);

/// Inverse regrouping: permutes row_legs before col_legs and fuses each group.
DenseTensor fuse_to_matrix(const DenseTensor& t,
                           const std::vector<std::size_t>& row_legs,
                           const std::vector<std::size_t>& col_legs);

/// Pairwise contraction over legs_a[i] <-> legs_b[i]. Free legs of `a`
/// precede free legs of `b`, each group in original order.
DenseTensor contract(const DenseTensor& a, const std::vector<std::size_t>& legs_a,
                     const DenseTensor& b, const std::vector<std::size_t>& legs_b);

/// Matrix product of rank-2 tensors.
DenseTensor matmul(const DenseTensor& a, const DenseTensor& b);
DenseTensor dagger(const DenseTensor& m); // conjugate transpose, rank-2

} // namespace tnd
