#include "tnd/dense_tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tnd/errors.hpp"

namespace tnd {

namespace {

using EigenRowMat =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EigenRowMat>;
using ConstMapMat = Eigen::Map<const EigenRowMat>;

} // namespace

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (auto d : dims) p *= d;
    return p;
}

std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> s(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) s[i - 1] = s[i] * dims[i];
    return s;
}

DenseTensor::DenseTensor(std::vector<std::size_t> d)
    : dims(std::move(d)), data(product(dims), cplx(0.0, 0.0)) {
    validate();
}

DenseTensor::DenseTensor(std::vector<std::size_t> d, std::vector<cplx> values)
    : dims(std::move(d)), data(std::move(values)) {
    validate();
}

std::size_t DenseTensor::rows() const {
    if (rank() != 2) throw validation_error("rows(): tensor is not rank-2");
    return dims[0];
}

std::size_t DenseTensor::cols() const {
    if (rank() != 2) throw validation_error("cols(): tensor is not rank-2");
    return dims[1];
}

DenseTensor DenseTensor::zeros(std::vector<std::size_t> d) {
    return DenseTensor(std::move(d));
}

DenseTensor DenseTensor::identity(std::size_t n) {
    DenseTensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
    return t;
}

void DenseTensor::validate() const {
    if (dims.empty()) throw validation_error("tensor has no legs");
    for (auto d : dims)
        if (d == 0) throw validation_error("tensor has a zero-sized leg");
    if (data.size() != product(dims))
        throw validation_error("tensor data length does not match dims");
}

bool DenseTensor::is_finite() const {
    for (const auto& v : data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

DenseTensor reshape(const DenseTensor& t, std::vector<std::size_t> new_dims) {
    if (product(new_dims) != t.size())
        throw validation_error("reshape: element count mismatch");
    DenseTensor out;
    out.dims = std::move(new_dims);
    out.data = t.data;
    return out;
}

DenseTensor permute(const DenseTensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t r = t.rank();
    if (perm.size() != r) throw validation_error("permute: wrong permutation length");
    std::vector<bool> seen(r, false);
    for (auto p : perm) {
        if (p >= r || seen[p]) throw validation_error("permute: invalid permutation");
        seen[p] = true;
    }
    std::vector<std::size_t> new_dims(r);
    for (std::size_t j = 0; j < r; ++j) new_dims[j] = t.dims[perm[j]];

    DenseTensor out(std::move(new_dims));
    const auto in_strides = row_major_strides(t.dims);
    // stride in the input for a unit step of output leg j
    std::vector<std::size_t> step(r);
    for (std::size_t j = 0; j < r; ++j) step[j] = in_strides[perm[j]];

    std::vector<std::size_t> idx(r, 0);
    std::size_t src = 0;
    const std::size_t n = out.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        out.data[flat] = t.data[src];
        for (std::size_t j = r; j-- > 0;) {
            ++idx[j];
            src += step[j];
            if (idx[j] < out.dims[j]) break;
            src -= step[j] * out.dims[j];
            idx[j] = 0;
        }
    }
    return out;
}

DenseTensor conj(const DenseTensor& t) {
    DenseTensor out = t;
    for (auto& v : out.data) v = std::conj(v);
    return out;
}

DenseTensor scale(const DenseTensor& t, cplx factor) {
    DenseTensor out = t;
    for (auto& v : out.data) v *= factor;
    return out;
}

DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw validation_error("add: shape mismatch");
    DenseTensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

DenseTensor kron(const DenseTensor& a, const DenseTensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw validation_error("kron: rank-2 only");
    const std::size_t ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
    DenseTensor out({ra * rb, ca * cb});
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < ca; ++j) {
            const cplx av = a.data[i * ca + j];
            for (std::size_t p = 0; p < rb; ++p)
                for (std::size_t q = 0; q < cb; ++q)
                    out.data[(i * rb + p) * (ca * cb) + (j * cb + q)] =
                        av * b.data[p * cb + q];
        }
    return out;
}

double frob_norm(const DenseTensor& t) {
    double s = 0;
    for (const auto& v : t.data) s += std::norm(v);
    return std::sqrt(s);
}

cplx frob_inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw validation_error("frob_inner: shape mismatch");
    cplx s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        s += std::conj(a.data[i]) * b.data[i];
    return s;
}

double rel_frob_dist(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims != b.dims) throw validation_error("rel_frob_dist: shape mismatch");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        num += std::norm(a.data[i] - b.data[i]);
        den += std::norm(a.data[i]);
    }
    if (den == 0.0) return std::sqrt(num) == 0.0 ? 0.0 : INFINITY;
    return std::sqrt(num / den);
}

DenseTensor reshape_split(const DenseTensor& matrix,
                          const std::vector<std::size_t>& out_site_dims,
                          const std::vector<std::size_t>& in_site_dims) {
    if (matrix.rank() != 2) throw validation_error("reshape_split: matrix must be rank-2");
    if (out_site_dims.empty() || in_site_dims.empty())
        throw validation_error("reshape_split: empty site dims");
    if (product(out_site_dims) != matrix.rows())
        throw validation_error("reshape_split: product(out_site_dims) != rows");
    if (product(in_site_dims) != matrix.cols())
        throw validation_error("reshape_split: product(in_site_dims) != cols");
    std::vector<std::size_t> new_dims = out_site_dims;
    new_dims.insert(new_dims.end(), in_site_dims.begin(), in_site_dims.end());
    return reshape(matrix, std::move(new_dims));
}

DenseTensor fuse_to_matrix(const DenseTensor& t,
                           const std::vector<std::size_t>& row_legs,
                           const std::vector<std::size_t>& col_legs) {
    if (row_legs.size() + col_legs.size() != t.rank())
        throw validation_error("fuse_to_matrix: legs must cover the tensor");
    std::vector<std::size_t> perm = row_legs;
    perm.insert(perm.end(), col_legs.begin(), col_legs.end());
    DenseTensor p = permute(t, perm);
    std::size_t r = 1, c = 1;
    for (auto l : row_legs) r *= t.dims[l];
    for (auto l : col_legs) c *= t.dims[l];
    return reshape(p, {r, c});
}

DenseTensor contract(const DenseTensor& a, const std::vector<std::size_t>& legs_a,
                     const DenseTensor& b, const std::vector<std::size_t>& legs_b) {
    if (legs_a.size() != legs_b.size())
        throw validation_error("contract: paired leg lists differ in length");
    auto check_legs = [](const DenseTensor& t, const std::vector<std::size_t>& legs,
                         const char* which) {
        std::vector<bool> seen(t.rank(), false);
        for (auto l : legs) {
            if (l >= t.rank())
                throw validation_error(std::string("contract: leg out of range in ") + which);
            if (seen[l])
                throw validation_error(std::string("contract: repeated leg in ") + which);
            seen[l] = true;
        }
    };
    check_legs(a, legs_a, "first operand");
    check_legs(b, legs_b, "second operand");
    for (std::size_t i = 0; i < legs_a.size(); ++i)
        if (a.dims[legs_a[i]] != b.dims[legs_b[i]])
            throw validation_error("contract: paired leg dimensions differ");

    auto free_of = [](const DenseTensor& t, const std::vector<std::size_t>& legs) {
        std::vector<bool> used(t.rank(), false);
        for (auto l : legs) used[l] = true;
        std::vector<std::size_t> free;
        for (std::size_t l = 0; l < t.rank(); ++l)
            if (!used[l]) free.push_back(l);
        return free;
    };
    const auto free_a = free_of(a, legs_a);
    const auto free_b = free_of(b, legs_b);

    std::vector<std::size_t> perm_a = free_a;
    perm_a.insert(perm_a.end(), legs_a.begin(), legs_a.end());
    std::vector<std::size_t> perm_b = legs_b;
    perm_b.insert(perm_b.end(), free_b.begin(), free_b.end());

    DenseTensor ap = permute(a, perm_a);
    DenseTensor bp = permute(b, perm_b);

    std::size_t fa = 1, fb = 1, kk = 1;
    for (auto l : free_a) fa *= a.dims[l];
    for (auto l : free_b) fb *= b.dims[l];
    for (auto l : legs_a) kk *= a.dims[l];

    std::vector<std::size_t> out_dims;
    for (auto l : free_a) out_dims.push_back(a.dims[l]);
    for (auto l : free_b) out_dims.push_back(b.dims[l]);
    if (out_dims.empty()) out_dims = {1}; // scalar result kept as a 1-element tensor

    DenseTensor out(std::move(out_dims));
    ConstMapMat ma(ap.data.data(), static_cast<Eigen::Index>(fa),
                   static_cast<Eigen::Index>(kk));
    ConstMapMat mb(bp.data.data(), static_cast<Eigen::Index>(kk),
                   static_cast<Eigen::Index>(fb));
    MapMat mo(out.data.data(), static_cast<Eigen::Index>(fa),
              static_cast<Eigen::Index>(fb));
    mo.noalias() = ma * mb;
    return out;
}

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw validation_error("matmul: rank-2 only");
    return contract(a, {1}, b, {0});
}

DenseTensor dagger(const DenseTensor& m) {
    if (m.rank() != 2) throw validation_error("dagger: rank-2 only");
    return conj(permute(m, {1, 0}));
}

} // namespace tnd
