#include "tnd/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "tnd/errors.hpp"

namespace tnd {

namespace {

using EigenMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;

EigenMat to_eigen(const DenseTensor& t) {
    if (t.rank() != 2) throw validation_error("expected a rank-2 tensor");
    EigenMat m(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                t.data[i * t.cols() + j];
    return m;
}

DenseTensor from_eigen(const EigenMat& m) {
    DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            t.data[static_cast<std::size_t>(i) * t.cols() + static_cast<std::size_t>(j)] =
                m(i, j);
    return t;
}

// Phase convention: rotate each left vector so its largest-magnitude entry
// (lowest index on ties) is real positive; compensate in the right factor.
void fix_phases(EigenMat& u, EigenMat& vdag) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double a = std::abs(u(i, j));
            if (a > amax) {
                amax = a;
                imax = i;
            }
        }
        if (amax <= 0.0) continue;
        const cplx phase = u(imax, j) / amax;
        u.col(j) *= std::conj(phase);
        if (j < vdag.rows()) vdag.row(j) *= phase;
    }
}

SvdResult svd_impl(const DenseTensor& matrix, std::size_t chi_max, double rel_cutoff,
                   bool keep_all) {
    if (matrix.rank() != 2) throw validation_error("svd: matrix must be rank-2");
    if (!matrix.is_finite()) throw numeric_error("svd: non-finite input values");

    EigenMat m = to_eigen(matrix);
    Eigen::BDCSVD<EigenMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const std::size_t full = static_cast<std::size_t>(s.size());

    double total_sq = 0.0;
    for (std::size_t i = 0; i < full; ++i) total_sq += s[static_cast<Eigen::Index>(i)] *
                                                       s[static_cast<Eigen::Index>(i)];

    std::size_t keep = full;
    if (!keep_all) {
        const double s1 = full > 0 ? s[0] : 0.0;
        std::size_t above = 0;
        for (std::size_t i = 0; i < full; ++i) {
            const double si = s[static_cast<Eigen::Index>(i)];
            if (s1 > 0.0 && si / s1 > rel_cutoff) ++above;
        }
        keep = std::min({full, chi_max, above});
        if (keep == 0) keep = 1; // never return an empty factorization
    }

    double disc_sq = 0.0;
    for (std::size_t i = keep; i < full; ++i)
        disc_sq += s[static_cast<Eigen::Index>(i)] * s[static_cast<Eigen::Index>(i)];

    EigenMat u = svd.matrixU().leftCols(static_cast<Eigen::Index>(keep));
    EigenMat vdag = svd.matrixV().leftCols(static_cast<Eigen::Index>(keep)).adjoint().eval();
    fix_phases(u, vdag);

    SvdResult out;
    out.left = from_eigen(u);
    out.right = from_eigen(vdag);
    out.singular_values.resize(keep);
    for (std::size_t i = 0; i < keep; ++i)
        out.singular_values[i] = s[static_cast<Eigen::Index>(i)];
    out.trunc_error = total_sq > 0.0 ? std::sqrt(disc_sq / total_sq) : 0.0;
    return out;
}

} // namespace

void TruncationPolicy::validate() const {
    if (chi_max == 0) throw validation_error("truncation policy: chi_max must be >= 1");
    if (rel_cutoff < 0.0 || rel_cutoff >= 1.0)
        throw validation_error("truncation policy: rel_cutoff must be in [0, 1)");
}

SvdResult svd_truncate(const DenseTensor& matrix, const TruncationPolicy& policy) {
    policy.validate();
    return svd_impl(matrix, policy.chi_max, policy.rel_cutoff, false);
}

SvdResult svd_exact(const DenseTensor& matrix) {
    return svd_impl(matrix, TruncationPolicy::unbounded, 0.0, true);
}

DenseTensor polar_project(const DenseTensor& matrix) {
    if (matrix.rank() != 2 || matrix.rows() != matrix.cols())
        throw validation_error("polar_project: matrix must be square");
    SvdResult f = svd_exact(matrix);
    if (f.singular_values.empty() || f.singular_values.back() <= 1e-12)
        throw numeric_error("polar_project: rank-deficient input");
    return matmul(f.left, f.right);
}

DenseTensor haar_unitary(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    EigenMat g(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cplx(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<EigenMat> qr(g);
    EigenMat q = qr.householderQ() * EigenMat::Identity(static_cast<Eigen::Index>(dim),
                                                        static_cast<Eigen::Index>(dim));
    EigenMat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const cplx d = r(j, j);
        const double a = std::abs(d);
        q.col(j) *= (a > 0.0) ? d / a : cplx(1.0, 0.0);
    }
    return from_eigen(q);
}

double unitarity_residual(const DenseTensor& g) {
    DenseTensor gtg = matmul(dagger(g), g);
    double acc = 0.0;
    for (std::size_t i = 0; i < gtg.rows(); ++i)
        for (std::size_t j = 0; j < gtg.cols(); ++j) {
            const cplx d = gtg.data[i * gtg.cols() + j] - (i == j ? cplx(1.0) : cplx(0.0));
            acc += std::norm(d);
        }
    return std::sqrt(acc);
}

DenseTensor diag_scale_rows(const std::vector<double>& s, const DenseTensor& m) {
    if (m.rank() != 2 || s.size() != m.rows())
        throw validation_error("diag_scale_rows: size mismatch");
    DenseTensor out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.data[i * m.cols() + j] *= s[i];
    return out;
}

DenseTensor diag_scale_cols(const DenseTensor& m, const std::vector<double>& s) {
    if (m.rank() != 2 || s.size() != m.cols())
        throw validation_error("diag_scale_cols: size mismatch");
    DenseTensor out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out.data[i * m.cols() + j] *= s[j];
    return out;
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 over seed xor salt
    std::uint64_t z = seed ^ (salt * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace tnd
