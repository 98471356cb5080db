#include "tnd/mpo.hpp"

#include <algorithm>
#include <cmath>

#include "tnd/errors.hpp"
#include "tnd/guard.hpp"

namespace tnd {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) {
        if (d != 0 && p > std::numeric_limits<std::size_t>::max() / d)
            throw validation_error("dimension product overflows");
        p *= d;
    }
    return p;
}

} // namespace

std::size_t SiteSpec::rows() const { return checked_product(out_dims); }
std::size_t SiteSpec::cols() const { return checked_product(in_dims); }

void SiteSpec::validate() const {
    if (out_dims.empty() || out_dims.size() != in_dims.size())
        throw validation_error("site spec: out/in dim lists must be non-empty and equal length");
    for (std::size_t d : out_dims)
        if (d < 1) throw validation_error("site spec: dims must be >= 1");
    for (std::size_t d : in_dims)
        if (d < 1) throw validation_error("site spec: dims must be >= 1");
}

SiteSpec qubit_spec(std::size_t k) {
    if (k == 0) throw validation_error("qubit_spec: need at least one site");
    return SiteSpec{std::vector<std::size_t>(k, 2), std::vector<std::size_t>(k, 2)};
}

std::vector<std::size_t> MPO::bond_dims() const {
    std::vector<std::size_t> b;
    b.reserve(cores.size() + 1);
    for (const DenseTensor& c : cores) b.push_back(c.dims[0]);
    b.push_back(cores.empty() ? 1 : cores.back().dims[3]);
    return b;
}

std::size_t MPO::max_bond() const {
    std::size_t m = 1;
    for (std::size_t b : bond_dims()) m = std::max(m, b);
    return m;
}

void MPO::validate() const {
    site_spec.validate();
    if (cores.size() != site_spec.num_sites())
        throw validation_error("mpo: core count disagrees with site spec");
    for (std::size_t i = 0; i < cores.size(); ++i) {
        const DenseTensor& c = cores[i];
        c.validate();
        if (c.rank() != 4) throw validation_error("mpo: cores must be rank-4");
        if (c.dims[1] != site_spec.out_dims[i] || c.dims[2] != site_spec.in_dims[i])
            throw validation_error("mpo: core physical dims disagree with site spec");
        if (i > 0 && cores[i - 1].dims[3] != c.dims[0])
            throw validation_error("mpo: adjacent bond dims disagree");
    }
    if (!cores.empty() && (cores.front().dims[0] != 1 || cores.back().dims[3] != 1))
        throw validation_error("mpo: boundary bonds must have dim 1");
    if (canonical_center && *canonical_center >= cores.size())
        throw validation_error("mpo: canonical center out of range");
}

std::pair<MPO, double> mpo_from_matrix(const DenseTensor& w, const SiteSpec& spec,
                                       const TruncationPolicy& policy) {
    spec.validate();
    policy.validate();
    if (w.rank() != 2) throw validation_error("mpo_from_matrix: input must be rank-2");
    if (w.rows() != spec.rows() || w.cols() != spec.cols())
        throw validation_error("mpo_from_matrix: matrix shape disagrees with site spec");
    if (!w.is_finite()) throw numeric_error("mpo_from_matrix: non-finite input");

    const std::size_t k = spec.num_sites();
    DenseTensor t = reshape_split(w, spec.out_dims, spec.in_dims);

    // Interleave physical legs per site: (o0, i0, o1, i1, ...).
    std::vector<std::size_t> perm(2 * k);
    for (std::size_t s = 0; s < k; ++s) {
        perm[2 * s] = s;
        perm[2 * s + 1] = k + s;
    }
    t = permute(t, perm);

    std::vector<std::size_t> site_dims(k);
    for (std::size_t s = 0; s < k; ++s) site_dims[s] = spec.out_dims[s] * spec.in_dims[s];

    MPO m;
    m.site_spec = spec;
    m.cores.reserve(k);

    double err_sq = 0.0;
    std::size_t chi = 1;
    std::size_t rest = product(site_dims);
    // t is viewed as a matrix (chi * site_dims[s]) x (remaining site dims).
    for (std::size_t s = 0; s + 1 < k; ++s) {
        rest /= site_dims[s];
        DenseTensor mat = reshape(t, {chi * site_dims[s], rest});
        SvdResult f = svd_truncate(mat, policy);
        const std::size_t r = f.kept();
        m.cores.push_back(
            reshape(f.left, {chi, spec.out_dims[s], spec.in_dims[s], r}));
        err_sq += f.trunc_error * f.trunc_error;
        t = diag_scale_rows(f.singular_values, f.right);
        chi = r;
    }
    m.cores.push_back(reshape(t, {chi, spec.out_dims[k - 1], spec.in_dims[k - 1], 1}));
    m.canonical_center = k - 1;
    m = canonicalize(m, 0);
    return {std::move(m), std::sqrt(err_sq)};
}

DenseTensor mpo_to_matrix(const MPO& m) {
    m.validate();
    const std::size_t k = m.num_sites();
    const std::size_t full = checked_product({m.site_spec.rows(), m.site_spec.cols()});
    check_dense_guard(full, "mpo_to_matrix");

    // Accumulate left-to-right; legs (o0, i0, ..., o_s, i_s, right_bond).
    DenseTensor acc = reshape(m.cores[0], {m.cores[0].dims[1], m.cores[0].dims[2],
                                           m.cores[0].dims[3]});
    for (std::size_t s = 1; s < k; ++s) {
        check_dense_guard(acc.size() / acc.dims.back() * m.cores[s].size() /
                              m.cores[s].dims[0],
                          "mpo_to_matrix");
        acc = contract(acc, {acc.rank() - 1}, m.cores[s], {0});
    }
    // Drop the trailing bond-1 leg, then split interleaved legs into row/col groups.
    std::vector<std::size_t> interleaved;
    for (std::size_t s = 0; s < k; ++s) {
        interleaved.push_back(m.site_spec.out_dims[s]);
        interleaved.push_back(m.site_spec.in_dims[s]);
    }
    acc = reshape(acc, interleaved);
    std::vector<std::size_t> row_legs, col_legs;
    for (std::size_t s = 0; s < k; ++s) {
        row_legs.push_back(2 * s);
        col_legs.push_back(2 * s + 1);
    }
    return fuse_to_matrix(acc, row_legs, col_legs);
}

MPO canonicalize(const MPO& m, std::size_t center) {
    m.validate();
    const std::size_t k = m.num_sites();
    if (center >= k) throw validation_error("canonicalize: center out of range");

    MPO r = m;
    for (std::size_t i = 0; i < center; ++i) {
        DenseTensor& c = r.cores[i];
        const std::size_t l = c.dims[0], o = c.dims[1], p = c.dims[2], rd = c.dims[3];
        SvdResult f = svd_exact(reshape(c, {l * o * p, rd}));
        const std::size_t nb = f.kept();
        c = reshape(f.left, {l, o, p, nb});
        DenseTensor carry = diag_scale_rows(f.singular_values, f.right);
        r.cores[i + 1] = contract(carry, {1}, r.cores[i + 1], {0});
    }
    for (std::size_t i = k - 1; i > center; --i) {
        DenseTensor& c = r.cores[i];
        const std::size_t l = c.dims[0], o = c.dims[1], p = c.dims[2], rd = c.dims[3];
        SvdResult f = svd_exact(reshape(c, {l, o * p * rd}));
        const std::size_t nb = f.kept();
        c = reshape(f.right, {nb, o, p, rd});
        DenseTensor carry = diag_scale_cols(f.left, f.singular_values);
        r.cores[i - 1] = contract(r.cores[i - 1], {3}, carry, {0});
    }
    r.canonical_center = center;
    return r;
}

std::pair<MPO, double> truncate_mpo(const MPO& m, const TruncationPolicy& policy) {
    policy.validate();
    const std::size_t k = m.num_sites();
    MPO r = canonicalize(m, 0);
    double err_sq = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        // Center is at i; truncate the bond to its right.
        DenseTensor& c = r.cores[i];
        const std::size_t l = c.dims[0], o = c.dims[1], p = c.dims[2], rd = c.dims[3];
        SvdResult f = svd_truncate(reshape(c, {l * o * p, rd}), policy);
        const std::size_t nb = f.kept();
        c = reshape(f.left, {l, o, p, nb});
        err_sq += f.trunc_error * f.trunc_error;
        DenseTensor carry = diag_scale_rows(f.singular_values, f.right);
        r.cores[i + 1] = contract(carry, {1}, r.cores[i + 1], {0});
    }
    r.canonical_center = k - 1;
    r = canonicalize(r, 0);
    return {std::move(r), std::sqrt(err_sq)};
}

SpectrumReport operator_entanglement(const MPO& m, std::size_t bond) {
    const std::size_t k = m.num_sites();
    if (k < 2 || bond + 1 >= k) throw validation_error("operator_entanglement: bond out of range");
    MPO c = canonicalize(m, bond);
    const DenseTensor& core = c.cores[bond];
    SvdResult f = svd_exact(reshape(core, {core.dims[0] * core.dims[1] * core.dims[2],
                                           core.dims[3]}));
    SpectrumReport rep;
    rep.bond_index = bond;
    rep.singular_values = f.singular_values;
    double total = 0.0;
    for (double s : rep.singular_values) total += s * s;
    rep.norm = std::sqrt(total);
    double s1 = 0.0, p2 = 0.0;
    if (total > 0.0) {
        for (double s : rep.singular_values) {
            const double p = s * s / total;
            if (p > 0.0) s1 -= p * std::log(p);
            p2 += p * p;
        }
    }
    rep.entropy_s1 = s1;
    rep.entropy_s2 = p2 > 0.0 ? -std::log(p2) : 0.0;
    return rep;
}

std::vector<double> entropy_profile(const MPO& m) {
    std::vector<double> out;
    for (std::size_t b = 0; b + 1 < m.num_sites(); ++b)
        out.push_back(operator_entanglement(m, b).entropy_s1);
    return out;
}

cplx mpo_overlap(const MPO& a, const MPO& b) {
    if (!(a.site_spec == b.site_spec))
        throw validation_error("mpo_overlap: site specs disagree");
    // Transfer contraction of conj(a) against b; env legs (bond_a, bond_b).
    DenseTensor env({1, 1}, {cplx(1.0)});
    for (std::size_t s = 0; s < a.num_sites(); ++s) {
        DenseTensor t = contract(env, {0}, conj(a.cores[s]), {0}); // (lb, o, i, ra)
        env = contract(t, {0, 1, 2}, b.cores[s], {0, 1, 2});       // (ra, rb)
    }
    return env.data[0];
}

MPO identity_mpo(const SiteSpec& spec) {
    spec.validate();
    MPO m;
    m.site_spec = spec;
    for (std::size_t s = 0; s < spec.num_sites(); ++s) {
        if (spec.out_dims[s] != spec.in_dims[s])
            throw validation_error("identity_mpo: needs square site dims");
        const std::size_t d = spec.out_dims[s];
        m.cores.push_back(reshape(DenseTensor::identity(d), {1, d, d, 1}));
    }
    m.canonical_center = 0;
    return m;
}

} // namespace tnd
