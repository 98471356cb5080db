#include "tnd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tnd/errors.hpp"
#include "tnd/guard.hpp"
#include "tnd/linalg.hpp"

namespace tnd {

namespace {

std::size_t dims_product(const std::vector<std::size_t>& dims) {
    std::size_t p = 1;
    for (std::size_t d : dims) p *= d;
    return p;
}

// 53-bit uniform in [0, 1), independent of distribution-library internals.
double uniform53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

void StateVector::validate() const {
    if (site_dims.size() != num_sites)
        throw validation_error("state: site_dims length disagrees with num_sites");
    for (std::size_t d : site_dims)
        if (d == 0) throw validation_error("state: site dims must be >= 1");
    if (amplitudes.size() != dims_product(site_dims))
        throw validation_error("state: amplitude count disagrees with site dims");
    double n2 = 0.0;
    for (const cplx& a : amplitudes) n2 += std::norm(a);
    if (std::abs(n2 - 1.0) > 1e-10)
        throw validation_error("state: amplitudes are not normalized");
}

StateVector encode_state(const DenseTensor& x, const std::vector<std::size_t>& site_dims) {
    const std::size_t dim = dims_product(site_dims);
    if (site_dims.empty() || x.size() != dim)
        throw validation_error("encode_state: vector length disagrees with site dims");
    check_statevector_guard(dim, "encode_state");
    const double n = frob_norm(x);
    if (n <= 0.0) throw validation_error("encode_state: zero vector cannot be encoded");

    StateVector s;
    s.num_sites = site_dims.size();
    s.site_dims = site_dims;
    s.amplitudes.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) s.amplitudes[i] = x.data[i] / n;
    s.input_norm = n;
    return s;
}

StateVector apply_circuit_state(const Circuit& c, const StateVector& s) {
    s.validate();
    c.validate();
    if (c.site_dims != s.site_dims)
        throw validation_error("apply_circuit_state: circuit and state dims disagree");
    check_statevector_guard(s.dim(), "apply_circuit_state");

    DenseTensor t(s.site_dims);
    t.data = s.amplitudes;
    t = apply_circuit_ket(c, t, false);

    StateVector out = s;
    out.amplitudes = std::move(t.data);
    return out;
}

std::vector<double> basis_probabilities(const StateVector& s) {
    std::vector<double> p(s.dim());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(s.amplitudes[i]);
    return p;
}

std::vector<std::size_t> sample_counts(const StateVector& s, std::size_t shots,
                                       std::uint64_t seed) {
    if (shots < 1) throw validation_error("sample_counts: shots must be >= 1");
    s.validate();

    std::vector<double> cdf(s.dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
        acc += std::norm(s.amplitudes[i]);
        cdf[i] = acc;
    }
    cdf.back() = std::max(cdf.back(), 1.0); // absorb rounding at the top end

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> counts(s.dim(), 0);
    for (std::size_t n = 0; n < shots; ++n) {
        const double u = uniform53(rng);
        const std::size_t idx = static_cast<std::size_t>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        ++counts[std::min(idx, counts.size() - 1)];
    }
    return counts;
}

ShotStudy shot_noise_study(const Circuit& c, const DenseTensor& x,
                           const std::vector<std::size_t>& shots_list,
                           std::uint64_t seed) {
    StateVector evolved = apply_circuit_state(c, encode_state(x, c.site_dims));
    const std::vector<double> exact = basis_probabilities(evolved);

    ShotStudy study;
    study.shots_list = shots_list;
    study.seed = seed;
    study.l2_errors.reserve(shots_list.size());
    for (std::size_t i = 0; i < shots_list.size(); ++i) {
        const std::size_t shots = shots_list[i];
        const std::vector<std::size_t> counts =
            sample_counts(evolved, shots, derived_seed(seed, 0xA000 + i));
        double err2 = 0.0;
        for (std::size_t b = 0; b < exact.size(); ++b) {
            const double diff =
                static_cast<double>(counts[b]) / static_cast<double>(shots) - exact[b];
            err2 += diff * diff;
        }
        study.l2_errors.push_back(std::sqrt(err2));
    }
    return study;
}

double median(std::vector<double> v) {
    if (v.empty()) throw validation_error("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("loglog_slope: need two or more matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw validation_error("loglog_slope: values must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw validation_error("loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

} // namespace tnd
