#include "tnd/circuit.hpp"

#include <algorithm>
#include <cmath>

#include "tnd/errors.hpp"
#include "tnd/guard.hpp"

namespace tnd {

namespace {

// Gate matrix as a 4-leg tensor (a_l, a_r, b_l, b_r): rows (a) are the
// gate's output legs, columns (b) its input legs.
DenseTensor gate_tensor(const Gate& g) {
    return reshape(g.matrix, {g.d_left, g.d_right, g.d_left, g.d_right});
}

// Contracts a gate into legs (pos, pos+1) of t. `use_b_legs` selects which
// pair of gate legs is summed over: b legs (ordinary left action on those
// legs) or a legs (right action, as in w * g).
DenseTensor contract_gate(const DenseTensor& t, const Gate& g, std::size_t pos,
                          bool use_b_legs) {
    DenseTensor g4 = gate_tensor(g);
    const std::vector<std::size_t> gl = use_b_legs ? std::vector<std::size_t>{2, 3}
                                                   : std::vector<std::size_t>{0, 1};
    DenseTensor r = contract(g4, gl, t, {pos, pos + 1});
    // r legs: (open gate pair, t legs minus pos/pos+1); move the pair back.
    std::vector<std::size_t> perm(t.rank());
    for (std::size_t j = 0; j < t.rank(); ++j) {
        if (j < pos) perm[j] = 2 + j;
        else if (j == pos) perm[j] = 0;
        else if (j == pos + 1) perm[j] = 1;
        else perm[j] = j;
    }
    return permute(r, perm);
}

// Gate application order: (layer indices, dagger?) per side/adjoint for
// dense (matrix) semantics.
std::vector<std::size_t> layer_order(std::size_t n, bool reversed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = reversed ? n - 1 - i : i;
    return order;
}

} // namespace

void Gate::validate() const {
    if (d_left < 1 || d_right < 1) throw validation_error("gate: dims must be >= 1");
    const std::size_t d = d_left * d_right;
    if (matrix.rank() != 2 || matrix.rows() != d || matrix.cols() != d)
        throw validation_error("gate: matrix must be (d_left*d_right) square");
    if (unitarity_residual(matrix) > 1e-10)
        throw validation_error("gate: matrix is not unitary");
}

std::size_t Circuit::num_gates() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
}

void Circuit::validate() const {
    if (site_dims.size() != num_sites)
        throw validation_error("circuit: site_dims length disagrees with num_sites");
    for (const auto& layer : layers) {
        std::vector<bool> used(num_sites, false);
        for (const Gate& g : layer) {
            if (g.site + 1 >= num_sites) throw validation_error("circuit: gate site out of range");
            if (used[g.site] || used[g.site + 1])
                throw validation_error("circuit: gates within a layer share a site");
            used[g.site] = used[g.site + 1] = true;
            if (g.d_left != site_dims[g.site] || g.d_right != site_dims[g.site + 1])
                throw validation_error("circuit: gate dims disagree with site dims");
            g.validate();
        }
    }
}

Circuit brickwork(const CircuitLayout& layout, const std::vector<std::size_t>& site_dims,
                  Side side, GateInit init, std::uint64_t seed) {
    if (layout.num_sites < 2) throw validation_error("brickwork: need at least 2 sites");
    if (site_dims.size() != layout.num_sites)
        throw validation_error("brickwork: site_dims length disagrees with layout");

    Circuit c;
    c.num_sites = layout.num_sites;
    c.site_dims = site_dims;
    c.side = side;
    c.parity_start = layout.parity_start;
    for (std::size_t l = 0; l < layout.num_layers; ++l) {
        const std::size_t start =
            ((layout.parity_start == Parity::even ? 0 : 1) + l) % 2;
        std::vector<Gate> layer;
        for (std::size_t s = start; s + 1 < layout.num_sites; s += 2) {
            Gate g;
            g.site = s;
            g.d_left = site_dims[s];
            g.d_right = site_dims[s + 1];
            const std::size_t d = g.d_left * g.d_right;
            if (init == GateInit::identity) {
                g.matrix = DenseTensor::identity(d);
            } else {
                std::mt19937_64 rng(derived_seed(seed, l * 4096 + s));
                g.matrix = haar_unitary(d, rng);
            }
            layer.push_back(std::move(g));
        }
        c.layers.push_back(std::move(layer));
    }
    return c;
}

std::vector<std::pair<std::size_t, std::size_t>> gate_sequence(const Circuit& c) {
    std::vector<std::pair<std::size_t, std::size_t>> seq;
    for (std::size_t l = 0; l < c.layers.size(); ++l)
        for (const Gate& g : c.layers[l]) seq.emplace_back(l, g.site);
    return seq;
}

Gate dagger_gate(const Gate& g) {
    Gate d = g;
    d.matrix = dagger(g.matrix);
    return d;
}

DenseTensor circuit_matrix(const Circuit& c) {
    c.validate();
    const std::size_t dim = product(c.site_dims);
    check_dense_guard(dim * dim, "circuit_matrix");
    DenseTensor acc = DenseTensor::identity(dim);
    // Columns of the identity span the ket space; apply the circuit to them.
    std::vector<std::size_t> split = c.site_dims;
    split.push_back(dim);
    acc = reshape(acc, split);
    const bool ket_reversed = (c.side == Side::input);
    for (std::size_t l : layer_order(c.num_layers(), ket_reversed))
        for (const Gate& g : c.layers[l]) acc = contract_gate(acc, g, g.site, true);
    return reshape(acc, {dim, dim});
}

DenseTensor apply_circuit_dense(const Circuit& c, const DenseTensor& w, bool adjoint) {
    c.validate();
    if (w.rank() != 2) throw validation_error("apply_circuit_dense: operand must be rank-2");
    const std::size_t dim = product(c.site_dims);
    check_dense_guard(w.size(), "apply_circuit_dense");

    const bool on_rows = (c.side == Side::output);
    if ((on_rows ? w.rows() : w.cols()) != dim)
        throw validation_error("apply_circuit_dense: operand dims disagree with circuit");

    // View the acted-on index as site legs; the other index rides along.
    std::vector<std::size_t> split;
    std::size_t offset = 0;
    if (on_rows) {
        split = c.site_dims;
        split.push_back(w.cols());
    } else {
        split.push_back(w.rows());
        split.insert(split.end(), c.site_dims.begin(), c.site_dims.end());
        offset = 1;
    }
    DenseTensor t = reshape(w, split);
    for (std::size_t l : layer_order(c.num_layers(), adjoint)) {
        for (const Gate& g : c.layers[l]) {
            const Gate gg = adjoint ? dagger_gate(g) : g;
            t = contract_gate(t, gg, offset + g.site, on_rows);
        }
    }
    return reshape(t, {w.rows(), w.cols()});
}

std::pair<MPO, double> apply_gate_mpo(const MPO& m, const Gate& g, Side side,
                                      const TruncationPolicy& policy) {
    policy.validate();
    const std::size_t k = m.num_sites();
    const std::size_t s = g.site;
    if (s + 1 >= k) throw validation_error("apply_gate_mpo: gate site out of range");
    const auto& dims = (side == Side::output) ? m.site_spec.out_dims : m.site_spec.in_dims;
    if (g.d_left != dims[s] || g.d_right != dims[s + 1])
        throw validation_error("apply_gate_mpo: gate dims disagree with site dims");

    MPO r = (m.canonical_center && *m.canonical_center == s) ? m : canonicalize(m, s);

    DenseTensor theta = contract(r.cores[s], {3}, r.cores[s + 1], {0});
    // theta legs: (l, o1, i1, o2, i2, rd)
    DenseTensor g4 = gate_tensor(g);
    DenseTensor tp;
    if (side == Side::output) {
        // New out legs from the gate's row pair; sum over its column pair.
        tp = contract(g4, {2, 3}, theta, {1, 3});   // (a1, a2, l, i1, i2, rd)
        tp = permute(tp, {2, 0, 3, 1, 4, 5});       // (l, a1, i1, a2, i2, rd)
    } else {
        // Right action on in legs: sum over the gate's row pair.
        tp = contract(g4, {0, 1}, theta, {2, 4});   // (b1, b2, l, o1, o2, rd)
        tp = permute(tp, {2, 3, 0, 4, 1, 5});       // (l, o1, b1, o2, b2, rd)
    }
    const std::size_t l = tp.dims[0], o1 = tp.dims[1], i1 = tp.dims[2], o2 = tp.dims[3],
                      i2 = tp.dims[4], rd = tp.dims[5];
    SvdResult f = svd_truncate(reshape(tp, {l * o1 * i1, o2 * i2 * rd}), policy);
    const std::size_t nb = f.kept();
    r.cores[s] = reshape(f.left, {l, o1, i1, nb});
    r.cores[s + 1] = reshape(diag_scale_rows(f.singular_values, f.right), {nb, o2, i2, rd});
    r.canonical_center = s + 1;
    return {std::move(r), f.trunc_error};
}

std::pair<MPO, double> apply_circuit_mpo(const MPO& m, const Circuit& c, bool adjoint,
                                         const TruncationPolicy& policy) {
    c.validate();
    const auto& dims = (c.side == Side::output) ? m.site_spec.out_dims : m.site_spec.in_dims;
    if (dims != c.site_dims)
        throw validation_error("apply_circuit_mpo: circuit site dims disagree with MPO");

    MPO r = m;
    double err_sq = 0.0;
    for (std::size_t l : layer_order(c.num_layers(), adjoint)) {
        for (const Gate& g : c.layers[l]) {
            const Gate gg = adjoint ? dagger_gate(g) : g;
            auto [next, e] = apply_gate_mpo(r, gg, c.side, policy);
            r = std::move(next);
            err_sq += e * e;
        }
    }
    return {std::move(r), std::sqrt(err_sq)};
}

DenseTensor apply_circuit_ket(const Circuit& c, const DenseTensor& t, bool adjoint) {
    c.validate();
    if (t.rank() < c.num_sites ||
        !std::equal(c.site_dims.begin(), c.site_dims.end(), t.dims.begin()))
        throw validation_error("apply_circuit_ket: tensor legs disagree with circuit");
    // Output side applies C = L_{n-1}...L_0 to the ket (layer 0 first);
    // input side applies C~ = L_0...L_{n-1} (layer n-1 first). Adjoint
    // daggers gates and flips the order.
    const bool reversed = (c.side == Side::output) ? adjoint : !adjoint;
    DenseTensor r = t;
    for (std::size_t l : layer_order(c.num_layers(), reversed)) {
        for (const Gate& g : c.layers[l]) {
            const Gate gg = adjoint ? dagger_gate(g) : g;
            r = contract_gate(r, gg, g.site, true);
        }
    }
    return r;
}

} // namespace tnd
