#include "tnd/qten_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

namespace tnd {

namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return v;
}

double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

bool imag_is_plus_zero(const cplx& z) {
    return std::bit_cast<std::uint64_t>(z.imag()) == 0;
}

} // namespace

void write_qten(const std::string& path, const DenseTensor& t) {
    t.validate();
    if (t.rank() > 255)
        throw validation_error("write_qten: rank exceeds the format's 1-byte ndim");
    bool real = true;
    for (const cplx& z : t.data)
        if (!imag_is_plus_zero(z)) {
            real = false;
            break;
        }

    std::vector<unsigned char> bytes;
    bytes.reserve(8 + 8 * t.rank() + t.size() * (real ? 8 : 16));
    bytes.insert(bytes.end(), {'Q', 'T', 'E', 'N'});
    bytes.push_back(1);                                       // version
    bytes.push_back(real ? 0 : 1);                            // dtype
    bytes.push_back(static_cast<unsigned char>(t.rank()));    // ndim
    bytes.push_back(0);                                       // reserved
    for (std::size_t d : t.dims) put_u64(bytes, d);
    for (const cplx& z : t.data) {
        put_f64(bytes, z.real());
        if (!real) put_f64(bytes, z.imag());
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw validation_error("write_qten: cannot open " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        if (!f) throw validation_error("write_qten: short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw validation_error("write_qten: cannot rename " + tmp + " to " + path);
}

DenseTensor read_qten(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error("read_qten: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 4 || bytes[0] != 'Q' || bytes[1] != 'T' || bytes[2] != 'E' ||
        bytes[3] != 'N')
        throw qten_bad_magic("read_qten: bad magic in " + path);
    if (bytes.size() < 8) throw qten_truncated("read_qten: truncated header in " + path);
    if (bytes[4] != 1)
        throw qten_bad_version("read_qten: unsupported version " +
                               std::to_string(bytes[4]) + " in " + path);
    const unsigned dtype = bytes[5];
    const std::size_t ndim = bytes[6];
    if (dtype > 1) throw validation_error("read_qten: unknown dtype in " + path);
    if (bytes[7] != 0) throw validation_error("read_qten: nonzero reserved byte in " + path);
    if (ndim == 0) throw validation_error("read_qten: zero-rank tensor in " + path);

    const std::size_t dims_end = 8 + 8 * ndim;
    if (bytes.size() < dims_end)
        throw qten_truncated("read_qten: truncated dims in " + path);

    std::vector<std::size_t> dims(ndim);
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const std::uint64_t d = get_u64(bytes.data() + 8 + 8 * i);
        if (d == 0) throw validation_error("read_qten: zero dimension in " + path);
        if (d > std::numeric_limits<std::size_t>::max() / count)
            throw validation_error("read_qten: dimension overflow in " + path);
        dims[i] = static_cast<std::size_t>(d);
        count *= dims[i];
    }
    const std::size_t value_bytes = dtype == 0 ? 8 : 16;
    if (count > (std::numeric_limits<std::size_t>::max() - dims_end) / value_bytes)
        throw validation_error("read_qten: payload size overflow in " + path);
    const std::size_t expected = dims_end + count * value_bytes;
    if (bytes.size() < expected)
        throw qten_truncated("read_qten: truncated payload in " + path);
    if (bytes.size() > expected)
        throw validation_error("read_qten: trailing bytes after payload in " + path);

    DenseTensor t(dims);
    const unsigned char* p = bytes.data() + dims_end;
    for (std::size_t i = 0; i < count; ++i) {
        if (dtype == 0) {
            t.data[i] = cplx(get_f64(p), 0.0);
            p += 8;
        } else {
            const double re = get_f64(p);
            const double im = get_f64(p + 8);
            t.data[i] = cplx(re, im);
            p += 16;
        }
    }
    return t;
}

} // namespace tnd
