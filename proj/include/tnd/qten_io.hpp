#pragma once

#include <string>

#include "tnd/dense_tensor.hpp"
#include "tnd/errors.hpp"

namespace tnd {

struct qten_bad_magic : validation_error {
    explicit qten_bad_magic(const std::string& msg) : validation_error(msg) {}
};

struct qten_bad_version : validation_error {
    explicit qten_bad_version(const std::string& msg) : validation_error(msg) {}
};

struct qten_truncated : validation_error {
    explicit qten_truncated(const std::string& msg) : validation_error(msg) {}
};

/// Binary tensor format: magic "QTEN", version 1, dtype (0 = real64 when
/// every imaginary part is bit-exactly +0.0, else 1 = complex128), ndim,
/// one reserved zero byte, ndim little-endian u64 dims, then the row-major
/// little-endian payload (complex as re, im pairs). Written atomically
/// (temp file + rename). Round trips are bit-exact.
void write_qten(const std::string& path, const DenseTensor& t);

/// Validates magic, version, dtype, reserved byte, and the exact payload
/// length before reading. Distinct errors: qten_bad_magic,
/// qten_bad_version, qten_truncated (short file); trailing bytes raise a
/// plain validation_error.
DenseTensor read_qten(const std::string& path);

} // namespace tnd
