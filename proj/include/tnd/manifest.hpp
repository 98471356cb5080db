#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tnd/disentangler.hpp"

namespace tnd {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

/// FNV-1a (64-bit) of a byte range, as a fixed-width hex string.
std::string fnv1a_hex(const void* data, std::size_t len);

/// FNV-1a of a whole file's bytes.
std::string fnv1a_file_hex(const std::string& path);

/// Writes text through a temp file plus rename.
void write_text_atomic(const std::string& path, const std::string& content);

/// Serializes fac as a manifest JSON at `path` plus sibling .qten files
/// named after the manifest stem (stem_core_i, stem_u_l0_s0, ...). The
/// manifest stores relative file names, the circuit layout, the config
/// echo, provenance (fac.provenance plus tool_version), and metrics.
void save_factorized(const std::string& path, const FactorizedOperator& fac,
                     const ordered_json& config_echo, const ordered_json& metrics);

struct LoadedFactorized {
    FactorizedOperator fac;
    ordered_json manifest;
};

/// Reads a manifest and every referenced tensor file; validates the
/// reassembled operator.
LoadedFactorized load_factorized(const std::string& path);

} // namespace tnd
