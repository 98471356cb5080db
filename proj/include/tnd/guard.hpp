#pragma once

#include <cstddef>

namespace tnd {

/// Element limit for dense intermediates (matrices, full reconstructions).
/// Defaults to 2^26 and can be raised or lowered through the environment
/// variable QLLM_DENSE_GUARD.
std::size_t dense_guard();

/// Hard cap on statevector length: 2^20 amplitudes.
constexpr std::size_t statevector_guard = std::size_t(1) << 20;

/// Throws guard_error if `elements` exceeds dense_guard(). `what` names the
/// offending operation in the message.
void check_dense_guard(std::size_t elements, const char* what);

void check_statevector_guard(std::size_t elements, const char* what);

} // namespace tnd
