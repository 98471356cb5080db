#include "tnd/guard.hpp"

#include <cstdlib>
#include <string>

#include "tnd/errors.hpp"

namespace tnd {

std::size_t dense_guard() {
    static const std::size_t limit = [] {
        const char* env = std::getenv("QLLM_DENSE_GUARD");
        if (env == nullptr || *env == '\0') return std::size_t(1) << 26;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == nullptr || *end != '\0' || v == 0)
            throw validation_error("QLLM_DENSE_GUARD must be a positive integer");
        return static_cast<std::size_t>(v);
    }();
    return limit;
}

void check_dense_guard(std::size_t elements, const char* what) {
    if (elements > dense_guard())
        throw guard_error(std::string(what) + ": dense intermediate of " +
                          std::to_string(elements) + " elements exceeds guard of " +
                          std::to_string(dense_guard()) +
                          " (set QLLM_DENSE_GUARD to override)");
}

void check_statevector_guard(std::size_t elements, const char* what) {
    if (elements > statevector_guard)
        throw guard_error(std::string(what) + ": statevector of " +
                          std::to_string(elements) + " amplitudes exceeds limit of " +
                          std::to_string(statevector_guard));
}

} // namespace tnd
