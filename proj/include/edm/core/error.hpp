#pragma once

#include <stdexcept>
#include <string>

namespace edm {

// Parameter / contract violations.
inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

// Data, file and runtime failures.
inline void expect(bool cond, const std::string& what) {
    if (!cond) throw std::runtime_error(what);
}

[[noreturn]] inline void fail(const std::string& what) {
    throw std::runtime_error(what);
}

} // namespace edm
