#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace unicoal {

// Raised for malformed user input (bad CLI arguments, unreadable files,
// unknown modalities). The CLI maps this to exit code 2.
class UserError : public std::runtime_error {
public:
    explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for invalid configuration values (schedule impossible for the
// requested resolution, inconsistent model settings).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant violations; the CLI maps anything that is not a
// UserError/ConfigError to exit code 3.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw InternalError(msg);
}

inline void check_user(bool cond, const std::string& msg) {
    if (!cond) throw UserError(msg);
}

inline void check_config(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

constexpr double kPi = 3.14159265358979323846;

inline bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

inline int64_t next_pow2(int64_t v) {
    int64_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

} // namespace unicoal
