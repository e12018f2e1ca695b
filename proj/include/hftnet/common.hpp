#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hftnet {

// Exit codes used by the CLI: config errors map to 2, data errors to 3,
// statistical degeneracy to 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class DegeneracyError : public std::runtime_error {
public:
    explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing numeric cells are carried as quiet NaN end to end; CSV writers emit
// them as empty fields.
inline constexpr double missing() { return std::numeric_limits<double>::quiet_NaN(); }

inline bool is_missing(double x) { return std::isnan(x); }

// Shortest round-trip decimal form. Used for every numeric field we write so
// that outputs are byte-stable across runs and thread counts.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace hftnet
