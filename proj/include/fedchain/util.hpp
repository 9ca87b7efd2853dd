#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fedchain {

// Numeric failure (divergence, non-finite intermediates). Carries a diagnostic.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form. All CSV/JSON output goes through this so
// repeated runs produce byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string to_hex(const std::uint8_t* data, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace fedchain
