#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fedchain/util.hpp"

namespace fedchain {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::uint8_t* data, std::size_t len);
Digest sha256(const std::vector<std::uint8_t>& bytes);
Digest sha256(const std::string& text);

inline std::string digest_hex(const Digest& d) { return to_hex(d.data(), d.size()); }

// strict: exactly 64 lowercase hex chars (the only form to_hex emits)
bool digest_from_hex(const std::string& hex, Digest& out);

// Canonical byte serialization. All multi-byte integers are big-endian and
// doubles are written as the big-endian IEEE-754 bit pattern, so a digest of
// the stream commits to exact values with no locale or format ambiguity.
class ByteWriter {
  public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }

    void bytes(const std::uint8_t* data, std::size_t len) {
        buf_.insert(buf_.end(), data, data + len);
    }

    void digest(const Digest& d) { bytes(d.data(), d.size()); }

    // length-prefixed, so adjacent variable-size fields cannot alias
    void str(const std::string& s) {
        u64(s.size());
        bytes(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    }

    const std::vector<std::uint8_t>& data() const { return buf_; }
    Digest digest_of() const;

  private:
    std::vector<std::uint8_t> buf_;
};

}  // namespace fedchain
