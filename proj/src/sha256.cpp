#include "fedchain/sha256.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace fedchain {

Digest sha256(const std::uint8_t* data, std::size_t len) {
    Digest out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != out.size()) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    return out;
}

Digest sha256(const std::vector<std::uint8_t>& bytes) {
    return sha256(bytes.data(), bytes.size());
}

Digest sha256(const std::string& text) {
    return sha256(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

bool digest_from_hex(const std::string& hex, Digest& out) {
    if (hex.size() != 64) return false;
    for (std::size_t i = 0; i < 32; ++i) {
        char a = hex[2 * i];
        char b = hex[2 * i + 1];
        // lowercase only: an uppercase variant would alias the same digest
        // under a different byte encoding, defeating canonical-form checks
        if ((a >= 'A' && a <= 'F') || (b >= 'A' && b <= 'F')) return false;
        int hi = hex_nibble(a);
        int lo = hex_nibble(b);
        if (hi < 0 || lo < 0) return false;
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return true;
}

Digest ByteWriter::digest_of() const { return sha256(buf_); }

}  // namespace fedchain
