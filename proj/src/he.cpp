#include "fedchain/he.hpp"

#include <cmath>
#include <stdexcept>

#include "fedchain/util.hpp"

namespace fedchain {

mpz_class FixedPoint::raw_limit(std::uint32_t scale_exponent) const {
    return mpz_class(1) << (frac_bits * (1 + scale_exponent) + budget_bits - 1);
}

double FixedPoint::max_magnitude() const { return std::ldexp(1.0, budget_bits - 1); }

mpz_class FixedPoint::encode(double x) const {
    if (!std::isfinite(x)) throw std::out_of_range("fixedpoint: non-finite value");
    if (std::abs(x) >= max_magnitude())
        throw std::out_of_range("fixedpoint: magnitude exceeds 2^(budget_bits-1)");
    // x * 2^f is an exact double (exponent shift); round once to an integer
    double scaled = std::nearbyint(std::ldexp(x, static_cast<int>(frac_bits)));
    mpz_class e;
    mpz_set_d(e.get_mpz_t(), scaled);
    return e;
}

double FixedPoint::decode_scaled(const mpz_class& e, std::uint32_t scale_exponent) const {
    double v = mpz_get_d(e.get_mpz_t());
    return std::ldexp(v, -static_cast<int>(frac_bits * (1 + scale_exponent)));
}

static mpz_class to_group(const mpz_class& e, const mpz_class& n) {
    return e >= 0 ? e : mpz_class(n + e);
}

static mpz_class from_group(const mpz_class& m, const mpz_class& n) {
    return m * 2 > n ? mpz_class(m - n) : m;
}

Ciphertext he_encrypt(const PaillierPublicKey& pk, double x, const FixedPoint& fp, Rng& rng) {
    // the scheme must be able to hold one full plaintext multiply
    if (2 * fp.raw_limit(1) >= pk.n)
        throw std::out_of_range("he_encrypt: modulus too small for the fixed-point budget");
    mpz_class e = fp.encode(x);
    Ciphertext ct;
    ct.scale_exponent = 0;
    ct.magnitude = abs(e);
    ct.value = paillier_encrypt(pk, to_group(e, pk.n), rng);
    return ct;
}

double he_decrypt(const PaillierKeyPair& kp, const Ciphertext& ct, const FixedPoint& fp) {
    mpz_class m = paillier_decrypt(kp, ct.value);
    mpz_class signed_e = from_group(m, kp.pub.n);
    if (abs(signed_e) > fp.raw_limit(ct.scale_exponent))
        throw std::out_of_range("he_decrypt: plaintext outside the declared budget");
    return fp.decode_scaled(signed_e, ct.scale_exponent);
}

Ciphertext add_ct(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b,
                  const FixedPoint& fp) {
    if (a.scale_exponent != b.scale_exponent)
        throw std::invalid_argument("add_ct: scale_exponent mismatch");
    Ciphertext out;
    out.scale_exponent = a.scale_exponent;
    out.magnitude = a.magnitude + b.magnitude;
    if (out.magnitude > fp.raw_limit(out.scale_exponent))
        throw std::out_of_range("add_ct: plaintext budget exceeded");
    out.value = (a.value * b.value) % pk.n2;
    return out;
}

Ciphertext scalar_mul(const PaillierPublicKey& pk, double y, const Ciphertext& ct,
                      const FixedPoint& fp) {
    if (ct.scale_exponent != 0)
        throw std::invalid_argument("scalar_mul: ciphertext already carries a plaintext multiply");
    mpz_class ey = fp.encode(y);
    Ciphertext out;
    out.scale_exponent = 1;
    out.magnitude = abs(ey) * ct.magnitude;
    if (out.magnitude > fp.raw_limit(1))
        throw std::out_of_range("scalar_mul: plaintext budget exceeded");
    mpz_class exp_rep = to_group(ey, pk.n);
    mpz_powm(out.value.get_mpz_t(), ct.value.get_mpz_t(), exp_rep.get_mpz_t(), pk.n2.get_mpz_t());
    return out;
}

Ciphertext inner_product(const PaillierPublicKey& pk, const std::vector<double>& y,
                         const std::vector<Ciphertext>& cts, const FixedPoint& fp) {
    if (y.size() != cts.size()) throw std::invalid_argument("inner_product: length mismatch");
    if (y.empty()) throw std::invalid_argument("inner_product: empty input");
    Ciphertext acc = scalar_mul(pk, y[0], cts[0], fp);
    for (std::size_t i = 1; i < y.size(); ++i)
        acc = add_ct(pk, acc, scalar_mul(pk, y[i], cts[i], fp), fp);
    return acc;
}

std::vector<Ciphertext> encrypted_weighted_sum(const PaillierPublicKey& pk,
                                               const std::vector<double>& weights,
                                               const std::vector<std::vector<Ciphertext>>& updates,
                                               const FixedPoint& fp) {
    if (weights.size() != updates.size())
        throw std::invalid_argument("encrypted_weighted_sum: weights/updates length mismatch");
    if (updates.empty()) throw std::invalid_argument("encrypted_weighted_sum: no updates");
    std::size_t dim = updates[0].size();
    for (const auto& u : updates)
        if (u.size() != dim)
            throw std::invalid_argument("encrypted_weighted_sum: dimension mismatch");

    std::vector<Ciphertext> out;
    out.reserve(dim);
    std::vector<Ciphertext> column(updates.size());
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t k = 0; k < updates.size(); ++k) column[k] = updates[k][j];
        out.push_back(inner_product(pk, weights, column, fp));
    }
    return out;
}

std::string mpz_to_hex(const mpz_class& v) {
    if (v < 0) throw std::invalid_argument("mpz_to_hex: negative value");
    return v.get_str(16);
}

mpz_class mpz_from_hex(const std::string& hex) {
    if (hex.empty()) throw std::invalid_argument("mpz_from_hex: empty string");
    for (char c : hex)
        if (hex_nibble(c) < 0 || (c >= 'A' && c <= 'F'))
            throw std::invalid_argument("mpz_from_hex: not lowercase hex");
    mpz_class v;
    if (mpz_set_str(v.get_mpz_t(), hex.c_str(), 16) != 0)
        throw std::invalid_argument("mpz_from_hex: parse failure");
    return v;
}

std::string ciphertext_to_hex(const Ciphertext& ct) { return mpz_to_hex(ct.value); }

Ciphertext ciphertext_from_hex(const std::string& hex, std::uint32_t scale_exponent,
                               const FixedPoint& fp) {
    Ciphertext ct;
    ct.value = mpz_from_hex(hex);
    ct.scale_exponent = scale_exponent;
    // plaintext unknown; assume the worst legal magnitude
    ct.magnitude = fp.raw_limit(scale_exponent);
    return ct;
}

}  // namespace fedchain
