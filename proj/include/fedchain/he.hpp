#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedchain/paillier.hpp"

namespace fedchain {

// Signed fixed-point encoding of reals into the Paillier plaintext group.
// encode scales by 2^frac_bits; negatives map to n - |e| at encryption time.
// budget_bits caps the real magnitude at 2^(budget_bits - 1).
struct FixedPoint {
    std::uint32_t frac_bits = 32;
    std::uint32_t budget_bits = 32;

    mpz_class encode(double x) const;  // throws std::out_of_range beyond the budget
    double decode_scaled(const mpz_class& e, std::uint32_t scale_exponent) const;

    // bound on |encoded| after scale_exponent plaintext multiplies
    mpz_class raw_limit(std::uint32_t scale_exponent) const;
    double max_magnitude() const;
};

// Ciphertext plus the bookkeeping needed to refuse silent plaintext wraparound:
// scale_exponent counts fixed-point scalings (0 fresh, 1 after one plaintext
// multiply); magnitude is a conservative bound on |signed plaintext|.
struct Ciphertext {
    mpz_class value;
    std::uint32_t scale_exponent = 0;
    mpz_class magnitude;
};

Ciphertext he_encrypt(const PaillierPublicKey& pk, double x, const FixedPoint& fp, Rng& rng);
double he_decrypt(const PaillierKeyPair& kp, const Ciphertext& ct, const FixedPoint& fp);

// requires equal scale_exponent; checks the plaintext budget
Ciphertext add_ct(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b,
                  const FixedPoint& fp);

// ciphertext^encode(y): one plaintext multiply, scale_exponent increments
Ciphertext scalar_mul(const PaillierPublicKey& pk, double y, const Ciphertext& ct,
                      const FixedPoint& fp);

Ciphertext inner_product(const PaillierPublicKey& pk, const std::vector<double>& y,
                         const std::vector<Ciphertext>& cts, const FixedPoint& fp);

// component-wise sum_k weights[k] * updates[k]; every output has scale 1
std::vector<Ciphertext> encrypted_weighted_sum(const PaillierPublicKey& pk,
                                               const std::vector<double>& weights,
                                               const std::vector<std::vector<Ciphertext>>& updates,
                                               const FixedPoint& fp);

// big-endian hex of the ciphertext integer
std::string ciphertext_to_hex(const Ciphertext& ct);
Ciphertext ciphertext_from_hex(const std::string& hex, std::uint32_t scale_exponent,
                               const FixedPoint& fp);

std::string mpz_to_hex(const mpz_class& v);
mpz_class mpz_from_hex(const std::string& hex);

}  // namespace fedchain
