#pragma once

#include <cstdint>

#include <gmpxx.h>

#include "fedchain/rng.hpp"

namespace fedchain {

struct PaillierPublicKey {
    mpz_class n;   // p*q
    mpz_class n2;  // n^2, the ciphertext modulus
    std::uint32_t bits = 0;
};

struct PaillierKeyPair {
    PaillierPublicKey pub;
    mpz_class lambda;  // (p-1)(q-1)
    mpz_class mu;      // lambda^-1 mod n
};

// Deterministic keypair from seed: random odd candidates of bits/2 advanced
// with nextprime. Uses g = n + 1, which makes encryption a single modular
// exponentiation. Desk-scale moduli here are for simulation, not security.
PaillierKeyPair paillier_keygen(std::uint32_t bits, std::uint64_t seed);

// m must lie in [0, n)
mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, Rng& rng);
mpz_class paillier_decrypt(const PaillierKeyPair& kp, const mpz_class& c);

// uniform-ish integer in [0, bound) assembled from rng words
mpz_class random_below(Rng& rng, const mpz_class& bound);

}  // namespace fedchain
