#include "fedchain/paillier.hpp"

#include <stdexcept>

namespace fedchain {

mpz_class random_below(Rng& rng, const mpz_class& bound) {
    if (bound <= 0) throw std::invalid_argument("random_below: bound must be positive");
    // 64 extra bits make the mod bias negligible for simulation purposes
    std::size_t words = (mpz_sizeinbase(bound.get_mpz_t(), 2) + 63) / 64 + 1;
    mpz_class acc = 0;
    for (std::size_t i = 0; i < words; ++i) {
        acc <<= 64;
        acc += mpz_class(rng.next_u64());
    }
    return acc % bound;
}

static mpz_class random_prime(Rng& rng, std::uint32_t bits) {
    mpz_class cand = 0;
    std::uint32_t words = (bits + 63) / 64;
    for (std::uint32_t i = 0; i < words; ++i) {
        cand <<= 64;
        cand += mpz_class(rng.next_u64());
    }
    // trim to size, force the top bit so the product has full length
    mpz_class mask = (mpz_class(1) << bits) - 1;
    cand &= mask;
    mpz_setbit(cand.get_mpz_t(), bits - 1);
    mpz_class p;
    mpz_nextprime(p.get_mpz_t(), cand.get_mpz_t());
    return p;
}

PaillierKeyPair paillier_keygen(std::uint32_t bits, std::uint64_t seed) {
    if (bits < 256 || bits % 2 != 0)
        throw std::invalid_argument("paillier_keygen: bits must be even and >= 256");

    Rng rng(derive_seed(seed, Stream::keygen));
    const int max_tries = 64;
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        mpz_class p = random_prime(rng, bits / 2);
        mpz_class q = random_prime(rng, bits / 2);
        if (p == q) continue;
        mpz_class n = p * q;
        if (mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;
        mpz_class lambda = (p - 1) * (q - 1);
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), lambda.get_mpz_t());
        if (g != 1) continue;

        PaillierKeyPair kp;
        kp.pub.n = n;
        kp.pub.n2 = n * n;
        kp.pub.bits = bits;
        kp.lambda = lambda;
        if (mpz_invert(kp.mu.get_mpz_t(), lambda.get_mpz_t(), n.get_mpz_t()) == 0) continue;
        return kp;
    }
    throw std::runtime_error("paillier_keygen: prime search exhausted after 64 attempts");
}

mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, Rng& rng) {
    if (m < 0 || m >= pk.n) throw std::out_of_range("paillier_encrypt: plaintext outside [0, n)");
    mpz_class r, g;
    do {
        r = random_below(rng, pk.n);
        mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
    } while (r == 0 || g != 1);
    // g = n+1, so g^m = 1 + m*n (mod n^2); blind with r^n
    mpz_class gm = (1 + m * pk.n) % pk.n2;
    mpz_class rn;
    mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n2.get_mpz_t());
    return (gm * rn) % pk.n2;
}

mpz_class paillier_decrypt(const PaillierKeyPair& kp, const mpz_class& c) {
    if (c < 0 || c >= kp.pub.n2)
        throw std::out_of_range("paillier_decrypt: ciphertext outside [0, n^2)");
    mpz_class u;
    mpz_powm(u.get_mpz_t(), c.get_mpz_t(), kp.lambda.get_mpz_t(), kp.pub.n2.get_mpz_t());
    // L(u) = (u - 1) / n
    mpz_class l = (u - 1) / kp.pub.n;
    return (l * kp.mu) % kp.pub.n;
}

}  // namespace fedchain
