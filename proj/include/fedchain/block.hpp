#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedchain/he.hpp"
#include "fedchain/plan.hpp"
#include "fedchain/sha256.hpp"

namespace fedchain {

// One device's contribution for one round. Exactly one of delta/cipher is
// populated, per the encrypted flag. claimed_l1 is the device-reported L1
// norm of the released (noised) plaintext; commitment is the digest of the
// canonical payload bytes and stands in for a device signature.
struct LocalUpdate {
    std::uint32_t device_id = 0;
    std::uint32_t round = 0;
    std::uint64_t n_k = 0;
    double computation_time_ms = 0.0;
    bool encrypted = false;
    std::vector<double> delta;
    std::vector<Ciphertext> cipher;
    double claimed_l1 = 0.0;
    Digest commitment{};
};

struct VerifyRecord {
    std::uint32_t device_id = 0;
    std::uint32_t round = 0;
    bool pass = false;
    std::string reason;  // empty on pass; one of digest/norm/time/selection
};

// 256-bit PoW threshold, big-endian; digests below it seal a block
using Target = Digest;

struct BlockHeader {
    std::uint64_t height = 0;
    Digest prev_hash{};
    Digest merkle_root{};
    std::uint64_t nonce = 0;
    Target target{};
    std::int64_t round = -1;  // -1 for genesis
    std::uint32_t miner_id = 0;
    std::uint64_t timestamp_ms = 0;
};

struct BlockBody {
    Digest plan_hash{};
    std::vector<LocalUpdate> updates;
    std::vector<VerifyRecord> verifications;
};

enum class RewardKind { mining, data_contribution };

struct RewardEntry {
    std::uint64_t height = 0;
    std::uint32_t recipient = 0;
    std::int64_t amount = 0;
    RewardKind kind = RewardKind::mining;

    bool operator==(const RewardEntry&) const = default;
};

struct Block {
    BlockHeader header;
    Digest digest{};
    BlockBody body;
    std::vector<RewardEntry> rewards;
};

// canonical bytes: all integers big-endian, doubles as IEEE-754 bit patterns
Digest header_digest(const BlockHeader& h);
Digest update_payload_digest(const LocalUpdate& u);
Digest update_record_digest(const LocalUpdate& u);
Digest verify_record_digest(const VerifyRecord& v);

// pairwise tree, odd node duplicated; single leaf is its own root
Digest merkle_root(const std::vector<Digest>& leaves);

// leaves: plan_hash, update records, verification records, in body order
Digest body_merkle_root(const BlockBody& body);

Target target_from_bits(std::uint32_t difficulty_bits);  // 2^(256 - bits)
bool digest_below(const Digest& d, const Target& t);

mpz_class target_to_mpz(const Target& t);
Target target_from_mpz(const mpz_class& v);  // clamps to [1, 2^256 - 1]

struct ChainState {
    std::vector<Block> blocks;
    Target current_target{};
    std::vector<double> observed_delays_ms;

    static ChainState genesis(const FLPlan& plan);
    const Block& head() const { return blocks.back(); }
    std::uint64_t height() const { return blocks.back().header.height; }
};

// export/import of single blocks as canonical JSON values
nlohmann::json block_to_json(const Block& b);
Block block_from_json(const nlohmann::json& j, const FixedPoint& fp);

}  // namespace fedchain
