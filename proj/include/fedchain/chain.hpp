#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedchain/block.hpp"
#include "fedchain/plan.hpp"

namespace fedchain {

struct VerifyResult {
    bool pass = false;
    std::string reason;  // digest | norm | time | selection; empty on pass
};

// what a miner knows about the round when checking an update
struct RoundContext {
    std::uint32_t round = 0;
    std::vector<std::uint32_t> selected;  // sorted device ids
};

// High-probability L1 bound on the DP noise a released update legitimately
// carries: d coordinates of Laplace(2C/eps) stay within this except with
// vanishing probability. Zero when DP is off (updates are exact then).
double noise_allowance(const FLPlan& plan, std::size_t dim);

// Structural checks only: commitment digest, released-norm bound, compute-time
// plausibility, round selection membership. Miners cannot re-run training.
VerifyResult verify_update(const LocalUpdate& u, const FLPlan& plan, const RoundContext& ctx);

struct MineResult {
    bool found = false;
    std::uint64_t nonce = 0;
    Digest digest{};
    std::uint64_t attempts = 0;
};

// scans nonces in order from nonce_start; deterministic
MineResult mine(BlockHeader header, const Target& target, std::uint64_t nonce_start,
                std::uint64_t max_attempts);

// Orders updates by (round, device), cuts at block_size (overflow returned for
// the next round's candidate), carries the round's verification records, and
// fills every header field except nonce. Empty update set is an error unless
// the plan allows empty blocks.
struct CandidateInput {
    std::vector<LocalUpdate> updates;
    std::vector<VerifyRecord> verifications;
    std::uint32_t miner_id = 0;
    std::int64_t round = 0;
    std::uint64_t timestamp_ms = 0;
};

Block build_candidate(const CandidateInput& in, const Block& parent, const FLPlan& plan,
                      const Target& target, std::vector<LocalUpdate>* overflow = nullptr);

// miner reward first, then device shares of device_pool proportional to
// quality * n_k with largest-remainder rounding (exact pool conservation)
std::vector<RewardEntry> distribute_rewards(const Block& b, const FLPlan& plan);

// integer shares of `pool` proportional to weights; ties to the lower index
std::vector<std::int64_t> largest_remainder_split(std::int64_t pool,
                                                  const std::vector<double>& weights);

std::uint32_t associate_miner(std::uint32_t device_id, const std::vector<std::uint32_t>& miners,
                              std::uint32_t round, std::uint64_t seed);

// Records the delay sample, then steers expected mining time (attempts *
// hash_time_ms) toward ratio_target * mean of the last delay_window samples.
// Single step bounded to [target/4, target*4], clamped to the difficulty
// range. Updates chain.current_target and returns it.
Target retarget(ChainState& chain, double observed_delay_ms, const FLPlan& plan);

struct ValidationResult {
    bool ok = true;
    std::uint64_t height = 0;
    std::string reason;
};

// Full replay of every structural rule on every block: linkage, PoW, merkle,
// plan hash, update commitments and bounds, duplicate (device, round) scan,
// reward arithmetic. Selection membership cannot be replayed offline and is
// not checked here.
ValidationResult validate_chain(const ChainState& chain, const FLPlan& plan);

// One JSON object per line: {"kind":"plan",...} then one per block in height
// order. Lines are canonical (dump of the parsed value reproduces the exact
// bytes), which import enforces.
std::string chain_to_jsonl(const ChainState& chain, const FLPlan& plan);
void save_chain_jsonl(const ChainState& chain, const FLPlan& plan, const std::string& path);

struct ChainFileResult {
    int exit_code = 0;  // 0 ok, 1 validation failure, 2 unreadable/corrupt
    std::string message;
    ChainState chain;
    FLPlan plan;
};

ChainFileResult load_and_validate_chain(const std::string& path);

}  // namespace fedchain
