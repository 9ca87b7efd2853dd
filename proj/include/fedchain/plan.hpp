#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "fedchain/sha256.hpp"
#include "fedchain/stats.hpp"

namespace fedchain {

// The public rule book one training session runs under. Everything here is
// known to every actor, privacy budget included; the hash of the canonical
// JSON form anchors the genesis block and every block body.
struct FLPlan {
    // model
    double h = 0.5;
    std::uint32_t local_passes = 1;
    PhiMode phi_mode = PhiMode::global_n;
    double lambda = 1e-4;
    std::string task = "training";  // or "evaluation": rounds score, never update

    // participation
    std::uint32_t device_requirement = 1;
    double announce_window_ms = 1000.0;
    double announce_spread_ms = 1000.0;
    std::uint32_t aggregator_batch = 25;

    // privacy
    bool dp_enabled = false;
    double epsilon_total = 1.0;
    double epsilon_round = 0.1;
    double clip_c = 1.0;

    // encryption
    bool encrypt_updates = false;
    std::uint32_t he_key_bits = 512;
    std::uint32_t he_frac_bits = 32;
    std::uint32_t he_budget_bits = 32;

    // ledger
    std::string consensus = "pow";
    std::uint32_t block_size = 32;
    bool allow_empty_blocks = false;
    std::uint32_t miners = 2;
    std::uint32_t initial_difficulty_bits = 10;
    std::uint32_t min_difficulty_bits = 4;
    std::uint32_t max_difficulty_bits = 24;
    std::int64_t mining_reward = 50;
    std::int64_t device_pool = 100;
    std::string quality_mode = "uniform";

    // simulated physics
    double t_min_ms = 0.05;   // per-sample compute time bounds
    double t_max_ms = 0.2;
    double hash_time_ms = 0.05;  // per PoW attempt
    double delay_min_ms = 20.0;  // block propagation delay interval
    double delay_max_ms = 80.0;
    double ratio_target = 10.0;  // desired mining time = ratio * mean delay
    std::uint32_t delay_window = 1;

    void validate() const;  // std::invalid_argument naming the offending field

    nlohmann::json to_json() const;
    static FLPlan from_json(const nlohmann::json& j);  // strict: unknown keys rejected

    std::string canonical_text() const { return to_json().dump(); }
    Digest hash() const { return sha256(canonical_text()); }
};

}  // namespace fedchain
