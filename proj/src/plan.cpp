#include "fedchain/plan.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace fedchain {

void FLPlan::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("plan: " + what); };

    if (!(h >= 0) || !std::isfinite(h)) fail("h must be finite and non-negative");
    if (local_passes < 1) fail("local_passes must be >= 1");
    if (lambda < 0) fail("lambda must be non-negative");
    if (task != "training" && task != "evaluation") fail("task must be training or evaluation");

    if (device_requirement < 1) fail("device_requirement must be >= 1");
    if (!(announce_window_ms > 0)) fail("announce_window_ms must be positive");
    if (!(announce_spread_ms > 0)) fail("announce_spread_ms must be positive");
    if (aggregator_batch < 1) fail("aggregator_batch must be >= 1");

    if (dp_enabled) {
        if (!(epsilon_total > 0)) fail("epsilon_total must be positive");
        if (!(epsilon_round > 0)) fail("epsilon_round must be positive");
        if (epsilon_round > epsilon_total) fail("epsilon_round exceeds epsilon_total");
        if (!(clip_c > 0)) fail("clip_c must be positive");
    }

    if (encrypt_updates) {
        if (he_key_bits < 256 || he_key_bits % 2 != 0) fail("he_key_bits must be even and >= 256");
        if (he_frac_bits < 8 || he_frac_bits > 48) fail("he_frac_bits must be in [8, 48]");
        if (he_budget_bits < 8 || he_budget_bits > 48) fail("he_budget_bits must be in [8, 48]");
    }

    if (consensus == "pos") fail("consensus pos not implemented");
    if (consensus != "pow") fail("consensus must be pow");
    if (block_size < 1) fail("block_size must be >= 1");
    if (miners < 1) fail("miners must be >= 1");
    if (initial_difficulty_bits < 1 || initial_difficulty_bits > 255)
        fail("initial_difficulty_bits must be in [1, 255]");
    if (min_difficulty_bits < 1 || max_difficulty_bits > 255 ||
        min_difficulty_bits > max_difficulty_bits)
        fail("difficulty clamp bits out of order");
    if (initial_difficulty_bits < min_difficulty_bits ||
        initial_difficulty_bits > max_difficulty_bits)
        fail("initial_difficulty_bits outside clamp range");
    if (mining_reward < 0) fail("mining_reward must be non-negative");
    if (device_pool < 0) fail("device_pool must be non-negative");
    if (quality_mode != "uniform") fail("quality_mode must be uniform");

    if (!(t_min_ms > 0) || !(t_max_ms >= t_min_ms)) fail("per-sample time bounds out of order");
    if (!(hash_time_ms > 0)) fail("hash_time_ms must be positive");
    if (!(delay_min_ms > 0) || !(delay_max_ms >= delay_min_ms))
        fail("delay bounds out of order");
    if (!(ratio_target > 0)) fail("ratio_target must be positive");
    if (delay_window < 1) fail("delay_window must be >= 1");
}

nlohmann::json FLPlan::to_json() const {
    nlohmann::json j;
    j["h"] = h;
    j["local_passes"] = local_passes;
    j["phi_mode"] = phi_mode == PhiMode::global_n ? "global_n" : "local_nk";
    j["lambda"] = lambda;
    j["task"] = task;
    j["device_requirement"] = device_requirement;
    j["announce_window_ms"] = announce_window_ms;
    j["announce_spread_ms"] = announce_spread_ms;
    j["aggregator_batch"] = aggregator_batch;
    j["dp_enabled"] = dp_enabled;
    j["epsilon_total"] = epsilon_total;
    j["epsilon_round"] = epsilon_round;
    j["clip_c"] = clip_c;
    j["encrypt_updates"] = encrypt_updates;
    j["he_key_bits"] = he_key_bits;
    j["he_frac_bits"] = he_frac_bits;
    j["he_budget_bits"] = he_budget_bits;
    j["consensus"] = consensus;
    j["block_size"] = block_size;
    j["allow_empty_blocks"] = allow_empty_blocks;
    j["miners"] = miners;
    j["initial_difficulty_bits"] = initial_difficulty_bits;
    j["min_difficulty_bits"] = min_difficulty_bits;
    j["max_difficulty_bits"] = max_difficulty_bits;
    j["mining_reward"] = mining_reward;
    j["device_pool"] = device_pool;
    j["quality_mode"] = quality_mode;
    j["t_min_ms"] = t_min_ms;
    j["t_max_ms"] = t_max_ms;
    j["hash_time_ms"] = hash_time_ms;
    j["delay_min_ms"] = delay_min_ms;
    j["delay_max_ms"] = delay_max_ms;
    j["ratio_target"] = ratio_target;
    j["delay_window"] = delay_window;
    return j;
}

FLPlan FLPlan::from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "h", "local_passes", "phi_mode", "lambda", "task",
        "device_requirement", "announce_window_ms", "announce_spread_ms", "aggregator_batch",
        "dp_enabled", "epsilon_total", "epsilon_round", "clip_c",
        "encrypt_updates", "he_key_bits", "he_frac_bits", "he_budget_bits",
        "consensus", "block_size", "allow_empty_blocks", "miners",
        "initial_difficulty_bits", "min_difficulty_bits", "max_difficulty_bits",
        "mining_reward", "device_pool", "quality_mode",
        "t_min_ms", "t_max_ms", "hash_time_ms", "delay_min_ms", "delay_max_ms",
        "ratio_target", "delay_window"};
    if (!j.is_object()) throw std::invalid_argument("plan: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("plan: unknown key '" + it.key() + "'");

    FLPlan p;
    try {
        p.h = j.at("h").get<double>();
        p.local_passes = j.at("local_passes").get<std::uint32_t>();
        std::string pm = j.at("phi_mode").get<std::string>();
        if (pm == "global_n")
            p.phi_mode = PhiMode::global_n;
        else if (pm == "local_nk")
            p.phi_mode = PhiMode::local_nk;
        else
            throw std::invalid_argument("plan: phi_mode must be global_n or local_nk");
        p.lambda = j.at("lambda").get<double>();
        p.task = j.at("task").get<std::string>();
        p.device_requirement = j.at("device_requirement").get<std::uint32_t>();
        p.announce_window_ms = j.at("announce_window_ms").get<double>();
        p.announce_spread_ms = j.at("announce_spread_ms").get<double>();
        p.aggregator_batch = j.at("aggregator_batch").get<std::uint32_t>();
        p.dp_enabled = j.at("dp_enabled").get<bool>();
        p.epsilon_total = j.at("epsilon_total").get<double>();
        p.epsilon_round = j.at("epsilon_round").get<double>();
        p.clip_c = j.at("clip_c").get<double>();
        p.encrypt_updates = j.at("encrypt_updates").get<bool>();
        p.he_key_bits = j.at("he_key_bits").get<std::uint32_t>();
        p.he_frac_bits = j.at("he_frac_bits").get<std::uint32_t>();
        p.he_budget_bits = j.at("he_budget_bits").get<std::uint32_t>();
        p.consensus = j.at("consensus").get<std::string>();
        p.block_size = j.at("block_size").get<std::uint32_t>();
        p.allow_empty_blocks = j.at("allow_empty_blocks").get<bool>();
        p.miners = j.at("miners").get<std::uint32_t>();
        p.initial_difficulty_bits = j.at("initial_difficulty_bits").get<std::uint32_t>();
        p.min_difficulty_bits = j.at("min_difficulty_bits").get<std::uint32_t>();
        p.max_difficulty_bits = j.at("max_difficulty_bits").get<std::uint32_t>();
        p.mining_reward = j.at("mining_reward").get<std::int64_t>();
        p.device_pool = j.at("device_pool").get<std::int64_t>();
        p.quality_mode = j.at("quality_mode").get<std::string>();
        p.t_min_ms = j.at("t_min_ms").get<double>();
        p.t_max_ms = j.at("t_max_ms").get<double>();
        p.hash_time_ms = j.at("hash_time_ms").get<double>();
        p.delay_min_ms = j.at("delay_min_ms").get<double>();
        p.delay_max_ms = j.at("delay_max_ms").get<double>();
        p.ratio_target = j.at("ratio_target").get<double>();
        p.delay_window = j.at("delay_window").get<std::uint32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("plan: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace fedchain
