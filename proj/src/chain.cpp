#include "fedchain/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedchain/logistic.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

double noise_allowance(const FLPlan& plan, std::size_t dim) {
    if (!plan.dp_enabled) return 0.0;
    double d = static_cast<double>(dim);
    return d * (2.0 * plan.clip_c / plan.epsilon_round) * std::log(2.0 * d);
}

VerifyResult verify_update(const LocalUpdate& u, const FLPlan& plan, const RoundContext& ctx) {
    if (update_payload_digest(u) != u.commitment) return {false, "digest"};

    if (!u.encrypted) {
        // recomputed with the same summation order the device used
        if (l1_norm(u.delta) != u.claimed_l1) return {false, "norm"};
    }
    if (plan.dp_enabled) {
        std::size_t dim = u.encrypted ? u.cipher.size() : u.delta.size();
        if (u.claimed_l1 > plan.clip_c + noise_allowance(plan, dim)) return {false, "norm"};
    }

    double lo = static_cast<double>(u.n_k) * plan.t_min_ms;
    double hi = static_cast<double>(u.n_k) * plan.t_max_ms;
    if (!(u.computation_time_ms >= lo && u.computation_time_ms <= hi)) return {false, "time"};

    if (u.round != ctx.round ||
        !std::binary_search(ctx.selected.begin(), ctx.selected.end(), u.device_id))
        return {false, "selection"};

    return {true, ""};
}

MineResult mine(BlockHeader header, const Target& target, std::uint64_t nonce_start,
                std::uint64_t max_attempts) {
    if (target_to_mpz(target) == 0) throw std::invalid_argument("mine: target must be positive");
    MineResult r;
    for (std::uint64_t i = 0; i < max_attempts; ++i) {
        header.nonce = nonce_start + i;
        Digest d = header_digest(header);
        if (digest_below(d, target)) {
            r.found = true;
            r.nonce = header.nonce;
            r.digest = d;
            r.attempts = i + 1;
            return r;
        }
    }
    r.attempts = max_attempts;
    return r;
}

Block build_candidate(const CandidateInput& in, const Block& parent, const FLPlan& plan,
                      const Target& target, std::vector<LocalUpdate>* overflow) {
    if (in.updates.empty() && !plan.allow_empty_blocks)
        throw std::invalid_argument("build_candidate: no verified updates and empty blocks "
                                    "disallowed by plan");

    auto sorted = in.updates;
    std::sort(sorted.begin(), sorted.end(), [](const LocalUpdate& a, const LocalUpdate& b) {
        if (a.round != b.round) return a.round < b.round;
        return a.device_id < b.device_id;
    });

    Block blk;
    if (sorted.size() > plan.block_size) {
        if (overflow)
            overflow->assign(sorted.begin() + plan.block_size, sorted.end());
        sorted.resize(plan.block_size);
    } else if (overflow) {
        overflow->clear();
    }

    blk.body.plan_hash = plan.hash();
    blk.body.updates = std::move(sorted);
    blk.body.verifications = in.verifications;
    std::sort(blk.body.verifications.begin(), blk.body.verifications.end(),
              [](const VerifyRecord& a, const VerifyRecord& b) {
                  if (a.round != b.round) return a.round < b.round;
                  return a.device_id < b.device_id;
              });

    blk.header.height = parent.header.height + 1;
    blk.header.prev_hash = parent.digest;
    blk.header.merkle_root = body_merkle_root(blk.body);
    blk.header.nonce = 0;
    blk.header.target = target;
    blk.header.round = in.round;
    blk.header.miner_id = in.miner_id;
    blk.header.timestamp_ms = in.timestamp_ms;
    return blk;
}

std::vector<std::int64_t> largest_remainder_split(std::int64_t pool,
                                                  const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("largest_remainder_split: no weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0)) throw std::invalid_argument("largest_remainder_split: negative weight");
        total += w;
    }
    if (!(total > 0)) throw std::invalid_argument("largest_remainder_split: zero total weight");

    std::vector<std::int64_t> shares(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rema(weights.size());
    std::int64_t given = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = static_cast<double>(pool) * weights[i] / total;
        auto whole = static_cast<std::int64_t>(std::floor(exact));
        shares[i] = whole;
        given += whole;
        rema[i] = {exact - static_cast<double>(whole), i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t r = 0; r < pool - given; ++r) shares[rema[static_cast<std::size_t>(r)].second] += 1;
    return shares;
}

std::vector<RewardEntry> distribute_rewards(const Block& b, const FLPlan& plan) {
    std::vector<RewardEntry> out;
    out.push_back({b.header.height, b.header.miner_id, plan.mining_reward, RewardKind::mining});
    if (b.body.updates.empty()) return out;

    // quality_mode is uniform: weight = 1 * n_k
    std::vector<double> weights;
    weights.reserve(b.body.updates.size());
    for (const auto& u : b.body.updates) weights.push_back(static_cast<double>(u.n_k));
    auto shares = largest_remainder_split(plan.device_pool, weights);
    for (std::size_t i = 0; i < shares.size(); ++i)
        out.push_back({b.header.height, b.body.updates[i].device_id, shares[i],
                       RewardKind::data_contribution});
    return out;
}

std::uint32_t associate_miner(std::uint32_t device_id, const std::vector<std::uint32_t>& miners,
                              std::uint32_t round, std::uint64_t seed) {
    if (miners.empty()) throw std::invalid_argument("associate_miner: no miners configured");
    std::uint64_t h = derive_seed(seed, Stream::miner_assoc, round, device_id);
    return miners[h % miners.size()];
}

Target retarget(ChainState& chain, double observed_delay_ms, const FLPlan& plan) {
    if (!(observed_delay_ms > 0)) throw std::invalid_argument("retarget: delay must be positive");
    chain.observed_delays_ms.push_back(observed_delay_ms);

    std::size_t window = std::min<std::size_t>(plan.delay_window, chain.observed_delays_ms.size());
    double mean = 0.0;
    for (std::size_t i = chain.observed_delays_ms.size() - window;
         i < chain.observed_delays_ms.size(); ++i)
        mean += chain.observed_delays_ms[i];
    mean /= static_cast<double>(window);

    // E[attempts] = 2^256 / target, so the ideal target is 2^256 / attempts
    double attempts = plan.ratio_target * mean / plan.hash_time_ms;
    auto attempts_int = static_cast<std::uint64_t>(std::llround(std::max(1.0, attempts)));
    mpz_class ideal = (mpz_class(1) << 256) / attempts_int;

    mpz_class cur = target_to_mpz(chain.current_target);
    mpz_class next = ideal;
    if (next > cur * 4) next = cur * 4;
    if (next * 4 < cur) next = cur / 4;

    mpz_class max_t = target_to_mpz(target_from_bits(plan.min_difficulty_bits));
    mpz_class min_t = target_to_mpz(target_from_bits(plan.max_difficulty_bits));
    if (next > max_t) next = max_t;
    if (next < min_t) next = min_t;

    chain.current_target = target_from_mpz(next);
    return chain.current_target;
}

static ValidationResult fail_at(std::uint64_t height, const std::string& reason) {
    return {false, height, reason};
}

ValidationResult validate_chain(const ChainState& chain, const FLPlan& plan) {
    if (chain.blocks.empty()) return fail_at(0, "empty chain");
    Digest plan_hash = plan.hash();

    {
        ChainState expected = ChainState::genesis(plan);
        const Block& g = chain.blocks[0];
        const Block& e = expected.blocks[0];
        if (g.header.height != 0 || g.header.round != -1) return fail_at(0, "genesis header");
        if (g.body.plan_hash != plan_hash || !g.body.updates.empty() ||
            !g.body.verifications.empty() || !g.rewards.empty())
            return fail_at(0, "genesis body");
        if (g.header.merkle_root != e.header.merkle_root) return fail_at(0, "genesis merkle");
        if (header_digest(g.header) != g.digest || g.digest != e.digest)
            return fail_at(0, "genesis digest");
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;  // (device, round)
    for (std::size_t h = 1; h < chain.blocks.size(); ++h) {
        const Block& b = chain.blocks[h];
        if (b.header.height != h) return fail_at(h, "height sequence");
        if (b.header.prev_hash != chain.blocks[h - 1].digest) return fail_at(h, "parent link");
        if (header_digest(b.header) != b.digest) return fail_at(h, "header digest");
        if (!digest_below(b.digest, b.header.target)) return fail_at(h, "proof of work");
        if (body_merkle_root(b.body) != b.header.merkle_root) return fail_at(h, "merkle root");
        if (b.body.plan_hash != plan_hash) return fail_at(h, "plan hash");
        if (b.body.updates.size() > plan.block_size) return fail_at(h, "block size");
        if (b.body.updates.empty() && !plan.allow_empty_blocks) return fail_at(h, "empty block");
        if (b.header.round < 0) return fail_at(h, "round index");

        for (const auto& u : b.body.updates) {
            if (static_cast<std::int64_t>(u.round) > b.header.round)
                return fail_at(h, "update round ahead of block");
            if (!seen.insert({u.device_id, u.round}).second)
                return fail_at(h, "duplicate update");
            if (u.encrypted ? (u.cipher.empty() || !u.delta.empty()) : u.delta.empty())
                return fail_at(h, "payload shape");
            if (update_payload_digest(u) != u.commitment) return fail_at(h, "update commitment");
            if (!u.encrypted && l1_norm(u.delta) != u.claimed_l1)
                return fail_at(h, "update norm claim");
            if (plan.dp_enabled) {
                std::size_t dim = u.encrypted ? u.cipher.size() : u.delta.size();
                if (u.claimed_l1 > plan.clip_c + noise_allowance(plan, dim))
                    return fail_at(h, "update norm bound");
            }
            double lo = static_cast<double>(u.n_k) * plan.t_min_ms;
            double hi = static_cast<double>(u.n_k) * plan.t_max_ms;
            if (!(u.computation_time_ms >= lo && u.computation_time_ms <= hi))
                return fail_at(h, "update time bound");

            bool verified = false;
            for (const auto& v : b.body.verifications)
                if (v.device_id == u.device_id && v.round == u.round && v.pass) verified = true;
            if (!verified) return fail_at(h, "update lacks pass record");
        }

        auto expected_rewards = distribute_rewards(b, plan);
        if (expected_rewards != b.rewards) return fail_at(h, "reward arithmetic");
    }
    return {true, chain.blocks.back().header.height, ""};
}

std::string chain_to_jsonl(const ChainState& chain, const FLPlan& plan) {
    std::ostringstream out;
    nlohmann::json jp;
    jp["kind"] = "plan";
    jp["plan"] = plan.to_json();
    out << jp.dump() << '\n';
    for (const auto& b : chain.blocks) out << block_to_json(b).dump() << '\n';
    return out.str();
}

void save_chain_jsonl(const ChainState& chain, const FLPlan& plan, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_chain: cannot open " + path);
    f << chain_to_jsonl(chain, plan);
}

ChainFileResult load_and_validate_chain(const std::string& path) {
    ChainFileResult res;
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        res.exit_code = 2;
        res.message = "cannot open " + path;
        return res;
    }

    std::string line;
    std::size_t line_no = 0;
    bool have_plan = false;
    FixedPoint fp;
    try {
        while (std::getline(f, line)) {
            ++line_no;
            auto j = nlohmann::json::parse(line);
            // canonical-form check: a value-preserving byte change (e.g. an
            // exponent case flip) must not slip past the digest checks
            if (j.dump() != line)
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            " is not in canonical form");
            if (!have_plan) {
                if (!j.is_object() || j.value("kind", "") != "plan" || !j.contains("plan"))
                    throw std::invalid_argument("first record must be the plan");
                res.plan = FLPlan::from_json(j.at("plan"));
                fp.frac_bits = res.plan.he_frac_bits;
                fp.budget_bits = res.plan.he_budget_bits;
                have_plan = true;
                continue;
            }
            res.chain.blocks.push_back(block_from_json(j, fp));
        }
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.message = e.what();
        return res;
    }
    if (!have_plan || res.chain.blocks.empty()) {
        res.exit_code = 2;
        res.message = "file holds no chain";
        return res;
    }

    res.chain.current_target = res.chain.blocks.back().header.target;
    auto v = validate_chain(res.chain, res.plan);
    if (!v.ok) {
        res.exit_code = 1;
        res.message = "invalid at height " + std::to_string(v.height) + ": " + v.reason;
    }
    return res;
}

}  // namespace fedchain
