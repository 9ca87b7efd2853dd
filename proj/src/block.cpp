#include "fedchain/block.hpp"

#include <stdexcept>

namespace fedchain {

Digest header_digest(const BlockHeader& h) {
    ByteWriter w;
    w.u64(h.height);
    w.digest(h.prev_hash);
    w.digest(h.merkle_root);
    w.u64(h.nonce);
    w.digest(h.target);
    w.i64(h.round);
    w.u32(h.miner_id);
    w.u64(h.timestamp_ms);
    return w.digest_of();
}

static void write_payload(ByteWriter& w, const LocalUpdate& u) {
    w.u8(u.encrypted ? 1 : 0);
    if (u.encrypted) {
        w.u64(u.cipher.size());
        for (const auto& ct : u.cipher) {
            w.str(ciphertext_to_hex(ct));
            w.u32(ct.scale_exponent);
        }
    } else {
        w.u64(u.delta.size());
        for (double v : u.delta) w.f64(v);
    }
}

Digest update_payload_digest(const LocalUpdate& u) {
    ByteWriter w;
    write_payload(w, u);
    return w.digest_of();
}

Digest update_record_digest(const LocalUpdate& u) {
    ByteWriter w;
    w.u32(u.device_id);
    w.u32(u.round);
    w.u64(u.n_k);
    w.f64(u.computation_time_ms);
    write_payload(w, u);
    w.f64(u.claimed_l1);
    w.digest(u.commitment);
    return w.digest_of();
}

Digest verify_record_digest(const VerifyRecord& v) {
    ByteWriter w;
    w.u32(v.device_id);
    w.u32(v.round);
    w.u8(v.pass ? 1 : 0);
    w.str(v.reason);
    return w.digest_of();
}

Digest merkle_root(const std::vector<Digest>& leaves) {
    if (leaves.empty()) throw std::invalid_argument("merkle_root: no leaves");
    std::vector<Digest> level = leaves;
    while (level.size() > 1) {
        std::vector<Digest> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            const Digest& a = level[i];
            const Digest& b = i + 1 < level.size() ? level[i + 1] : level[i];
            ByteWriter w;
            w.digest(a);
            w.digest(b);
            next.push_back(w.digest_of());
        }
        level = std::move(next);
    }
    return level[0];
}

Digest body_merkle_root(const BlockBody& body) {
    std::vector<Digest> leaves;
    leaves.reserve(1 + body.updates.size() + body.verifications.size());
    leaves.push_back(body.plan_hash);
    for (const auto& u : body.updates) leaves.push_back(update_record_digest(u));
    for (const auto& v : body.verifications) leaves.push_back(verify_record_digest(v));
    return merkle_root(leaves);
}

Target target_from_bits(std::uint32_t difficulty_bits) {
    if (difficulty_bits < 1 || difficulty_bits > 255)
        throw std::invalid_argument("target_from_bits: bits must be in [1, 255]");
    Target t{};
    std::uint32_t e = 256 - difficulty_bits;  // value is 2^e
    t[31 - e / 8] = static_cast<std::uint8_t>(1u << (e % 8));
    return t;
}

bool digest_below(const Digest& d, const Target& t) { return d < t; }

mpz_class target_to_mpz(const Target& t) {
    mpz_class v;
    mpz_import(v.get_mpz_t(), t.size(), 1, 1, 1, 0, t.data());
    return v;
}

Target target_from_mpz(const mpz_class& v) {
    static const mpz_class max_val = (mpz_class(1) << 256) - 1;
    mpz_class c = v;
    if (c < 1) c = 1;
    if (c > max_val) c = max_val;
    Target t{};
    std::size_t count = 0;
    // most-significant byte first, right-aligned into the 32-byte array
    unsigned char buf[32];
    mpz_export(buf, &count, 1, 1, 1, 0, c.get_mpz_t());
    for (std::size_t i = 0; i < count; ++i) t[32 - count + i] = buf[i];
    return t;
}

ChainState ChainState::genesis(const FLPlan& plan) {
    ChainState st;
    st.current_target = target_from_bits(plan.initial_difficulty_bits);

    Block g;
    g.header.height = 0;
    g.header.prev_hash = Digest{};
    g.body.plan_hash = plan.hash();
    g.header.merkle_root = body_merkle_root(g.body);
    g.header.nonce = 0;
    g.header.target = st.current_target;
    g.header.round = -1;
    g.header.miner_id = 0xffffffffu;
    g.header.timestamp_ms = 0;
    g.digest = header_digest(g.header);
    st.blocks.push_back(std::move(g));
    return st;
}

nlohmann::json block_to_json(const Block& b) {
    nlohmann::json j;
    j["height"] = b.header.height;
    j["prev_hash"] = digest_hex(b.header.prev_hash);
    j["merkle_root"] = digest_hex(b.header.merkle_root);
    j["nonce"] = b.header.nonce;
    j["target"] = digest_hex(b.header.target);
    j["round"] = b.header.round;
    j["miner_id"] = b.header.miner_id;
    j["timestamp_ms"] = b.header.timestamp_ms;
    j["digest"] = digest_hex(b.digest);
    j["plan_hash"] = digest_hex(b.body.plan_hash);

    auto updates = nlohmann::json::array();
    for (const auto& u : b.body.updates) {
        nlohmann::json ju;
        ju["device_id"] = u.device_id;
        ju["round"] = u.round;
        ju["n_k"] = u.n_k;
        ju["computation_time_ms"] = u.computation_time_ms;
        ju["encrypted"] = u.encrypted;
        if (u.encrypted) {
            auto arr = nlohmann::json::array();
            for (const auto& ct : u.cipher)
                arr.push_back({ciphertext_to_hex(ct), ct.scale_exponent});
            ju["cipher"] = std::move(arr);
        } else {
            ju["delta"] = u.delta;
        }
        ju["claimed_l1"] = u.claimed_l1;
        ju["commitment"] = digest_hex(u.commitment);
        updates.push_back(std::move(ju));
    }
    j["updates"] = std::move(updates);

    auto verifications = nlohmann::json::array();
    for (const auto& v : b.body.verifications) {
        nlohmann::json jv;
        jv["device_id"] = v.device_id;
        jv["round"] = v.round;
        jv["pass"] = v.pass;
        jv["reason"] = v.reason;
        verifications.push_back(std::move(jv));
    }
    j["verifications"] = std::move(verifications);

    auto rewards = nlohmann::json::array();
    for (const auto& r : b.rewards) {
        nlohmann::json jr;
        jr["height"] = r.height;
        jr["recipient"] = r.recipient;
        jr["amount"] = r.amount;
        jr["kind"] = r.kind == RewardKind::mining ? "mining" : "data_contribution";
        rewards.push_back(std::move(jr));
    }
    j["rewards"] = std::move(rewards);
    return j;
}

static Digest digest_field(const nlohmann::json& j, const char* key) {
    Digest d;
    if (!digest_from_hex(j.at(key).get<std::string>(), d))
        throw std::invalid_argument(std::string("block: bad digest in '") + key + "'");
    return d;
}

Block block_from_json(const nlohmann::json& j, const FixedPoint& fp) {
    Block b;
    try {
        b.header.height = j.at("height").get<std::uint64_t>();
        b.header.prev_hash = digest_field(j, "prev_hash");
        b.header.merkle_root = digest_field(j, "merkle_root");
        b.header.nonce = j.at("nonce").get<std::uint64_t>();
        b.header.target = digest_field(j, "target");
        b.header.round = j.at("round").get<std::int64_t>();
        b.header.miner_id = j.at("miner_id").get<std::uint32_t>();
        b.header.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
        b.digest = digest_field(j, "digest");
        b.body.plan_hash = digest_field(j, "plan_hash");

        for (const auto& ju : j.at("updates")) {
            LocalUpdate u;
            u.device_id = ju.at("device_id").get<std::uint32_t>();
            u.round = ju.at("round").get<std::uint32_t>();
            u.n_k = ju.at("n_k").get<std::uint64_t>();
            u.computation_time_ms = ju.at("computation_time_ms").get<double>();
            u.encrypted = ju.at("encrypted").get<bool>();
            if (u.encrypted) {
                for (const auto& pair : ju.at("cipher")) {
                    if (!pair.is_array() || pair.size() != 2)
                        throw std::invalid_argument("block: malformed cipher entry");
                    u.cipher.push_back(ciphertext_from_hex(
                        pair[0].get<std::string>(), pair[1].get<std::uint32_t>(), fp));
                }
            } else {
                u.delta = ju.at("delta").get<std::vector<double>>();
            }
            u.claimed_l1 = ju.at("claimed_l1").get<double>();
            u.commitment = digest_field(ju, "commitment");
            b.body.updates.push_back(std::move(u));
        }

        for (const auto& jv : j.at("verifications")) {
            VerifyRecord v;
            v.device_id = jv.at("device_id").get<std::uint32_t>();
            v.round = jv.at("round").get<std::uint32_t>();
            v.pass = jv.at("pass").get<bool>();
            v.reason = jv.at("reason").get<std::string>();
            b.body.verifications.push_back(std::move(v));
        }

        for (const auto& jr : j.at("rewards")) {
            RewardEntry r;
            r.height = jr.at("height").get<std::uint64_t>();
            r.recipient = jr.at("recipient").get<std::uint32_t>();
            r.amount = jr.at("amount").get<std::int64_t>();
            std::string kind = jr.at("kind").get<std::string>();
            if (kind == "mining")
                r.kind = RewardKind::mining;
            else if (kind == "data_contribution")
                r.kind = RewardKind::data_contribution;
            else
                throw std::invalid_argument("block: unknown reward kind");
            b.rewards.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("block: ") + e.what());
    }
    return b;
}

}  // namespace fedchain
