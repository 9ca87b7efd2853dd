#include "fedchain/runconfig.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fedchain {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
    if (!j.is_object()) throw ConfigError("config: \"" + scope + "\" must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key \"" + scope + "." + it.key() + "\"");
    }
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config: bad value for key \"") + key + "\"");
        }
    }
}

// overlay present keys on defaults; names mirror the canonical plan form
void plan_overlay(FLPlan& p, const json& j) {
    static const std::set<std::string> keys = {
        "h", "local_passes", "phi_mode", "lambda", "task",
        "device_requirement", "announce_window_ms", "announce_spread_ms", "aggregator_batch",
        "dp_enabled", "epsilon_total", "epsilon_round", "clip_c",
        "encrypt_updates", "he_key_bits", "he_frac_bits", "he_budget_bits",
        "consensus", "block_size", "allow_empty_blocks", "miners",
        "initial_difficulty_bits", "min_difficulty_bits", "max_difficulty_bits",
        "mining_reward", "device_pool", "quality_mode",
        "t_min_ms", "t_max_ms", "hash_time_ms", "delay_min_ms", "delay_max_ms",
        "ratio_target", "delay_window"};
    reject_unknown(j, keys, "plan");
    opt(j, "h", p.h);
    opt(j, "local_passes", p.local_passes);
    if (j.contains("phi_mode")) {
        std::string pm = j.at("phi_mode").get<std::string>();
        if (pm == "global_n")
            p.phi_mode = PhiMode::global_n;
        else if (pm == "local_nk")
            p.phi_mode = PhiMode::local_nk;
        else
            throw ConfigError("config: bad value for key \"plan.phi_mode\"");
    }
    opt(j, "lambda", p.lambda);
    opt(j, "task", p.task);
    opt(j, "device_requirement", p.device_requirement);
    opt(j, "announce_window_ms", p.announce_window_ms);
    opt(j, "announce_spread_ms", p.announce_spread_ms);
    opt(j, "aggregator_batch", p.aggregator_batch);
    opt(j, "dp_enabled", p.dp_enabled);
    opt(j, "epsilon_total", p.epsilon_total);
    opt(j, "epsilon_round", p.epsilon_round);
    opt(j, "clip_c", p.clip_c);
    opt(j, "encrypt_updates", p.encrypt_updates);
    opt(j, "he_key_bits", p.he_key_bits);
    opt(j, "he_frac_bits", p.he_frac_bits);
    opt(j, "he_budget_bits", p.he_budget_bits);
    opt(j, "consensus", p.consensus);
    opt(j, "block_size", p.block_size);
    opt(j, "allow_empty_blocks", p.allow_empty_blocks);
    opt(j, "miners", p.miners);
    opt(j, "initial_difficulty_bits", p.initial_difficulty_bits);
    opt(j, "min_difficulty_bits", p.min_difficulty_bits);
    opt(j, "max_difficulty_bits", p.max_difficulty_bits);
    opt(j, "mining_reward", p.mining_reward);
    opt(j, "device_pool", p.device_pool);
    opt(j, "quality_mode", p.quality_mode);
    opt(j, "t_min_ms", p.t_min_ms);
    opt(j, "t_max_ms", p.t_max_ms);
    opt(j, "hash_time_ms", p.hash_time_ms);
    opt(j, "delay_min_ms", p.delay_min_ms);
    opt(j, "delay_max_ms", p.delay_max_ms);
    opt(j, "ratio_target", p.ratio_target);
    opt(j, "delay_window", p.delay_window);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    static const std::set<std::string> top = {"version",    "seed", "rounds", "dataset",
                                              "partition",  "population", "plan", "centralized"};
    reject_unknown(j, top, "$");
    RunConfig c;
    opt(j, "version", c.version);
    if (c.version != 1) throw ConfigError("config: unsupported value for key \"version\"");
    if (!j.contains("seed")) throw ConfigError("config: missing required key \"seed\"");
    opt(j, "seed", c.seed);
    opt(j, "rounds", c.rounds);

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        static const std::set<std::string> dk = {"kind", "n",    "dim",          "sparsity",
                                                 "separation", "path", "test_fraction"};
        reject_unknown(d, dk, "dataset");
        std::string kind = "synthetic";
        opt(d, "kind", kind);
        if (kind == "synthetic") {
            c.dataset.kind = DatasetSpec::Kind::synthetic;
            opt(d, "n", c.dataset.synth.n);
            opt(d, "dim", c.dataset.synth.d);
            opt(d, "sparsity", c.dataset.synth.sparsity);
            opt(d, "separation", c.dataset.synth.separation);
            if (d.contains("path"))
                throw ConfigError("config: key \"dataset.path\" is only valid for kind jsonl");
        } else if (kind == "jsonl") {
            c.dataset.kind = DatasetSpec::Kind::jsonl;
            if (!d.contains("path"))
                throw ConfigError("config: missing required key \"dataset.path\"");
            opt(d, "path", c.dataset.path);
            if (d.contains("n") || d.contains("dim") || d.contains("sparsity") ||
                d.contains("separation"))
                throw ConfigError("config: synthetic keys are invalid for kind jsonl");
        } else {
            throw ConfigError("config: bad value for key \"dataset.kind\"");
        }
        opt(d, "test_fraction", c.dataset.test_fraction);
        if (!(c.dataset.test_fraction > 0.0 && c.dataset.test_fraction < 1.0))
            throw ConfigError("config: key \"dataset.test_fraction\" must lie in (0, 1)");
    }

    if (j.contains("partition")) {
        const json& p = j.at("partition");
        static const std::set<std::string> pk = {"devices", "skew", "balance"};
        reject_unknown(p, pk, "partition");
        opt(p, "devices", c.partition.devices);
        opt(p, "skew", c.partition.skew);
        opt(p, "balance", c.partition.balance);
    }

    if (j.contains("population")) {
        const json& p = j.at("population");
        static const std::set<std::string> pk = {"ineligible_fraction", "nongenuine_fraction",
                                                 "adversarial_fraction", "speed_min", "speed_max"};
        reject_unknown(p, pk, "population");
        opt(p, "ineligible_fraction", c.population.ineligible_fraction);
        opt(p, "nongenuine_fraction", c.population.nongenuine_fraction);
        opt(p, "adversarial_fraction", c.population.adversarial_fraction);
        opt(p, "speed_min", c.population.speed_min);
        opt(p, "speed_max", c.population.speed_max);
    }

    if (j.contains("plan")) plan_overlay(c.plan, j.at("plan"));

    if (j.contains("centralized")) {
        const json& cc = j.at("centralized");
        static const std::set<std::string> ck = {"mode", "lr", "epochs", "lambda"};
        reject_unknown(cc, ck, "centralized");
        if (cc.contains("mode")) {
            std::string mode = cc.at("mode").get<std::string>();
            if (mode == "sgd")
                c.central.mode = CentralMode::sgd;
            else if (mode == "full_batch")
                c.central.mode = CentralMode::full_batch;
            else
                throw ConfigError("config: bad value for key \"centralized.mode\"");
        }
        opt(cc, "lr", c.central.lr);
        opt(cc, "epochs", c.central.epochs);
        opt(cc, "lambda", c.central.lambda);
    }

    // the master seed feeds every module
    c.partition.seed = c.seed;
    c.dataset.synth.seed = c.seed;
    c.central.seed = c.seed;

    // fail early on contradictions the plan itself can detect
    c.plan.validate();
    c.population.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    json j;
    j["version"] = version;
    j["seed"] = seed;
    j["rounds"] = rounds;
    json d;
    if (dataset.kind == DatasetSpec::Kind::synthetic) {
        d["kind"] = "synthetic";
        d["n"] = dataset.synth.n;
        d["dim"] = dataset.synth.d;
        d["sparsity"] = dataset.synth.sparsity;
        d["separation"] = dataset.synth.separation;
    } else {
        d["kind"] = "jsonl";
        d["path"] = dataset.path;
    }
    d["test_fraction"] = dataset.test_fraction;
    j["dataset"] = d;
    j["partition"] = {{"devices", partition.devices}, {"skew", partition.skew},
                      {"balance", partition.balance}};
    j["population"] = {{"ineligible_fraction", population.ineligible_fraction},
                       {"nongenuine_fraction", population.nongenuine_fraction},
                       {"adversarial_fraction", population.adversarial_fraction},
                       {"speed_min", population.speed_min},
                       {"speed_max", population.speed_max}};
    j["plan"] = plan.to_json();
    j["centralized"] = {{"mode", central.mode == CentralMode::sgd ? "sgd" : "full_batch"},
                        {"lr", central.lr},
                        {"epochs", central.epochs},
                        {"lambda", central.lambda}};
    return j;
}

RunConfig::Materialized RunConfig::materialize() const {
    SparseDataset full = dataset.kind == DatasetSpec::Kind::synthetic
                             ? generate_synthetic(dataset.synth)
                             : load_dataset_jsonl(dataset.path);
    full.validate();
    std::size_t n = full.rows.size();
    std::size_t n_test = static_cast<std::size_t>(std::floor(dataset.test_fraction * n));
    if (n_test == 0 || n_test >= n)
        throw ConfigError("config: test_fraction leaves an empty split for this dataset");

    // seeded shuffle decides the held-out rows; tag 1 keeps it disjoint from
    // the generator's own stream
    Rng rng(derive_seed(seed, Stream::synthesis, 1));
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    rng.shuffle(order);

    auto take = [&](std::size_t begin, std::size_t end) {
        SparseDataset out;
        out.dim = full.dim;
        out.feature_ids = full.feature_ids;
        out.rows.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            out.rows.push_back(full.rows[order[i]]);
            out.labels.push_back(full.labels[order[i]]);
            out.sample_ids.push_back(full.sample_ids[order[i]]);
        }
        return out;
    };
    Materialized m;
    m.test = take(0, n_test);
    m.train = take(n_test, n);
    m.part = make_partition(m.train, partition);
    return m;
}

Simulation RunConfig::make_simulation() const {
    Materialized m = materialize();
    return Simulation(plan, std::move(m.train), std::move(m.test), std::move(m.part), population,
                      seed, central);
}

}  // namespace fedchain
