#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "fedchain/central.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/partition.hpp"
#include "fedchain/sim.hpp"

namespace fedchain {

// thrown for malformed or contradictory configuration; the message names the
// offending key
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    enum class Kind { synthetic, jsonl } kind = Kind::synthetic;
    SyntheticConfig synth;
    std::string path;            // kind == jsonl
    double test_fraction = 0.2;  // held-out rows for accuracy scoring
};

// One experiment, fully described. Parsing is strict: unknown keys anywhere
// are an error, `seed` is required, everything else has a default. The master
// seed feeds every module; no other entropy exists.
struct RunConfig {
    std::uint32_t version = 1;
    std::uint64_t seed = 0;
    std::uint32_t rounds = 30;
    DatasetSpec dataset;
    PartitionConfig partition;
    PopulationConfig population;
    FLPlan plan;
    CentralConfig central;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;

    struct Materialized {
        SparseDataset train, test;
        Partition part;
    };
    // generate or load the dataset, split train/test by a seeded shuffle,
    // partition the training rows
    Materialized materialize() const;

    Simulation make_simulation() const;
};

}  // namespace fedchain
