#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedchain/central.hpp"
#include "fedchain/chain.hpp"
#include "fedchain/fedsvrg.hpp"
#include "fedchain/privacy.hpp"

namespace fedchain {

struct PopulationConfig {
    double ineligible_fraction = 0.0;   // one eligibility flag forced false
    double nongenuine_fraction = 0.0;   // attestation failure: poisoned commitment
    double adversarial_fraction = 0.0;  // submits an oversized update, skips the DP gate
    double speed_min = 1.0;
    double speed_max = 1.0;

    void validate() const;
};

struct DeviceState {
    std::uint32_t id = 0;  // doubles as the partition shard index
    bool idle = true, charging = true, unmetered = true;
    bool genuine = true;
    bool adversarial = false;
    double speed = 1.0;
    PrivacyBudget budget{1.0};

    bool eligible() const { return idle && charging && unmetered; }
};

struct SelectionResult {
    std::vector<std::uint32_t> pool;      // eligible, announced in the window
    std::vector<std::uint32_t> selected;  // uniform sample of the pool, sorted
};

SelectionResult announce_and_select(const std::vector<DeviceState>& devices, const FLPlan& plan,
                                    double window_ms, std::uint32_t round, std::uint64_t seed);

struct RoleBindings {
    std::string coordinator;
    std::vector<std::string> selectors;
    std::string master_aggregator;
    std::uint32_t aggregators_per_round = 0;  // ceil(requirement / batch)
};

RoleBindings actor_roles(const FLPlan& plan);

struct ActorMessage {
    std::uint32_t round = 0;
    std::string from, to, kind;
    std::int64_t device = -1;
};

struct MetricsRow {
    std::uint32_t round = 0;
    double loss = 0.0;
    double accuracy_fed = 0.0;
    double accuracy_central = 0.0;
    double delta_loss = 0.0;
    double epsilon_cumulative = 0.0;
    std::uint64_t block_height = 0;
    std::uint64_t mine_attempts = 0;
    double delay_ms = 0.0;
    std::uint32_t rejected_updates = 0;
};

struct RoundOutcome {
    std::uint32_t round = 0;
    std::vector<std::uint32_t> selected;
    std::vector<std::uint32_t> excluded;  // budget-exhausted this round
    bool block_produced = false;
    std::uint64_t block_height = 0;
    std::vector<double> weights;  // after aggregation
    MetricsRow metrics;
    // encrypted mode: |decrypted aggregate - plaintext aggregate|_inf this round
    double he_residual_inf = 0.0;
};

// The whole network on one event loop: devices, selector stack, miners, the
// ledger, and the key authority when encryption is on. Single-threaded
// reference semantics; every random draw comes from a named substream of the
// master seed, so runs are bit-reproducible.
class Simulation {
  public:
    Simulation(FLPlan plan, SparseDataset train, SparseDataset test, Partition partition,
               PopulationConfig pop, std::uint64_t seed,
               CentralConfig central = CentralConfig{});

    RoundOutcome run_round(std::uint32_t round);
    void run(std::uint32_t rounds);

    const FLPlan& plan() const { return plan_; }
    const ChainState& chain() const { return chain_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<RoundOutcome>& outcomes() const { return outcomes_; }
    const std::vector<DeviceState>& devices() const { return devices_; }
    const std::vector<double>& central_weights() const { return central_weights_; }
    double epsilon_cumulative() const;

    std::string metrics_csv() const;
    std::string rewards_csv() const;
    std::string privacy_csv() const;
    std::string message_log() const;
    std::string chain_jsonl() const { return chain_to_jsonl(chain_, plan_); }
    nlohmann::json keypair_json() const;  // only meaningful when encrypting

  private:
    struct PendingUpdate {
        LocalUpdate update;
        VerifyRecord record;
        std::vector<double> plain;  // pre-encryption release, for the HE residual oracle
    };

    void log(std::uint32_t round, const std::string& from, const std::string& to,
             const std::string& kind, std::int64_t device = -1);
    std::optional<PendingUpdate> device_round(std::uint32_t round, std::uint32_t id,
                                              const std::vector<double>& grad,
                                              std::vector<std::uint32_t>& excluded);

    FLPlan plan_;
    SparseDataset train_, test_;
    Partition partition_;
    SparsityStats stats_;
    PopulationConfig pop_;
    std::uint64_t seed_;
    std::vector<DeviceState> devices_;
    std::vector<std::uint32_t> miners_;
    ChainState chain_;
    std::vector<double> weights_;
    std::vector<double> central_weights_;
    double accuracy_central_ = 0.0;
    std::vector<PendingUpdate> pending_;
    std::vector<RoundOutcome> outcomes_;
    std::vector<ActorMessage> messages_;
    double clock_ms_ = 0.0;
    std::optional<PaillierKeyPair> keys_;
    FixedPoint fp_;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

}  // namespace fedchain
