#include "fedchain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedchain/logistic.hpp"
#include "fedchain/util.hpp"

namespace fedchain {

void PopulationConfig::validate() const {
    auto frac = [](double f, const char* name) {
        if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    };
    frac(ineligible_fraction, "ineligible_fraction");
    frac(nongenuine_fraction, "nongenuine_fraction");
    frac(adversarial_fraction, "adversarial_fraction");
    if (!(speed_min > 0.0)) throw std::invalid_argument("speed_min must be positive");
    if (!(speed_max >= speed_min)) throw std::invalid_argument("speed_max must be >= speed_min");
}

SelectionResult announce_and_select(const std::vector<DeviceState>& devices, const FLPlan& plan,
                                    double window_ms, std::uint32_t round, std::uint64_t seed) {
    SelectionResult r;
    for (const auto& d : devices) {
        if (!d.eligible()) continue;
        Rng arng(derive_seed(seed, Stream::announce, round, d.id));
        if (arng.uniform(0.0, plan.announce_spread_ms) < window_ms) r.pool.push_back(d.id);
    }
    r.selected = r.pool;
    if (r.selected.size() > plan.device_requirement) {
        Rng srng(derive_seed(seed, Stream::selection, round));
        // partial Fisher-Yates: the first `device_requirement` slots are a
        // uniform sample without replacement
        for (std::size_t i = 0; i < plan.device_requirement; ++i) {
            std::size_t j = i + static_cast<std::size_t>(
                                    srng.uniform_below(static_cast<std::uint64_t>(r.selected.size() - i)));
            std::swap(r.selected[i], r.selected[j]);
        }
        r.selected.resize(plan.device_requirement);
        std::sort(r.selected.begin(), r.selected.end());
    }
    return r;
}

RoleBindings actor_roles(const FLPlan& plan) {
    RoleBindings r;
    r.coordinator = "coordinator";
    r.selectors = {"selector0"};
    r.master_aggregator = "master_aggregator";
    r.aggregators_per_round =
        (plan.device_requirement + plan.aggregator_batch - 1) / plan.aggregator_batch;
    return r;
}

namespace {

std::string device_name(std::uint32_t id) { return "device" + std::to_string(id); }
std::string miner_name(std::uint32_t id) { return "miner" + std::to_string(id); }

}  // namespace

Simulation::Simulation(FLPlan plan, SparseDataset train, SparseDataset test, Partition partition,
                       PopulationConfig pop, std::uint64_t seed, CentralConfig central)
    : plan_(std::move(plan)),
      train_(std::move(train)),
      test_(std::move(test)),
      partition_(std::move(partition)),
      pop_(pop),
      seed_(seed) {
    plan_.validate();
    pop_.validate();
    train_.validate();
    partition_.validate(train_.rows.size());
    if (test_.rows.empty()) throw std::invalid_argument("simulation requires a non-empty test split");
    test_.validate();
    if (test_.dim != train_.dim) throw std::invalid_argument("train/test dimension mismatch");

    stats_ = sparsity_stats(train_, partition_, plan_.phi_mode);

    const std::size_t total_devices = partition_.assignments.size();
    devices_.reserve(total_devices);
    for (std::size_t k = 0; k < total_devices; ++k) {
        DeviceState d;
        d.id = static_cast<std::uint32_t>(k);
        Rng prng(derive_seed(seed_, Stream::population, k));
        if (prng.uniform01() < pop_.ineligible_fraction) {
            switch (prng.uniform_below(3)) {
                case 0: d.idle = false; break;
                case 1: d.charging = false; break;
                default: d.unmetered = false; break;
            }
        }
        d.genuine = !(prng.uniform01() < pop_.nongenuine_fraction);
        d.adversarial = prng.uniform01() < pop_.adversarial_fraction;
        d.speed = prng.uniform(pop_.speed_min, pop_.speed_max);
        d.budget = PrivacyBudget(plan_.dp_enabled ? plan_.epsilon_total : 1.0);
        devices_.push_back(std::move(d));
    }
    miners_.resize(plan_.miners);
    for (std::uint32_t i = 0; i < plan_.miners; ++i) miners_[i] = i;

    chain_ = ChainState::genesis(plan_);
    weights_.assign(train_.dim, 0.0);

    if (plan_.encrypt_updates) {
        keys_ = paillier_keygen(plan_.he_key_bits, seed_);
        fp_ = FixedPoint{plan_.he_frac_bits, plan_.he_budget_bits};
    }

    central_weights_ = train_centralized(train_, central);
    accuracy_central_ = accuracy(central_weights_, test_);
}

void Simulation::log(std::uint32_t round, const std::string& from, const std::string& to,
                     const std::string& kind, std::int64_t device) {
    messages_.push_back(ActorMessage{round, from, to, kind, device});
}

double Simulation::epsilon_cumulative() const {
    double total = 0.0;
    for (const auto& d : devices_) total += d.budget.spent();
    return total;
}

std::optional<Simulation::PendingUpdate> Simulation::device_round(
    std::uint32_t round, std::uint32_t id, const std::vector<double>& grad,
    std::vector<std::uint32_t>& excluded) {
    DeviceState& dev = devices_[id];
    const auto& indices = partition_.assignments[id];

    FedSvrgConfig cfg;
    cfg.h = plan_.h;
    cfg.outer_rounds = 1;
    cfg.local_passes = plan_.local_passes;
    cfg.phi_mode = plan_.phi_mode;
    cfg.lambda = plan_.lambda;
    cfg.seed = seed_;
    Rng lrng(derive_seed(seed_, Stream::local_pass, round, id));
    std::vector<double> w_k = local_svrg_pass(weights_, grad, train_, indices, stats_, id, cfg, lrng);

    std::vector<double> delta(w_k.size());
    for (std::size_t j = 0; j < w_k.size(); ++j) delta[j] = w_k[j] - weights_[j];

    if (dev.adversarial) {
        // poisoning attempt: release 10x over whatever bound verification
        // enforces, skipping the privacy gate entirely
        double bound = plan_.dp_enabled
                           ? plan_.clip_c + noise_allowance(plan_, delta.size())
                           : 1.0;
        double want = 10.0 * std::max(bound, 1.0);
        double cur = l1_norm(delta);
        if (cur > 0.0) {
            double s = want / cur;
            for (double& v : delta) v *= s;
        } else {
            delta.assign(delta.size(), want / static_cast<double>(delta.size()));
        }
    } else if (plan_.dp_enabled) {
        Rng nrng(derive_seed(seed_, Stream::noise, round, id));
        auto res = privatize_local_update(delta, plan_.clip_c, plan_.epsilon_round, dev.budget,
                                          round, id, nrng);
        if (!res) {
            excluded.push_back(id);
            return std::nullopt;
        }
        delta = std::move(res->delta);
    }

    LocalUpdate u;
    u.device_id = id;
    u.round = round;
    u.n_k = indices.size();
    Rng trng(derive_seed(seed_, Stream::compute_time, round, id));
    double per_sample =
        std::clamp(trng.uniform(plan_.t_min_ms, plan_.t_max_ms) / dev.speed, plan_.t_min_ms,
                   plan_.t_max_ms);
    u.computation_time_ms = static_cast<double>(u.n_k) * per_sample;
    u.claimed_l1 = l1_norm(delta);

    PendingUpdate out;
    out.plain = delta;
    if (plan_.encrypt_updates) {
        u.encrypted = true;
        Rng erng(derive_seed(seed_, Stream::encrypt, round, id));
        u.cipher.reserve(delta.size());
        for (double v : delta) u.cipher.push_back(he_encrypt(keys_->pub, v, fp_, erng));
    } else {
        u.delta = delta;
    }
    u.commitment = update_payload_digest(u);
    // broken attestation: the signed commitment disagrees with the payload
    if (!dev.genuine) u.commitment[31] ^= 0x01;
    out.update = std::move(u);
    return out;
}

RoundOutcome Simulation::run_round(std::uint32_t round) {
    RoundOutcome out;
    out.round = round;
    const RoleBindings roles = actor_roles(plan_);
    log(round, roles.coordinator, roles.selectors[0], "round_start");

    SelectionResult sel =
        announce_and_select(devices_, plan_, plan_.announce_window_ms, round, seed_);
    for (std::uint32_t id : sel.pool) log(round, device_name(id), roles.selectors[0], "announce", id);
    out.selected = sel.selected;
    clock_ms_ += plan_.announce_window_ms;

    MetricsRow m;
    m.round = round;
    auto finish = [&](bool produced, std::uint64_t attempts, double delay,
                      std::uint32_t rejected) -> RoundOutcome& {
        m.loss = logistic_loss(weights_, train_, plan_.lambda);
        m.accuracy_fed = accuracy(weights_, test_);
        m.accuracy_central = accuracy_central_;
        m.delta_loss = std::fabs(m.accuracy_fed - accuracy_central_);
        m.epsilon_cumulative = epsilon_cumulative();
        m.block_height = chain_.height();
        m.mine_attempts = attempts;
        m.delay_ms = delay;
        m.rejected_updates = rejected;
        out.metrics = m;
        out.block_produced = produced;
        out.block_height = chain_.height();
        out.weights = weights_;
        outcomes_.push_back(out);
        return outcomes_.back();
    };

    if (sel.selected.empty()) {
        log(round, roles.selectors[0], roles.coordinator, "round_skipped");
        return finish(false, 0, 0.0, 0);
    }

    // task routing: selector -> aggregator exactly once per selected device,
    // then the aggregator hands the task to the (eligible) device
    std::uint32_t n_agg = static_cast<std::uint32_t>(
        (sel.selected.size() + plan_.aggregator_batch - 1) / plan_.aggregator_batch);
    for (std::uint32_t b = 0; b < n_agg; ++b)
        log(round, roles.master_aggregator, "aggregator" + std::to_string(b), "spawn");
    for (std::size_t i = 0; i < sel.selected.size(); ++i) {
        std::uint32_t id = sel.selected[i];
        std::string agg = "aggregator" + std::to_string(i / plan_.aggregator_batch);
        log(round, roles.selectors[0], agg, "route", id);
        log(round, agg, device_name(id), "assign_task", id);
    }

    if (plan_.task == "evaluation") {
        for (std::uint32_t id : sel.selected)
            log(round, device_name(id), roles.master_aggregator, "evaluate", id);
        return finish(false, 0, 0.0, 0);
    }

    // cooperative full gradient: every shard owner contributes its exact
    // local sum, combined in device order
    std::vector<double> grad = full_gradient_coop(weights_, train_, partition_, plan_.lambda);
    for (const auto& d : devices_)
        log(round, device_name(d.id), roles.master_aggregator, "gradient_share", d.id);

    std::vector<PendingUpdate> fresh;
    double max_compute = 0.0;
    for (std::uint32_t id : sel.selected) {
        auto pu = device_round(round, id, grad, out.excluded);
        if (!pu) {
            log(round, device_name(id), roles.master_aggregator, "budget_exhausted", id);
            continue;
        }
        max_compute = std::max(max_compute, pu->update.computation_time_ms);
        fresh.push_back(std::move(*pu));
    }
    clock_ms_ += max_compute;  // devices work in parallel

    RoundContext ctx{round, sel.selected};
    std::vector<PendingUpdate> passed;
    std::vector<VerifyRecord> failures;
    std::uint32_t rejected = 0;
    for (auto& pu : fresh) {
        std::uint32_t mid = associate_miner(pu.update.device_id, miners_, round, seed_);
        log(round, device_name(pu.update.device_id), miner_name(mid), "update_submit",
            pu.update.device_id);
        VerifyResult vr = verify_update(pu.update, plan_, ctx);
        pu.record = VerifyRecord{pu.update.device_id, round, vr.pass, vr.reason};
        if (vr.pass) {
            log(round, miner_name(mid), "miners", "update_verified", pu.update.device_id);
            passed.push_back(std::move(pu));
        } else {
            log(round, miner_name(mid), "miners", "update_rejected", pu.update.device_id);
            failures.push_back(pu.record);
            ++rejected;
        }
    }

    std::vector<PendingUpdate> avail = std::move(pending_);
    pending_.clear();
    for (auto& p : passed) avail.push_back(std::move(p));

    if (avail.empty()) {
        log(round, miner_name(miners_.front()), roles.coordinator, "no_block");
        return finish(false, 0, 0.0, rejected);
    }

    CandidateInput cin;
    for (const auto& p : avail) {
        cin.updates.push_back(p.update);
        cin.verifications.push_back(p.record);
    }
    for (const auto& f : failures) cin.verifications.push_back(f);
    cin.round = static_cast<std::int64_t>(round);
    cin.timestamp_ms = static_cast<std::uint64_t>(std::llround(clock_ms_));

    // every miner races on the same broadcast candidate; fewest attempts wins
    // (equal per-attempt cost), ties to the lower miner id
    const Target target = chain_.current_target;
    MineResult best{};
    Block winner;
    std::vector<LocalUpdate> overflow;
    for (std::uint32_t mid : miners_) {
        CandidateInput ci = cin;
        ci.miner_id = mid;
        std::vector<LocalUpdate> of;
        Block cand = build_candidate(ci, chain_.head(), plan_, target, &of);
        MineResult res = mine(cand.header, target, 0, 1ull << 26);
        if (!res.found) continue;
        if (!best.found || res.attempts < best.attempts) {
            best = res;
            winner = std::move(cand);
            overflow = std::move(of);
        }
    }
    if (!best.found) {
        log(round, miner_name(miners_.front()), roles.coordinator, "mining_failed");
        return finish(false, 0, 0.0, rejected);
    }

    winner.header.nonce = best.nonce;
    winner.digest = best.digest;
    winner.rewards = distribute_rewards(winner, plan_);
    chain_.blocks.push_back(winner);
    clock_ms_ += static_cast<double>(best.attempts) * plan_.hash_time_ms;

    Rng drng(derive_seed(seed_, Stream::delay, round));
    double delay = drng.uniform(plan_.delay_min_ms, plan_.delay_max_ms);
    clock_ms_ += delay;
    retarget(chain_, delay, plan_);
    log(round, miner_name(winner.header.miner_id), "miners", "block_sealed");
    log(round, roles.coordinator, "devices", "block_broadcast");

    if (!overflow.empty()) {
        std::set<std::pair<std::uint32_t, std::uint32_t>> cut;
        for (const auto& u : overflow) cut.insert({u.device_id, u.round});
        for (auto& p : avail)
            if (cut.count({p.update.device_id, p.update.round})) pending_.push_back(std::move(p));
    }

    // line 11 runs identically at every node, from block contents alone
    const Block& blk = chain_.head();
    if (plan_.encrypt_updates) {
        double total = 0.0;
        for (const auto& u : blk.body.updates) total += static_cast<double>(u.n_k);
        std::vector<double> wk;
        std::vector<std::vector<Ciphertext>> cts;
        for (const auto& u : blk.body.updates) {
            wk.push_back(static_cast<double>(u.n_k) / total);
            cts.push_back(u.cipher);
        }
        auto enc_sum = encrypted_weighted_sum(keys_->pub, wk, cts, fp_);
        log(round, roles.master_aggregator, "key_authority", "aggregate_decrypt");
        std::vector<double> dec(enc_sum.size());
        for (std::size_t j = 0; j < enc_sum.size(); ++j) dec[j] = he_decrypt(*keys_, enc_sum[j], fp_);

        // plaintext shadow of the same weighted sum, for the fidelity metric
        std::vector<double> plain(train_.dim, 0.0);
        for (std::size_t k = 0; k < blk.body.updates.size(); ++k) {
            const auto& u = blk.body.updates[k];
            // block updates are exactly the non-overflowed avail entries, so
            // the lookup never sees a moved-from element
            const std::vector<double>* src = nullptr;
            for (const auto& p : avail)
                if (p.update.device_id == u.device_id && p.update.round == u.round) src = &p.plain;
            if (src)
                for (std::size_t j = 0; j < plain.size(); ++j) plain[j] += wk[k] * (*src)[j];
        }
        double residual = 0.0;
        for (std::size_t j = 0; j < dec.size(); ++j)
            residual = std::max(residual, std::fabs(dec[j] - plain[j]));
        out.he_residual_inf = residual;

        for (std::size_t j = 0; j < weights_.size(); ++j) weights_[j] += stats_.a[j] * dec[j];
    } else {
        std::vector<std::vector<double>> deltas;
        std::vector<std::uint64_t> n_ks;
        for (const auto& u : blk.body.updates) {
            deltas.push_back(u.delta);
            n_ks.push_back(u.n_k);
        }
        weights_ = aggregate_deltas(weights_, deltas, n_ks, stats_);
    }

    return finish(true, best.attempts, delay, rejected);
}

void Simulation::run(std::uint32_t rounds) {
    for (std::uint32_t r = 0; r < rounds; ++r) run_round(r);
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string s =
        "round,loss,accuracy_fed,accuracy_central,delta_loss,epsilon_cumulative,block_height,"
        "mine_attempts,delay_ms,rejected_updates\n";
    for (const auto& r : rows) {
        s += std::to_string(r.round) + ',' + format_double(r.loss) + ',' +
             format_double(r.accuracy_fed) + ',' + format_double(r.accuracy_central) + ',' +
             format_double(r.delta_loss) + ',' + format_double(r.epsilon_cumulative) + ',' +
             std::to_string(r.block_height) + ',' + std::to_string(r.mine_attempts) + ',' +
             format_double(r.delay_ms) + ',' + std::to_string(r.rejected_updates) + '\n';
    }
    return s;
}

std::string Simulation::metrics_csv() const {
    std::vector<MetricsRow> rows;
    rows.reserve(outcomes_.size());
    for (const auto& o : outcomes_) rows.push_back(o.metrics);
    return metrics_to_csv(rows);
}

std::string Simulation::rewards_csv() const {
    std::string s = "height,recipient,amount,kind\n";
    for (const auto& b : chain_.blocks) {
        for (const auto& r : b.rewards) {
            s += std::to_string(r.height) + ',' + std::to_string(r.recipient) + ',' +
                 std::to_string(r.amount) + ',' +
                 (r.kind == RewardKind::mining ? "mining" : "data_contribution") + '\n';
        }
    }
    return s;
}

std::string Simulation::privacy_csv() const {
    struct Row {
        std::uint32_t round, device;
        double epsilon, cumulative;
    };
    std::vector<Row> rows;
    for (const auto& d : devices_) {
        double running = 0.0;
        for (const auto& rec : d.budget.ledger()) {
            running += rec.epsilon;
            rows.push_back(Row{rec.round, rec.device, rec.epsilon, running});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.round, a.device) < std::tie(b.round, b.device);
    });
    std::string s = "round,device_id,epsilon_spent,cumulative\n";
    for (const auto& r : rows)
        s += std::to_string(r.round) + ',' + std::to_string(r.device) + ',' +
             format_double(r.epsilon) + ',' + format_double(r.cumulative) + '\n';
    return s;
}

std::string Simulation::message_log() const {
    std::string s;
    for (const auto& msg : messages_) {
        s += "round=" + std::to_string(msg.round) + " from=" + msg.from + " to=" + msg.to +
             " kind=" + msg.kind + " device=" + std::to_string(msg.device) + '\n';
    }
    return s;
}

nlohmann::json Simulation::keypair_json() const {
    nlohmann::json j;
    j["encrypted"] = plan_.encrypt_updates;
    if (keys_) {
        j["bits"] = keys_->pub.bits;
        j["n"] = mpz_to_hex(keys_->pub.n);
        j["lambda"] = mpz_to_hex(keys_->lambda);
        j["mu"] = mpz_to_hex(keys_->mu);
        j["frac_bits"] = fp_.frac_bits;
        j["budget_bits"] = fp_.budget_bits;
    }
    return j;
}

}  // namespace fedchain
