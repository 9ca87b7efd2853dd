#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedchain/chain.hpp"
#include "fedchain/logistic.hpp"
#include "fedchain/runconfig.hpp"
#include "fedchain/util.hpp"

namespace fs = std::filesystem;
using namespace fedchain;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

void apply_seed_override(RunConfig& cfg, const std::optional<std::uint64_t>& seed) {
    if (!seed) return;
    cfg.seed = *seed;
    cfg.partition.seed = *seed;
    cfg.dataset.synth.seed = *seed;
    cfg.central.seed = *seed;
}

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::string& out_dir, bool insecure_export) {
    RunConfig cfg = RunConfig::load(config_path);
    apply_seed_override(cfg, seed);
    Simulation sim = cfg.make_simulation();
    sim.run(cfg.rounds);

    fs::create_directories(out_dir);
    fs::path out(out_dir);
    write_file(out / "metrics.csv", sim.metrics_csv());
    write_file(out / "chain.jsonl", sim.chain_jsonl());
    write_file(out / "rewards.csv", sim.rewards_csv());
    write_file(out / "privacy.csv", sim.privacy_csv());
    write_file(out / "messages.log", sim.message_log());
    if (insecure_export) {
        // debugging aid only: the secret key leaves the key authority
        write_file(out / "keypair.json", sim.keypair_json().dump(2) + "\n");
    }

    const auto& rows = sim.outcomes();
    double loss = rows.empty() ? 0.0 : rows.back().metrics.loss;
    double delta = rows.empty() ? 0.0 : rows.back().metrics.delta_loss;
    std::cout << "rounds=" << cfg.rounds << " height=" << sim.chain().height()
              << " loss=" << format_double(loss) << " delta_accuracy=" << format_double(delta)
              << " epsilon=" << format_double(sim.epsilon_cumulative()) << "\n";
    return 0;
}

int cmd_bench(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::string& out_file) {
    RunConfig cfg = RunConfig::load(config_path);
    apply_seed_override(cfg, seed);

    Simulation sim = cfg.make_simulation();
    sim.run(cfg.rounds);
    double delta_fedsvrg =
        sim.outcomes().empty() ? 0.0 : sim.outcomes().back().metrics.delta_loss;
    double eps = sim.epsilon_cumulative();

    // the baselines reuse the exact same split and shards
    RunConfig::Materialized m = cfg.materialize();
    std::vector<double> central_w = train_centralized(m.train, cfg.central);
    double acc_central = accuracy(central_w, m.test);

    // closest FedAvg analog of the h_k = h / n_k scaling: one shared rate at
    // the mean shard size
    double mean_nk = static_cast<double>(m.train.rows.size()) /
                     static_cast<double>(m.part.assignments.size());
    double lr = cfg.plan.h / mean_nk;
    TrainResult avg = run_fedavg(m.train, m.part, cfg.rounds, cfg.plan.local_passes, lr,
                                 cfg.plan.lambda, cfg.seed, &central_w, &m.test);
    double delta_fedavg = std::fabs(accuracy(avg.weights, m.test) - acc_central);

    std::string csv = "method,rounds,delta_loss,epsilon_spent\n";
    csv += "fedsvrg," + std::to_string(cfg.rounds) + ',' + format_double(delta_fedsvrg) + ',' +
           format_double(eps) + '\n';
    csv += "fedavg," + std::to_string(cfg.rounds) + ',' + format_double(delta_fedavg) + ",0\n";
    csv += "centralized," + std::to_string(cfg.rounds) + ",0,0\n";
    write_file(out_file, csv);
    std::cout << csv;
    return 0;
}

int cmd_verify(const std::string& chain_path) {
    ChainFileResult res = load_and_validate_chain(chain_path);
    if (res.exit_code == 0) {
        std::cout << "ok height=" << res.chain.height() << " blocks=" << res.chain.blocks.size()
                  << "\n";
    } else {
        std::cerr << "chain error: " << res.message << "\n";
    }
    return res.exit_code;
}

int cmd_inspect(const std::string& chain_path) {
    ChainFileResult res = load_and_validate_chain(chain_path);
    if (res.exit_code != 0) {
        std::cerr << "chain error: " << res.message << "\n";
        return res.exit_code;
    }
    std::cout << "plan_hash=" << digest_hex(res.plan.hash()) << " blocks="
              << res.chain.blocks.size() << "\n";
    for (const Block& b : res.chain.blocks) {
        std::int64_t pool = 0;
        for (const auto& r : b.rewards) pool += r.amount;
        std::cout << "height=" << b.header.height << " round=" << b.header.round
                  << " miner=" << b.header.miner_id << " updates=" << b.body.updates.size()
                  << " verifications=" << b.body.verifications.size() << " rewards=" << pool
                  << " digest=" << digest_hex(b.digest).substr(0, 16) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic federated learning over a proof-of-work ledger"};
    app.require_subcommand(1);

    std::string config_path, out_path, chain_path;
    std::optional<std::uint64_t> seed;
    bool insecure_export = false;

    auto* run = app.add_subcommand("run", "simulate a training session and write its artifacts");
    run->add_option("--config", config_path, "run configuration JSON")->required();
    run->add_option("--seed", seed, "override the master seed");
    run->add_option("--out", out_path, "output directory")->required();
    run->add_flag("--insecure-export", insecure_export,
                  "also write the homomorphic keypair (testing only)");

    auto* bench = app.add_subcommand("bench", "compare fedsvrg, fedavg and the pooled baseline");
    bench->add_option("--config", config_path, "run configuration JSON")->required();
    bench->add_option("--seed", seed, "override the master seed");
    bench->add_option("--out", out_path, "comparison CSV path")->required();

    auto* verify = app.add_subcommand("verify", "replay and validate an exported chain");
    verify->add_option("--chain", chain_path, "chain JSONL path")->required();

    auto* inspect = app.add_subcommand("inspect", "print a validated chain block by block");
    inspect->add_option("--chain", chain_path, "chain JSONL path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out_path, insecure_export);
        if (bench->parsed()) return cmd_bench(config_path, seed, out_path);
        if (verify->parsed()) return cmd_verify(chain_path);
        if (inspect->parsed()) return cmd_inspect(chain_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
