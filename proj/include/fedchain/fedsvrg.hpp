#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedchain/dataset.hpp"
#include "fedchain/partition.hpp"
#include "fedchain/rng.hpp"
#include "fedchain/stats.hpp"

namespace fedchain {

struct FedSvrgConfig {
    double h = 0.5;                  // global step size; per device h_k = h / n_k
    std::uint32_t outer_rounds = 30;
    std::uint32_t local_passes = 1;  // permutation sweeps of P_k per round
    PhiMode phi_mode = PhiMode::global_n;
    double lambda = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RoundTrace {
    std::uint32_t round = 0;
    double loss = 0.0;
    double delta_accuracy = 0.0;   // vs the centralized oracle; NaN when no oracle given
    double max_local_drift = 0.0;  // max_k |w_k - w|_2
    double seconds_local = 0.0;
    double seconds_aggregate = 0.0;
};

// mean of per-sample gradients over the whole dataset
std::vector<double> full_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                  double lambda);

// Same quantity computed the way the decentralized protocol does: every device
// sums its exact local per-sample data terms, partial sums combine in device-id
// order, one division by n at the end. Equal to full_gradient up to float
// summation order; the simulator and run_fedsvrg share this path bit-for-bit.
std::vector<double> full_gradient_coop(const std::vector<double>& w, const SparseDataset& ds,
                                       const Partition& p, double lambda);

// One local epoch set: w_k starts at w_global, then for each sweep and each
// index i of a seeded permutation of the device's rows,
//   w_k -= h_k * (s_k ∘ (grad_i(w_k) - grad_i(w_global)) + grad_global)
std::vector<double> local_svrg_pass(const std::vector<double>& w_global,
                                    const std::vector<double>& grad_global,
                                    const SparseDataset& ds,
                                    const std::vector<std::uint32_t>& indices,
                                    const SparsityStats& stats, std::size_t device,
                                    const FedSvrgConfig& cfg, Rng& rng);

// w_new = w + a ∘ sum_k (n_k / sum n) * delta_k; the shared delta-form core
std::vector<double> aggregate_deltas(const std::vector<double>& w,
                                     const std::vector<std::vector<double>>& deltas,
                                     const std::vector<std::uint64_t>& n_ks,
                                     const SparsityStats& stats);

// wrapper taking local weights; deltas are formed here exactly once
std::vector<double> aggregate(const std::vector<double>& w,
                              const std::vector<std::pair<std::vector<double>, std::uint64_t>>& locals,
                              const SparsityStats& stats);

struct TrainResult {
    std::vector<double> weights;
    std::vector<RoundTrace> traces;
};

// oracle/test are optional: when given, traces carry delta_accuracy vs oracle
TrainResult run_fedsvrg(const SparseDataset& ds, const Partition& p, const FedSvrgConfig& cfg,
                        const std::vector<double>* oracle = nullptr,
                        const SparseDataset* test = nullptr);

// plain local SGD, the FedAvg building block
std::vector<double> local_sgd(const SparseDataset& ds, const std::vector<std::uint32_t>& indices,
                              const std::vector<double>& w0, std::uint32_t epochs, double lr,
                              double lambda, Rng& rng);

TrainResult run_fedavg(const SparseDataset& ds, const Partition& p, std::uint32_t rounds,
                       std::uint32_t local_epochs, double local_lr, double lambda,
                       std::uint64_t seed, const std::vector<double>* oracle = nullptr,
                       const SparseDataset* test = nullptr);

std::string traces_to_csv(const std::vector<RoundTrace>& traces);

}  // namespace fedchain
