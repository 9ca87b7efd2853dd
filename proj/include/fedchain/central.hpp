#pragma once

#include <cstdint>
#include <vector>

#include "fedchain/dataset.hpp"

namespace fedchain {

enum class CentralMode { sgd, full_batch };

struct CentralConfig {
    CentralMode mode = CentralMode::sgd;
    double lr = 0.5;
    std::uint32_t epochs = 40;
    double lambda = 1e-4;
    std::uint64_t seed = 0;
};

// Pooled-data baseline. sgd sweeps a fresh seeded permutation each epoch;
// full_batch takes one plain gradient step per epoch (useful where a monotone
// loss trace is wanted). Throws NumericError if the loss leaves the reals.
std::vector<double> train_centralized(const SparseDataset& ds, const CentralConfig& cfg,
                                      std::vector<double>* loss_trace = nullptr);

// |acc(m_fed, test) - acc(m_sum, test)|
double delta_accuracy_loss(const std::vector<double>& m_fed, const std::vector<double>& m_sum,
                           const SparseDataset& test);

}  // namespace fedchain
