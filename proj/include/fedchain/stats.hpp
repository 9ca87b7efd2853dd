#pragma once

#include <cstdint>
#include <vector>

#include "fedchain/dataset.hpp"
#include "fedchain/partition.hpp"

namespace fedchain {

// Which denominator defines the per-device feature frequency phi_k^j.
// `global_n` divides by the full sample count n (the printed formula);
// `local_nk` divides by the device's own n_k. Both are kept selectable
// because the two readings disagree and downstream scaling changes.
enum class PhiMode { global_n, local_nk };

// Per-coordinate presence statistics over a partitioned dataset. A feature
// "appears" in a sample when it carries an explicit non-zero value.
struct SparsityStats {
    std::size_t n = 0;
    std::vector<std::size_t> n_k;                   // samples per device
    std::vector<std::size_t> feature_count;         // n^j, size d
    std::vector<std::vector<std::size_t>> device_feature_count;  // n_k^j, [K][d]
    std::vector<double> phi;                        // phi^j = n^j / n
    std::vector<std::vector<double>> phi_k;         // [K][d], see PhiMode
    std::vector<std::vector<double>> s_k;           // s_k^j = phi_k^j / phi^j, 0 when phi^j == 0
    std::vector<std::uint32_t> omega;               // # devices with n_k^j > 0
    std::vector<double> a;                          // K / omega^j, 0 when omega^j == 0

    std::size_t devices() const { return n_k.size(); }
};

SparsityStats sparsity_stats(const SparseDataset& ds, const Partition& p,
                             PhiMode mode = PhiMode::global_n);

}  // namespace fedchain
