#pragma once

#include <cstdint>
#include <vector>

#include "fedchain/dataset.hpp"

namespace fedchain {

// Disjoint, exhaustive split of row indices across K devices.
struct Partition {
    std::vector<std::vector<std::uint32_t>> assignments;  // [K][n_k], each sorted

    std::size_t devices() const { return assignments.size(); }
    std::size_t count(std::size_t k) const { return assignments[k].size(); }
    std::size_t total() const;

    // disjointness, exhaustiveness against n, every device non-empty
    void validate(std::size_t n) const;
};

struct PartitionConfig {
    std::uint32_t devices = 2;
    double skew = 0.0;     // 0 = uniform shuffle, 1 = fully label-sorted shards
    double balance = 1.0;  // shard size weight ratio between consecutive devices
    std::uint64_t seed = 0;
};

// Sizes follow largest-remainder allocation of geometric weights balance^k
// (every device gets at least one row). Row order starts label-sorted; a
// (1-skew) fraction of positions is re-shuffled before the contiguous cut,
// so skew=1 gives single-label shards where sizes allow and skew=0 is an
// unbiased random split.
Partition make_partition(const SparseDataset& ds, const PartitionConfig& cfg);

// Mean over devices of the earth-mover distance between the device label
// histogram and the global one, with unit spacing between adjacent labels.
double label_emd(const Partition& p, const SparseDataset& ds);

}  // namespace fedchain
