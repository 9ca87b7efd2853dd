#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedchain/rng.hpp"

namespace fedchain {

struct FeatureEntry {
    std::uint32_t index;
    double value;
};

// entries sorted by index, no duplicates
using SparseRow = std::vector<FeatureEntry>;

// Immutable-by-convention sample store. Labels are strictly -1 or +1;
// feature/sample ids are opaque strings kept for taxonomy comparisons.
struct SparseDataset {
    std::uint32_t dim = 0;
    std::vector<SparseRow> rows;
    std::vector<std::int8_t> labels;
    std::vector<std::string> sample_ids;
    std::vector<std::string> feature_ids;

    std::size_t size() const { return rows.size(); }

    // throws std::invalid_argument on any structural violation
    void validate() const;
};

struct SyntheticConfig {
    std::size_t n = 100;
    std::uint32_t d = 10;
    double sparsity = 0.2;     // fraction of coordinates present per row, (0, 1]
    double separation = 1.0;   // scale of the planted weight coordinates
    std::uint64_t seed = 0;
};

// Planted-model generator: w* = separation * N(0, I), rows get ceil(sparsity*d)
// standard-normal entries at distinct coordinates, labels are Bernoulli draws
// from the logistic likelihood of <w*, x>. Larger separation means a wider
// typical margin (~ separation * sqrt(nnz)) and a more learnable problem.
SparseDataset generate_synthetic(const SyntheticConfig& cfg);

// keeps rows [begin, end), reuses ids
SparseDataset slice_dataset(const SparseDataset& ds, std::size_t begin, std::size_t end);

// One JSON object per line: {"id":..., "label":..., "features":[[j, v], ...]}.
// First line is a header object carrying dim and feature ids.
void save_dataset_jsonl(const SparseDataset& ds, const std::string& path);
SparseDataset load_dataset_jsonl(const std::string& path);

double dot_row(const std::vector<double>& w, const SparseRow& row);

}  // namespace fedchain
