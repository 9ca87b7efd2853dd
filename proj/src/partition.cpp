#include "fedchain/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fedchain {

std::size_t Partition::total() const {
    std::size_t n = 0;
    for (const auto& a : assignments) n += a.size();
    return n;
}

void Partition::validate(std::size_t n) const {
    std::vector<std::uint8_t> seen(n, 0);
    for (std::size_t k = 0; k < assignments.size(); ++k) {
        if (assignments[k].empty())
            throw std::invalid_argument("partition: device " + std::to_string(k) + " is empty");
        for (auto idx : assignments[k]) {
            if (idx >= n) throw std::invalid_argument("partition: index out of range");
            if (seen[idx]) throw std::invalid_argument("partition: index assigned twice");
            seen[idx] = 1;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) throw std::invalid_argument("partition: index " + std::to_string(i) +
                                                  " unassigned");
}

// largest-remainder split of n items by weights, one item guaranteed each
static std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
    std::size_t k = weights.size();
    std::vector<std::size_t> sizes(k, 1);
    std::size_t rest = n - k;
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::pair<double, std::size_t>> rema(k);
    std::size_t given = 0;
    for (std::size_t i = 0; i < k; ++i) {
        double exact = rest * weights[i] / wsum;
        auto whole = static_cast<std::size_t>(std::floor(exact));
        sizes[i] += whole;
        given += whole;
        rema[i] = {exact - static_cast<double>(whole), i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // ties go to the lower device id
    });
    for (std::size_t r = 0; r < rest - given; ++r) sizes[rema[r].second] += 1;
    return sizes;
}

Partition make_partition(const SparseDataset& ds, const PartitionConfig& cfg) {
    std::size_t n = ds.size();
    if (cfg.devices < 1) throw std::invalid_argument("partition: devices must be positive");
    if (n < cfg.devices)
        throw std::invalid_argument("partition: fewer rows than devices");
    if (cfg.skew < 0.0 || cfg.skew > 1.0)
        throw std::invalid_argument("partition: skew must be in [0, 1]");
    if (!(cfg.balance > 0.0))
        throw std::invalid_argument("partition: balance must be positive");

    std::vector<double> weights(cfg.devices);
    for (std::uint32_t k = 0; k < cfg.devices; ++k) weights[k] = std::pow(cfg.balance, k);
    auto sizes = apportion(n, weights);

    // label-major order, stable on original index
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return ds.labels[a] < ds.labels[b];
    });

    Rng rng(derive_seed(cfg.seed, Stream::partition));
    auto mixed = static_cast<std::size_t>(std::llround((1.0 - cfg.skew) * static_cast<double>(n)));
    if (mixed > 1) {
        // pick 'mixed' positions, shuffle the values they hold
        std::vector<std::uint32_t> pos(n);
        std::iota(pos.begin(), pos.end(), 0);
        rng.shuffle(pos);
        pos.resize(mixed);
        std::sort(pos.begin(), pos.end());
        std::vector<std::uint32_t> vals(mixed);
        for (std::size_t i = 0; i < mixed; ++i) vals[i] = order[pos[i]];
        rng.shuffle(vals);
        for (std::size_t i = 0; i < mixed; ++i) order[pos[i]] = vals[i];
    }

    Partition p;
    p.assignments.resize(cfg.devices);
    std::size_t at = 0;
    for (std::uint32_t k = 0; k < cfg.devices; ++k) {
        p.assignments[k].assign(order.begin() + at, order.begin() + at + sizes[k]);
        std::sort(p.assignments[k].begin(), p.assignments[k].end());
        at += sizes[k];
    }
    p.validate(n);
    return p;
}

double label_emd(const Partition& p, const SparseDataset& ds) {
    std::map<int, std::size_t> support;  // label -> dense position
    for (auto y : ds.labels) support.emplace(y, 0);
    std::size_t m = 0;
    for (auto& kv : support) kv.second = m++;

    std::vector<double> global(m, 0.0);
    for (auto y : ds.labels) global[support[y]] += 1.0;
    for (auto& g : global) g /= static_cast<double>(ds.size());

    double acc = 0.0;
    for (const auto& shard : p.assignments) {
        std::vector<double> local(m, 0.0);
        for (auto idx : shard) local[support[ds.labels[idx]]] += 1.0;
        for (auto& v : local) v /= static_cast<double>(shard.size());
        // 1-D EMD: accumulated CDF gap with unit ground distance
        double carry = 0.0, dist = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            carry += local[j] - global[j];
            dist += std::abs(carry);
        }
        acc += dist;
    }
    return acc / static_cast<double>(p.devices());
}

}  // namespace fedchain
