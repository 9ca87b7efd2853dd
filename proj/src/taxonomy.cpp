#include "fedchain/taxonomy.hpp"

#include <stdexcept>

namespace fedchain {

static double jaccard(const std::unordered_set<std::string>& a,
                      const std::unordered_set<std::string>& b) {
    std::size_t inter = 0;
    for (const auto& x : a)
        if (b.count(x)) ++inter;
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

FlSetting classify_fl_setting(const TaxonomyInput& t, double overlap_threshold) {
    if (t.features_a.empty() || t.features_b.empty() || t.samples_a.empty() ||
        t.samples_b.empty())
        throw std::invalid_argument("classify_fl_setting: empty id set");
    double feat = jaccard(t.features_a, t.features_b);
    double samp = jaccard(t.samples_a, t.samples_b);
    if (feat >= overlap_threshold && samp < overlap_threshold) return FlSetting::Horizontal;
    if (samp >= overlap_threshold && feat < overlap_threshold) return FlSetting::Vertical;
    return FlSetting::FederatedTransfer;
}

const char* fl_setting_name(FlSetting s) {
    switch (s) {
        case FlSetting::Horizontal: return "horizontal";
        case FlSetting::Vertical: return "vertical";
        default: return "federated_transfer";
    }
}

}  // namespace fedchain
