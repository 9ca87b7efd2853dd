#pragma once

#include <string>
#include <unordered_set>

namespace fedchain {

// Participant metadata for deciding which federated setting two parties are in.
struct TaxonomyInput {
    std::unordered_set<std::string> features_a, samples_a;
    std::unordered_set<std::string> features_b, samples_b;
};

enum class FlSetting { Horizontal, Vertical, FederatedTransfer };

// Horizontal: shared feature space, mostly distinct samples. Vertical: shared
// samples, distinct features. Everything else is transfer. Overlap is Jaccard
// similarity compared against the threshold; exact-equality set conditions are
// the threshold=1 special case.
FlSetting classify_fl_setting(const TaxonomyInput& t, double overlap_threshold = 0.5);

const char* fl_setting_name(FlSetting s);

}  // namespace fedchain
