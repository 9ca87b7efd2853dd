#include "fedchain/stats.hpp"

#include <stdexcept>

namespace fedchain {

SparsityStats sparsity_stats(const SparseDataset& ds, const Partition& p, PhiMode mode) {
    std::size_t n = ds.size();
    std::size_t k_devices = p.devices();
    std::uint32_t d = ds.dim;
    if (n == 0) throw std::invalid_argument("sparsity_stats: empty dataset");
    p.validate(n);

    SparsityStats st;
    st.n = n;
    st.n_k.resize(k_devices);
    st.feature_count.assign(d, 0);
    st.device_feature_count.assign(k_devices, std::vector<std::size_t>(d, 0));

    for (std::size_t k = 0; k < k_devices; ++k) {
        st.n_k[k] = p.assignments[k].size();
        for (auto row_idx : p.assignments[k]) {
            for (const auto& e : ds.rows[row_idx]) {
                if (e.value == 0.0) continue;
                st.feature_count[e.index] += 1;
                st.device_feature_count[k][e.index] += 1;
            }
        }
    }

    st.phi.resize(d);
    for (std::uint32_t j = 0; j < d; ++j)
        st.phi[j] = static_cast<double>(st.feature_count[j]) / static_cast<double>(n);

    st.phi_k.assign(k_devices, std::vector<double>(d, 0.0));
    st.s_k.assign(k_devices, std::vector<double>(d, 0.0));
    for (std::size_t k = 0; k < k_devices; ++k) {
        double denom = mode == PhiMode::global_n ? static_cast<double>(n)
                                                 : static_cast<double>(st.n_k[k]);
        for (std::uint32_t j = 0; j < d; ++j) {
            st.phi_k[k][j] = static_cast<double>(st.device_feature_count[k][j]) / denom;
            st.s_k[k][j] = st.phi[j] > 0.0 ? st.phi_k[k][j] / st.phi[j] : 0.0;
        }
    }

    st.omega.assign(d, 0);
    st.a.assign(d, 0.0);
    for (std::uint32_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < k_devices; ++k)
            if (st.device_feature_count[k][j] > 0) st.omega[j] += 1;
        if (st.omega[j] > 0)
            st.a[j] = static_cast<double>(k_devices) / static_cast<double>(st.omega[j]);
    }
    return st;
}

}  // namespace fedchain
