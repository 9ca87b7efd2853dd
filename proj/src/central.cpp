#include "fedchain/central.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fedchain/logistic.hpp"
#include "fedchain/rng.hpp"
#include "fedchain/util.hpp"

namespace fedchain {

std::vector<double> train_centralized(const SparseDataset& ds, const CentralConfig& cfg,
                                      std::vector<double>* loss_trace) {
    if (ds.size() == 0) throw std::invalid_argument("train_centralized: empty dataset");
    if (!(cfg.lr > 0)) throw std::invalid_argument("train_centralized: lr must be positive");

    std::vector<double> w(ds.dim, 0.0);
    Rng rng(derive_seed(cfg.seed, Stream::central));
    auto n = static_cast<std::uint32_t>(ds.size());

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.mode == CentralMode::sgd) {
            auto perm = rng.permutation(n);
            for (auto i : perm) {
                auto g = sample_gradient(w, ds, i, cfg.lambda);
                for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.lr * g[j];
            }
        } else {
            auto g = logistic_gradient(w, ds, cfg.lambda);
            for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.lr * g[j];
        }
        double loss = logistic_loss(w, ds, cfg.lambda);
        if (!std::isfinite(loss))
            throw NumericError("train_centralized: diverged at epoch " + std::to_string(epoch) +
                               " (lr too large?)");
        if (loss_trace) loss_trace->push_back(loss);
    }
    return w;
}

double delta_accuracy_loss(const std::vector<double>& m_fed, const std::vector<double>& m_sum,
                           const SparseDataset& test) {
    if (m_fed.size() != m_sum.size())
        throw std::invalid_argument("delta_accuracy_loss: dimension mismatch");
    return std::abs(accuracy(m_fed, test) - accuracy(m_sum, test));
}

}  // namespace fedchain
