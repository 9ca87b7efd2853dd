#include "fedchain/logistic.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedchain/util.hpp"

namespace fedchain {

// log(1 + e^x) without overflow
static double softplus(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

static double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double logistic_loss(const std::vector<double>& w, const SparseDataset& ds,
                     const std::vector<std::uint32_t>& indices, double lambda) {
    if (indices.empty()) throw std::invalid_argument("logistic_loss: empty index set");
    double acc = 0.0;
    for (auto i : indices) {
        double margin = static_cast<double>(ds.labels[i]) * dot_row(w, ds.rows[i]);
        acc += softplus(-margin);
    }
    acc /= static_cast<double>(indices.size());
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double loss = acc + 0.5 * lambda * reg;
    if (!std::isfinite(loss)) throw NumericError("logistic_loss: non-finite loss");
    return loss;
}

double logistic_loss(const std::vector<double>& w, const SparseDataset& ds, double lambda) {
    std::vector<std::uint32_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    return logistic_loss(w, ds, all, lambda);
}

double loss_coefficient(const std::vector<double>& w, const SparseDataset& ds,
                        std::uint32_t row) {
    double y = static_cast<double>(ds.labels[row]);
    return -y * sigmoid(-y * dot_row(w, ds.rows[row]));
}

std::vector<double> sample_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                    std::uint32_t row, double lambda) {
    std::vector<double> g(w.size(), 0.0);
    double coeff = loss_coefficient(w, ds, row);
    for (const auto& e : ds.rows[row]) g[e.index] += coeff * e.value;
    if (lambda != 0.0)
        for (std::size_t j = 0; j < w.size(); ++j) g[j] += lambda * w[j];
    return g;
}

std::vector<double> logistic_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                      const std::vector<std::uint32_t>& indices, double lambda) {
    if (indices.empty()) throw std::invalid_argument("logistic_gradient: empty index set");
    std::vector<double> g(w.size(), 0.0);
    for (auto i : indices) {
        double coeff = loss_coefficient(w, ds, i);
        for (const auto& e : ds.rows[i]) g[e.index] += coeff * e.value;
    }
    double inv = 1.0 / static_cast<double>(indices.size());
    for (auto& v : g) v *= inv;
    if (lambda != 0.0)
        for (std::size_t j = 0; j < w.size(); ++j) g[j] += lambda * w[j];
    return g;
}

std::vector<double> logistic_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                      double lambda) {
    std::vector<std::uint32_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    return logistic_gradient(w, ds, all, lambda);
}

int predict(const std::vector<double>& w, const SparseRow& row) {
    return dot_row(w, row) >= 0.0 ? 1 : -1;
}

double accuracy(const std::vector<double>& w, const SparseDataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predict(w, ds.rows[i]) == ds.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double l1_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += std::abs(x);
    return acc;
}

}  // namespace fedchain
