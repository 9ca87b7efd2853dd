#include "fedchain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fedchain/util.hpp"

namespace fedchain {

void SparseDataset::validate() const {
    if (rows.size() != labels.size())
        throw std::invalid_argument("dataset: rows/labels size mismatch");
    if (!sample_ids.empty() && sample_ids.size() != rows.size())
        throw std::invalid_argument("dataset: rows/sample_ids size mismatch");
    if (!feature_ids.empty() && feature_ids.size() != dim)
        throw std::invalid_argument("dataset: dim/feature_ids size mismatch");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labels[i] != -1 && labels[i] != 1)
            throw std::invalid_argument("dataset: label must be -1 or +1 at row " +
                                        std::to_string(i));
        const SparseRow& r = rows[i];
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r[k].index >= dim)
                throw std::invalid_argument("dataset: feature index out of range at row " +
                                            std::to_string(i));
            if (k > 0 && r[k].index <= r[k - 1].index)
                throw std::invalid_argument("dataset: unsorted or duplicate feature at row " +
                                            std::to_string(i));
            if (!std::isfinite(r[k].value))
                throw std::invalid_argument("dataset: non-finite feature value at row " +
                                            std::to_string(i));
        }
    }
}

SparseDataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("synthetic: n must be positive");
    if (cfg.d < 1) throw std::invalid_argument("synthetic: d must be positive");
    if (!(cfg.sparsity > 0.0) || cfg.sparsity > 1.0)
        throw std::invalid_argument("synthetic: sparsity must be in (0, 1]");
    if (cfg.separation < 0.0)
        throw std::invalid_argument("synthetic: separation must be non-negative");

    Rng rng(derive_seed(cfg.seed, Stream::synthesis));

    auto nnz = static_cast<std::uint32_t>(std::ceil(cfg.sparsity * cfg.d));
    if (nnz == 0) nnz = 1;
    if (nnz > cfg.d) nnz = cfg.d;

    // separation scales every planted coordinate, so the typical per-row margin
    // grows like separation * sqrt(nnz); labels stay logistic-noisy, never pure.
    std::vector<double> planted(cfg.d);
    for (auto& w : planted) w = cfg.separation * rng.normal();

    SparseDataset ds;
    ds.dim = cfg.d;
    ds.rows.reserve(cfg.n);
    ds.labels.reserve(cfg.n);
    ds.sample_ids.reserve(cfg.n);
    for (std::uint32_t j = 0; j < cfg.d; ++j) ds.feature_ids.push_back("f" + std::to_string(j));

    std::vector<std::uint32_t> idx(cfg.d);
    for (std::uint32_t j = 0; j < cfg.d; ++j) idx[j] = j;

    for (std::size_t i = 0; i < cfg.n; ++i) {
        // partial Fisher-Yates: first nnz slots become the support
        for (std::uint32_t k = 0; k < nnz; ++k) {
            std::size_t j = k + static_cast<std::size_t>(rng.uniform_below(cfg.d - k));
            std::swap(idx[k], idx[j]);
        }
        SparseRow row;
        row.reserve(nnz);
        for (std::uint32_t k = 0; k < nnz; ++k) row.push_back({idx[k], rng.normal()});
        std::sort(row.begin(), row.end(),
                  [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });

        double margin = 0.0;
        for (const auto& e : row) margin += planted[e.index] * e.value;
        double p = 1.0 / (1.0 + std::exp(-margin));
        std::int8_t y = rng.uniform01() < p ? 1 : -1;

        ds.rows.push_back(std::move(row));
        ds.labels.push_back(y);
        ds.sample_ids.push_back("s" + std::to_string(i));
    }
    return ds;
}

SparseDataset slice_dataset(const SparseDataset& ds, std::size_t begin, std::size_t end) {
    if (begin > end || end > ds.size())
        throw std::invalid_argument("slice_dataset: range out of bounds");
    SparseDataset out;
    out.dim = ds.dim;
    out.feature_ids = ds.feature_ids;
    out.rows.assign(ds.rows.begin() + begin, ds.rows.begin() + end);
    out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + end);
    if (!ds.sample_ids.empty())
        out.sample_ids.assign(ds.sample_ids.begin() + begin, ds.sample_ids.begin() + end);
    return out;
}

void save_dataset_jsonl(const SparseDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    nlohmann::json header;
    header["dim"] = ds.dim;
    header["feature_ids"] = ds.feature_ids;
    out << header.dump() << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        nlohmann::json rec;
        rec["id"] = ds.sample_ids.empty() ? "s" + std::to_string(i) : ds.sample_ids[i];
        rec["label"] = static_cast<int>(ds.labels[i]);
        auto feats = nlohmann::json::array();
        for (const auto& e : ds.rows[i]) feats.push_back({e.index, e.value});
        rec["features"] = std::move(feats);
        out << rec.dump() << '\n';
    }
}

SparseDataset load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset: empty file " + path);
    SparseDataset ds;
    try {
        auto header = nlohmann::json::parse(line);
        ds.dim = header.at("dim").get<std::uint32_t>();
        if (header.contains("feature_ids"))
            ds.feature_ids = header["feature_ids"].get<std::vector<std::string>>();
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            auto rec = nlohmann::json::parse(line);
            ds.sample_ids.push_back(rec.at("id").get<std::string>());
            int y = rec.at("label").get<int>();
            ds.labels.push_back(static_cast<std::int8_t>(y));
            SparseRow row;
            for (const auto& pair : rec.at("features")) {
                if (!pair.is_array() || pair.size() != 2)
                    throw std::runtime_error("bad feature pair at line " + std::to_string(line_no));
                row.push_back({pair[0].get<std::uint32_t>(), pair[1].get<double>()});
            }
            ds.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_dataset: malformed record in " + path + ": " + e.what());
    }
    ds.validate();
    return ds;
}

double dot_row(const std::vector<double>& w, const SparseRow& row) {
    double acc = 0.0;
    for (const auto& e : row) acc += w[e.index] * e.value;
    return acc;
}

}  // namespace fedchain
