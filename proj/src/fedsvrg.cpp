#include "fedchain/fedsvrg.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fedchain/central.hpp"
#include "fedchain/logistic.hpp"
#include "fedchain/util.hpp"

namespace fedchain {

void FedSvrgConfig::validate() const {
    if (!(h >= 0)) throw std::invalid_argument("fedsvrg: h must be non-negative");
    if (local_passes < 1) throw std::invalid_argument("fedsvrg: local_passes must be >= 1");
    if (lambda < 0) throw std::invalid_argument("fedsvrg: lambda must be non-negative");
}

static double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> full_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                  double lambda) {
    return logistic_gradient(w, ds, lambda);
}

std::vector<double> full_gradient_coop(const std::vector<double>& w, const SparseDataset& ds,
                                       const Partition& p, double lambda) {
    std::vector<double> acc(w.size(), 0.0);
    for (const auto& shard : p.assignments) {
        std::vector<double> part(w.size(), 0.0);
        for (auto i : shard) {
            double coeff = loss_coefficient(w, ds, i);
            for (const auto& e : ds.rows[i]) part[e.index] += coeff * e.value;
        }
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += part[j];
    }
    double inv = 1.0 / static_cast<double>(ds.size());
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = acc[j] * inv + lambda * w[j];
    return acc;
}

std::vector<double> local_svrg_pass(const std::vector<double>& w_global,
                                    const std::vector<double>& grad_global,
                                    const SparseDataset& ds,
                                    const std::vector<std::uint32_t>& indices,
                                    const SparsityStats& stats, std::size_t device,
                                    const FedSvrgConfig& cfg, Rng& rng) {
    cfg.validate();
    if (w_global.size() != ds.dim || grad_global.size() != ds.dim)
        throw std::invalid_argument("local_svrg_pass: dimension mismatch");
    if (indices.empty()) throw std::invalid_argument("local_svrg_pass: device holds no rows");
    if (device >= stats.devices())
        throw std::invalid_argument("local_svrg_pass: device index out of range");

    const auto& s_k = stats.s_k[device];
    double h_k = cfg.h / static_cast<double>(indices.size());
    std::vector<double> w_k = w_global;

    for (std::uint32_t pass = 0; pass < cfg.local_passes; ++pass) {
        auto perm = rng.permutation(static_cast<std::uint32_t>(indices.size()));
        for (std::size_t t = 0; t < perm.size(); ++t) {
            std::uint32_t i = indices[perm[t]];
            auto g_cur = sample_gradient(w_k, ds, i, cfg.lambda);
            auto g_ref = sample_gradient(w_global, ds, i, cfg.lambda);
            for (std::size_t j = 0; j < w_k.size(); ++j) {
                w_k[j] -= h_k * (s_k[j] * (g_cur[j] - g_ref[j]) + grad_global[j]);
                if (!std::isfinite(w_k[j]))
                    throw NumericError("local_svrg_pass: non-finite weight on device " +
                                       std::to_string(device) + " at step " + std::to_string(t));
            }
        }
    }
    return w_k;
}

std::vector<double> aggregate_deltas(const std::vector<double>& w,
                                     const std::vector<std::vector<double>>& deltas,
                                     const std::vector<std::uint64_t>& n_ks,
                                     const SparsityStats& stats) {
    if (deltas.size() != n_ks.size())
        throw std::invalid_argument("aggregate: deltas/sizes length mismatch");
    std::uint64_t n_total = 0;
    for (auto nk : n_ks) n_total += nk;
    if (n_total == 0) throw std::invalid_argument("aggregate: zero total samples");

    std::vector<double> sum(w.size(), 0.0);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (deltas[k].size() != w.size())
            throw std::invalid_argument("aggregate: delta dimension mismatch at entry " +
                                        std::to_string(k));
        double wk = static_cast<double>(n_ks[k]) / static_cast<double>(n_total);
        for (std::size_t j = 0; j < w.size(); ++j) sum[j] += wk * deltas[k][j];
    }
    std::vector<double> out = w;
    for (std::size_t j = 0; j < w.size(); ++j) out[j] += stats.a[j] * sum[j];
    return out;
}

std::vector<double> aggregate(const std::vector<double>& w,
                              const std::vector<std::pair<std::vector<double>, std::uint64_t>>& locals,
                              const SparsityStats& stats) {
    std::vector<std::vector<double>> deltas;
    std::vector<std::uint64_t> n_ks;
    deltas.reserve(locals.size());
    for (const auto& [w_k, n_k] : locals) {
        if (w_k.size() != w.size())
            throw std::invalid_argument("aggregate: local weight dimension mismatch");
        std::vector<double> d(w.size());
        for (std::size_t j = 0; j < w.size(); ++j) d[j] = w_k[j] - w[j];
        deltas.push_back(std::move(d));
        n_ks.push_back(n_k);
    }
    return aggregate_deltas(w, deltas, n_ks, stats);
}

TrainResult run_fedsvrg(const SparseDataset& ds, const Partition& p, const FedSvrgConfig& cfg,
                        const std::vector<double>* oracle, const SparseDataset* test) {
    cfg.validate();
    p.validate(ds.size());
    auto stats = sparsity_stats(ds, p, cfg.phi_mode);

    TrainResult res;
    res.weights.assign(ds.dim, 0.0);

    for (std::uint32_t round = 0; round < cfg.outer_rounds; ++round) {
        double t0 = now_seconds();
        auto grad = full_gradient_coop(res.weights, ds, p, cfg.lambda);

        std::vector<std::pair<std::vector<double>, std::uint64_t>> locals;
        locals.reserve(p.devices());
        double drift = 0.0;
        for (std::size_t k = 0; k < p.devices(); ++k) {
            Rng rng(derive_seed(cfg.seed, Stream::local_pass, round, k));
            auto w_k = local_svrg_pass(res.weights, grad, ds, p.assignments[k], stats, k, cfg, rng);
            std::vector<double> diff(w_k.size());
            for (std::size_t j = 0; j < w_k.size(); ++j) diff[j] = w_k[j] - res.weights[j];
            drift = std::max(drift, l2_norm(diff));
            locals.emplace_back(std::move(w_k), p.count(k));
        }
        double t1 = now_seconds();
        res.weights = aggregate(res.weights, locals, stats);
        double t2 = now_seconds();

        RoundTrace tr;
        tr.round = round;
        tr.loss = logistic_loss(res.weights, ds, cfg.lambda);
        tr.max_local_drift = drift;
        tr.seconds_local = t1 - t0;
        tr.seconds_aggregate = t2 - t1;
        tr.delta_accuracy = (oracle && test) ? delta_accuracy_loss(res.weights, *oracle, *test)
                                             : std::nan("");
        res.traces.push_back(tr);
    }
    return res;
}

std::vector<double> local_sgd(const SparseDataset& ds, const std::vector<std::uint32_t>& indices,
                              const std::vector<double>& w0, std::uint32_t epochs, double lr,
                              double lambda, Rng& rng) {
    if (indices.empty()) throw std::invalid_argument("local_sgd: empty index set");
    std::vector<double> w = w0;
    for (std::uint32_t e = 0; e < epochs; ++e) {
        auto perm = rng.permutation(static_cast<std::uint32_t>(indices.size()));
        for (auto t : perm) {
            auto g = sample_gradient(w, ds, indices[t], lambda);
            for (std::size_t j = 0; j < w.size(); ++j) {
                w[j] -= lr * g[j];
                if (!std::isfinite(w[j]))
                    throw NumericError("local_sgd: non-finite weight");
            }
        }
    }
    return w;
}

TrainResult run_fedavg(const SparseDataset& ds, const Partition& p, std::uint32_t rounds,
                       std::uint32_t local_epochs, double local_lr, double lambda,
                       std::uint64_t seed, const std::vector<double>* oracle,
                       const SparseDataset* test) {
    p.validate(ds.size());
    TrainResult res;
    res.weights.assign(ds.dim, 0.0);
    auto n = static_cast<double>(ds.size());

    for (std::uint32_t round = 0; round < rounds; ++round) {
        double t0 = now_seconds();
        std::vector<double> avg(ds.dim, 0.0);
        double drift = 0.0;
        for (std::size_t k = 0; k < p.devices(); ++k) {
            Rng rng(derive_seed(seed, Stream::local_pass, round, k));
            auto w_k = local_sgd(ds, p.assignments[k], res.weights, local_epochs, local_lr,
                                 lambda, rng);
            double share = static_cast<double>(p.count(k)) / n;
            std::vector<double> diff(w_k.size());
            for (std::size_t j = 0; j < w_k.size(); ++j) {
                diff[j] = w_k[j] - res.weights[j];
                avg[j] += share * w_k[j];
            }
            drift = std::max(drift, l2_norm(diff));
        }
        double t1 = now_seconds();
        res.weights = std::move(avg);

        RoundTrace tr;
        tr.round = round;
        tr.loss = logistic_loss(res.weights, ds, lambda);
        tr.max_local_drift = drift;
        tr.seconds_local = t1 - t0;
        tr.seconds_aggregate = now_seconds() - t1;
        tr.delta_accuracy = (oracle && test) ? delta_accuracy_loss(res.weights, *oracle, *test)
                                             : std::nan("");
        res.traces.push_back(tr);
    }
    return res;
}

std::string traces_to_csv(const std::vector<RoundTrace>& traces) {
    std::ostringstream out;
    out << "round,loss,delta_accuracy,max_local_drift,seconds_local,seconds_aggregate\n";
    for (const auto& t : traces) {
        out << t.round << ',' << format_double(t.loss) << ',' << format_double(t.delta_accuracy)
            << ',' << format_double(t.max_local_drift) << ',' << format_double(t.seconds_local)
            << ',' << format_double(t.seconds_aggregate) << '\n';
    }
    return out.str();
}

}  // namespace fedchain
