#include "fedchain/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fedchain {

Query Query::count() {
    Query q;
    q.kind = Kind::count;
    return q;
}

Query Query::sum(double bound) {
    if (!(bound > 0)) throw std::invalid_argument("query: sum requires bound > 0");
    Query q;
    q.kind = Kind::sum;
    q.domain_bound = bound;
    return q;
}

Query Query::mean(double bound) {
    if (!(bound > 0)) throw std::invalid_argument("query: mean requires bound > 0");
    Query q;
    q.kind = Kind::mean;
    q.domain_bound = bound;
    return q;
}

static double record_value(const SparseDataset& ds, std::uint32_t row) {
    double v = 0.0;
    for (const auto& e : ds.rows[row]) v += e.value;
    return v;
}

std::vector<double> Query::evaluate(const SparseDataset& ds,
                                    const std::vector<std::uint32_t>& active) const {
    switch (kind) {
        case Kind::count:
            return {static_cast<double>(active.size())};
        case Kind::sum: {
            double acc = 0.0;
            for (auto i : active) acc += record_value(ds, i);
            return {acc};
        }
        case Kind::mean: {
            if (active.empty()) throw std::invalid_argument("query: mean of empty set");
            double acc = 0.0;
            for (auto i : active) acc += record_value(ds, i);
            return {acc / static_cast<double>(active.size())};
        }
        case Kind::custom:
            if (!evaluator) throw std::invalid_argument("query: custom without evaluator");
            return evaluator(ds, active);
    }
    throw std::invalid_argument("query: unknown kind");
}

static double vec_norm(const std::vector<double>& a, const std::vector<double>& b, Norm norm) {
    if (a.size() != b.size())
        throw std::invalid_argument("sensitivity: query output dimension changed");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::abs(a[i] - b[i]);
        acc += norm == Norm::L1 ? d : d * d;
    }
    return norm == Norm::L1 ? acc : std::sqrt(acc);
}

// Scalar re-evaluation with record i's value swapped for g; valid for the
// built-in kinds whose output depends on records only through their values.
static double builtin_with_replacement(const Query& q, const std::vector<double>& values,
                                       std::size_t i, double g) {
    switch (q.kind) {
        case Query::Kind::count:
            return static_cast<double>(values.size());
        case Query::Kind::sum: {
            double acc = 0.0;
            for (std::size_t t = 0; t < values.size(); ++t) acc += t == i ? g : values[t];
            return acc;
        }
        case Query::Kind::mean: {
            double acc = 0.0;
            for (std::size_t t = 0; t < values.size(); ++t) acc += t == i ? g : values[t];
            return acc / static_cast<double>(values.size());
        }
        default:
            throw std::invalid_argument("sensitivity: replace_one requires a built-in query");
    }
}

double sensitivity_bruteforce(const Query& q, const SparseDataset& ds, Norm norm,
                              Neighbor neighbor, std::vector<double> grid) {
    std::size_t n = ds.size();
    if (n == 0) throw std::invalid_argument("sensitivity: empty dataset");

    if (neighbor == Neighbor::remove_one) {
        if (n > 10000)
            throw std::invalid_argument("sensitivity: dataset too large for remove_one (> 10000)");
        if (n == 1 && q.kind == Query::Kind::mean)
            throw std::invalid_argument("sensitivity: mean undefined on the empty neighbor");
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        auto base = q.evaluate(ds, all);
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::uint32_t> sub;
            sub.reserve(n - 1);
            for (std::size_t t = 0; t < n; ++t)
                if (t != i) sub.push_back(static_cast<std::uint32_t>(t));
            best = std::max(best, vec_norm(base, q.evaluate(ds, sub), norm));
        }
        return best;
    }

    // replace_one
    if (q.kind == Query::Kind::custom)
        throw std::invalid_argument("sensitivity: replace_one unsupported for custom queries");
    if (grid.empty()) {
        double b = q.domain_bound;
        grid = {0.0, b / 2.0, b};
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = record_value(ds, static_cast<std::uint32_t>(i));

    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double original = builtin_with_replacement(q, values, i, values[i]);
        for (double g1 : grid) {
            double f1 = builtin_with_replacement(q, values, i, g1);
            best = std::max(best, std::abs(f1 - original));
            for (double g2 : grid)
                best = std::max(best, std::abs(f1 - builtin_with_replacement(q, values, i, g2)));
        }
    }
    return best;
}

std::vector<double> laplace_mechanism(const std::vector<double>& value, double sensitivity,
                                      double epsilon, Rng& rng) {
    if (!(sensitivity > 0)) throw std::invalid_argument("laplace_mechanism: sensitivity <= 0");
    if (!(epsilon > 0)) throw std::invalid_argument("laplace_mechanism: epsilon <= 0");
    double scale = sensitivity / epsilon;
    std::vector<double> out(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) out[i] = value[i] + rng.laplace(scale);
    return out;
}

std::vector<double> clip_update(const std::vector<double>& delta, double c, Norm norm) {
    if (!(c > 0)) throw std::invalid_argument("clip_update: bound must be positive");
    double mag = 0.0;
    for (double v : delta) mag += norm == Norm::L1 ? std::abs(v) : v * v;
    if (norm == Norm::L2) mag = std::sqrt(mag);
    if (mag <= c) return delta;
    // rounding in the rescale can land a hair above c; walk the scale down by
    // ulps until the recomputed norm honors the bound exactly
    double scale = c / mag;
    std::vector<double> out(delta.size());
    for (;;) {
        double m = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) {
            out[i] = delta[i] * scale;
            m += norm == Norm::L1 ? std::abs(out[i]) : out[i] * out[i];
        }
        if (norm == Norm::L2) m = std::sqrt(m);
        if (m <= c) return out;
        scale = std::nextafter(scale, 0.0);
    }
}

PrivacyBudget::PrivacyBudget(double epsilon_total) : total_(epsilon_total) {
    if (!(epsilon_total > 0)) throw std::invalid_argument("budget: epsilon_total must be positive");
}

bool PrivacyBudget::try_spend(std::uint32_t round, std::uint32_t device, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("budget: spends must be positive");
    if (spent_ + epsilon > total_) return false;
    spent_ += epsilon;
    ledger_.push_back({round, device, epsilon});
    return true;
}

AggregatorDecision confident_aggregator(const std::vector<std::uint64_t>& votes, double t_lo,
                                        double t_hi, double epsilon, Rng& rng,
                                        PrivacyBudget* budget, std::uint32_t round,
                                        std::uint32_t device) {
    if (votes.size() < 2) throw std::invalid_argument("confident_aggregator: need >= 2 classes");
    if (t_lo > t_hi) throw std::invalid_argument("confident_aggregator: t_lo > t_hi");
    if (!(epsilon > 0)) throw std::invalid_argument("confident_aggregator: epsilon <= 0");

    double threshold = rng.uniform(t_lo, t_hi);
    std::uint64_t top = *std::max_element(votes.begin(), votes.end());
    if (static_cast<double>(top) < threshold) return {};

    if (budget && !budget->try_spend(round, device, epsilon)) return {};

    AggregatorDecision d;
    d.accepted = true;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < votes.size(); ++c) {
        double noisy = static_cast<double>(votes[c]) + rng.laplace(2.0 / epsilon);
        if (noisy > best) {
            best = noisy;
            d.label = c;
        }
    }
    return d;
}

std::optional<NoisedUpdate> privatize_local_update(const std::vector<double>& delta, double c,
                                                   double epsilon_round, PrivacyBudget& budget,
                                                   std::uint32_t round, std::uint32_t device,
                                                   Rng& rng) {
    if (!(c > 0)) throw std::invalid_argument("privatize: clip bound must be positive");
    if (!(epsilon_round > 0)) throw std::invalid_argument("privatize: epsilon_round <= 0");

    auto clipped = clip_update(delta, c, Norm::L1);
    if (!budget.try_spend(round, device, epsilon_round)) return std::nullopt;

    NoisedUpdate u;
    u.clip_bound = c;
    u.epsilon_round = epsilon_round;
    u.norm_kind = Norm::L1;
    double norm = 0.0;
    for (double v : clipped) norm += std::abs(v);
    u.clipped_norm = norm;
    u.delta = laplace_mechanism(clipped, 2.0 * c, epsilon_round, rng);
    return u;
}

}  // namespace fedchain
