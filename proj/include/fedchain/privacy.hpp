#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fedchain/dataset.hpp"
#include "fedchain/rng.hpp"

namespace fedchain {

enum class Norm { L1, L2 };
enum class Neighbor { remove_one, replace_one };

// A query F over a dataset restricted to an active record set. Built-in kinds
// treat each record as the scalar sum of its feature values; custom supplies
// its own evaluator and only supports remove_one neighbors.
struct Query {
    enum class Kind { count, sum, mean, custom } kind = Kind::count;
    double domain_bound = 0.0;  // B, max record magnitude for sum/mean
    std::function<std::vector<double>(const SparseDataset&, const std::vector<std::uint32_t>&)>
        evaluator;

    static Query count();
    static Query sum(double bound);
    static Query mean(double bound);

    std::vector<double> evaluate(const SparseDataset& ds,
                                 const std::vector<std::uint32_t>& active) const;
};

// Exact max of |F(D) - F(D')| over enumerated neighbor pairs at record
// distance 1. remove_one pairs D with each single-record removal. replace_one
// enumerates every record position crossed with a replacement-value grid
// (default: 0, B/2, B) and measures across all pairs in that family, so the
// extremes 0 <-> B are always represented regardless of the sampled records.
double sensitivity_bruteforce(const Query& q, const SparseDataset& ds, Norm norm,
                              Neighbor neighbor, std::vector<double> grid = {});

// adds i.i.d. Laplace(sensitivity / epsilon) per coordinate
std::vector<double> laplace_mechanism(const std::vector<double>& value, double sensitivity,
                                      double epsilon, Rng& rng);

// scales into the norm-C ball, direction preserved
std::vector<double> clip_update(const std::vector<double>& delta, double c, Norm norm);

struct SpendRecord {
    std::uint32_t round;
    std::uint32_t device;
    double epsilon;
};

// Summation accountant. try_spend refuses (and leaves the ledger untouched)
// whenever the new total would exceed epsilon_total.
class PrivacyBudget {
  public:
    explicit PrivacyBudget(double epsilon_total);

    bool try_spend(std::uint32_t round, std::uint32_t device, double epsilon);

    double total() const { return total_; }
    double spent() const { return spent_; }
    double remaining() const { return total_ - spent_; }
    const std::vector<SpendRecord>& ledger() const { return ledger_; }

  private:
    double total_;
    double spent_ = 0.0;
    std::vector<SpendRecord> ledger_;
};

struct AggregatorDecision {
    bool accepted = false;
    std::size_t label = 0;  // valid only when accepted
};

// PATE-style gate: draw T uniform in [t_lo, t_hi]; if the max vote count
// reaches T, charge epsilon and return the Laplace(2/epsilon)-noised argmax,
// else reject without charging.
AggregatorDecision confident_aggregator(const std::vector<std::uint64_t>& votes, double t_lo,
                                        double t_hi, double epsilon, Rng& rng,
                                        PrivacyBudget* budget = nullptr, std::uint32_t round = 0,
                                        std::uint32_t device = 0);

struct NoisedUpdate {
    std::vector<double> delta;
    double clip_bound = 0.0;
    double epsilon_round = 0.0;
    Norm norm_kind = Norm::L1;
    double clipped_norm = 0.0;  // pre-noise norm, always <= clip_bound
};

// The device-side release gate: clip to the L1 ball of radius c, debit the
// budget, then noise each coordinate at scale 2c/epsilon (sensitivity of an
// L1-clipped vector under record replacement is 2c). Exhaustion returns
// nullopt before any noise is drawn and nothing is released.
std::optional<NoisedUpdate> privatize_local_update(const std::vector<double>& delta, double c,
                                                   double epsilon_round, PrivacyBudget& budget,
                                                   std::uint32_t round, std::uint32_t device,
                                                   Rng& rng);

}  // namespace fedchain
