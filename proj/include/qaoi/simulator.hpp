#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "qaoi/model.hpp"
#include "qaoi/solver.hpp"

namespace qaoi {

struct SimConfig {
    std::uint64_t horizon = 1'000'000;  // slots, including burn-in
    std::uint64_t burn_in = 0;          // leading slots excluded from metrics
    std::uint64_t seed = 1;
    bool record_trace = false;
};

/// Integer-valued histogram with exact counts; index = value.
struct Histogram {
    std::vector<std::uint64_t> counts;

    void add(std::size_t value);
    void merge(const Histogram& other);
    std::uint64_t total() const;
    double mean() const;
    std::vector<double> pmf() const;
    /// ccdf[x] = P(X > x) for x = 0 .. counts.size() - 1.
    std::vector<double> ccdf() const;
    /// Smallest x with P(X <= x) >= q.
    std::size_t quantile(double q) const;
};

struct TraceRow {
    std::uint64_t t;
    std::uint32_t age;
    std::uint32_t tokens;
    std::uint32_t err_state;
    std::uint32_t query_state;
    std::uint8_t action;
    std::uint8_t delivered;
    std::uint8_t is_query;
};

struct TokenSummary {
    double mean = 0.0;
    std::size_t min = 0;
    std::size_t p10 = 0;
    std::size_t p50 = 0;
    std::size_t p90 = 0;
    std::size_t max = 0;
};

/**
 * Long-run metrics over the recorded slots [burn_in, horizon).
 *
 * Ages are recorded at every slot; a slot is a query instant when the query
 * chain is in a query state. Phase is the number of slots since the last
 * query instant (0 at queries), so the phase-0 histogram is the QAoI
 * histogram. The last phase bin also collects any larger phase.
 */
struct MetricsReport {
    std::uint64_t n_slots = 0;
    std::uint64_t n_queries = 0;
    std::uint64_t n_transmissions = 0;
    std::uint64_t n_deliveries = 0;
    std::uint64_t aoi_sum = 0;
    std::uint64_t qaoi_sum = 0;
    double avg_aoi = 0.0;
    double avg_qaoi = 0.0;
    Histogram aoi;
    Histogram qaoi;
    std::vector<Histogram> phase;
    Histogram tokens;
    std::vector<TraceRow> trace;

    std::vector<double> aoi_ccdf() const { return aoi.ccdf(); }
    std::vector<double> qaoi_ccdf() const { return qaoi.ccdf(); }
    std::vector<std::vector<double>> phase_pmf() const;
    TokenSummary token_summary() const;

    /// Add counts of `other` and recompute the averages.
    void merge(const MetricsReport& other);
    void finalize();

    friend bool operator==(const MetricsReport& a, const MetricsReport& b);
};

/// Per-seed reports, their merge, and the standard error of the seed means.
struct AggregateReport {
    std::vector<MetricsReport> per_seed;
    MetricsReport merged;
    double aoi_stderr = 0.0;
    double qaoi_stderr = 0.0;
};

/**
 * Monte Carlo run of `policy` on the full system. Starts at age 1, empty
 * bucket and chain states 0. Separate streams derived from `sim.seed` drive
 * erasures, token arrivals and each chain, one draw per slot each, so runs of
 * different policies share common random numbers. Throws IndexMismatch when
 * the policy does not fit the model.
 */
MetricsReport simulate_policy(const ModelConfig& config, const Policy& policy, const SimConfig& sim);

/// Runs seeds sim.seed, sim.seed + 1, ... on up to `jobs` threads and folds
/// them in seed order.
AggregateReport simulate_seeds(const ModelConfig& config, const Policy& policy,
                               const SimConfig& sim, std::size_t seeds, unsigned jobs = 1);

struct EquallySpaced {
    std::size_t interval = 1;  // T_tx
};
struct PreQueryBurst {
    std::size_t count = 1;
};
using FixedStrategy = std::variant<EquallySpaced, PreQueryBurst>;

/**
 * Feedback-free strategies on a constant-erasure channel with a query every
 * `query_period` slots (queries at t = 0, T_q, 2T_q, ...). EquallySpaced
 * attempts every T_tx slots with the last attempt in the slot before each
 * query; PreQueryBurst attempts in the `count` slots before each query.
 * Throws InvalidStrategy unless the strategy uses exactly duty_cycle * T_q
 * attempts per query period.
 */
MetricsReport simulate_fixed(const FixedStrategy& strategy, double epsilon,
                             std::size_t query_period, double duty_cycle, const SimConfig& sim);

} // namespace qaoi
