#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qaoi/rng.hpp"

namespace qaoi {

/// What the per-state labels of a chain mean.
enum class ChainRole { Error, Query };

// Descriptors are the serializable form of a chain (kind + parameters).
struct PeriodicQuery {
    std::size_t period = 1;
};
struct UniformQuery {
    std::size_t min_gap = 1;
    std::size_t max_gap = 1;
};
struct BernoulliQuery {
    double probability = 1.0;
};
struct ConstantError {
    double epsilon = 0.0;
};
struct SatelliteError {
    std::size_t period = 1;
    double epsilon0 = 0.0;
    std::size_t window = 2;
};
/// Explicit row-major matrix; `labels` are erasure probabilities for error
/// chains and 0/1 query flags for query chains.
struct ExplicitChain {
    std::vector<std::vector<double>> matrix;
    std::vector<double> labels;
};

using QueryDescriptor = std::variant<PeriodicQuery, UniformQuery, BernoulliQuery, ExplicitChain>;
using ErrorDescriptor = std::variant<ConstantError, SatelliteError, ExplicitChain>;

/// One nonzero entry of a transition row.
struct ChainStep {
    std::size_t next;
    double prob;
};

/**
 * Finite, time-homogeneous Markov chain with per-state labels.
 *
 * Values are validated at construction and immutable afterwards: every row is
 * stochastic to 1e-12, every entry lies in [0, 1], erasure labels lie in
 * [0, 1] and query chains have at least one query state. States are indexed
 * from 0.
 */
class MarkovProcess {
public:
    /// Query chain from an explicit matrix; throws std::invalid_argument.
    static MarkovProcess query_chain(std::vector<std::vector<double>> matrix,
                                     std::vector<bool> query_states);
    /// Error chain from an explicit matrix; throws std::invalid_argument.
    static MarkovProcess error_chain(std::vector<std::vector<double>> matrix,
                                     std::vector<double> erasure);

    ChainRole role() const noexcept { return role_; }
    std::size_t size() const noexcept { return n_; }

    double transition(std::size_t from, std::size_t to) const { return dense_[from * n_ + to]; }
    /// Nonzero entries of row `from`, ordered by successor index.
    std::span<const ChainStep> row(std::size_t from) const;
    std::size_t max_row_nonzeros() const noexcept { return max_row_nnz_; }

    /// Erasure probability of state `s` (error chains).
    double erasure(std::size_t s) const { return erasure_.at(s); }
    /// Whether `s` is a query state (query chains).
    bool is_query(std::size_t s) const { return query_.at(s); }
    std::vector<std::size_t> query_states() const;

    /// Probability that the next state is a query state, from `s`.
    double query_probability(std::size_t s) const;

    bool deterministic() const noexcept { return max_row_nnz_ == 1; }

private:
    MarkovProcess(ChainRole role, std::vector<std::vector<double>> matrix);

    ChainRole role_;
    std::size_t n_ = 0;
    std::vector<double> dense_;
    std::vector<std::size_t> row_begin_;
    std::vector<ChainStep> steps_;
    std::size_t max_row_nnz_ = 0;
    std::vector<double> erasure_;
    std::vector<bool> query_;
};

/// Deterministic cycle 0 -> 1 -> ... -> T-1 -> 0 with query state T-1.
MarkovProcess build_periodic_query(std::size_t period);

/**
 * Query chain whose inter-query gap is uniform on {min_gap, ..., max_gap}.
 * State k (0-based) means k slots since the last query; state 0 is the query
 * state. From state k the chain resets to 0 with hazard 1/(max_gap - k) once
 * a gap of k+1 slots is feasible, and advances otherwise.
 */
MarkovProcess build_uniform_query(std::size_t min_gap, std::size_t max_gap);

/// Memoryless queries: two states, query state 1 entered with probability q.
MarkovProcess build_bernoulli_query(double q);

/// One-state channel with constant erasure probability.
MarkovProcess build_constant_error(double epsilon);

/// Deterministic T_e-cycle; the first `window` states erase with epsilon0,
/// the rest always erase.
MarkovProcess build_satellite_error(std::size_t period, double epsilon0, std::size_t window = 2);

MarkovProcess build_chain(const QueryDescriptor& descriptor);
MarkovProcess build_chain(const ErrorDescriptor& descriptor);

/// Draw the successor of `state`; always consumes exactly one uniform draw.
std::size_t sample_next(const MarkovProcess& process, std::size_t state, RandomStream& rng);

/// Compact human-readable form, e.g. "periodic(T=40)".
std::string describe(const QueryDescriptor& descriptor);
std::string describe(const ErrorDescriptor& descriptor);

} // namespace qaoi
