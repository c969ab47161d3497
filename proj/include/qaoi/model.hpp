#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qaoi/chain.hpp"

namespace qaoi {

enum class CostKind { PermanentQuery, QueryAware };

std::string to_string(CostKind kind);
/// Accepts "PQ" and "QAPA" (case-insensitive).
CostKind parse_cost_kind(const std::string& text);

/// Silent or transmit; transmit is admissible only with at least one token.
enum class Action : std::uint8_t { Silent = 0, Transmit = 1 };

struct SystemState {
    std::size_t age = 1;     // slots, 1..delta_max
    std::size_t tokens = 0;  // 0..bucket_size
    std::size_t err_state = 0;
    std::size_t query_state = 0;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

struct ModelConfig {
    std::size_t delta_max;
    std::size_t bucket_size;
    double token_rate;  // mu_b
    double discount;    // lambda
    CostKind cost;
    MarkovProcess error_chain;
    MarkovProcess query_chain;
};

/// Throws std::invalid_argument unless the config satisfies its invariants.
void validate(const ModelConfig& config);

/// 64-bit FNV-1a digest of everything that shapes the state space and kernel.
std::uint64_t config_hash(const ModelConfig& config);

/**
 * Canonical state indexing: lexicographic in (age, tokens, err_state,
 * query_state). The two chain coordinates form a contiguous "inner" block of
 * size |S_e|*|S_q| for every (age, tokens) pair.
 */
class StateSpace {
public:
    StateSpace(std::size_t delta_max, std::size_t bucket_size, std::size_t n_err, std::size_t n_query);
    explicit StateSpace(const ModelConfig& config);

    std::size_t size() const noexcept { return n_blocks() * inner_size(); }
    std::size_t inner_size() const noexcept { return n_err_ * n_query_; }
    std::size_t n_blocks() const noexcept { return delta_max_ * (bucket_size_ + 1); }

    std::size_t delta_max() const noexcept { return delta_max_; }
    std::size_t bucket_size() const noexcept { return bucket_size_; }
    std::size_t n_err() const noexcept { return n_err_; }
    std::size_t n_query() const noexcept { return n_query_; }

    std::size_t block(std::size_t age, std::size_t tokens) const noexcept {
        return (age - 1) * (bucket_size_ + 1) + tokens;
    }
    std::size_t inner(std::size_t err_state, std::size_t query_state) const noexcept {
        return err_state * n_query_ + query_state;
    }
    std::size_t index(const SystemState& s) const noexcept {
        return block(s.age, s.tokens) * inner_size() + inner(s.err_state, s.query_state);
    }
    SystemState state(std::size_t index) const noexcept;
    bool contains(const SystemState& s) const noexcept;

private:
    std::size_t delta_max_;
    std::size_t bucket_size_;
    std::size_t n_err_;
    std::size_t n_query_;
};

struct TransitionEntry {
    SystemState next;
    double prob;
    double cost;
};

/// All states in canonical order.
std::vector<SystemState> enumerate_states(const ModelConfig& config);

bool admissible(const SystemState& state, Action action) noexcept;

/**
 * Every successor of (state, action) with positive probability, duplicates
 * merged. Age resets to 1 on a delivered transmission and otherwise grows up
 * to delta_max; tokens move by -action + Bernoulli(mu_b) within [0, B]; the
 * chains advance independently. Throws InvalidAction for transmit at zero
 * tokens.
 */
std::vector<TransitionEntry> successors(const SystemState& state, Action action,
                                        const ModelConfig& config);

/// Sum of prob * cost over successors().
double expected_cost(const SystemState& state, Action action, const ModelConfig& config);

} // namespace qaoi
