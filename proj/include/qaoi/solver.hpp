#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "qaoi/model.hpp"
#include "qaoi/simd/kernels.hpp"

namespace qaoi {

/// Per-state action table in canonical state order.
struct Policy {
    std::vector<std::uint8_t> actions;

    Action at(std::size_t index) const { return actions.at(index) ? Action::Transmit : Action::Silent; }
    std::size_t size() const noexcept { return actions.size(); }
    friend bool operator==(const Policy&, const Policy&) = default;
};

/// Expected discounted cost per state, in age units.
struct ValueFunction {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct SolveReport {
    Policy policy;
    ValueFunction value;
    std::size_t iterations = 0;   // improvement rounds, or enumerated policies
    std::size_t eval_sweeps = 0;  // total backup sweeps
    bool converged = false;
};

/// One policy-iteration round, for observers.
struct RoundInfo {
    std::size_t round;
    const Policy& policy;        // the policy that was just evaluated
    const ValueFunction& value;  // its value
    std::size_t sweeps;
};

struct SolveOptions {
    /// Evaluated values are within `tol` (max-norm) of the exact fixed point.
    double tol = 1e-9;
    /// Transmit must beat silence by more than this to be chosen; negative
    /// means 2 * tol.
    double tie_tolerance = -1.0;
    std::size_t max_sweeps = 100000;
    std::size_t max_rounds = 1000;
    unsigned threads = 1;
    /// Kernel override (tests); null selects the dispatched variant.
    const simd::KernelTable* kernels = nullptr;
    std::function<void(const RoundInfo&)> on_round;

    double tie() const noexcept { return tie_tolerance < 0.0 ? 2.0 * tol : tie_tolerance; }
};

/// All-silent policy for `config`.
Policy silent_policy(const ModelConfig& config);

/// Throws IndexMismatch on size mismatch and InvalidAction on transmit at b=0.
void check_policy(const ModelConfig& config, const Policy& policy);

/**
 * Iterative (Jacobi) evaluation of `policy`, starting from `initial` when it
 * is non-empty and from zero otherwise. Throws NonConvergence past
 * `max_sweeps`.
 */
ValueFunction evaluate_policy(const ModelConfig& config, const Policy& policy,
                              const SolveOptions& options = {}, const ValueFunction& initial = {},
                              std::size_t* sweeps = nullptr);

/// Greedy policy with respect to `value`, ties going to silence.
Policy improve_policy(const ModelConfig& config, const ValueFunction& value,
                      const SolveOptions& options = {});

/// Howard policy iteration from the all-silent policy and zero values.
SolveReport policy_iteration(const ModelConfig& config, const SolveOptions& options = {});

/// Value iteration from zero values; greedy policy extracted at the end.
SolveReport value_iteration(const ModelConfig& config, const SolveOptions& options = {});

/// Largest state count brute_force_optimal accepts.
inline constexpr std::size_t kBruteForceMaxStates = 20;

/**
 * Exhaustive oracle: evaluates every admissible deterministic policy by a
 * dense linear solve built from successors(), returning the one with the
 * smallest total value (first found on ties, silence-first order). Throws
 * TooLarge beyond kBruteForceMaxStates states.
 */
SolveReport brute_force_optimal(const ModelConfig& config);

struct QTable {
    std::vector<double> silent;
    std::vector<double> transmit;  // +inf where inadmissible
};

QTable q_values(const ModelConfig& config, const ValueFunction& value,
                const SolveOptions& options = {});

/// max_s |v(s) - min_a Q(s, a)|.
double bellman_residual(const ModelConfig& config, const ValueFunction& value,
                        const SolveOptions& options = {});

} // namespace qaoi
