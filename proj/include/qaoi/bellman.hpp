#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qaoi/model.hpp"
#include "qaoi/simd/kernels.hpp"

namespace qaoi {

/**
 * Structured Bellman backup for the product MDP.
 *
 * Because age, tokens and the two chains evolve independently given the
 * action, the expectation over the next chain states can be taken once per
 * (age', tokens') block:
 *
 *   W(age', b', i) = sum_{i'} P_inner(i, i') v(age', b', i')
 *
 * after which each Q-value combines at most four W entries read from
 * contiguous blocks. Both passes run through the dispatched SIMD kernels.
 * Blocks can be split across threads; updates are Jacobi-style so results do
 * not depend on scheduling.
 */
class BellmanOperator {
public:
    explicit BellmanOperator(const ModelConfig& config, unsigned threads = 1,
                             const simd::KernelTable* kernels = nullptr);

    const StateSpace& space() const noexcept { return space_; }
    double discount() const noexcept { return discount_; }
    const simd::KernelTable& kernels() const noexcept { return *kernels_; }

    /// Per-state cost weight: 1 under PQ, P(next query state) under QAPA.
    std::span<const double> cost_weight() const noexcept { return weight_; }

    /// Q-values for every state; q1 is +inf where transmit is inadmissible.
    void q_values(std::span<const double> value, std::span<double> q0, std::span<double> q1) const;

    /// One Jacobi sweep of policy evaluation; returns max |next - value|.
    double evaluate_sweep(std::span<const std::uint8_t> policy, std::span<const double> value,
                          std::span<double> next) const;

    /**
     * One Jacobi sweep of the Bellman optimality operator. Writes the greedy
     * action (transmit only when it beats silence by more than `tie`) and
     * returns max |next - value|.
     */
    double greedy_sweep(std::span<const double> value, std::span<double> next,
                        std::span<std::uint8_t> action, double tie) const;

private:
    struct BlockScratch {
        std::vector<double> q0;
        std::vector<double> q1;
    };

    void expect(std::span<const double> value) const;
    void block_q(std::size_t blk, BlockScratch& scratch, bool need_transmit) const;
    template <class Fn>
    double for_blocks(Fn&& fn) const;

    StateSpace space_;
    double discount_;
    double mu_;
    unsigned threads_;
    const simd::KernelTable* kernels_;

    std::vector<double> weight_;
    std::vector<double> success_;
    std::size_t width_ = 1;
    std::vector<double> coef_;
    std::vector<std::int32_t> index_;

    mutable std::vector<double> expectation_;
};

} // namespace qaoi
