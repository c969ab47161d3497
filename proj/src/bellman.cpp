#include "qaoi/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace qaoi {

BellmanOperator::BellmanOperator(const ModelConfig& config, unsigned threads,
                                 const simd::KernelTable* kernels)
    : space_(config),
      discount_(config.discount),
      mu_(config.token_rate),
      threads_(std::max(1u, threads)),
      kernels_(kernels != nullptr ? kernels : &simd::active_kernels()) {
    validate(config);
    const MarkovProcess& err = config.error_chain;
    const MarkovProcess& qry = config.query_chain;
    const std::size_t n = space_.inner_size();
    if (n > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw std::invalid_argument("chain product too large for 32-bit inner indexing");
    }
    width_ = err.max_row_nonzeros() * qry.max_row_nonzeros();
    weight_.resize(n);
    success_.resize(n);
    coef_.assign(n * width_, 0.0);
    index_.assign(n * width_, 0);
    for (std::size_t e = 0; e < err.size(); ++e) {
        for (std::size_t q = 0; q < qry.size(); ++q) {
            const std::size_t i = space_.inner(e, q);
            weight_[i] = config.cost == CostKind::PermanentQuery ? 1.0 : qry.query_probability(q);
            success_[i] = 1.0 - err.erasure(e);
            std::size_t k = 0;
            for (const ChainStep& se : err.row(e)) {
                for (const ChainStep& sq : qry.row(q)) {
                    coef_[i * width_ + k] = se.prob * sq.prob;
                    index_[i * width_ + k] = static_cast<std::int32_t>(space_.inner(se.next, sq.next));
                    ++k;
                }
            }
            for (; k < width_; ++k) {
                index_[i * width_ + k] = static_cast<std::int32_t>(i);
            }
        }
    }
    expectation_.resize(space_.size());
}

template <class Fn>
double BellmanOperator::for_blocks(Fn&& fn) const {
    const std::size_t blocks = space_.n_blocks();
    const std::size_t n = space_.inner_size();
    if (threads_ == 1 || blocks < 2 * threads_) {
        BlockScratch scratch{std::vector<double>(n), std::vector<double>(n)};
        double diff = 0.0;
        for (std::size_t b = 0; b < blocks; ++b) {
            diff = std::max(diff, fn(b, scratch));
        }
        return diff;
    }
    std::vector<double> partial(threads_, 0.0);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads_; ++t) {
            pool.emplace_back([&, t] {
                BlockScratch scratch{std::vector<double>(n), std::vector<double>(n)};
                const std::size_t lo = blocks * t / threads_;
                const std::size_t hi = blocks * (t + 1) / threads_;
                double d = 0.0;
                for (std::size_t b = lo; b < hi; ++b) {
                    d = std::max(d, fn(b, scratch));
                }
                partial[t] = d;
            });
        }
    }
    return *std::max_element(partial.begin(), partial.end());
}

void BellmanOperator::expect(std::span<const double> value) const {
    const std::size_t n = space_.inner_size();
    for_blocks([&](std::size_t b, BlockScratch&) {
        kernels_->chain_expectation({coef_.data(), index_.data(), width_, value.data() + b * n,
                                     expectation_.data() + b * n, n});
        return 0.0;
    });
}

void BellmanOperator::block_q(std::size_t blk, BlockScratch& s, bool need_transmit) const {
    const std::size_t n = space_.inner_size();
    const std::size_t bucket = space_.bucket_size();
    const std::size_t age = blk / (bucket + 1) + 1;
    const std::size_t tokens = blk % (bucket + 1);
    const std::size_t age_next = std::min(age + 1, space_.delta_max());
    const double* w = expectation_.data();
    const auto at = [&](std::size_t a, std::size_t b) { return w + space_.block(a, b) * n; };

    kernels_->silent_q({weight_.data(), at(age_next, std::min(tokens + 1, bucket)),
                        at(age_next, tokens), static_cast<double>(age_next), mu_, discount_,
                        s.q0.data(), n});
    if (tokens == 0) {
        std::fill(s.q1.begin(), s.q1.end(), std::numeric_limits<double>::infinity());
    } else if (need_transmit) {
        kernels_->transmit_q({weight_.data(), success_.data(), at(1, tokens), at(1, tokens - 1),
                              at(age_next, tokens), at(age_next, tokens - 1),
                              static_cast<double>(age_next), mu_, discount_, s.q1.data(), n});
    }
}

void BellmanOperator::q_values(std::span<const double> value, std::span<double> q0,
                               std::span<double> q1) const {
    expect(value);
    const std::size_t n = space_.inner_size();
    for_blocks([&](std::size_t b, BlockScratch& s) {
        block_q(b, s, true);
        std::copy(s.q0.begin(), s.q0.end(), q0.begin() + b * n);
        std::copy(s.q1.begin(), s.q1.end(), q1.begin() + b * n);
        return 0.0;
    });
}

double BellmanOperator::evaluate_sweep(std::span<const std::uint8_t> policy,
                                       std::span<const double> value, std::span<double> next) const {
    expect(value);
    const std::size_t n = space_.inner_size();
    return for_blocks([&](std::size_t b, BlockScratch& s) {
        const std::uint8_t* act = policy.data() + b * n;
        const bool any_transmit = std::any_of(act, act + n, [](std::uint8_t a) { return a != 0; });
        block_q(b, s, any_transmit);
        return kernels_->select_policy(s.q0.data(), s.q1.data(), act, value.data() + b * n,
                                       next.data() + b * n, n);
    });
}

double BellmanOperator::greedy_sweep(std::span<const double> value, std::span<double> next,
                                     std::span<std::uint8_t> action, double tie) const {
    expect(value);
    const std::size_t n = space_.inner_size();
    return for_blocks([&](std::size_t b, BlockScratch& s) {
        block_q(b, s, true);
        return kernels_->select_greedy(s.q0.data(), s.q1.data(), tie, value.data() + b * n,
                                       next.data() + b * n, action.data() + b * n, n);
    });
}

} // namespace qaoi
