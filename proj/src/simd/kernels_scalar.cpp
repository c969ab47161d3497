#include <cmath>

#include "qaoi/simd/kernels.hpp"

namespace qaoi::simd {

namespace {

void chain_expectation(const ChainExpectationArgs& a) {
    for (std::size_t i = 0; i < a.n; ++i) {
        const double* c = a.coef + i * a.width;
        const std::int32_t* idx = a.index + i * a.width;
        double acc = c[0] * a.values[idx[0]];
        for (std::size_t k = 1; k < a.width; ++k) {
            acc = acc + c[k] * a.values[idx[k]];
        }
        a.out[i] = acc;
    }
}

void silent_q(const SilentArgs& a) {
    const double keep = 1.0 - a.mu;
    for (std::size_t i = 0; i < a.n; ++i) {
        const double future = a.mu * a.stay_hi[i] + keep * a.stay_lo[i];
        a.out[i] = a.weight[i] * a.age_next + a.discount * future;
    }
}

void transmit_q(const TransmitArgs& a) {
    const double keep = 1.0 - a.mu;
    for (std::size_t i = 0; i < a.n; ++i) {
        const double s = a.success[i];
        const double f = 1.0 - s;
        const double age = s + f * a.age_next;
        const double fresh = a.mu * a.fresh_hi[i] + keep * a.fresh_lo[i];
        const double stay = a.mu * a.stay_hi[i] + keep * a.stay_lo[i];
        a.out[i] = a.weight[i] * age + a.discount * (s * fresh + f * stay);
    }
}

double select_policy(const double* q0, const double* q1, const std::uint8_t* action,
                     const double* prev, double* value, std::size_t n) {
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = action[i] ? q1[i] : q0[i];
        diff = std::fmax(diff, std::fabs(v - prev[i]));
        value[i] = v;
    }
    return diff;
}

double select_greedy(const double* q0, const double* q1, double tie, const double* prev,
                     double* value, std::uint8_t* action, std::size_t n) {
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool transmit = q1[i] < q0[i] - tie;
        const double v = transmit ? q1[i] : q0[i];
        if (prev != nullptr) {
            diff = std::fmax(diff, std::fabs(v - prev[i]));
        }
        value[i] = v;
        action[i] = transmit ? 1 : 0;
    }
    return diff;
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Isa::Scalar, chain_expectation, silent_q,
                                   transmit_q, select_policy,     select_greedy};
    return table;
}

} // namespace qaoi::simd
