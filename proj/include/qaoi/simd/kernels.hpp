#pragma once

// Data-parallel inner loops of the Bellman backup. Every kernel works on one
// contiguous block of n "inner" states (error-chain x query-chain) sharing
// the same (age, tokens). Each lane is one state and each lane performs the
// same operations in the same order as the scalar reference, so every ISA
// variant returns bit-identical results.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace qaoi::simd {

enum class Isa { Scalar, Avx2 };

std::string_view name(Isa isa);

/// out[i] = sum_k coef[i*width + k] * values[index[i*width + k]]
struct ChainExpectationArgs {
    const double* coef;
    const std::int32_t* index;
    std::size_t width;
    const double* values;
    double* out;
    std::size_t n;
};

/// Q-value of staying silent:
/// out[i] = weight[i]*age_next + discount*(mu*stay_hi[i] + (1-mu)*stay_lo[i])
struct SilentArgs {
    const double* weight;
    const double* stay_hi;
    const double* stay_lo;
    double age_next;
    double mu;
    double discount;
    double* out;
    std::size_t n;
};

/// Q-value of transmitting, with per-lane delivery probability s = success[i]:
/// out[i] = weight[i]*(s + (1-s)*age_next)
///        + discount*(s*(mu*fresh_hi[i] + (1-mu)*fresh_lo[i])
///                    + (1-s)*(mu*stay_hi[i] + (1-mu)*stay_lo[i]))
struct TransmitArgs {
    const double* weight;
    const double* success;
    const double* fresh_hi;
    const double* fresh_lo;
    const double* stay_hi;
    const double* stay_lo;
    double age_next;
    double mu;
    double discount;
    double* out;
    std::size_t n;
};

struct KernelTable {
    Isa isa;
    void (*chain_expectation)(const ChainExpectationArgs&);
    void (*silent_q)(const SilentArgs&);
    void (*transmit_q)(const TransmitArgs&);
    /// value[i] = action[i] ? q1[i] : q0[i]; returns max |value[i] - prev[i]|.
    double (*select_policy)(const double* q0, const double* q1, const std::uint8_t* action,
                            const double* prev, double* value, std::size_t n);
    /// action[i] = q1[i] < q0[i] - tie; value[i] = min accordingly; returns
    /// max |value[i] - prev[i]| (prev may be null, then 0 is returned).
    double (*select_greedy)(const double* q0, const double* q1, double tie, const double* prev,
                            double* value, std::uint8_t* action, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(QAOI_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

/// Whether `isa` is compiled in and supported by the running CPU.
bool available(Isa isa);

/// Kernels for `isa`; throws std::runtime_error when unavailable.
const KernelTable& kernels(Isa isa);

/**
 * Best kernels for this CPU, chosen once. The environment variable
 * QAOI_SIMD=scalar forces the scalar reference.
 */
const KernelTable& active_kernels();

} // namespace qaoi::simd
