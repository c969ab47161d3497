// Compiled with -mavx2 -mno-fma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "qaoi/simd/kernels.hpp"

namespace qaoi::simd {

namespace {

inline double hmax(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m = _mm_max_pd(lo, hi);
    return std::fmax(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

inline __m256d abs_pd(__m256d v) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

void chain_expectation(const ChainExpectationArgs& a) {
    const std::size_t w = a.width;
    const __m128i lane = _mm_setr_epi32(0, static_cast<int>(w), static_cast<int>(2 * w),
                                        static_cast<int>(3 * w));
    std::size_t i = 0;
    for (; i + 4 <= a.n; i += 4) {
        const double* c = a.coef + i * w;
        const std::int32_t* idx = a.index + i * w;
        __m128i vi = _mm_i32gather_epi32(idx, lane, 4);
        __m256d cv = _mm256_i32gather_pd(c, lane, 8);
        __m256d acc = _mm256_mul_pd(cv, _mm256_i32gather_pd(a.values, vi, 8));
        for (std::size_t k = 1; k < w; ++k) {
            vi = _mm_i32gather_epi32(idx + k, lane, 4);
            cv = _mm256_i32gather_pd(c + k, lane, 8);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(cv, _mm256_i32gather_pd(a.values, vi, 8)));
        }
        _mm256_storeu_pd(a.out + i, acc);
    }
    for (; i < a.n; ++i) {
        const double* c = a.coef + i * w;
        const std::int32_t* idx = a.index + i * w;
        double acc = c[0] * a.values[idx[0]];
        for (std::size_t k = 1; k < w; ++k) {
            acc = acc + c[k] * a.values[idx[k]];
        }
        a.out[i] = acc;
    }
}

void silent_q(const SilentArgs& a) {
    const double keep = 1.0 - a.mu;
    const __m256d mu = _mm256_set1_pd(a.mu);
    const __m256d kp = _mm256_set1_pd(keep);
    const __m256d age = _mm256_set1_pd(a.age_next);
    const __m256d disc = _mm256_set1_pd(a.discount);
    std::size_t i = 0;
    for (; i + 4 <= a.n; i += 4) {
        const __m256d future = _mm256_add_pd(_mm256_mul_pd(mu, _mm256_loadu_pd(a.stay_hi + i)),
                                             _mm256_mul_pd(kp, _mm256_loadu_pd(a.stay_lo + i)));
        const __m256d q = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(a.weight + i), age),
                                        _mm256_mul_pd(disc, future));
        _mm256_storeu_pd(a.out + i, q);
    }
    for (; i < a.n; ++i) {
        const double future = a.mu * a.stay_hi[i] + keep * a.stay_lo[i];
        a.out[i] = a.weight[i] * a.age_next + a.discount * future;
    }
}

void transmit_q(const TransmitArgs& a) {
    const double keep = 1.0 - a.mu;
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d mu = _mm256_set1_pd(a.mu);
    const __m256d kp = _mm256_set1_pd(keep);
    const __m256d agen = _mm256_set1_pd(a.age_next);
    const __m256d disc = _mm256_set1_pd(a.discount);
    std::size_t i = 0;
    for (; i + 4 <= a.n; i += 4) {
        const __m256d s = _mm256_loadu_pd(a.success + i);
        const __m256d f = _mm256_sub_pd(one, s);
        const __m256d age = _mm256_add_pd(s, _mm256_mul_pd(f, agen));
        const __m256d fresh = _mm256_add_pd(_mm256_mul_pd(mu, _mm256_loadu_pd(a.fresh_hi + i)),
                                            _mm256_mul_pd(kp, _mm256_loadu_pd(a.fresh_lo + i)));
        const __m256d stay = _mm256_add_pd(_mm256_mul_pd(mu, _mm256_loadu_pd(a.stay_hi + i)),
                                           _mm256_mul_pd(kp, _mm256_loadu_pd(a.stay_lo + i)));
        const __m256d future = _mm256_add_pd(_mm256_mul_pd(s, fresh), _mm256_mul_pd(f, stay));
        const __m256d q = _mm256_add_pd(_mm256_mul_pd(_mm256_loadu_pd(a.weight + i), age),
                                        _mm256_mul_pd(disc, future));
        _mm256_storeu_pd(a.out + i, q);
    }
    for (; i < a.n; ++i) {
        const double s = a.success[i];
        const double f = 1.0 - s;
        const double age = s + f * a.age_next;
        const double fresh = a.mu * a.fresh_hi[i] + keep * a.fresh_lo[i];
        const double stay = a.mu * a.stay_hi[i] + keep * a.stay_lo[i];
        a.out[i] = a.weight[i] * age + a.discount * (s * fresh + f * stay);
    }
}

inline __m256d action_mask(const std::uint8_t* action) {
    std::int32_t packed;
    __builtin_memcpy(&packed, action, sizeof packed);
    const __m128i bytes = _mm_cvtsi32_si128(packed);
    const __m256i wide = _mm256_cvtepu8_epi64(bytes);
    return _mm256_castsi256_pd(_mm256_cmpgt_epi64(wide, _mm256_setzero_si256()));
}

double select_policy(const double* q0, const double* q1, const std::uint8_t* action,
                     const double* prev, double* value, std::size_t n) {
    __m256d diff = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v =
            _mm256_blendv_pd(_mm256_loadu_pd(q0 + i), _mm256_loadu_pd(q1 + i), action_mask(action + i));
        diff = _mm256_max_pd(diff, abs_pd(_mm256_sub_pd(v, _mm256_loadu_pd(prev + i))));
        _mm256_storeu_pd(value + i, v);
    }
    double d = hmax(diff);
    for (; i < n; ++i) {
        const double v = action[i] ? q1[i] : q0[i];
        d = std::fmax(d, std::fabs(v - prev[i]));
        value[i] = v;
    }
    return d;
}

double select_greedy(const double* q0, const double* q1, double tie, const double* prev,
                     double* value, std::uint8_t* action, std::size_t n) {
    const __m256d t = _mm256_set1_pd(tie);
    __m256d diff = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a0 = _mm256_loadu_pd(q0 + i);
        const __m256d a1 = _mm256_loadu_pd(q1 + i);
        const __m256d transmit = _mm256_cmp_pd(a1, _mm256_sub_pd(a0, t), _CMP_LT_OQ);
        const __m256d v = _mm256_blendv_pd(a0, a1, transmit);
        if (prev != nullptr) {
            diff = _mm256_max_pd(diff, abs_pd(_mm256_sub_pd(v, _mm256_loadu_pd(prev + i))));
        }
        _mm256_storeu_pd(value + i, v);
        const int bits = _mm256_movemask_pd(transmit);
        action[i] = bits & 1;
        action[i + 1] = (bits >> 1) & 1;
        action[i + 2] = (bits >> 2) & 1;
        action[i + 3] = (bits >> 3) & 1;
    }
    double d = hmax(diff);
    for (; i < n; ++i) {
        const bool tx = q1[i] < q0[i] - tie;
        const double v = tx ? q1[i] : q0[i];
        if (prev != nullptr) {
            d = std::fmax(d, std::fabs(v - prev[i]));
        }
        value[i] = v;
        action[i] = tx ? 1 : 0;
    }
    return d;
}

} // namespace

const KernelTable& avx2_kernels() {
    static const KernelTable table{Isa::Avx2,    chain_expectation, silent_q,
                                   transmit_q,   select_policy,     select_greedy};
    return table;
}

} // namespace qaoi::simd
