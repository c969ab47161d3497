#pragma once

#include <cstddef>

namespace qaoi::analytic {

/**
 * Feedback-free example: periodic queries every T_q slots, constant erasure
 * probability and a duty cycle theta, i.e. burst = theta * T_q attempts per
 * query period. The equally spaced strategy attempts every T_tx = T_q / burst
 * slots with its last attempt right before the query; `offset` delays the
 * queries by that many slots relative to this favorable alignment
 * (0 <= offset < T_tx, PQ query age only).
 */
struct SimpleCaseParams {
    double epsilon = 0.5;
    std::size_t query_period = 20;  // T_q
    double duty_cycle = 0.2;        // theta
    std::size_t offset = 0;

    std::size_t burst() const;        // theta * T_q, validated
    std::size_t tx_interval() const;  // T_q / burst
};

/// Throws std::invalid_argument on out-of-range parameters.
void validate(const SimpleCaseParams& p);

/// Age at an arbitrary slot, equally spaced attempts.
double pmf_pq_aoi(std::size_t t, const SimpleCaseParams& p);

/// Age at query instants, equally spaced attempts.
double pmf_pq_qaoi(std::size_t t, const SimpleCaseParams& p);

/// Age at query instants, burst before each query. For t - 1 = m*T_q + j the
/// mass is (1 - eps) * eps^(m*burst + j) when j < burst and 0 otherwise.
double pmf_qapa_qaoi(std::size_t t, const SimpleCaseParams& p);

/**
 * Age at an arbitrary slot, burst before each query. Averaging over the T_q
 * slot offsets and over which attempt was the last success gives, for
 * t = m*T_q + r,
 *
 *   p(t) = (1 - eps)/T_q * sum_{j<burst} eps^(N_j - 1)
 *   N_j  = m*burst + min(r, burst - j) + max(0, r + j - T_q)
 *
 * where N_j counts the attempts in the t-slot window that starts at the j-th
 * attempt of a burst.
 */
double pmf_qapa_aoi(std::size_t t, const SimpleCaseParams& p);

/// The burst-strategy query-age expression exactly as it is usually printed,
/// kept to document that it does not normalize.
double pmf_qapa_qaoi_printed(std::size_t t, const SimpleCaseParams& p);

/// The burst-strategy age expression as usually printed, with a max(.) upper
/// summation limit; kept to document that it does not normalize.
double pmf_qapa_aoi_printed(std::size_t t, const SimpleCaseParams& p);

} // namespace qaoi::analytic
