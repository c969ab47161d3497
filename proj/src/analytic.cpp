#include "qaoi/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qaoi::analytic {

namespace {

void check_t(std::size_t t) {
    if (t == 0) {
        throw std::invalid_argument("age values start at 1");
    }
}

double power(double base, double exponent) {
    return std::pow(base, exponent);  // pow(0, 0) == 1
}

} // namespace

std::size_t SimpleCaseParams::burst() const {
    const double b = duty_cycle * static_cast<double>(query_period);
    const auto n = static_cast<std::size_t>(std::llround(b));
    if (n == 0 || std::abs(b - static_cast<double>(n)) > 1e-9 || n > query_period) {
        throw std::invalid_argument("duty_cycle * T_q must be an integer in 1..T_q");
    }
    return n;
}

std::size_t SimpleCaseParams::tx_interval() const {
    const std::size_t b = burst();
    if (query_period % b != 0) {
        throw std::invalid_argument("equally spaced attempts need burst to divide T_q");
    }
    return query_period / b;
}

void validate(const SimpleCaseParams& p) {
    if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    }
    if (p.query_period == 0) {
        throw std::invalid_argument("T_q must be at least 1");
    }
    p.burst();
}

double pmf_pq_aoi(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const std::size_t tx = p.tx_interval();
    return (1.0 - p.epsilon) * power(p.epsilon, static_cast<double>((t - 1) / tx)) /
           static_cast<double>(tx);
}

double pmf_pq_qaoi(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const std::size_t tx = p.tx_interval();
    if (p.offset >= tx) {
        throw std::invalid_argument("offset must be smaller than T_tx");
    }
    if (t - 1 < p.offset || (t - 1 - p.offset) % tx != 0) {
        return 0.0;
    }
    return (1.0 - p.epsilon) * power(p.epsilon, static_cast<double>((t - 1 - p.offset) / tx));
}

double pmf_qapa_qaoi(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const std::size_t c = p.burst();
    const std::size_t m = (t - 1) / p.query_period;
    const std::size_t j = (t - 1) % p.query_period;
    if (j >= c) {
        return 0.0;
    }
    return (1.0 - p.epsilon) * power(p.epsilon, static_cast<double>(m * c + j));
}

double pmf_qapa_aoi(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const std::size_t c = p.burst();
    const std::size_t T = p.query_period;
    const std::size_t m = t / T;
    const std::size_t r = t % T;
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        const std::size_t wrap = r + j > T ? r + j - T : 0;
        const std::size_t attempts = m * c + std::min(r, c - j) + wrap;
        sum += power(p.epsilon, static_cast<double>(attempts) - 1.0);
    }
    return (1.0 - p.epsilon) * sum / static_cast<double>(T);
}

double pmf_qapa_qaoi_printed(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const double T = static_cast<double>(p.query_period);
    const double theta = p.duty_cycle;
    const double x = static_cast<double>(t - 1) / T;
    const double whole = std::floor(x);
    if (x - whole >= theta) {
        return 0.0;
    }
    return (1.0 - p.epsilon) * power(p.epsilon, theta * whole * (theta - 1.0) + x);
}

double pmf_qapa_aoi_printed(std::size_t t, const SimpleCaseParams& p) {
    check_t(t);
    validate(p);
    const std::size_t c = p.burst();
    const std::size_t T = p.query_period;
    const std::size_t m = t / T;
    const std::size_t upper = std::max(t - T * m, c);
    double sum = 0.0;
    for (std::size_t n = 1; n <= upper; ++n) {
        sum += (1.0 - p.epsilon) * power(p.epsilon, static_cast<double>(m * c + n - 1)) /
               static_cast<double>(T);
    }
    return sum;
}

} // namespace qaoi::analytic
