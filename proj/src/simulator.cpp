#include "qaoi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "qaoi/errors.hpp"
#include "qaoi/rng.hpp"

namespace qaoi {

void Histogram::add(std::size_t value) {
    if (value >= counts.size()) {
        counts.resize(value + 1, 0);
    }
    ++counts[value];
}

void Histogram::merge(const Histogram& other) {
    if (other.counts.size() > counts.size()) {
        counts.resize(other.counts.size(), 0);
    }
    for (std::size_t i = 0; i < other.counts.size(); ++i) {
        counts[i] += other.counts[i];
    }
}

std::uint64_t Histogram::total() const {
    std::uint64_t n = 0;
    for (std::uint64_t c : counts) {
        n += c;
    }
    return n;
}

double Histogram::mean() const {
    const std::uint64_t n = total();
    if (n == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        sum += static_cast<double>(i) * static_cast<double>(counts[i]);
    }
    return sum / static_cast<double>(n);
}

std::vector<double> Histogram::pmf() const {
    const double n = static_cast<double>(total());
    std::vector<double> p(counts.size(), 0.0);
    if (n > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            p[i] = static_cast<double>(counts[i]) / n;
        }
    }
    return p;
}

std::vector<double> Histogram::ccdf() const {
    const double n = static_cast<double>(total());
    std::vector<double> c(counts.size(), 0.0);
    if (n > 0) {
        std::uint64_t above = 0;
        for (std::size_t i = counts.size(); i-- > 0;) {
            c[i] = static_cast<double>(above) / n;
            above += counts[i];
        }
    }
    return c;
}

std::size_t Histogram::quantile(double q) const {
    const std::uint64_t n = total();
    if (n == 0) {
        return 0;
    }
    std::uint64_t seen = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        seen += counts[i];
        if (static_cast<double>(seen) >= q * static_cast<double>(n)) {
            return i;
        }
    }
    return counts.size() - 1;
}

std::vector<std::vector<double>> MetricsReport::phase_pmf() const {
    std::vector<std::vector<double>> out;
    out.reserve(phase.size());
    for (const Histogram& h : phase) {
        out.push_back(h.pmf());
    }
    return out;
}

TokenSummary MetricsReport::token_summary() const {
    TokenSummary s;
    if (tokens.total() == 0) {
        return s;
    }
    s.mean = tokens.mean();
    for (std::size_t i = 0; i < tokens.counts.size(); ++i) {
        if (tokens.counts[i] > 0) {
            s.min = i;
            break;
        }
    }
    s.p10 = tokens.quantile(0.1);
    s.p50 = tokens.quantile(0.5);
    s.p90 = tokens.quantile(0.9);
    for (std::size_t i = tokens.counts.size(); i-- > 0;) {
        if (tokens.counts[i] > 0) {
            s.max = i;
            break;
        }
    }
    return s;
}

void MetricsReport::finalize() {
    avg_aoi = n_slots ? static_cast<double>(aoi_sum) / static_cast<double>(n_slots) : 0.0;
    avg_qaoi = n_queries ? static_cast<double>(qaoi_sum) / static_cast<double>(n_queries) : 0.0;
}

void MetricsReport::merge(const MetricsReport& other) {
    n_slots += other.n_slots;
    n_queries += other.n_queries;
    n_transmissions += other.n_transmissions;
    n_deliveries += other.n_deliveries;
    aoi_sum += other.aoi_sum;
    qaoi_sum += other.qaoi_sum;
    aoi.merge(other.aoi);
    qaoi.merge(other.qaoi);
    if (other.phase.size() > phase.size()) {
        phase.resize(other.phase.size());
    }
    for (std::size_t k = 0; k < other.phase.size(); ++k) {
        phase[k].merge(other.phase[k]);
    }
    tokens.merge(other.tokens);
    finalize();
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
    const auto same_trace = [](const std::vector<TraceRow>& x, const std::vector<TraceRow>& y) {
        return std::equal(x.begin(), x.end(), y.begin(), y.end(), [](const TraceRow& r, const TraceRow& s) {
            return r.t == s.t && r.age == s.age && r.tokens == s.tokens && r.err_state == s.err_state &&
                   r.query_state == s.query_state && r.action == s.action &&
                   r.delivered == s.delivered && r.is_query == s.is_query;
        });
    };
    const auto same_phase = [](const std::vector<Histogram>& x, const std::vector<Histogram>& y) {
        return std::equal(x.begin(), x.end(), y.begin(), y.end(),
                          [](const Histogram& h, const Histogram& g) { return h.counts == g.counts; });
    };
    return a.n_slots == b.n_slots && a.n_queries == b.n_queries &&
           a.n_transmissions == b.n_transmissions && a.n_deliveries == b.n_deliveries &&
           a.aoi_sum == b.aoi_sum && a.qaoi_sum == b.qaoi_sum && a.avg_aoi == b.avg_aoi &&
           a.avg_qaoi == b.avg_qaoi && a.aoi.counts == b.aoi.counts &&
           a.qaoi.counts == b.qaoi.counts && same_phase(a.phase, b.phase) &&
           a.tokens.counts == b.tokens.counts && same_trace(a.trace, b.trace);
}

namespace {

void check_sim(const SimConfig& sim) {
    if (sim.horizon == 0 || sim.burn_in >= sim.horizon) {
        throw std::invalid_argument("simulation needs burn_in < horizon");
    }
}

struct Recorder {
    MetricsReport& r;
    std::size_t phase_bins;

    void slot(std::size_t age, std::size_t tokens, std::size_t phase, bool query) {
        ++r.n_slots;
        r.aoi_sum += age;
        r.aoi.add(age);
        r.phase[std::min(phase, phase_bins - 1)].add(age);
        r.tokens.add(tokens);
        if (query) {
            ++r.n_queries;
            r.qaoi_sum += age;
            r.qaoi.add(age);
        }
    }
};

} // namespace

MetricsReport simulate_policy(const ModelConfig& config, const Policy& policy, const SimConfig& sim) {
    validate(config);
    check_policy(config, policy);
    check_sim(sim);
    const StateSpace space(config);
    const MarkovProcess& err = config.error_chain;
    const MarkovProcess& qry = config.query_chain;

    MetricsReport report;
    const std::size_t phase_bins = qry.size();
    report.phase.resize(phase_bins);
    report.aoi.counts.assign(config.delta_max + 1, 0);
    report.qaoi.counts.assign(config.delta_max + 1, 0);
    for (Histogram& h : report.phase) {
        h.counts.assign(config.delta_max + 1, 0);
    }
    report.tokens.counts.assign(config.bucket_size + 1, 0);
    if (sim.record_trace) {
        report.trace.reserve(sim.horizon);
    }
    Recorder rec{report, phase_bins};

    RandomStream erasure = RandomStream::derive(sim.seed, StreamId::Erasure);
    RandomStream token = RandomStream::derive(sim.seed, StreamId::Token);
    RandomStream err_rng = RandomStream::derive(sim.seed, StreamId::ErrorChain);
    RandomStream qry_rng = RandomStream::derive(sim.seed, StreamId::QueryChain);

    SystemState s{1, 0, 0, 0};
    std::size_t phase = 0;
    for (std::uint64_t t = 0; t < sim.horizon; ++t) {
        const bool query = qry.is_query(s.query_state);
        phase = query ? 0 : phase + 1;
        const bool transmit = policy.actions[space.index(s)] != 0;

        const bool delivered = erasure.uniform() < (transmit ? 1.0 - err.erasure(s.err_state) : 0.0);
        const bool gain = token.uniform() < config.token_rate;
        const std::size_t e_next = sample_next(err, s.err_state, err_rng);
        const std::size_t q_next = sample_next(qry, s.query_state, qry_rng);

        if (t >= sim.burn_in) {
            rec.slot(s.age, s.tokens, phase, query);
            report.n_transmissions += transmit;
            report.n_deliveries += delivered;
        }
        if (sim.record_trace) {
            report.trace.push_back({t, static_cast<std::uint32_t>(s.age),
                                    static_cast<std::uint32_t>(s.tokens),
                                    static_cast<std::uint32_t>(s.err_state),
                                    static_cast<std::uint32_t>(s.query_state), transmit, delivered,
                                    query});
        }

        s.age = delivered ? 1 : std::min(s.age + 1, config.delta_max);
        s.tokens = std::min(s.tokens - (transmit ? 1 : 0) + (gain ? 1 : 0), config.bucket_size);
        s.err_state = e_next;
        s.query_state = q_next;
    }
    report.finalize();
    return report;
}

AggregateReport simulate_seeds(const ModelConfig& config, const Policy& policy,
                               const SimConfig& sim, std::size_t seeds, unsigned jobs) {
    if (seeds == 0) {
        throw std::invalid_argument("at least one seed is required");
    }
    AggregateReport agg;
    agg.per_seed.resize(seeds);
    const auto run = [&](std::size_t k) {
        SimConfig one = sim;
        one.seed = sim.seed + k;
        agg.per_seed[k] = simulate_policy(config, policy, one);
    };
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, seeds);
    if (workers == 1) {
        for (std::size_t k = 0; k < seeds; ++k) {
            run(k);
        }
    } else {
        std::vector<std::future<void>> pending;
        for (std::size_t w = 0; w < workers; ++w) {
            pending.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t k = w; k < seeds; k += workers) {
                    run(k);
                }
            }));
        }
        for (auto& f : pending) {
            f.get();
        }
    }
    for (const MetricsReport& r : agg.per_seed) {
        MetricsReport copy = r;
        copy.trace.clear();
        agg.merged.merge(copy);
    }
    if (seeds > 1) {
        const auto stderr_of = [&](auto member) {
            double mean = 0.0;
            for (const MetricsReport& r : agg.per_seed) {
                mean += r.*member;
            }
            mean /= static_cast<double>(seeds);
            double ss = 0.0;
            for (const MetricsReport& r : agg.per_seed) {
                ss += (r.*member - mean) * (r.*member - mean);
            }
            return std::sqrt(ss / static_cast<double>(seeds - 1) / static_cast<double>(seeds));
        };
        agg.aoi_stderr = stderr_of(&MetricsReport::avg_aoi);
        agg.qaoi_stderr = stderr_of(&MetricsReport::avg_qaoi);
    }
    return agg;
}

MetricsReport simulate_fixed(const FixedStrategy& strategy, double epsilon,
                             std::size_t query_period, double duty_cycle, const SimConfig& sim) {
    check_sim(sim);
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    }
    if (query_period == 0) {
        throw std::invalid_argument("query period must be at least 1");
    }
    const double budget = duty_cycle * static_cast<double>(query_period);
    const auto attempts = static_cast<std::size_t>(std::llround(budget));
    if (attempts == 0 || std::abs(budget - static_cast<double>(attempts)) > 1e-9) {
        throw InvalidStrategy("duty_cycle * T_q must be a positive integer");
    }
    std::size_t used = 0;
    std::size_t interval = 0;
    std::size_t burst = 0;
    if (const auto* eq = std::get_if<EquallySpaced>(&strategy)) {
        if (eq->interval == 0 || query_period % eq->interval != 0) {
            throw InvalidStrategy("T_tx must divide the query period");
        }
        interval = eq->interval;
        used = query_period / interval;
    } else {
        burst = std::get<PreQueryBurst>(strategy).count;
        if (burst == 0 || burst > query_period) {
            throw InvalidStrategy("burst size must lie in 1..T_q");
        }
        used = burst;
    }
    if (used != attempts) {
        throw InvalidStrategy("strategy does not use exactly duty_cycle * T_q attempts per period");
    }

    MetricsReport report;
    report.phase.resize(query_period);
    Recorder rec{report, query_period};
    RandomStream erasure = RandomStream::derive(sim.seed, StreamId::Erasure);
    std::size_t age = 1;
    for (std::uint64_t t = 0; t < sim.horizon; ++t) {
        const auto offset = static_cast<std::size_t>(t % query_period);
        const bool query = offset == 0;
        const bool transmit = interval != 0 ? (offset + 1) % interval == 0
                                            : offset >= query_period - burst;
        const bool delivered = erasure.uniform() < (transmit ? 1.0 - epsilon : 0.0);
        if (t >= sim.burn_in) {
            rec.slot(age, 0, offset, query);
            report.n_transmissions += transmit;
            report.n_deliveries += delivered;
        }
        if (sim.record_trace) {
            report.trace.push_back({t, static_cast<std::uint32_t>(age), 0, 0,
                                    static_cast<std::uint32_t>(offset), transmit, delivered, query});
        }
        age = delivered ? 1 : age + 1;
    }
    report.finalize();
    return report;
}

} // namespace qaoi
