#include "qaoi/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <stdexcept>

#include "qaoi/errors.hpp"

namespace qaoi {

std::string to_string(CostKind kind) {
    return kind == CostKind::PermanentQuery ? "PQ" : "QAPA";
}

CostKind parse_cost_kind(const std::string& text) {
    std::string upper = text;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "PQ") {
        return CostKind::PermanentQuery;
    }
    if (upper == "QAPA") {
        return CostKind::QueryAware;
    }
    throw ParseError("unknown cost kind '" + text + "' (expected PQ or QAPA)");
}

void validate(const ModelConfig& config) {
    if (config.delta_max < 1) {
        throw std::invalid_argument("delta_max must be at least 1");
    }
    if (config.bucket_size < 1) {
        throw std::invalid_argument("bucket size must be at least 1");
    }
    if (!(config.token_rate >= 0.0 && config.token_rate <= 1.0)) {
        throw std::invalid_argument("token rate must lie in [0, 1]");
    }
    if (!(config.discount > 0.0 && config.discount < 1.0)) {
        throw std::invalid_argument("discount must lie in (0, 1)");
    }
    if (config.error_chain.role() != ChainRole::Error) {
        throw std::invalid_argument("error_chain must carry erasure labels");
    }
    if (config.query_chain.role() != ChainRole::Query) {
        throw std::invalid_argument("query_chain must carry query labels");
    }
}

namespace {

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void hash_chain(Fnv1a& h, const MarkovProcess& chain) {
    h.u64(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        for (std::size_t j = 0; j < chain.size(); ++j) {
            h.f64(chain.transition(i, j));
        }
        h.f64(chain.role() == ChainRole::Error ? chain.erasure(i) : (chain.is_query(i) ? 1.0 : 0.0));
    }
}

} // namespace

std::uint64_t config_hash(const ModelConfig& config) {
    Fnv1a h;
    h.u64(config.delta_max);
    h.u64(config.bucket_size);
    h.f64(config.token_rate);
    h.f64(config.discount);
    h.u64(config.cost == CostKind::PermanentQuery ? 0 : 1);
    hash_chain(h, config.error_chain);
    hash_chain(h, config.query_chain);
    return h.value();
}

StateSpace::StateSpace(std::size_t delta_max, std::size_t bucket_size, std::size_t n_err,
                       std::size_t n_query)
    : delta_max_(delta_max), bucket_size_(bucket_size), n_err_(n_err), n_query_(n_query) {}

StateSpace::StateSpace(const ModelConfig& config)
    : StateSpace(config.delta_max, config.bucket_size, config.error_chain.size(),
                 config.query_chain.size()) {}

SystemState StateSpace::state(std::size_t index) const noexcept {
    const std::size_t inner_idx = index % inner_size();
    const std::size_t blk = index / inner_size();
    return SystemState{
        .age = blk / (bucket_size_ + 1) + 1,
        .tokens = blk % (bucket_size_ + 1),
        .err_state = inner_idx / n_query_,
        .query_state = inner_idx % n_query_,
    };
}

bool StateSpace::contains(const SystemState& s) const noexcept {
    return s.age >= 1 && s.age <= delta_max_ && s.tokens <= bucket_size_ && s.err_state < n_err_ &&
           s.query_state < n_query_;
}

std::vector<SystemState> enumerate_states(const ModelConfig& config) {
    validate(config);
    const StateSpace space(config);
    std::vector<SystemState> states;
    states.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        states.push_back(space.state(i));
    }
    return states;
}

bool admissible(const SystemState& state, Action action) noexcept {
    return action == Action::Silent || state.tokens >= 1;
}

std::vector<TransitionEntry> successors(const SystemState& state, Action action,
                                        const ModelConfig& config) {
    const StateSpace space(config);
    if (!space.contains(state)) {
        throw std::out_of_range("state outside the enumerated space");
    }
    if (!admissible(state, action)) {
        throw InvalidAction("cannot transmit with an empty token bucket");
    }
    const int a = action == Action::Transmit ? 1 : 0;
    const double p_success = a * (1.0 - config.error_chain.erasure(state.err_state));
    const double mu = config.token_rate;
    const std::size_t age_next = std::min(state.age + 1, config.delta_max);

    std::vector<TransitionEntry> out;
    const auto add = [&](const SystemState& next, double prob, double cost) {
        if (prob <= 0.0) {
            return;
        }
        for (TransitionEntry& e : out) {
            if (e.next == next) {
                e.prob += prob;
                return;
            }
        }
        out.push_back({next, prob, cost});
    };

    const std::pair<std::size_t, double> ages[] = {{1, p_success}, {age_next, 1.0 - p_success}};
    const std::pair<int, double> gains[] = {{1, mu}, {0, 1.0 - mu}};
    for (const auto& [age, p_age] : ages) {
        for (const auto& [gain, p_gain] : gains) {
            const long raw = static_cast<long>(state.tokens) - a + gain;
            const auto tokens = static_cast<std::size_t>(
                std::clamp(raw, 0L, static_cast<long>(config.bucket_size)));
            for (const ChainStep& e : config.error_chain.row(state.err_state)) {
                for (const ChainStep& q : config.query_chain.row(state.query_state)) {
                    const bool charged = config.cost == CostKind::PermanentQuery ||
                                         config.query_chain.is_query(q.next);
                    const double cost = charged ? static_cast<double>(age) : 0.0;
                    add(SystemState{age, tokens, e.next, q.next}, p_age * p_gain * e.prob * q.prob,
                        cost);
                }
            }
        }
    }
    return out;
}

double expected_cost(const SystemState& state, Action action, const ModelConfig& config) {
    double c = 0.0;
    for (const TransitionEntry& e : successors(state, action, config)) {
        c += e.prob * e.cost;
    }
    return c;
}

} // namespace qaoi
