#include "qaoi/chain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qaoi {

namespace {

constexpr double kRowTolerance = 1e-12;

std::vector<std::vector<double>> cycle_matrix(std::size_t n) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        m[s][(s + 1) % n] = 1.0;
    }
    return m;
}

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

MarkovProcess::MarkovProcess(ChainRole role, std::vector<std::vector<double>> matrix)
    : role_(role), n_(matrix.size()) {
    if (n_ == 0) {
        throw std::invalid_argument("a Markov chain needs at least one state");
    }
    dense_.reserve(n_ * n_);
    row_begin_.reserve(n_ + 1);
    for (std::size_t i = 0; i < n_; ++i) {
        if (matrix[i].size() != n_) {
            throw std::invalid_argument("transition matrix must be square");
        }
        row_begin_.push_back(steps_.size());
        double sum = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            const double p = matrix[i][j];
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("transition probabilities must lie in [0, 1]");
            }
            sum += p;
            dense_.push_back(p);
            if (p > 0.0) {
                steps_.push_back({j, p});
            }
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
            std::ostringstream msg;
            msg << "row " << i << " of the transition matrix sums to " << sum;
            throw std::invalid_argument(msg.str());
        }
        max_row_nnz_ = std::max(max_row_nnz_, steps_.size() - row_begin_.back());
    }
    row_begin_.push_back(steps_.size());
}

MarkovProcess MarkovProcess::query_chain(std::vector<std::vector<double>> matrix,
                                         std::vector<bool> query_states) {
    MarkovProcess p(ChainRole::Query, std::move(matrix));
    if (query_states.size() != p.n_) {
        throw std::invalid_argument("one query flag per state is required");
    }
    bool any = false;
    for (bool q : query_states) {
        any = any || q;
    }
    if (!any) {
        throw std::invalid_argument("a query chain needs a non-empty query set");
    }
    p.query_ = std::move(query_states);
    return p;
}

MarkovProcess MarkovProcess::error_chain(std::vector<std::vector<double>> matrix,
                                         std::vector<double> erasure) {
    MarkovProcess p(ChainRole::Error, std::move(matrix));
    if (erasure.size() != p.n_) {
        throw std::invalid_argument("one erasure probability per state is required");
    }
    for (double e : erasure) {
        check_probability(e, "erasure probability");
    }
    p.erasure_ = std::move(erasure);
    return p;
}

std::span<const ChainStep> MarkovProcess::row(std::size_t from) const {
    if (from >= n_) {
        throw std::out_of_range("chain state out of range");
    }
    return {steps_.data() + row_begin_[from], row_begin_[from + 1] - row_begin_[from]};
}

std::vector<std::size_t> MarkovProcess::query_states() const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < query_.size(); ++s) {
        if (query_[s]) {
            out.push_back(s);
        }
    }
    return out;
}

double MarkovProcess::query_probability(std::size_t s) const {
    double p = 0.0;
    for (const ChainStep& step : row(s)) {
        if (query_.at(step.next)) {
            p += step.prob;
        }
    }
    return p;
}

MarkovProcess build_periodic_query(std::size_t period) {
    if (period == 0) {
        throw std::invalid_argument("query period must be at least 1");
    }
    std::vector<bool> q(period, false);
    q[period - 1] = true;
    return MarkovProcess::query_chain(cycle_matrix(period), std::move(q));
}

MarkovProcess build_uniform_query(std::size_t min_gap, std::size_t max_gap) {
    if (min_gap == 0 || min_gap > max_gap) {
        throw std::invalid_argument("uniform query gaps need 1 <= min_gap <= max_gap");
    }
    const std::size_t n = max_gap;
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        // k slots since the last query; leaving now makes a gap of k + 1.
        if (k + 1 < min_gap) {
            m[k][k + 1] = 1.0;
        } else if (k + 1 < max_gap) {
            const double hazard = 1.0 / static_cast<double>(max_gap - k);
            m[k][0] = hazard;
            m[k][k + 1] = 1.0 - hazard;
        } else {
            m[k][0] = 1.0;
        }
    }
    std::vector<bool> q(n, false);
    q[0] = true;
    return MarkovProcess::query_chain(std::move(m), std::move(q));
}

MarkovProcess build_bernoulli_query(double q) {
    check_probability(q, "query probability");
    if (q == 0.0) {
        throw std::invalid_argument("query probability must be positive");
    }
    std::vector<std::vector<double>> m{{1.0 - q, q}, {1.0 - q, q}};
    return MarkovProcess::query_chain(std::move(m), {false, true});
}

MarkovProcess build_constant_error(double epsilon) {
    check_probability(epsilon, "epsilon");
    return MarkovProcess::error_chain({{1.0}}, {epsilon});
}

MarkovProcess build_satellite_error(std::size_t period, double epsilon0, std::size_t window) {
    if (period == 0 || window == 0 || window > period) {
        throw std::invalid_argument("satellite chain needs 1 <= window <= period");
    }
    check_probability(epsilon0, "epsilon0");
    std::vector<double> eps(period, 1.0);
    for (std::size_t s = 0; s < window; ++s) {
        eps[s] = epsilon0;
    }
    return MarkovProcess::error_chain(cycle_matrix(period), std::move(eps));
}

MarkovProcess build_chain(const QueryDescriptor& descriptor) {
    return std::visit(
        overloaded{
            [](const PeriodicQuery& d) { return build_periodic_query(d.period); },
            [](const UniformQuery& d) { return build_uniform_query(d.min_gap, d.max_gap); },
            [](const BernoulliQuery& d) { return build_bernoulli_query(d.probability); },
            [](const ExplicitChain& d) {
                std::vector<bool> flags;
                for (double l : d.labels) {
                    flags.push_back(l != 0.0);
                }
                return MarkovProcess::query_chain(d.matrix, std::move(flags));
            },
        },
        descriptor);
}

MarkovProcess build_chain(const ErrorDescriptor& descriptor) {
    return std::visit(
        overloaded{
            [](const ConstantError& d) { return build_constant_error(d.epsilon); },
            [](const SatelliteError& d) {
                return build_satellite_error(d.period, d.epsilon0, d.window);
            },
            [](const ExplicitChain& d) { return MarkovProcess::error_chain(d.matrix, d.labels); },
        },
        descriptor);
}

std::size_t sample_next(const MarkovProcess& process, std::size_t state, RandomStream& rng) {
    const auto steps = process.row(state);
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (const ChainStep& step : steps) {
        cumulative += step.prob;
        if (u < cumulative) {
            return step.next;
        }
    }
    return steps.back().next;
}

std::string describe(const QueryDescriptor& descriptor) {
    std::ostringstream out;
    std::visit(overloaded{
                   [&](const PeriodicQuery& d) { out << "periodic(T=" << d.period << ")"; },
                   [&](const UniformQuery& d) {
                       out << "uniform(" << d.min_gap << "," << d.max_gap << ")";
                   },
                   [&](const BernoulliQuery& d) { out << "bernoulli(q=" << d.probability << ")"; },
                   [&](const ExplicitChain& d) { out << "matrix(n=" << d.matrix.size() << ")"; },
               },
               descriptor);
    return out.str();
}

std::string describe(const ErrorDescriptor& descriptor) {
    std::ostringstream out;
    std::visit(overloaded{
                   [&](const ConstantError& d) { out << "constant(eps=" << d.epsilon << ")"; },
                   [&](const SatelliteError& d) {
                       out << "satellite(T=" << d.period << ",eps0=" << d.epsilon0
                           << ",window=" << d.window << ")";
                   },
                   [&](const ExplicitChain& d) { out << "matrix(n=" << d.matrix.size() << ")"; },
               },
               descriptor);
    return out.str();
}

} // namespace qaoi
