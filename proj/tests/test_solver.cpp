#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qaoi/errors.hpp"
#include "qaoi/solver.hpp"

using namespace qaoi;

namespace {

// Dense oracle built straight from the kernel definition, without going
// through successors() or the structured backup.
struct Dense {
    std::size_t n;
    Eigen::MatrixXd p[2];
    Eigen::VectorXd c[2];
    std::vector<bool> can_transmit;
};

Dense build_dense(const ModelConfig& cfg) {
    const StateSpace space(cfg);
    const std::size_t n = space.size();
    Dense d{n, {Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)},
            {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}, std::vector<bool>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const SystemState s = space.state(i);
        d.can_transmit[i] = s.tokens > 0;
        for (int u = 0; u <= (s.tokens > 0 ? 1 : 0); ++u) {
            const double success = u ? 1.0 - cfg.error_chain.erasure(s.err_state) : 0.0;
            for (int del = 0; del <= 1; ++del) {
                const double pd = del ? success : 1.0 - success;
                for (int g = 0; g <= 1; ++g) {
                    const double pg = g ? cfg.token_rate : 1.0 - cfg.token_rate;
                    for (std::size_t e2 = 0; e2 < cfg.error_chain.size(); ++e2) {
                        for (std::size_t q2 = 0; q2 < cfg.query_chain.size(); ++q2) {
                            const double p = pd * pg * cfg.error_chain.transition(s.err_state, e2) *
                                             cfg.query_chain.transition(s.query_state, q2);
                            if (p == 0.0) {
                                continue;
                            }
                            const std::size_t age = del ? 1 : std::min(s.age + 1, cfg.delta_max);
                            const std::size_t tok = std::min<std::size_t>(s.tokens - u + g, cfg.bucket_size);
                            const SystemState nx{age, tok, e2, q2};
                            const bool charged = cfg.cost == CostKind::PermanentQuery || cfg.query_chain.is_query(q2);
                            d.p[u](i, space.index(nx)) += p;
                            d.c[u](i) += p * (charged ? double(age) : 0.0);
                        }
                    }
                }
            }
        }
    }
    return d;
}

Eigen::VectorXd dense_eval(const Dense& d, const Policy& pol, double lambda) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d.n, d.n);
    Eigen::VectorXd c(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        const int u = pol.actions[i];
        a.row(i) -= lambda * d.p[u].row(i);
        c(i) = d.c[u](i);
    }
    return a.fullPivLu().solve(c);
}

double max_abs_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
    }
    return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

ModelConfig random_tiny(std::mt19937_64& g) {
    // |S| = dmax * (B+1) * n_err * n_query <= 20
    for (;;) {
        const std::size_t dmax = 2 + g() % 4;
        const std::size_t b = 1 + g() % 2;
        const std::size_t tq = 1 + g() % 3;
        if (dmax * (b + 1) * tq > kBruteForceMaxStates) {
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double eps = std::round(u(g) * 10.0) / 10.0;
        const double mu = 0.05 + 0.9 * u(g);
        const double lambda = 0.5 + 0.45 * u(g);
        MarkovProcess q = (g() % 2) ? build_periodic_query(tq) : build_uniform_query(1, tq);
        const CostKind cost = (g() % 2) ? CostKind::QueryAware : CostKind::PermanentQuery;
        return ModelConfig{dmax, b, mu, lambda, cost, build_constant_error(eps), std::move(q)};
    }
}

} // namespace

TEST_CASE("evaluation of a constant-cost model is the geometric series") {
    const ModelConfig cfg{1, 1, 0.0, 0.75, CostKind::PermanentQuery, build_constant_error(0.3), build_periodic_query(1)};
    SolveOptions opt;
    const auto v = evaluate_policy(cfg, silent_policy(cfg), opt);
    for (double x : v.values) {
        CHECK(std::abs(x - 4.0) < 1e-9);
    }
    Policy tx = silent_policy(cfg);
    tx.actions[1] = 1;
    for (double x : evaluate_policy(cfg, tx, opt).values) {
        CHECK(std::abs(x - 4.0) < 1e-9);
    }
    const auto vi = value_iteration(cfg, opt);
    for (double x : vi.value.values) {
        CHECK(std::abs(x - 4.0) < 1e-9);
    }
}

TEST_CASE("iterative evaluation matches the dense linear solve") {
    const ModelConfig cfg{3, 1, 0.4, 0.75, CostKind::PermanentQuery, build_constant_error(0.0), build_periodic_query(2)};
    const Dense d = build_dense(cfg);
    SolveOptions opt;
    opt.tol = 1e-10;
    const Policy silent = silent_policy(cfg);
    CHECK(max_abs_diff(evaluate_policy(cfg, silent, opt).values, dense_eval(d, silent, cfg.discount)) < 1e-9);

    std::mt19937_64 g(3);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelConfig m = random_tiny(g);
        const Dense dm = build_dense(m);
        Policy p = silent_policy(m);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p.actions[i] = dm.can_transmit[i] && (g() % 2);
        }
        CHECK(max_abs_diff(evaluate_policy(m, p, opt).values, dense_eval(dm, p, m.discount)) < 1e-9);
    }
}

TEST_CASE("improvement equals the argmin of an exhaustive Q table") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelConfig m = random_tiny(g);
        const Dense d = build_dense(m);
        std::vector<double> v(d.n);
        std::uniform_real_distribution<double> u(0.0, 20.0);
        for (double& x : v) {
            x = u(g);
        }
        const Eigen::Map<const Eigen::VectorXd> ve(v.data(), static_cast<Eigen::Index>(v.size()));
        const Eigen::VectorXd q0 = d.c[0] + m.discount * d.p[0] * ve;
        const Eigen::VectorXd q1 = d.c[1] + m.discount * d.p[1] * ve;
        SolveOptions opt;
        opt.tie_tolerance = 0.0;
        const Policy p = improve_policy(m, ValueFunction{v}, opt);
        const QTable qt = q_values(m, ValueFunction{v}, opt);
        for (std::size_t i = 0; i < d.n; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            CHECK(qt.silent[i] == doctest::Approx(q0(k)).epsilon(1e-12));
            if (!d.can_transmit[i]) {
                CHECK(p.actions[i] == 0);
                CHECK(std::isinf(qt.transmit[i]));
                continue;
            }
            CHECK(qt.transmit[i] == doctest::Approx(q1(k)).epsilon(1e-12));
            if (std::abs(q1(k) - q0(k)) > 1e-9) {
                CHECK(p.actions[i] == (q1(k) < q0(k) ? 1 : 0));
            }
        }
    }
}

TEST_CASE("zero-token states are always silent") {
    const ModelConfig cfg{6, 2, 0.3, 0.75, CostKind::PermanentQuery, build_constant_error(0.1), build_periodic_query(3)};
    const auto r = policy_iteration(cfg);
    const StateSpace space(cfg);
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space.state(i).tokens == 0) {
            CHECK(r.policy.actions[i] == 0);
        }
    }
}

TEST_CASE("a channel that never delivers gives the all-silent policy") {
    for (CostKind cost : {CostKind::PermanentQuery, CostKind::QueryAware}) {
        const ModelConfig cfg{40, 5, 0.2, 0.75, cost, build_constant_error(1.0), build_periodic_query(4)};
        const auto r = policy_iteration(cfg);
        CHECK(r.converged);
        CHECK(r.policy == silent_policy(cfg));
        CHECK(value_iteration(cfg).policy == silent_policy(cfg));
    }
}

TEST_CASE("a free perfect channel transmits whenever it can") {
    const ModelConfig cfg{20, 3, 1.0, 0.75, CostKind::PermanentQuery, build_constant_error(0.0), build_periodic_query(1)};
    const auto r = policy_iteration(cfg);
    const StateSpace space(cfg);
    for (std::size_t i = 0; i < space.size(); ++i) {
        CHECK(r.policy.actions[i] == (space.state(i).tokens > 0 ? 1 : 0));
    }
}

TEST_CASE("policy iteration, value iteration and enumeration agree on random tiny models") {
    std::mt19937_64 g(424242);
    for (int trial = 0; trial < 25; ++trial) {
        const ModelConfig m = random_tiny(g);
        CAPTURE(trial);
        SolveOptions opt;
        std::vector<std::vector<double>> rounds;
        opt.on_round = [&](const RoundInfo& info) { rounds.push_back(info.value.values); };
        const auto pi = policy_iteration(m, opt);
        const auto vi = value_iteration(m, SolveOptions{});
        const auto bf = brute_force_optimal(m);
        CHECK(pi.converged);
        CHECK(vi.converged);
        CHECK(max_abs_diff(pi.value.values, bf.value.values) < 1e-8);
        CHECK(max_abs_diff(vi.value.values, bf.value.values) < 1e-8);
        CHECK(bellman_residual(m, pi.value) < 10 * opt.tol);
        for (std::size_t r = 1; r < rounds.size(); ++r) {
            for (std::size_t i = 0; i < rounds[r].size(); ++i) {
                CHECK(rounds[r][i] <= rounds[r - 1][i] + 10 * opt.tol);
            }
        }
        // Policies differ only where the oracle's Q-values tie.
        const QTable q = q_values(m, bf.value);
        for (std::size_t i = 0; i < pi.policy.size(); ++i) {
            if (pi.policy.actions[i] != bf.policy.actions[i]) {
                CHECK(std::abs(q.silent[i] - q.transmit[i]) < 1e-8);
            }
        }
    }
}

TEST_CASE("the enumeration oracle") {
    SUBCASE("refuses large models") {
        const ModelConfig big{6, 3, 0.3, 0.75, CostKind::PermanentQuery, build_constant_error(0.1), build_periodic_query(1)};
        CHECK_THROWS_AS(brute_force_optimal(big), TooLarge);
    }
    SUBCASE("4-state model") {
        const ModelConfig m{2, 1, 0.5, 0.75, CostKind::PermanentQuery, build_constant_error(0.2), build_periodic_query(1)};
        const auto r = brute_force_optimal(m);
        CHECK(r.iterations <= 4);  // two states can transmit
        const Dense d = build_dense(m);
        CHECK(max_abs_diff(r.value.values, dense_eval(d, r.policy, m.discount)) < 1e-12);
    }
    SUBCASE("no token ever arrives: the empty-bucket states stay silent on a ramp") {
        const ModelConfig m{5, 1, 0.0, 0.75, CostKind::PermanentQuery, build_constant_error(0.0), build_periodic_query(1)};
        const auto r = brute_force_optimal(m);
        const StateSpace space(m);
        for (std::size_t age = 1; age <= 5; ++age) {
            const std::size_t i = space.index({age, 0, 0, 0});
            CHECK(r.policy.actions[i] == 0);
            double ramp = 0.0, w = 1.0;
            std::size_t a = age;
            for (int t = 0; t < 2000; ++t) {
                a = std::min<std::size_t>(a + 1, 5);
                ramp += w * double(a);
                w *= 0.75;
            }
            CHECK(r.value.values[i] == doctest::Approx(ramp).epsilon(1e-12));
        }
    }
}

TEST_CASE("small discount gives the myopic policy") {
    std::mt19937_64 g(8);
    for (int trial = 0; trial < 10; ++trial) {
        ModelConfig m = random_tiny(g);
        m.discount = 0.01;
        const auto vi = value_iteration(m);
        const StateSpace space(m);
        for (std::size_t i = 0; i < space.size(); ++i) {
            const SystemState s = space.state(i);
            if (s.tokens == 0) {
                CHECK(vi.policy.actions[i] == 0);
                continue;
            }
            const double c0 = expected_cost(s, Action::Silent, m);
            const double c1 = expected_cost(s, Action::Transmit, m);
            // The discounted future is at most 0.01 * delta_max / 0.99 away.
            const double slack = 0.01 * double(m.delta_max) / 0.99;
            if (c1 < c0 - slack) {
                CHECK(vi.policy.actions[i] == 1);
            } else if (c0 < c1 - slack) {
                CHECK(vi.policy.actions[i] == 0);
            }
        }
    }
}

TEST_CASE("with a query every slot PQ and QAPA coincide") {
    for (double eps : {0.0, 0.2, 0.7}) {
        ModelConfig pq{50, 10, 0.1, 0.75, CostKind::PermanentQuery, build_constant_error(eps), build_periodic_query(1)};
        ModelConfig qa = pq;
        qa.cost = CostKind::QueryAware;
        const auto a = policy_iteration(pq);
        const auto b = policy_iteration(qa);
        CHECK(a.policy == b.policy);
        CHECK(max_abs_diff(a.value.values, b.value.values) <= 1e-9);
    }
}

TEST_CASE("memoryless queries scale the QAPA Q-values by q") {
    for (double q : {0.1, 0.5, 0.9}) {
        ModelConfig pq{30, 4, 0.2, 0.75, CostKind::PermanentQuery, build_satellite_error(3, 0.2), build_bernoulli_query(q)};
        ModelConfig qa = pq;
        qa.cost = CostKind::QueryAware;
        SolveOptions opt;
        opt.tol = 1e-11;
        const auto a = policy_iteration(pq, opt);
        const auto b = policy_iteration(qa, opt);
        const QTable qa_t = q_values(qa, b.value, opt);
        const QTable pq_t = q_values(pq, a.value, opt);
        for (std::size_t i = 0; i < qa_t.silent.size(); ++i) {
            CHECK(std::abs(qa_t.silent[i] - q * pq_t.silent[i]) < 1e-9);
            if (!std::isinf(pq_t.transmit[i])) {
                CHECK(std::abs(qa_t.transmit[i] - q * pq_t.transmit[i]) < 1e-9);
            }
        }
        CHECK(a.policy == b.policy);
    }
}

TEST_CASE("errors") {
    const ModelConfig cfg{4, 2, 0.3, 0.75, CostKind::PermanentQuery, build_constant_error(0.1), build_periodic_query(2)};
    Policy short_policy;
    short_policy.actions.assign(3, 0);
    CHECK_THROWS_AS(evaluate_policy(cfg, short_policy), IndexMismatch);
    Policy bad = silent_policy(cfg);
    bad.actions[0] = 1;  // state (1, 0, 0, 0)
    CHECK_THROWS_AS(evaluate_policy(cfg, bad), InvalidAction);
    SolveOptions capped;
    capped.max_sweeps = 2;
    CHECK_THROWS_AS(evaluate_policy(cfg, silent_policy(cfg), capped), NonConvergence);
    CHECK_THROWS_AS(value_iteration(cfg, capped), NonConvergence);
}

TEST_CASE("values are bounded by delta_max / (1 - lambda)") {
    const ModelConfig cfg{30, 3, 0.05, 0.75, CostKind::PermanentQuery, build_satellite_error(5, 0.5), build_uniform_query(2, 6)};
    const auto r = policy_iteration(cfg);
    for (double v : r.value.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 30.0 / 0.25 + 1e-9);
    }
}
