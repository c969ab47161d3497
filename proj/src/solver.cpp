#include "qaoi/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>

#include "qaoi/bellman.hpp"
#include "qaoi/errors.hpp"

namespace qaoi {

namespace {

// Sweep-to-sweep change below which the Jacobi iterate is within tol of the
// fixed point: ||v_k - v*|| <= lambda / (1 - lambda) * ||v_k - v_{k-1}||.
double stop_threshold(const ModelConfig& config, double tol) {
    return tol * (1.0 - config.discount) / config.discount;
}

ValueFunction evaluate_with(const BellmanOperator& op, const ModelConfig& config,
                            const Policy& policy, const SolveOptions& options,
                            const ValueFunction& initial, std::size_t& sweeps) {
    const std::size_t n = op.space().size();
    std::vector<double> v = initial.values.size() == n ? initial.values : std::vector<double>(n, 0.0);
    std::vector<double> next(n);
    const double threshold = stop_threshold(config, options.tol);
    sweeps = 0;
    while (true) {
        if (sweeps >= options.max_sweeps) {
            std::ostringstream msg;
            msg << "policy evaluation did not converge within " << options.max_sweeps << " sweeps";
            throw NonConvergence(msg.str());
        }
        const double diff = op.evaluate_sweep(policy.actions, v, next);
        ++sweeps;
        v.swap(next);
        if (diff <= threshold) {
            break;
        }
    }
    return ValueFunction{std::move(v)};
}

Policy improve_with(const BellmanOperator& op, const ValueFunction& value, double tie) {
    const std::size_t n = op.space().size();
    Policy policy{std::vector<std::uint8_t>(n, 0)};
    std::vector<double> scratch(n);
    op.greedy_sweep(value.values, scratch, policy.actions, tie);
    return policy;
}

} // namespace

Policy silent_policy(const ModelConfig& config) {
    return Policy{std::vector<std::uint8_t>(StateSpace(config).size(), 0)};
}

void check_policy(const ModelConfig& config, const Policy& policy) {
    const StateSpace space(config);
    if (policy.size() != space.size()) {
        std::ostringstream msg;
        msg << "policy has " << policy.size() << " entries but the model has " << space.size()
            << " states";
        throw IndexMismatch(msg.str());
    }
    for (std::size_t i = 0; i < policy.size(); ++i) {
        if (policy.actions[i] > 1) {
            throw InvalidAction("policy entries must be 0 or 1");
        }
        if (policy.actions[i] == 1 && space.state(i).tokens == 0) {
            std::ostringstream msg;
            msg << "policy transmits with an empty bucket at state index " << i;
            throw InvalidAction(msg.str());
        }
    }
}

ValueFunction evaluate_policy(const ModelConfig& config, const Policy& policy,
                              const SolveOptions& options, const ValueFunction& initial,
                              std::size_t* sweeps) {
    check_policy(config, policy);
    const BellmanOperator op(config, options.threads, options.kernels);
    std::size_t used = 0;
    ValueFunction v = evaluate_with(op, config, policy, options, initial, used);
    if (sweeps != nullptr) {
        *sweeps = used;
    }
    return v;
}

Policy improve_policy(const ModelConfig& config, const ValueFunction& value,
                      const SolveOptions& options) {
    const BellmanOperator op(config, options.threads, options.kernels);
    if (value.size() != op.space().size()) {
        throw IndexMismatch("value function size does not match the model");
    }
    return improve_with(op, value, options.tie());
}

SolveReport policy_iteration(const ModelConfig& config, const SolveOptions& options) {
    const BellmanOperator op(config, options.threads, options.kernels);
    SolveReport report;
    report.policy = silent_policy(config);
    report.value = ValueFunction{std::vector<double>(op.space().size(), 0.0)};
    for (std::size_t round = 1; round <= options.max_rounds; ++round) {
        std::size_t sweeps = 0;
        report.value = evaluate_with(op, config, report.policy, options, report.value, sweeps);
        report.eval_sweeps += sweeps;
        report.iterations = round;
        if (options.on_round) {
            options.on_round(RoundInfo{round, report.policy, report.value, sweeps});
        }
        Policy improved = improve_with(op, report.value, options.tie());
        if (improved == report.policy) {
            report.converged = true;
            return report;
        }
        report.policy = std::move(improved);
    }
    std::ostringstream msg;
    msg << "policy iteration did not stabilize within " << options.max_rounds << " rounds";
    throw NonConvergence(msg.str());
}

SolveReport value_iteration(const ModelConfig& config, const SolveOptions& options) {
    const BellmanOperator op(config, options.threads, options.kernels);
    const std::size_t n = op.space().size();
    const double threshold = stop_threshold(config, options.tol);
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n);
    std::vector<std::uint8_t> action(n, 0);
    SolveReport report;
    while (true) {
        if (report.eval_sweeps >= options.max_sweeps) {
            throw NonConvergence("value iteration did not converge within the sweep cap");
        }
        const double diff = op.greedy_sweep(v, next, action, options.tie());
        ++report.eval_sweeps;
        v.swap(next);
        if (diff <= threshold) {
            break;
        }
    }
    report.iterations = report.eval_sweeps;
    report.value = ValueFunction{std::move(v)};
    report.policy = improve_with(op, report.value, options.tie());
    report.converged = true;
    return report;
}

SolveReport brute_force_optimal(const ModelConfig& config) {
    validate(config);
    const StateSpace space(config);
    const std::size_t n = space.size();
    if (n > kBruteForceMaxStates) {
        std::ostringstream msg;
        msg << "brute force is limited to " << kBruteForceMaxStates << " states, model has " << n;
        throw TooLarge(msg.str());
    }

    // Dense rows of both actions, straight from the successor lists.
    struct Row {
        Eigen::VectorXd prob;
        double cost = 0.0;
    };
    std::vector<Row> silent(n), transmit(n);
    std::vector<std::size_t> choosers;
    for (std::size_t s = 0; s < n; ++s) {
        const SystemState st = space.state(s);
        for (Action a : {Action::Silent, Action::Transmit}) {
            if (!admissible(st, a)) {
                continue;
            }
            Row row{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), 0.0};
            for (const TransitionEntry& e : successors(st, a, config)) {
                row.prob[static_cast<Eigen::Index>(space.index(e.next))] += e.prob;
                row.cost += e.prob * e.cost;
            }
            (a == Action::Silent ? silent : transmit)[s] = std::move(row);
        }
        if (st.tokens >= 1) {
            choosers.push_back(s);
        }
    }

    const auto en = static_cast<Eigen::Index>(n);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(en, en);
    SolveReport best;
    double best_total = std::numeric_limits<double>::infinity();
    const std::uint64_t count = std::uint64_t{1} << choosers.size();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        Policy policy{std::vector<std::uint8_t>(n, 0)};
        for (std::size_t k = 0; k < choosers.size(); ++k) {
            policy.actions[choosers[k]] = static_cast<std::uint8_t>((mask >> k) & 1U);
        }
        Eigen::MatrixXd p(en, en);
        Eigen::VectorXd c(en);
        for (std::size_t s = 0; s < n; ++s) {
            const Row& row = policy.actions[s] ? transmit[s] : silent[s];
            p.row(static_cast<Eigen::Index>(s)) = row.prob.transpose();
            c[static_cast<Eigen::Index>(s)] = row.cost;
        }
        const Eigen::VectorXd v = (identity - config.discount * p).partialPivLu().solve(c);
        const double total = v.sum();
        if (mask == 0 || total < best_total - 1e-12 * std::max(1.0, std::abs(best_total))) {
            best_total = total;
            best.policy = std::move(policy);
            best.value.values.assign(v.data(), v.data() + n);
        }
    }
    best.iterations = static_cast<std::size_t>(count);
    best.converged = true;
    return best;
}

QTable q_values(const ModelConfig& config, const ValueFunction& value, const SolveOptions& options) {
    const BellmanOperator op(config, options.threads, options.kernels);
    if (value.size() != op.space().size()) {
        throw IndexMismatch("value function size does not match the model");
    }
    QTable table{std::vector<double>(value.size()), std::vector<double>(value.size())};
    op.q_values(value.values, table.silent, table.transmit);
    return table;
}

double bellman_residual(const ModelConfig& config, const ValueFunction& value,
                        const SolveOptions& options) {
    const QTable q = q_values(config, value, options);
    double residual = 0.0;
    for (std::size_t s = 0; s < value.size(); ++s) {
        residual = std::max(residual, std::abs(value.values[s] - std::min(q.silent[s], q.transmit[s])));
    }
    return residual;
}

} // namespace qaoi
