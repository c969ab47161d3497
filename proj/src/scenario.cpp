#include "qaoi/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "qaoi/errors.hpp"
#include "qaoi/policy_io.hpp"

#ifndef QAOI_VERSION
#define QAOI_VERSION "0.0.0"
#endif

namespace qaoi {

using json = nlohmann::json;

const char* version() noexcept { return QAOI_VERSION; }

namespace {

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ParseError(std::string(where) + ": expected an object");
    }
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            known = known || item.key() == key;
        }
        if (!known) {
            throw ParseError(std::string(where) + ": unknown key '" + item.key() + "'");
        }
    }
}

template <class T>
T get(const json& obj, const char* key, const char* where) {
    if (!obj.contains(key)) {
        throw ParseError(std::string(where) + ": missing '" + key + "'");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string(where) + ": bad value for '" + key + "'");
    }
}

template <class T>
T get_or(const json& obj, const char* key, const char* where, T fallback) {
    return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

QueryDescriptor parse_query(const json& j) {
    const auto kind = get<std::string>(j, "kind", "query");
    if (kind == "periodic") {
        check_keys(j, "query", {"kind", "period"});
        return PeriodicQuery{get<std::size_t>(j, "period", "query")};
    }
    if (kind == "uniform") {
        check_keys(j, "query", {"kind", "min_gap", "max_gap"});
        return UniformQuery{get<std::size_t>(j, "min_gap", "query"),
                            get<std::size_t>(j, "max_gap", "query")};
    }
    if (kind == "bernoulli") {
        check_keys(j, "query", {"kind", "probability"});
        return BernoulliQuery{get<double>(j, "probability", "query")};
    }
    if (kind == "explicit") {
        check_keys(j, "query", {"kind", "matrix", "labels"});
        return ExplicitChain{get<std::vector<std::vector<double>>>(j, "matrix", "query"),
                             get<std::vector<double>>(j, "labels", "query")};
    }
    throw ParseError("query: unknown kind '" + kind + "'");
}

ErrorDescriptor parse_error(const json& j) {
    const auto kind = get<std::string>(j, "kind", "error");
    if (kind == "constant") {
        check_keys(j, "error", {"kind", "epsilon"});
        return ConstantError{get<double>(j, "epsilon", "error")};
    }
    if (kind == "satellite") {
        check_keys(j, "error", {"kind", "period", "epsilon0", "window"});
        return SatelliteError{get<std::size_t>(j, "period", "error"),
                              get<double>(j, "epsilon0", "error"),
                              get_or<std::size_t>(j, "window", "error", 2)};
    }
    if (kind == "explicit") {
        check_keys(j, "error", {"kind", "matrix", "labels"});
        return ExplicitChain{get<std::vector<std::vector<double>>>(j, "matrix", "error"),
                             get<std::vector<double>>(j, "labels", "error")};
    }
    throw ParseError("error: unknown kind '" + kind + "'");
}

json to_json(const QueryDescriptor& d) {
    return std::visit(
        [](const auto& q) -> json {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, PeriodicQuery>) {
                return {{"kind", "periodic"}, {"period", q.period}};
            } else if constexpr (std::is_same_v<T, UniformQuery>) {
                return {{"kind", "uniform"}, {"min_gap", q.min_gap}, {"max_gap", q.max_gap}};
            } else if constexpr (std::is_same_v<T, BernoulliQuery>) {
                return {{"kind", "bernoulli"}, {"probability", q.probability}};
            } else {
                return {{"kind", "explicit"}, {"matrix", q.matrix}, {"labels", q.labels}};
            }
        },
        d);
}

json to_json(const ErrorDescriptor& d) {
    return std::visit(
        [](const auto& e) -> json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, ConstantError>) {
                return {{"kind", "constant"}, {"epsilon", e.epsilon}};
            } else if constexpr (std::is_same_v<T, SatelliteError>) {
                return {{"kind", "satellite"},
                        {"period", e.period},
                        {"epsilon0", e.epsilon0},
                        {"window", e.window}};
            } else {
                return {{"kind", "explicit"}, {"matrix", e.matrix}, {"labels", e.labels}};
            }
        },
        d);
}

json spec_to_json(const ScenarioSpec& s) {
    json j;
    j["name"] = s.name;
    j["query"] = to_json(s.query);
    j["error"] = to_json(s.error);
    j["mu_b"] = s.mu_b;
    j["bucket_size"] = s.bucket_size;
    j["delta_max_factor"] = s.delta_max_factor;
    j["delta_max"] = delta_max_of(s);
    j["discount"] = s.discount;
    json costs = json::array();
    for (CostKind c : s.costs) {
        costs.push_back(to_string(c));
    }
    j["costs"] = costs;
    j["sweep"] = s.sweep;
    j["tol"] = s.tol;
    j["horizon"] = s.horizon;
    j["burn_in"] = burn_in_of(s);
    j["seeds"] = s.seeds;
    j["seed"] = s.seed;
    return j;
}

ScenarioSpec spec_from_json(const json& j) {
    check_keys(j, "scenario",
               {"name", "query", "error", "mu_b", "bucket_size", "delta_max_factor", "delta_max",
                "discount", "costs", "sweep", "tol", "horizon", "burn_in", "seeds", "seed"});
    ScenarioSpec s;
    s.name = get<std::string>(j, "name", "scenario");
    s.query = parse_query(j.at("query"));
    if (!j.contains("error")) {
        throw ParseError("scenario: missing 'error'");
    }
    s.error = parse_error(j.at("error"));
    s.mu_b = get<double>(j, "mu_b", "scenario");
    s.bucket_size = get<std::size_t>(j, "bucket_size", "scenario");
    s.delta_max_factor = get_or<std::size_t>(j, "delta_max_factor", "scenario", s.delta_max_factor);
    if (j.contains("delta_max")) {
        s.delta_max = get<std::size_t>(j, "delta_max", "scenario");
    }
    s.discount = get_or<double>(j, "discount", "scenario", s.discount);
    if (j.contains("costs")) {
        s.costs.clear();
        for (const auto& c : get<std::vector<std::string>>(j, "costs", "scenario")) {
            s.costs.push_back(parse_cost_kind(c));
        }
    }
    s.sweep = get_or<std::vector<double>>(j, "sweep", "scenario", {});
    s.tol = get_or<double>(j, "tol", "scenario", s.tol);
    s.horizon = get_or<std::uint64_t>(j, "horizon", "scenario", s.horizon);
    if (j.contains("burn_in")) {
        s.burn_in = get<std::uint64_t>(j, "burn_in", "scenario");
    }
    s.seeds = get_or<std::size_t>(j, "seeds", "scenario", s.seeds);
    s.seed = get_or<std::uint64_t>(j, "seed", "scenario", s.seed);
    return s;
}

void check_spec(const ScenarioSpec& s) {
    const auto fail = [](const std::string& msg) { throw ParseError("scenario: " + msg); };
    if (s.name.empty() || s.name.find_first_of(",\n/") != std::string::npos) {
        fail("name must be non-empty without ',', '/' or newlines");
    }
    if (s.costs.empty()) {
        fail("costs must not be empty");
    }
    if (std::set<CostKind>(s.costs.begin(), s.costs.end()).size() != s.costs.size()) {
        fail("duplicate cost");
    }
    if (!s.sweep.empty() && std::holds_alternative<ExplicitChain>(s.error)) {
        fail("sweep needs a constant or satellite channel");
    }
    if (s.delta_max_factor == 0 || (s.delta_max && *s.delta_max == 0)) {
        fail("delta_max must be positive");
    }
    if (!(s.tol > 0.0)) {
        fail("tol must be positive");
    }
    if (s.seeds == 0 || s.horizon == 0) {
        fail("seeds and horizon must be positive");
    }
    if (burn_in_of(s) >= s.horizon) {
        fail("burn_in must be below horizon");
    }
    try {
        for (const SweepPoint& p : sweep_points(s)) {
            validate(build_model(s, p, s.costs.front()));
        }
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

ScenarioSpec parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("scenario") && j.contains("format")) {
        j = j.at("scenario");
    }
    ScenarioSpec s = spec_from_json(j);
    check_spec(s);
    return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string scenario_json(const ScenarioSpec& spec, int indent) { return spec_to_json(spec).dump(indent); }

std::size_t reference_period(const QueryDescriptor& query) {
    return std::visit(
        [](const auto& q) -> std::size_t {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, PeriodicQuery>) {
                return q.period;
            } else if constexpr (std::is_same_v<T, UniformQuery>) {
                return q.max_gap;
            } else if constexpr (std::is_same_v<T, BernoulliQuery>) {
                return q.probability > 0.0 ? static_cast<std::size_t>(std::ceil(1.0 / q.probability)) : 1;
            } else {
                return q.matrix.size();
            }
        },
        query);
}

std::vector<SweepPoint> sweep_points(const ScenarioSpec& spec) {
    std::vector<SweepPoint> out;
    const auto base_epsilon = std::visit(
        [](const auto& e) -> double {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, ConstantError>) {
                return e.epsilon;
            } else if constexpr (std::is_same_v<T, SatelliteError>) {
                return e.epsilon0;
            } else {
                return std::nan("");
            }
        },
        spec.error);
    if (spec.sweep.empty()) {
        out.push_back({0, base_epsilon, spec.error});
        return out;
    }
    for (std::size_t k = 0; k < spec.sweep.size(); ++k) {
        ErrorDescriptor d = spec.error;
        if (auto* c = std::get_if<ConstantError>(&d)) {
            c->epsilon = spec.sweep[k];
        } else if (auto* s = std::get_if<SatelliteError>(&d)) {
            s->epsilon0 = spec.sweep[k];
        }
        out.push_back({k, spec.sweep[k], d});
    }
    return out;
}

std::size_t delta_max_of(const ScenarioSpec& spec) {
    return spec.delta_max ? *spec.delta_max : spec.delta_max_factor * reference_period(spec.query);
}

std::uint64_t burn_in_of(const ScenarioSpec& spec) {
    return spec.burn_in ? *spec.burn_in : 10 * reference_period(spec.query);
}

SimConfig sim_config_of(const ScenarioSpec& spec) {
    SimConfig sim;
    sim.horizon = spec.horizon;
    sim.burn_in = burn_in_of(spec);
    sim.seed = spec.seed;
    return sim;
}

ModelConfig build_model(const ScenarioSpec& spec, const SweepPoint& point, CostKind cost) {
    return ModelConfig{delta_max_of(spec), spec.bucket_size, spec.mu_b,       spec.discount,
                       cost,              build_chain(point.error), build_chain(spec.query)};
}

std::string policy_file_name(const SweepPoint& point, CostKind cost) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_p%02zu.policy", to_string(cost).c_str(), point.index);
    return buf;
}

namespace {

std::string job_stem(const SweepPoint& point, CostKind cost) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_p%02zu", to_string(cost).c_str(), point.index);
    return buf;
}

struct JobOutput {
    SolveReport solve;
    std::uint64_t hash = 0;
    std::size_t states = 0;
    std::optional<MetricsRow> row;
};

} // namespace

RunResult run_scenario(const ScenarioSpec& spec, const RunOptions& options) {
    namespace fs = std::filesystem;
    check_spec(spec);
    fs::create_directories(options.out_dir / "policies");

    const auto points = sweep_points(spec);
    struct Job {
        SweepPoint point;
        CostKind cost;
    };
    std::vector<Job> jobs;
    for (const SweepPoint& p : points) {
        for (CostKind c : spec.costs) {
            jobs.push_back({p, c});
        }
    }
    const unsigned workers = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(jobs.size())));
    const unsigned inner = std::max(1u, options.jobs / workers);
    const SimConfig sim = sim_config_of(spec);

    std::vector<JobOutput> outputs(jobs.size());
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const auto run_job = [&](std::size_t k) {
        const Job& job = jobs[k];
        const ModelConfig config = build_model(spec, job.point, job.cost);
        const auto t0 = std::chrono::steady_clock::now();
        SolveOptions solve_opts;
        solve_opts.tol = spec.tol;
        solve_opts.threads = inner;
        JobOutput& out = outputs[k];
        out.solve = policy_iteration(config, solve_opts);
        out.hash = config_hash(config);
        out.states = StateSpace(config).size();
        write_policy(options.out_dir / "policies" / policy_file_name(job.point, job.cost),
                     make_policy_file(config, out.solve.policy, &out.solve.value));
        const double solve_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::string stem = job_stem(job.point, job.cost);
        if (!options.solve_only) {
            const AggregateReport agg = simulate_seeds(config, out.solve.policy, sim, spec.seeds, inner);
            write_distribution_csv(options.out_dir / ("pmf_" + stem + ".csv"), "pmf", pmf_series(agg.merged));
            write_distribution_csv(options.out_dir / ("ccdf_" + stem + ".csv"), "ccdf", ccdf_series(agg.merged));
            out.row = make_metrics_row(spec.name, to_string(job.cost), job.point.index, job.point.epsilon,
                                       sim, agg, config.delta_max);
            if (options.record_trace) {
                SimConfig traced = sim;
                traced.record_trace = true;
                write_trace_csv(options.out_dir / ("trace_" + stem + ".csv"),
                                simulate_policy(config, out.solve.policy, traced).trace);
            }
        }
        if (!options.quiet) {
            std::lock_guard lock(log_mutex);
            std::fprintf(stderr, "[%s] eps=%g states=%zu rounds=%zu sweeps=%zu solve=%.2fs", stem.c_str(),
                         job.point.epsilon, out.states, out.solve.iterations, out.solve.eval_sweeps, solve_s);
            if (out.row) {
                std::fprintf(stderr, " aoi=%.4f qaoi=%.4f", out.row->avg_aoi, out.row->avg_qaoi);
            }
            std::fprintf(stderr, "\n");
        }
    };

    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < jobs.size(); k = next++) {
                    try {
                        run_job(k);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        next = jobs.size();
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    RunResult result;
    json points_json = json::array();
    for (const SweepPoint& p : points) {
        json pj{{"index", p.index}, {"epsilon", p.epsilon}, {"delta_max", delta_max_of(spec)}};
        json policies = json::array();
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            if (jobs[k].point.index != p.index) {
                continue;
            }
            const JobOutput& o = outputs[k];
            policies.push_back({{"cost", to_string(jobs[k].cost)},
                                {"file", "policies/" + policy_file_name(p, jobs[k].cost)},
                                {"config_hash", hex(o.hash)},
                                {"states", o.states},
                                {"rounds", o.solve.iterations},
                                {"eval_sweeps", o.solve.eval_sweeps},
                                {"converged", o.solve.converged},
                                {"transmit_states", std::count(o.solve.policy.actions.begin(),
                                                               o.solve.policy.actions.end(), 1)}});
        }
        pj["policies"] = policies;
        points_json.push_back(pj);
    }
    for (JobOutput& o : outputs) {
        if (o.row) {
            result.rows.push_back(*o.row);
        }
        result.solves.push_back(std::move(o.solve));
    }
    if (!options.solve_only) {
        write_metrics_csv(options.out_dir / "metrics.csv", result.rows);
    }

    json manifest{{"format", "qaoi run v1"},
                  {"version", version()},
                  {"scenario", spec_to_json(spec)},
                  {"simulated", !options.solve_only},
                  {"points", points_json}};
    std::ofstream mf(options.out_dir / "manifest.json");
    if (!mf) {
        throw Error("cannot write manifest in " + options.out_dir.string());
    }
    mf << manifest.dump(2) << '\n';
    return result;
}

namespace {

json read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        throw Error("no manifest.json in " + dir.string());
    }
    try {
        json j = json::parse(in);
        if (j.value("format", "") != "qaoi run v1") {
            throw ParseError(dir.string() + "/manifest.json: unknown format");
        }
        return j;
    } catch (const json::exception& e) {
        throw ParseError(dir.string() + "/manifest.json: " + e.what());
    }
}

json axes(json scenario) {
    for (const char* key : {"name", "costs", "seed", "seeds", "horizon", "burn_in", "tol"}) {
        scenario.erase(key);
    }
    return scenario;
}

std::set<std::string> policies_in(const std::vector<MetricsRow>& rows) {
    std::set<std::string> out;
    for (const MetricsRow& r : rows) {
        out.insert(r.policy);
    }
    return out;
}

const MetricsRow* find_row(const std::vector<MetricsRow>& rows, std::size_t point, const std::string& policy) {
    for (const MetricsRow& r : rows) {
        if (r.point == point && r.policy == policy) {
            return &r;
        }
    }
    return nullptr;
}

} // namespace

std::vector<ComparisonRow> compare_runs(const std::filesystem::path& run_a,
                                        const std::filesystem::path& run_b,
                                        const std::string& policy_a, const std::string& policy_b) {
    const json ma = read_manifest(run_a);
    const json mb = read_manifest(run_b);
    if (axes(ma.at("scenario")) != axes(mb.at("scenario"))) {
        throw ManifestMismatch("runs " + run_a.string() + " and " + run_b.string() +
                               " do not share the scenario axes");
    }
    const auto rows_a = read_metrics_csv(run_a / "metrics.csv");
    const auto rows_b = read_metrics_csv(run_b / "metrics.csv");
    const auto set_a = policies_in(rows_a);
    const auto set_b = policies_in(rows_b);

    std::vector<std::pair<std::string, std::string>> pairs;
    if (!policy_a.empty() || !policy_b.empty()) {
        const std::string a = policy_a.empty() ? policy_b : policy_a;
        const std::string b = policy_b.empty() ? policy_a : policy_b;
        pairs.emplace_back(a, b);
    } else if (set_a.size() == 1 && set_b.size() == 1) {
        pairs.emplace_back(*set_a.begin(), *set_b.begin());
    } else {
        for (const std::string& p : set_a) {
            if (set_b.count(p)) {
                pairs.emplace_back(p, p);
            }
        }
    }
    if (pairs.empty()) {
        throw ManifestMismatch("no policy pairs to compare");
    }

    std::vector<ComparisonRow> out;
    for (const json& point : ma.at("points")) {
        const auto idx = point.at("index").get<std::size_t>();
        for (const auto& [pa, pb] : pairs) {
            const MetricsRow* a = find_row(rows_a, idx, pa);
            const MetricsRow* b = find_row(rows_b, idx, pb);
            if (!a || !b) {
                throw ManifestMismatch("point " + std::to_string(idx) + " lacks policy " + (a ? pb : pa));
            }
            ComparisonRow r;
            r.point = idx;
            r.epsilon = a->epsilon;
            r.policy_a = pa;
            r.policy_b = pb;
            r.aoi_a = a->avg_aoi;
            r.aoi_b = b->avg_aoi;
            r.qaoi_a = a->avg_qaoi;
            r.qaoi_b = b->avg_qaoi;
            r.aoi_delta = a->avg_aoi - b->avg_aoi;
            r.qaoi_delta = a->avg_qaoi - b->avg_qaoi;
            r.aoi_se = std::hypot(a->avg_aoi_se, b->avg_aoi_se);
            r.qaoi_se = std::hypot(a->avg_qaoi_se, b->avg_qaoi_se);
            out.push_back(r);
        }
    }
    return out;
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "# qaoi comparison v1\n" << kComparisonHeader << '\n';
    char buf[512];
    for (const ComparisonRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.point, r.epsilon, r.policy_a.c_str(), r.policy_b.c_str(), r.aoi_a, r.aoi_b,
                      r.qaoi_a, r.qaoi_b, r.aoi_delta, r.qaoi_delta, r.aoi_se, r.qaoi_se);
        out << buf;
    }
}

} // namespace qaoi
