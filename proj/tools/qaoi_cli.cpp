// qaoi: solve, simulate and compare query-aware AoI scheduling policies.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qaoi/analytic.hpp"
#include "qaoi/errors.hpp"
#include "qaoi/policy_io.hpp"
#include "qaoi/report_io.hpp"
#include "qaoi/scenario.hpp"
#include "qaoi/simulator.hpp"

namespace fs = std::filesystem;
using namespace qaoi;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kNonConvergence = 3,
    kMismatch = 4,
};

struct Common {
    std::string config;
    std::string out;
    unsigned jobs = 0;
    std::optional<std::size_t> seeds;
    std::optional<std::uint64_t> seed;
    bool trace = false;
    bool quiet = false;
};

unsigned resolve_jobs(unsigned flag) {
    if (flag > 0) {
        return flag;
    }
    if (const char* env = std::getenv("QAOI_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return 1;
}

fs::path resolve_out(const std::string& flag, const std::string& fallback) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("QAOI_OUT_DIR")) {
        if (*env) {
            return fs::path(env) / fallback;
        }
    }
    return fs::path("out") / fallback;
}

ScenarioSpec load_with_overrides(const Common& c) {
    ScenarioSpec spec = load_scenario(c.config);
    if (c.seeds) {
        spec.seeds = *c.seeds;
    }
    if (c.seed) {
        spec.seed = *c.seed;
    }
    return spec;
}

void add_common(CLI::App* cmd, Common& c, bool simulation) {
    cmd->add_option("-c,--config", c.config, "scenario JSON file (or a run manifest)")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", c.out, "output directory (default $QAOI_OUT_DIR/<name> or out/<name>)");
    cmd->add_option("-j,--jobs", c.jobs, "parallel workers (default $QAOI_JOBS or 1)");
    cmd->add_flag("-q,--quiet", c.quiet, "no progress lines");
    if (simulation) {
        cmd->add_option("--seeds", c.seeds, "number of seeds (overrides the config)");
        cmd->add_option("--seed", c.seed, "first seed (overrides the config)");
        cmd->add_flag("--trace", c.trace, "also write a per-slot trace of the first seed");
    }
}

int cmd_run(const Common& c, bool solve_only) {
    const ScenarioSpec spec = load_with_overrides(c);
    RunOptions opts;
    opts.out_dir = resolve_out(c.out, spec.name);
    opts.jobs = resolve_jobs(c.jobs);
    opts.solve_only = solve_only;
    opts.record_trace = c.trace;
    opts.quiet = c.quiet;
    const RunResult result = run_scenario(spec, opts);
    if (!solve_only) {
        std::printf("%-6s %5s %9s %12s %12s\n", "policy", "point", "epsilon", "avg_aoi", "avg_qaoi");
        for (const MetricsRow& r : result.rows) {
            std::printf("%-6s %5zu %9.4g %12.5f %12.5f\n", r.policy.c_str(), r.point, r.epsilon, r.avg_aoi,
                        r.avg_qaoi);
        }
    }
    std::printf("wrote %s\n", opts.out_dir.c_str());
    return kOk;
}

int cmd_simulate(const Common& c, const std::string& policy_path) {
    const ScenarioSpec spec = load_with_overrides(c);
    const PolicyFile file = read_policy(fs::path(policy_path));
    for (const SweepPoint& p : sweep_points(spec)) {
        const ModelConfig config = build_model(spec, p, file.cost);
        if (config_hash(config) != file.config_hash) {
            continue;
        }
        check_compatible(file, config);
        const fs::path out = resolve_out(c.out, spec.name + "_sim");
        fs::create_directories(out);
        const SimConfig sim = sim_config_of(spec);
        const AggregateReport agg =
            simulate_seeds(config, file.policy, sim, spec.seeds, resolve_jobs(c.jobs));
        const std::string policy = to_string(file.cost);
        write_metrics_csv(out / "metrics.csv",
                          {make_metrics_row(spec.name, policy, p.index, p.epsilon, sim, agg, config.delta_max)});
        write_distribution_csv(out / "pmf.csv", "pmf", pmf_series(agg.merged));
        write_distribution_csv(out / "ccdf.csv", "ccdf", ccdf_series(agg.merged));
        if (c.trace) {
            SimConfig traced = sim;
            traced.record_trace = true;
            write_trace_csv(out / "trace.csv", simulate_policy(config, file.policy, traced).trace);
        }
        std::printf("%s point %zu: avg_aoi %.5f (se %.2g) avg_qaoi %.5f (se %.2g)\nwrote %s\n", policy.c_str(),
                    p.index, agg.merged.avg_aoi, agg.aoi_stderr, agg.merged.avg_qaoi, agg.qaoi_stderr,
                    out.c_str());
        return kOk;
    }
    throw IndexMismatch("policy " + policy_path + " was not solved for any point of " + c.config);
}

std::vector<double> ccdf_from_pmf(const std::vector<double>& pmf) {
    std::vector<double> out(pmf.size());
    double below = 0.0;
    for (std::size_t x = 0; x < pmf.size(); ++x) {
        below += pmf[x];
        out[x] = std::max(0.0, 1.0 - below);
    }
    return out;
}

int cmd_analytic(const Common& c) {
    std::ifstream in(c.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in).at("analytic");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(c.config + ": expected an object with an 'analytic' member: " + e.what());
    }
    analytic::SimpleCaseParams p;
    std::size_t max_age = 200;
    std::uint64_t horizon = 0;
    std::uint64_t seed = 1;
    try {
        p.epsilon = j.value("epsilon", p.epsilon);
        p.query_period = j.value("query_period", p.query_period);
        p.duty_cycle = j.value("duty_cycle", p.duty_cycle);
        p.offset = j.value("offset", p.offset);
        max_age = j.value("max_age", max_age);
        horizon = j.value("horizon", horizon);
        seed = j.value("seed", seed);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(c.config + ": " + e.what());
    }
    if (c.seed) {
        seed = *c.seed;
    }
    try {
        analytic::validate(p);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    const fs::path out = resolve_out(c.out, "analytic");
    fs::create_directories(out);

    const auto table = [&](double (*f)(std::size_t, const analytic::SimpleCaseParams&)) {
        std::vector<double> v(max_age + 1, 0.0);
        for (std::size_t t = 1; t <= max_age; ++t) {
            v[t] = f(t, p);
        }
        return v;
    };
    const auto pq_aoi = table(analytic::pmf_pq_aoi);
    const auto pq_qaoi = table(analytic::pmf_pq_qaoi);
    const auto qapa_aoi = table(analytic::pmf_qapa_aoi);
    const auto qapa_qaoi = table(analytic::pmf_qapa_qaoi);
    write_distribution_csv(out / "analytic_pq_pmf.csv", "pmf", {{-1, pq_aoi}, {0, pq_qaoi}});
    write_distribution_csv(out / "analytic_qapa_pmf.csv", "pmf", {{-1, qapa_aoi}, {0, qapa_qaoi}});
    write_distribution_csv(out / "analytic_pq_ccdf.csv", "ccdf",
                           {{-1, ccdf_from_pmf(pq_aoi)}, {0, ccdf_from_pmf(pq_qaoi)}});
    write_distribution_csv(out / "analytic_qapa_ccdf.csv", "ccdf",
                           {{-1, ccdf_from_pmf(qapa_aoi)}, {0, ccdf_from_pmf(qapa_qaoi)}});

    if (horizon > 0) {
        SimConfig sim;
        sim.horizon = horizon;
        sim.burn_in = 10 * p.query_period;
        sim.seed = seed;
        const std::pair<const char*, FixedStrategy> strategies[] = {
            {"pq", EquallySpaced{p.tx_interval()}},
            {"qapa", PreQueryBurst{p.burst()}},
        };
        for (const auto& [label, strategy] : strategies) {
            const MetricsReport r = simulate_fixed(strategy, p.epsilon, p.query_period, p.duty_cycle, sim);
            write_distribution_csv(out / (std::string("fixed_") + label + "_pmf.csv"), "pmf",
                                   {{-1, r.aoi.pmf()}, {0, r.qaoi.pmf()}});
            write_distribution_csv(out / (std::string("fixed_") + label + "_ccdf.csv"), "ccdf",
                                   {{-1, r.aoi.ccdf()}, {0, r.qaoi.ccdf()}});
            std::printf("%-4s simulated: avg_aoi %.5f avg_qaoi %.5f over %llu queries\n", label, r.avg_aoi,
                        r.avg_qaoi, static_cast<unsigned long long>(r.n_queries));
        }
    }
    std::printf("wrote %s\n", out.c_str());
    return kOk;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& pa, const std::string& pb,
                const std::string& out) {
    const auto rows = compare_runs(a, b, pa, pb);
    if (out.empty() || out == "-") {
        std::printf("# qaoi comparison v1\n%s\n", kComparisonHeader);
        for (const ComparisonRow& r : rows) {
            std::printf("%zu,%.17g,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.point, r.epsilon,
                        r.policy_a.c_str(), r.policy_b.c_str(), r.aoi_a, r.aoi_b, r.qaoi_a, r.qaoi_b,
                        r.aoi_delta, r.qaoi_delta, r.aoi_se, r.qaoi_se);
        }
    } else {
        write_comparison_csv(out, rows);
        std::printf("wrote %s\n", out.c_str());
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Query-aware age-of-information scheduling: solve, simulate, compare"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    Common solve_c, run_c, sim_c, analytic_c;
    auto* solve = app.add_subcommand("solve", "solve every sweep point and cost, write policy files");
    add_common(solve, solve_c, false);

    auto* run = app.add_subcommand("run", "solve and simulate a scenario");
    add_common(run, run_c, true);

    std::string policy_path;
    auto* simulate = app.add_subcommand("simulate", "simulate a stored policy of a scenario");
    add_common(simulate, sim_c, true);
    simulate->add_option("-p,--policy", policy_path, "policy file written by solve/run")
        ->required()
        ->check(CLI::ExistingFile);

    auto* analytic = app.add_subcommand("analytic", "closed-form PMFs of the feedback-free example");
    analytic->add_option("-c,--config", analytic_c.config, "JSON file with an 'analytic' object")
        ->required()
        ->check(CLI::ExistingFile);
    analytic->add_option("-o,--out", analytic_c.out, "output directory");
    analytic->add_option("--seed", analytic_c.seed, "seed for the optional simulated counterpart");

    std::string run_a, run_b, policy_a, policy_b, compare_out;
    auto* compare = app.add_subcommand("compare", "per-point deltas between two run directories");
    compare->add_option("run_a", run_a, "first run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("run_b", run_b, "second run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--policy-a", policy_a, "policy taken from run_a (PQ or QAPA)");
    compare->add_option("--policy-b", policy_b, "policy taken from run_b (PQ or QAPA)");
    compare->add_option("-o,--out", compare_out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // help and version exit 0, everything else is a usage error
    }

    try {
        if (*solve) {
            return cmd_run(solve_c, true);
        }
        if (*run) {
            return cmd_run(run_c, false);
        }
        if (*simulate) {
            return cmd_simulate(sim_c, policy_path);
        }
        if (*analytic) {
            return cmd_analytic(analytic_c);
        }
        if (*compare) {
            return cmd_compare(run_a, run_b, policy_a, policy_b, compare_out);
        }
    } catch (const ParseError& e) {
        std::fprintf(stderr, "qaoi: %s\n", e.what());
        return kUsage;
    } catch (const NonConvergence& e) {
        std::fprintf(stderr, "qaoi: %s\n", e.what());
        return kNonConvergence;
    } catch (const ManifestMismatch& e) {
        std::fprintf(stderr, "qaoi: %s\n", e.what());
        return kMismatch;
    } catch (const IndexMismatch& e) {
        std::fprintf(stderr, "qaoi: %s\n", e.what());
        return kMismatch;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qaoi: %s\n", e.what());
        return kFailure;
    }
    return kOk;
}
