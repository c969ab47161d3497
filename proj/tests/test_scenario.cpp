#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qaoi/errors.hpp"
#include "qaoi/policy_io.hpp"
#include "qaoi/scenario.hpp"

using namespace qaoi;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "name": "tiny",
  "query": {"kind": "periodic", "period": 4},
  "error": {"kind": "constant", "epsilon": 0.3},
  "mu_b": 0.2,
  "bucket_size": 3,
  "delta_max_factor": 5,
  "sweep": [0.0, 0.5],
  "horizon": 20000,
  "seeds": 3,
  "seed": 11
})";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qaoi_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p, const std::string& kind, const std::string& header) {
    std::ifstream in(p);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "# qaoi " + kind + " v1");
    REQUIRE(std::getline(in, line));
    CHECK(line == header);
    std::vector<std::vector<std::string>> rows;
    const std::size_t cols = split_csv(header).size();
    while (std::getline(in, line)) {
        rows.push_back(split_csv(line));
        CHECK(rows.back().size() == cols);
    }
    return rows;
}

RunOptions opts(const fs::path& out, unsigned jobs = 1) {
    RunOptions o;
    o.out_dir = out;
    o.jobs = jobs;
    o.quiet = true;
    return o;
}

} // namespace

TEST_CASE("scenario parsing") {
    const ScenarioSpec s = parse_scenario(kTiny);
    CHECK(s.name == "tiny");
    CHECK(std::get<PeriodicQuery>(s.query).period == 4);
    CHECK(std::get<ConstantError>(s.error).epsilon == 0.3);
    CHECK(s.discount == 0.75);
    CHECK(s.costs.size() == 2);
    CHECK(delta_max_of(s) == 20);
    CHECK(burn_in_of(s) == 40);
    const auto pts = sweep_points(s);
    REQUIRE(pts.size() == 2);
    CHECK(std::get<ConstantError>(pts[1].error).epsilon == 0.5);

    // canonical JSON round-trips
    const ScenarioSpec again = parse_scenario(scenario_json(s));
    CHECK(scenario_json(again) == scenario_json(s));

    SUBCASE("defaults") {
        const auto d = parse_scenario(R"({"name":"d","query":{"kind":"uniform","min_gap":21,"max_gap":40},
            "error":{"kind":"satellite","period":10,"epsilon0":0.2},"mu_b":0.05,"bucket_size":10})");
        CHECK(d.delta_max_factor == 100);
        CHECK(delta_max_of(d) == 4000);
        CHECK(std::get<SatelliteError>(d.error).window == 2);
        CHECK(d.seeds == 10);
        CHECK(sweep_points(d).size() == 1);
        CHECK(sweep_points(d)[0].epsilon == 0.2);
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(parse_scenario("{"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":4},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2,"colour":1})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":0},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"weekly"},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":4},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2,"sweep":[1.2]})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":4},
            "error":{"kind":"satellite","period":4,"epsilon0":0.1,"window":5},"mu_b":0.1,"bucket_size":2})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":4},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2,"costs":["PQ","PQ"]})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"a,b","query":{"kind":"periodic","period":4},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":0.1,"bucket_size":2})"), ParseError);
        CHECK_THROWS_AS(parse_scenario(R"({"name":"x","query":{"kind":"periodic","period":4},
            "error":{"kind":"constant","epsilon":0.1},"mu_b":"fast","bucket_size":2})"), ParseError);
    }
}

TEST_CASE("run_scenario writes a complete, reproducible run directory") {
    const ScenarioSpec spec = parse_scenario(kTiny);
    const fs::path out = scratch("run");
    const RunResult result = run_scenario(spec, opts(out));
    REQUIRE(result.rows.size() == 4);
    CHECK(result.rows[0].policy == "PQ");
    CHECK(result.rows[1].policy == "QAPA");
    CHECK(result.rows[2].point == 1);

    const auto metrics = read_csv(out / "metrics.csv", "metrics", kMetricsHeader);
    CHECK(metrics.size() == 4);
    CHECK(read_metrics_csv(out / "metrics.csv").size() == 4);

    for (const char* cost : {"PQ", "QAPA"}) {
        for (int p = 0; p < 2; ++p) {
            const std::string stem = std::string(cost) + "_p0" + std::to_string(p);
            const auto pmf = read_csv(out / ("pmf_" + stem + ".csv"), "pmf", kDistributionHeader);
            std::map<int, double> mass;
            for (const auto& row : pmf) {
                mass[std::stoi(row[0])] += std::stod(row[2]);
            }
            CHECK(mass.size() == 5);  // AoI plus four phases
            for (const auto& [phase, m] : mass) {
                CHECK(std::abs(m - 1.0) < 1e-9);
            }
            const auto ccdf = read_csv(out / ("ccdf_" + stem + ".csv"), "ccdf", kDistributionHeader);
            std::map<int, double> last;
            for (const auto& row : ccdf) {
                const int phase = std::stoi(row[0]);
                const double v = std::stod(row[2]);
                if (last.count(phase)) {
                    CHECK(v <= last[phase]);
                }
                last[phase] = v;
            }
            const PolicyFile pf = read_policy(out / "policies" / (stem + ".policy"));
            CHECK(pf.policy.size() == 20 * 4 * 4);
        }
    }

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["format"] == "qaoi run v1");
    CHECK(manifest["points"].size() == 2);
    CHECK(manifest["scenario"]["seed"] == 11);

    SUBCASE("the manifest alone reproduces the CSVs") {
        const fs::path again = scratch("rerun");
        run_scenario(load_scenario(out / "manifest.json"), opts(again, 3));
        for (const auto& entry : fs::directory_iterator(out)) {
            if (entry.path().extension() == ".csv" || entry.path().filename() == "manifest.json") {
                CHECK(slurp(entry.path()) == slurp(again / entry.path().filename()));
            }
        }
        for (const auto& entry : fs::directory_iterator(out / "policies")) {
            CHECK(slurp(entry.path()) == slurp(again / "policies" / entry.path().filename()));
        }
    }

    SUBCASE("comparisons") {
        const auto same = compare_runs(out, out);
        CHECK(same.size() == 4);
        for (const auto& r : same) {
            CHECK(r.aoi_delta == 0.0);
            CHECK(r.qaoi_delta == 0.0);
        }
        const auto cross = compare_runs(out, out, "PQ", "QAPA");
        CHECK(cross.size() == 2);
        CHECK(cross[0].qaoi_delta == result.rows[0].avg_qaoi - result.rows[1].avg_qaoi);

        ScenarioSpec other = spec;
        other.mu_b = 0.3;
        const fs::path diff = scratch("other");
        run_scenario(other, opts(diff));
        CHECK_THROWS_AS(compare_runs(out, diff), ManifestMismatch);

    }
}

TEST_CASE("single-policy runs pair with each other") {
    ScenarioSpec spec = parse_scenario(kTiny);
    spec.name = "tiny_pq";
    spec.costs = {CostKind::PermanentQuery};
    const fs::path a = scratch("pair_pq");
    run_scenario(spec, opts(a));
    spec.name = "tiny_qa";
    spec.costs = {CostKind::QueryAware};
    const fs::path b = scratch("pair_qa");
    run_scenario(spec, opts(b));
    const auto rows = compare_runs(a, b);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].policy_a == "PQ");
    CHECK(rows[0].policy_b == "QAPA");
    CHECK(rows[0].qaoi_delta > 0.0);

    const fs::path csv = scratch("pair.csv");
    write_comparison_csv(csv, rows);
    const auto parsed = read_csv(csv, "comparison", kComparisonHeader);
    CHECK(parsed.size() == 2);
}

TEST_CASE("a channel that never delivers") {
    const ScenarioSpec spec = parse_scenario(R"({"name":"blocked","query":{"kind":"periodic","period":10},
        "error":{"kind":"constant","epsilon":1.0},"mu_b":0.1,"bucket_size":10,"delta_max_factor":10,
        "horizon":5000,"seeds":2})");
    const fs::path out = scratch("blocked");
    const RunResult r = run_scenario(spec, opts(out));
    for (const auto& s : r.solves) {
        CHECK(std::count(s.policy.actions.begin(), s.policy.actions.end(), 1) == 0);
    }
    // burn-in of 10 * T_q slots reaches the cap, so every recorded age is 100
    for (const auto& row : r.rows) {
        CHECK(row.avg_aoi == 100.0);
        CHECK(row.transmissions == 0);
        CHECK(row.saturation == 1.0);
    }
}

TEST_CASE("trace output") {
    ScenarioSpec spec = parse_scenario(kTiny);
    spec.sweep = {0.2};
    spec.horizon = 500;
    spec.seeds = 1;
    const fs::path out = scratch("trace");
    RunOptions o = opts(out);
    o.record_trace = true;
    run_scenario(spec, o);
    const auto rows = read_csv(out / "trace_QAPA_p00.csv", "trace", kTraceHeader);
    CHECK(rows.size() == 500);
}
