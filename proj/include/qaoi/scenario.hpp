#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qaoi/chain.hpp"
#include "qaoi/model.hpp"
#include "qaoi/report_io.hpp"
#include "qaoi/simulator.hpp"
#include "qaoi/solver.hpp"

namespace qaoi {

const char* version() noexcept;

/**
 * One experiment: chains, energy model and truncation. `sweep`, when given,
 * replaces the erasure probability of a constant channel or epsilon0 of a
 * satellite channel, one point per value. Simulation length and seeds live
 * here too so that the manifest written next to a run reproduces it.
 */
struct ScenarioSpec {
    std::string name;
    QueryDescriptor query = PeriodicQuery{40};
    ErrorDescriptor error = ConstantError{0.0};
    double mu_b = 0.1;
    std::size_t bucket_size = 10;
    std::size_t delta_max_factor = 100;
    std::optional<std::size_t> delta_max;  // overrides the factor
    double discount = 0.75;
    std::vector<CostKind> costs{CostKind::PermanentQuery, CostKind::QueryAware};
    std::vector<double> sweep;

    double tol = 1e-9;
    std::uint64_t horizon = 1'000'000;
    std::optional<std::uint64_t> burn_in;  // default 10 * T_q
    std::size_t seeds = 10;
    std::uint64_t seed = 1;
};

/// Parse a scenario object, or the "scenario" member of a run manifest.
/// Throws ParseError on unknown keys, wrong types or invalid parameters.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
/// Canonical JSON with every default spelled out.
std::string scenario_json(const ScenarioSpec& spec, int indent = 2);

/// Characteristic query period: the period, the largest gap, or the mean gap.
std::size_t reference_period(const QueryDescriptor& query);

struct SweepPoint {
    std::size_t index;
    double epsilon;  // epsilon or epsilon0 of this point
    ErrorDescriptor error;
};
std::vector<SweepPoint> sweep_points(const ScenarioSpec& spec);

std::size_t delta_max_of(const ScenarioSpec& spec);
std::uint64_t burn_in_of(const ScenarioSpec& spec);
SimConfig sim_config_of(const ScenarioSpec& spec);

ModelConfig build_model(const ScenarioSpec& spec, const SweepPoint& point, CostKind cost);

struct RunOptions {
    std::filesystem::path out_dir;
    unsigned jobs = 1;
    bool solve_only = false;
    bool record_trace = false;  // first seed of every job, trace_*.csv
    bool quiet = false;
};

struct RunResult {
    std::vector<MetricsRow> rows;  // ordered by (point, cost)
    std::vector<SolveReport> solves;
};

/**
 * Solve every (sweep point, cost) pair, simulate each policy over the seeds
 * and write policy files, metrics.csv, pmf/ccdf CSVs and manifest.json into
 * out_dir. Jobs run on up to `jobs` threads; every job writes only its own
 * files and metrics.csv is written once at the end.
 */
RunResult run_scenario(const ScenarioSpec& spec, const RunOptions& options);

/// Policy file name used by run_scenario for a job.
std::string policy_file_name(const SweepPoint& point, CostKind cost);

struct ComparisonRow {
    std::size_t point;
    double epsilon;
    std::string policy_a;
    std::string policy_b;
    double aoi_a;
    double aoi_b;
    double qaoi_a;
    double qaoi_b;
    double aoi_delta;   // a - b
    double qaoi_delta;  // a - b
    double aoi_se;      // combined standard error of the delta
    double qaoi_se;
};

inline constexpr const char* kComparisonHeader =
    "point,epsilon,policy_a,policy_b,avg_aoi_a,avg_aoi_b,avg_qaoi_a,avg_qaoi_b,aoi_delta,qaoi_delta,"
    "aoi_delta_se,qaoi_delta_se";

/**
 * Pair the metrics of two run directories point by point. Policies are
 * taken from `policy_a` / `policy_b` when given; otherwise a run holding a
 * single policy contributes that one, and two multi-policy runs are paired
 * by policy name. Throws ManifestMismatch unless both runs share the
 * scenario axes (everything except the cost list).
 */
std::vector<ComparisonRow> compare_runs(const std::filesystem::path& run_a,
                                        const std::filesystem::path& run_b,
                                        const std::string& policy_a = {},
                                        const std::string& policy_b = {});
void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);

} // namespace qaoi
