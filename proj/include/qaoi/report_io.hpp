#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qaoi/simulator.hpp"

namespace qaoi {

// Every CSV starts with a "# qaoi <kind> v1" line followed by a fixed header.
inline constexpr const char* kTraceHeader = "t,age,tokens,err_state,query_state,action,delivered,is_query";
inline constexpr const char* kDistributionHeader = "phase,age,probability";
inline constexpr const char* kMetricsHeader =
    "scenario,policy,point,epsilon,seeds,horizon,burn_in,avg_aoi,avg_aoi_se,avg_qaoi,avg_qaoi_se,"
    "n_queries,transmissions,deliveries,token_mean,token_p10,token_p50,token_p90,saturation";

/// A labelled age distribution; phase -1 is the unconditioned AoI, phase k
/// the age k slots after a query (phase 0 is the QAoI).
struct PhaseSeries {
    int phase;
    std::vector<double> by_age;  // index = age
};

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// Rows for ages 1 .. by_age.size() - 1 of every series.
void write_distribution_csv(const std::filesystem::path& path, const std::string& kind,
                            const std::vector<PhaseSeries>& series);

/// AoI (phase -1) and per-phase PMFs of a report.
std::vector<PhaseSeries> pmf_series(const MetricsReport& report);
/// AoI (phase -1) and per-phase CCDFs, P(age > x), of a report.
std::vector<PhaseSeries> ccdf_series(const MetricsReport& report);

struct MetricsRow {
    std::string scenario;
    std::string policy;
    std::size_t point = 0;
    double epsilon = 0.0;
    std::size_t seeds = 0;
    std::uint64_t horizon = 0;
    std::uint64_t burn_in = 0;
    double avg_aoi = 0.0;
    double avg_aoi_se = 0.0;
    double avg_qaoi = 0.0;
    double avg_qaoi_se = 0.0;
    std::uint64_t n_queries = 0;
    std::uint64_t transmissions = 0;
    std::uint64_t deliveries = 0;
    double token_mean = 0.0;
    std::size_t token_p10 = 0;
    std::size_t token_p50 = 0;
    std::size_t token_p90 = 0;
    double saturation = 0.0;  // share of slots with age == delta_max
};

MetricsRow make_metrics_row(const std::string& scenario, const std::string& policy,
                            std::size_t point, double epsilon, const SimConfig& sim,
                            const AggregateReport& agg, std::size_t delta_max);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
/// Throws ParseError on schema mismatch.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Split one CSV line on commas (no quoting is ever emitted).
std::vector<std::string> split_csv(const std::string& line);

} // namespace qaoi
