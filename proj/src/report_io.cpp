#include "qaoi/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qaoi/errors.hpp"

namespace qaoi {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    auto out = open_out(path);
    out << "# qaoi trace v1\n" << kTraceHeader << '\n';
    char buf[128];
    for (const TraceRow& r : trace) {
        const int len = std::snprintf(buf, sizeof buf, "%llu,%u,%u,%u,%u,%u,%u,%u\n",
                                      static_cast<unsigned long long>(r.t), r.age, r.tokens,
                                      r.err_state, r.query_state, r.action, r.delivered, r.is_query);
        out.write(buf, len);
    }
}

void write_distribution_csv(const std::filesystem::path& path, const std::string& kind,
                            const std::vector<PhaseSeries>& series) {
    auto out = open_out(path);
    out << "# qaoi " << kind << " v1\n" << kDistributionHeader << '\n';
    for (const PhaseSeries& s : series) {
        for (std::size_t age = 1; age < s.by_age.size(); ++age) {
            out << s.phase << ',' << age << ',' << fmt(s.by_age[age]) << '\n';
        }
    }
}

std::vector<PhaseSeries> pmf_series(const MetricsReport& report) {
    std::vector<PhaseSeries> out{{-1, report.aoi.pmf()}};
    for (std::size_t k = 0; k < report.phase.size(); ++k) {
        out.push_back({static_cast<int>(k), report.phase[k].pmf()});
    }
    return out;
}

std::vector<PhaseSeries> ccdf_series(const MetricsReport& report) {
    std::vector<PhaseSeries> out{{-1, report.aoi.ccdf()}};
    for (std::size_t k = 0; k < report.phase.size(); ++k) {
        out.push_back({static_cast<int>(k), report.phase[k].ccdf()});
    }
    return out;
}

MetricsRow make_metrics_row(const std::string& scenario, const std::string& policy,
                            std::size_t point, double epsilon, const SimConfig& sim,
                            const AggregateReport& agg, std::size_t delta_max) {
    const MetricsReport& m = agg.merged;
    const TokenSummary tokens = m.token_summary();
    MetricsRow row;
    row.scenario = scenario;
    row.policy = policy;
    row.point = point;
    row.epsilon = epsilon;
    row.seeds = agg.per_seed.size();
    row.horizon = sim.horizon;
    row.burn_in = sim.burn_in;
    row.avg_aoi = m.avg_aoi;
    row.avg_aoi_se = agg.aoi_stderr;
    row.avg_qaoi = m.avg_qaoi;
    row.avg_qaoi_se = agg.qaoi_stderr;
    row.n_queries = m.n_queries;
    row.transmissions = m.n_transmissions;
    row.deliveries = m.n_deliveries;
    row.token_mean = tokens.mean;
    row.token_p10 = tokens.p10;
    row.token_p50 = tokens.p50;
    row.token_p90 = tokens.p90;
    const std::uint64_t at_cap = delta_max < m.aoi.counts.size() ? m.aoi.counts[delta_max] : 0;
    row.saturation = m.n_slots ? static_cast<double>(at_cap) / static_cast<double>(m.n_slots) : 0.0;
    return row;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
    auto out = open_out(path);
    out << "# qaoi metrics v1\n" << kMetricsHeader << '\n';
    for (const MetricsRow& r : rows) {
        out << r.scenario << ',' << r.policy << ',' << r.point << ',' << fmt(r.epsilon) << ','
            << r.seeds << ',' << r.horizon << ',' << r.burn_in << ',' << fmt(r.avg_aoi) << ','
            << fmt(r.avg_aoi_se) << ',' << fmt(r.avg_qaoi) << ',' << fmt(r.avg_qaoi_se) << ','
            << r.n_queries << ',' << r.transmissions << ',' << r.deliveries << ','
            << fmt(r.token_mean) << ',' << r.token_p10 << ',' << r.token_p50 << ',' << r.token_p90
            << ',' << fmt(r.saturation) << '\n';
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "# qaoi metrics v1") {
        throw ParseError(path.string() + ": not a qaoi metrics v1 file");
    }
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw ParseError(path.string() + ": unexpected metrics header");
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 19) {
            throw ParseError(path.string() + ": metrics row with " + std::to_string(f.size()) +
                             " fields");
        }
        try {
            MetricsRow r;
            r.scenario = f[0];
            r.policy = f[1];
            r.point = std::stoul(f[2]);
            r.epsilon = std::stod(f[3]);
            r.seeds = std::stoul(f[4]);
            r.horizon = std::stoull(f[5]);
            r.burn_in = std::stoull(f[6]);
            r.avg_aoi = std::stod(f[7]);
            r.avg_aoi_se = std::stod(f[8]);
            r.avg_qaoi = std::stod(f[9]);
            r.avg_qaoi_se = std::stod(f[10]);
            r.n_queries = std::stoull(f[11]);
            r.transmissions = std::stoull(f[12]);
            r.deliveries = std::stoull(f[13]);
            r.token_mean = std::stod(f[14]);
            r.token_p10 = std::stoul(f[15]);
            r.token_p50 = std::stoul(f[16]);
            r.token_p90 = std::stoul(f[17]);
            r.saturation = std::stod(f[18]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ": malformed metrics row: " + line);
        }
    }
    return rows;
}

} // namespace qaoi
