#pragma once

#include "lcsim/ids.hpp"
#include "lcsim/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcsim {

/// Running statistics of one group (cluster) of senders.
struct GroupStats
{
    std::uint32_t group = 0; // 1-based
    ContextId context;
    std::uint64_t tx_count = 0;
    std::uint64_t rx_count = 0;
    std::uint64_t lost_queue = 0;
    std::uint64_t lost_channel = 0;
    double delay_sum = 0.0;  // seconds
    double jitter_sum = 0.0; // seconds
    std::optional<double> last_delay;
};

/// Throws InternalError on a negative delay.
void record_rx(GroupStats& stats, double delay_s);

/// (tx - rx) / tx. Throws UndefinedMetric when nothing was sent.
double loss_ratio(const GroupStats& stats);

/// Mean |delay_i - delay_{i-1}| over consecutive receptions; 0 with fewer than two.
double mean_jitter(const GroupStats& stats);

struct GroupReport
{
    std::uint32_t group = 0;
    ContextId context;
    std::uint64_t tx = 0;
    std::uint64_t rx = 0;
    std::uint64_t lost_queue = 0;
    std::uint64_t lost_channel = 0;
    std::optional<double> mean_delay_s; // empty iff rx == 0
    double mean_jitter_s = 0.0;
    std::optional<double> loss_ratio; // empty iff tx == 0

    static GroupReport from_stats(const GroupStats& stats);
};

struct Totals
{
    std::uint64_t tx = 0;
    std::uint64_t rx = 0;
    std::uint64_t lost_queue = 0;
    std::uint64_t lost_channel = 0;
    std::uint64_t in_flight = 0;
};

struct MetricsReport
{
    std::uint64_t run_id = 0;
    ScenarioConfig config;
    std::uint64_t seed = 0;
    std::vector<GroupReport> groups;
    Totals totals;
};

inline constexpr std::string_view kCsvHeader =
    "run_id,flow_rate_pps,num_groups,nodes_per_group,packet_size,group,mean_delay_s,"
    "mean_jitter_s,loss_ratio,tx,rx,seed";

/// One parsed CSV row.
struct CsvRow
{
    std::uint64_t run_id = 0;
    double flow_rate_pps = 0.0;
    std::uint32_t num_groups = 0;
    std::uint32_t nodes_per_group = 0;
    std::int64_t packet_size = 0;
    std::uint32_t group = 0;
    std::optional<double> mean_delay_s;
    double mean_jitter_s = 0.0;
    std::optional<double> loss_ratio;
    std::uint64_t tx = 0;
    std::uint64_t rx = 0;
    std::uint64_t seed = 0;

    bool operator==(const CsvRow&) const = default;
};

std::vector<CsvRow> csv_rows(const MetricsReport& report);

void write_csv_rows(std::ostream& os, const MetricsReport& report);
void write_csv(std::ostream& os, std::span<const MetricsReport> reports);

/// Writes header + rows to path. Throws IoError naming the path.
void emit(const MetricsReport& report, const std::filesystem::path& path);
void emit(std::span<const MetricsReport> reports, const std::filesystem::path& path);

/// Throws ParseError on a malformed header or row.
std::vector<CsvRow> parse_csv(std::istream& is, const std::string& name = "<csv>");

struct SweepPoint
{
    double axis_value = 0.0;
    const MetricsReport* report = nullptr;
};

/// Whitespace-separated table for gnuplot: one line per axis value (repetitions
/// averaged), columns mean_delay/mean_jitter/loss per group, NaN where missing.
void write_gnuplot_summary(std::ostream& os, std::string_view axis, std::span<const SweepPoint> points);

} // namespace lcsim
