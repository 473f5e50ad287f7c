#include "lcsim/metrics.hpp"

#include "lcsim/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace lcsim {

void
record_rx(GroupStats& stats, double delay_s)
{
    if (!(delay_s >= 0.0))
    {
        throw InternalError(fmt::format("negative packet delay {} in group {}", delay_s, stats.group));
    }
    stats.rx_count += 1;
    stats.delay_sum += delay_s;
    if (stats.last_delay)
    {
        stats.jitter_sum += std::abs(delay_s - *stats.last_delay);
    }
    stats.last_delay = delay_s;
}

double
loss_ratio(const GroupStats& stats)
{
    if (stats.tx_count == 0)
    {
        throw UndefinedMetric(fmt::format("loss ratio of group {} with no transmissions", stats.group));
    }
    return static_cast<double>(stats.tx_count - stats.rx_count) /
           static_cast<double>(stats.tx_count);
}

double
mean_jitter(const GroupStats& stats)
{
    if (stats.rx_count < 2)
    {
        return 0.0;
    }
    return stats.jitter_sum / static_cast<double>(stats.rx_count - 1);
}

GroupReport
GroupReport::from_stats(const GroupStats& s)
{
    GroupReport r;
    r.group = s.group;
    r.context = s.context;
    r.tx = s.tx_count;
    r.rx = s.rx_count;
    r.lost_queue = s.lost_queue;
    r.lost_channel = s.lost_channel;
    if (s.rx_count > 0)
    {
        r.mean_delay_s = s.delay_sum / static_cast<double>(s.rx_count);
    }
    r.mean_jitter_s = mean_jitter(s);
    if (s.tx_count > 0)
    {
        r.loss_ratio = lcsim::loss_ratio(s);
    }
    return r;
}

std::vector<CsvRow>
csv_rows(const MetricsReport& report)
{
    std::vector<CsvRow> rows;
    rows.reserve(report.groups.size());
    for (const auto& g : report.groups)
    {
        rows.push_back(CsvRow{report.run_id, report.config.flow_rate_pps, report.config.num_groups,
                              report.config.nodes_per_group, report.config.packet_size_bytes,
                              g.group, g.mean_delay_s, g.mean_jitter_s, g.loss_ratio, g.tx, g.rx,
                              report.seed});
    }
    return rows;
}

namespace {

std::string
opt(const std::optional<double>& v)
{
    return v ? fmt::format("{}", *v) : std::string{};
}

std::vector<std::string_view>
split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos)
        {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class T>
T
parse_number(std::string_view field, const std::string& name, std::size_t line)
{
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
    {
        throw ParseError(name, line, fmt::format("bad number '{}'", field));
    }
    return value;
}

std::optional<double>
parse_optional(std::string_view field, const std::string& name, std::size_t line)
{
    if (field.empty())
    {
        return std::nullopt;
    }
    return parse_number<double>(field, name, line);
}

} // namespace

void
write_csv_rows(std::ostream& os, const MetricsReport& report)
{
    for (const auto& r : csv_rows(report))
    {
        fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.run_id, r.flow_rate_pps,
                   r.num_groups, r.nodes_per_group, r.packet_size, r.group, opt(r.mean_delay_s),
                   r.mean_jitter_s, opt(r.loss_ratio), r.tx, r.rx, r.seed);
    }
}

void
write_csv(std::ostream& os, std::span<const MetricsReport> reports)
{
    os << kCsvHeader << '\n';
    for (const auto& r : reports)
    {
        write_csv_rows(os, r);
    }
}

void
emit(std::span<const MetricsReport> reports, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
    {
        throw IoError(path.string(), "cannot open for writing");
    }
    write_csv(os, reports);
    os.flush();
    if (!os)
    {
        throw IoError(path.string(), "write failed");
    }
}

void
emit(const MetricsReport& report, const std::filesystem::path& path)
{
    emit(std::span<const MetricsReport>(&report, 1), path);
}

std::vector<CsvRow>
parse_csv(std::istream& is, const std::string& name)
{
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader)
    {
        throw ParseError(name, 1, "missing or unexpected CSV header");
    }
    std::vector<CsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.empty())
        {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 12)
        {
            throw ParseError(name, lineno, fmt::format("expected 12 fields, got {}", f.size()));
        }
        CsvRow r;
        r.run_id = parse_number<std::uint64_t>(f[0], name, lineno);
        r.flow_rate_pps = parse_number<double>(f[1], name, lineno);
        r.num_groups = parse_number<std::uint32_t>(f[2], name, lineno);
        r.nodes_per_group = parse_number<std::uint32_t>(f[3], name, lineno);
        r.packet_size = parse_number<std::int64_t>(f[4], name, lineno);
        r.group = parse_number<std::uint32_t>(f[5], name, lineno);
        r.mean_delay_s = parse_optional(f[6], name, lineno);
        r.mean_jitter_s = parse_number<double>(f[7], name, lineno);
        r.loss_ratio = parse_optional(f[8], name, lineno);
        r.tx = parse_number<std::uint64_t>(f[9], name, lineno);
        r.rx = parse_number<std::uint64_t>(f[10], name, lineno);
        r.seed = parse_number<std::uint64_t>(f[11], name, lineno);
        rows.push_back(r);
    }
    return rows;
}

void
write_gnuplot_summary(std::ostream& os, std::string_view axis, std::span<const SweepPoint> points)
{
    struct Acc
    {
        double delay = 0.0, jitter = 0.0, loss = 0.0;
        int n_delay = 0, n_jitter = 0, n_loss = 0;
    };
    std::map<double, std::map<std::uint32_t, Acc>> table;
    std::uint32_t max_group = 0;
    for (const auto& p : points)
    {
        auto& row = table[p.axis_value];
        for (const auto& g : p.report->groups)
        {
            max_group = std::max(max_group, g.group);
            auto& a = row[g.group];
            if (g.mean_delay_s)
            {
                a.delay += *g.mean_delay_s;
                ++a.n_delay;
            }
            a.jitter += g.mean_jitter_s;
            ++a.n_jitter;
            if (g.loss_ratio)
            {
                a.loss += *g.loss_ratio;
                ++a.n_loss;
            }
        }
    }
    os << "# " << axis;
    for (std::uint32_t g = 1; g <= max_group; ++g)
    {
        fmt::print(os, " mean_delay_g{0} mean_jitter_g{0} loss_ratio_g{0}", g);
    }
    os << '\n';
    auto cell = [](double sum, int n) {
        return n > 0 ? fmt::format("{}", sum / n) : std::string("NaN");
    };
    for (const auto& [value, row] : table)
    {
        fmt::print(os, "{}", value);
        for (std::uint32_t g = 1; g <= max_group; ++g)
        {
            auto it = row.find(g);
            if (it == row.end())
            {
                os << " NaN NaN NaN";
                continue;
            }
            const Acc& a = it->second;
            fmt::print(os, " {} {} {}", cell(a.delay, a.n_delay), cell(a.jitter, a.n_jitter),
                       cell(a.loss, a.n_loss));
        }
        os << '\n';
    }
}

} // namespace lcsim
