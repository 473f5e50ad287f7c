#include "lcsim/config_file.hpp"

#include "lcsim/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace lcsim {

std::string_view
to_string(Axis axis)
{
    switch (axis)
    {
    case Axis::flow_rate_pps:
        return "flow_rate_pps";
    case Axis::nodes_per_group:
        return "nodes_per_group";
    case Axis::num_groups:
        return "num_groups";
    case Axis::packet_size_bytes:
        return "packet_size_bytes";
    }
    return "?";
}

namespace {

std::string_view
trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
    {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Value
{
    std::vector<std::string> items;
    bool is_list = false;
};

struct Ctx
{
    const std::string& name;
    std::size_t line;
    std::string key;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError(name, line, fmt::format("{}: {}", key, what));
    }
};

double
to_double(const Ctx& ctx, std::string_view s)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        ctx.fail(fmt::format("expected a number, got '{}'", s));
    }
    return v;
}

std::int64_t
to_int(const Ctx& ctx, std::string_view s)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        ctx.fail(fmt::format("expected an integer, got '{}'", s));
    }
    return v;
}

std::uint32_t
to_u32(const Ctx& ctx, std::string_view s)
{
    const std::int64_t v = to_int(ctx, s);
    if (v < 0 || v > std::numeric_limits<std::uint32_t>::max())
    {
        throw ConfigError(ctx.key, fmt::format("{} is out of range", v));
    }
    return static_cast<std::uint32_t>(v);
}

std::uint64_t
to_u64(const Ctx& ctx, std::string_view s)
{
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
    {
        ctx.fail(fmt::format("expected an unsigned integer, got '{}'", s));
    }
    return v;
}

bool
to_bool(const Ctx& ctx, std::string_view s)
{
    if (s == "true")
    {
        return true;
    }
    if (s == "false")
    {
        return false;
    }
    ctx.fail(fmt::format("expected true or false, got '{}'", s));
}

using Setter = std::function<void(ScenarioConfig&, const Ctx&, const std::string&)>;

template <class T, class Conv>
Setter
field(T ScenarioConfig::*member, Conv conv)
{
    return [member, conv](ScenarioConfig& c, const Ctx& ctx, const std::string& s) {
        c.*member = conv(ctx, s);
    };
}

const std::map<std::string, Setter, std::less<>>&
scalar_keys()
{
    static const std::map<std::string, Setter, std::less<>> keys = {
        {"num_networks", field(&ScenarioConfig::num_networks, to_u32)},
        {"nodes_per_network", field(&ScenarioConfig::nodes_per_network, to_u32)},
        {"num_groups", field(&ScenarioConfig::num_groups, to_u32)},
        {"nodes_per_group", field(&ScenarioConfig::nodes_per_group, to_u32)},
        {"flow_rate_pps", field(&ScenarioConfig::flow_rate_pps, to_double)},
        {"packet_size_bytes", field(&ScenarioConfig::packet_size_bytes, to_int)},
        {"data_rate_bps", field(&ScenarioConfig::data_rate_bps, to_int)},
        {"total_packets", field(&ScenarioConfig::total_packets, to_int)},
        {"prop_delay_s", field(&ScenarioConfig::prop_delay_s, to_double)},
        {"sink_link_delay_s", field(&ScenarioConfig::sink_link_delay_s, to_double)},
        {"base_loss_prob", field(&ScenarioConfig::base_loss_prob, to_double)},
        {"out_of_range_loss_prob", field(&ScenarioConfig::out_of_range_loss_prob, to_double)},
        {"range_m", field(&ScenarioConfig::range_m, to_double)},
        {"queue_capacity_pkts", field(&ScenarioConfig::queue_capacity_pkts, to_int)},
        {"seed", field(&ScenarioConfig::seed, to_u64)},
        {"duration_s", field(&ScenarioConfig::duration_s, to_double)},
        {"shared_medium", field(&ScenarioConfig::shared_medium, to_bool)},
        {"join_window_s", field(&ScenarioConfig::join_window_s, to_double)},
        {"clock_skew_ppm", field(&ScenarioConfig::clock_skew_ppm, to_double)},
        {"mobility_enabled",
         [](ScenarioConfig& c, const Ctx& ctx, const std::string& s) { c.mobility.enabled = to_bool(ctx, s); }},
        {"mobility_speed_mps",
         [](ScenarioConfig& c, const Ctx& ctx, const std::string& s) { c.mobility.speed_mps = to_double(ctx, s); }},
        {"mobility_step_s",
         [](ScenarioConfig& c, const Ctx& ctx, const std::string& s) { c.mobility.step_s = to_double(ctx, s); }},
    };
    return keys;
}

std::optional<Axis>
axis_of(std::string_view key)
{
    for (Axis a : {Axis::flow_rate_pps, Axis::nodes_per_group, Axis::num_groups, Axis::packet_size_bytes})
    {
        if (to_string(a) == key)
        {
            return a;
        }
    }
    return std::nullopt;
}

Value
parse_value(const Ctx& ctx, std::string_view raw)
{
    Value v;
    if (raw.empty())
    {
        ctx.fail("missing value");
    }
    if (raw.front() != '[')
    {
        v.items.emplace_back(raw);
        return v;
    }
    if (raw.back() != ']')
    {
        ctx.fail("unterminated list");
    }
    v.is_list = true;
    const std::string_view body = trim(raw.substr(1, raw.size() - 2));
    if (body.empty())
    {
        return v;
    }
    std::size_t start = 0;
    for (;;)
    {
        const auto comma = body.find(',', start);
        const auto item = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
        if (item.empty())
        {
            ctx.fail("empty list element");
        }
        v.items.emplace_back(item);
        if (comma == std::string_view::npos)
        {
            return v;
        }
        start = comma + 1;
    }
}

} // namespace

ScenarioConfig
with_axis(ScenarioConfig cfg, Axis axis, double value)
{
    switch (axis)
    {
    case Axis::flow_rate_pps:
        cfg.flow_rate_pps = value;
        break;
    case Axis::nodes_per_group:
        cfg.nodes_per_group = static_cast<std::uint32_t>(value);
        break;
    case Axis::num_groups:
        cfg.num_groups = static_cast<std::uint32_t>(value);
        break;
    case Axis::packet_size_bytes:
        cfg.packet_size_bytes = static_cast<std::int64_t>(value);
        break;
    }
    return cfg;
}

ParsedConfig
parse_config(std::string_view text, const std::string& name)
{
    ScenarioConfig cfg;
    std::optional<SweepSpec> sweep;
    std::optional<std::uint32_t> repetitions;
    std::set<std::string, std::less<>> seen;

    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw_line;
    while (std::getline(in, raw_line))
    {
        ++lineno;
        std::string_view line = raw_line;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
        {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty())
        {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
        {
            throw ParseError(name, lineno, fmt::format("expected 'key = value', got '{}'", line));
        }
        const Ctx ctx{name, lineno, std::string(trim(line.substr(0, eq)))};
        if (ctx.key.empty())
        {
            throw ParseError(name, lineno, "missing key");
        }
        if (!seen.insert(ctx.key).second)
        {
            ctx.fail("duplicate key");
        }
        const Value value = parse_value(ctx, trim(line.substr(eq + 1)));

        if (ctx.key == "repetitions")
        {
            if (value.is_list)
            {
                ctx.fail("expected a scalar");
            }
            repetitions = to_u32(ctx, value.items.front());
            if (*repetitions == 0)
            {
                throw ConfigError("repetitions", "must be at least 1");
            }
            continue;
        }
        if (ctx.key == "mobile_networks")
        {
            if (!value.is_list)
            {
                ctx.fail("expected a list, e.g. [2, 3]");
            }
            cfg.mobility.mobile_networks.clear();
            for (const auto& item : value.items)
            {
                cfg.mobility.mobile_networks.push_back(to_u32(ctx, item));
            }
            continue;
        }
        if (ctx.key == "mobility_bounds")
        {
            if (!value.is_list || value.items.size() != 4)
            {
                ctx.fail("expected [x_min, x_max, y_min, y_max]");
            }
            cfg.mobility.bounds = Bounds{to_double(ctx, value.items[0]), to_double(ctx, value.items[1]),
                                         to_double(ctx, value.items[2]), to_double(ctx, value.items[3])};
            continue;
        }

        const auto& keys = scalar_keys();
        const auto it = keys.find(ctx.key);
        if (it == keys.end())
        {
            ctx.fail("unknown key");
        }
        if (!value.is_list)
        {
            it->second(cfg, ctx, value.items.front());
            continue;
        }
        const auto axis = axis_of(ctx.key);
        if (!axis)
        {
            ctx.fail("lists are only allowed on sweep axes");
        }
        if (sweep)
        {
            ctx.fail(fmt::format("only one sweep axis allowed, already sweeping {}", to_string(sweep->axis)));
        }
        if (value.items.empty())
        {
            throw ConfigError(ctx.key, "sweep list is empty");
        }
        sweep = SweepSpec{};
        sweep->axis = *axis;
        for (const auto& item : value.items)
        {
            const double v = *axis == Axis::flow_rate_pps ? to_double(ctx, item)
                                                          : static_cast<double>(to_int(ctx, item));
            sweep->values.push_back(v);
        }
    }

    if (!sweep)
    {
        if (repetitions)
        {
            throw ConfigError("repetitions", "only meaningful with a sweep axis list");
        }
        cfg.validate();
        return cfg;
    }
    sweep->base = cfg;
    sweep->repetitions = repetitions.value_or(1);
    std::set<double> distinct;
    for (double v : sweep->values)
    {
        if (!distinct.insert(v).second)
        {
            throw ConfigError(std::string(to_string(sweep->axis)), fmt::format("duplicate sweep value {}", v));
        }
        if (v < 0.0)
        {
            throw ConfigError(std::string(to_string(sweep->axis)), fmt::format("negative sweep value {}", v));
        }
        with_axis(cfg, sweep->axis, v).validate();
    }
    return *sweep;
}

ParsedConfig
load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError(path.string(), "cannot open config file");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

} // namespace lcsim
