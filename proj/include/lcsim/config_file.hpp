#pragma once

#include "lcsim/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lcsim {

/// Parameter swept by a SweepSpec.
enum class Axis
{
    flow_rate_pps,
    nodes_per_group,
    num_groups,
    packet_size_bytes
};

std::string_view to_string(Axis axis);

struct SweepSpec
{
    ScenarioConfig base;
    Axis axis = Axis::flow_rate_pps;
    std::vector<double> values;
    std::uint32_t repetitions = 1;
};

/// base with the swept field set to value.
ScenarioConfig with_axis(ScenarioConfig base, Axis axis, double value);

using ParsedConfig = std::variant<ScenarioConfig, SweepSpec>;

/// `key = value` lines, `#` comments, `[a, b, ...]` lists. A list on an axis key
/// turns the file into a sweep. Throws ParseError (with line) or ConfigError (with field).
ParsedConfig parse_config(std::string_view text, const std::string& name = "<config>");

/// Throws IoError when the file cannot be read.
ParsedConfig load_config(const std::filesystem::path& path);

} // namespace lcsim
