#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace lcsim {

struct SensorId
{
    std::uint64_t value = 0;
    auto operator<=>(const SensorId&) const = default;
};

struct FlowId
{
    std::uint64_t value = 0;
    auto operator<=>(const FlowId&) const = default;
};

/// Identifier of a cluster of context-similar flows.
struct ContextId
{
    std::uint64_t value = 0;
    auto operator<=>(const ContextId&) const = default;
};

/// Canonical context bytes; two flows are context-similar iff their keys are byte-equal.
struct ContextKey
{
    std::string value;
    auto operator<=>(const ContextKey&) const = default;
};

struct NetworkId
{
    std::uint32_t value = 0;
    auto operator<=>(const NetworkId&) const = default;
};

/// Position of a sink in the logical-sink; value doubles as the sink's index.
using SinkIndex = std::uint32_t;

struct SinkId
{
    SinkIndex value = 0;
    NetworkId network;
    auto operator<=>(const SinkId&) const = default;
};

/// Simulation-level address of a sensor, usable before a SensorId is assigned.
using SensorAddr = std::uint32_t;

std::string to_hex(std::uint64_t v);

inline std::string to_string(SensorId id) { return to_hex(id.value); }
inline std::string to_string(FlowId id) { return to_hex(id.value); }
inline std::string to_string(ContextId id) { return to_hex(id.value); }

} // namespace lcsim
