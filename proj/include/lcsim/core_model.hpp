#pragma once

#include "lcsim/ids.hpp"
#include "lcsim/sim_time.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcsim {

/// Packet header fields a flow-entry matches on.
struct MatchFields
{
    std::optional<SensorId> source;
    std::string context_label;
    std::uint16_t port = 0;

    bool operator==(const MatchFields&) const = default;
};

/// Canonical encoding used for FlowId derivation:
///   context_label bytes | port (u16 LE) | source (u64 LE, 0 when unassigned)
/// The label is not length-prefixed; the trailing 10 bytes are fixed-width.
std::string canonical_bytes(const MatchFields& match);

/// FNV-1a 64 digest of canonical_bytes(match). Throws InvalidMatch on an empty label.
FlowId derive_flow_id(const MatchFields& match);

/// Lowercased (ASCII), whitespace-trimmed label. Throws InvalidMatch if nothing is left.
ContextKey normalize_context_label(std::string_view label);
ContextKey extract_context_key(const MatchFields& match);

struct FlowStats
{
    std::uint64_t packet_count = 0;
    std::uint64_t byte_count = 0;
    MatchFields last_seen;
};

struct FlowEntry
{
    MatchFields match;
    FlowId flow_id; // action output
    FlowStats stats;

    /// Entry for a freshly seen match, with the FlowId derived from it.
    static FlowEntry install(const MatchFields& match);
};

/// One row of a sink's context flow-table.
struct ContextFlowTableEntry
{
    SensorId sensor_id;
    FlowId flow_id;
    ContextId context_id;

    auto operator<=>(const ContextFlowTableEntry&) const = default;
};

/// Cluster membership: ContextId -> member sensors.
using GroupTable = std::map<ContextId, std::set<SensorId>>;

struct Packet
{
    std::uint64_t seq = 0;
    MatchFields match;
    std::uint32_t size_bytes = 0;
    SimTime created_at;
    std::optional<SensorId> sender;
    std::optional<ContextId> group; // empty while the sender's join is pending
};

/// size_bytes > 0, created_at >= 0 and a non-empty context label.
bool is_valid(const Packet& pkt);

struct MatchOutcome
{
    std::optional<std::size_t> index; // position of the hit entry

    bool hit() const { return index.has_value(); }
};

/// First entry whose match equals pkt.match, scanning in table order.
MatchOutcome match_packet(std::span<const FlowEntry> table, const Packet& pkt);

enum class StatsOutcome
{
    consistent,
    mismatch
};

/// Accounts pkt into entry.stats. Mismatch means pkt.match differs from the last match
/// seen; the caller must re-derive the FlowId.
StatsOutcome update_statistics(FlowEntry& entry, const Packet& pkt);

} // namespace lcsim
