#include "lcsim/core_model.hpp"

#include "lcsim/errors.hpp"
#include "lcsim/hash.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace lcsim {

std::string
to_hex(std::uint64_t v)
{
    return fmt::format("{:016x}", v);
}

std::string
canonical_bytes(const MatchFields& match)
{
    std::string out;
    out.reserve(match.context_label.size() + 10);
    out.append(match.context_label);
    append_le16(out, match.port);
    append_le64(out, match.source ? match.source->value : 0);
    return out;
}

FlowId
derive_flow_id(const MatchFields& match)
{
    if (match.context_label.empty())
    {
        throw InvalidMatch("match has an empty context label");
    }
    return FlowId{fnv1a64(canonical_bytes(match))};
}

ContextKey
normalize_context_label(std::string_view label)
{
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!label.empty() && is_space(label.front()))
    {
        label.remove_prefix(1);
    }
    while (!label.empty() && is_space(label.back()))
    {
        label.remove_suffix(1);
    }
    if (label.empty())
    {
        throw InvalidMatch("context label is empty after normalization");
    }
    std::string key(label);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ContextKey{std::move(key)};
}

ContextKey
extract_context_key(const MatchFields& match)
{
    return normalize_context_label(match.context_label);
}

FlowEntry
FlowEntry::install(const MatchFields& match)
{
    return FlowEntry{match, derive_flow_id(match), FlowStats{0, 0, match}};
}

bool
is_valid(const Packet& pkt)
{
    return pkt.size_bytes > 0 && pkt.created_at.ns >= 0 && !pkt.match.context_label.empty();
}

MatchOutcome
match_packet(std::span<const FlowEntry> table, const Packet& pkt)
{
    for (std::size_t i = 0; i < table.size(); ++i)
    {
        if (table[i].match == pkt.match)
        {
            return MatchOutcome{i};
        }
    }
    return MatchOutcome{};
}

StatsOutcome
update_statistics(FlowEntry& entry, const Packet& pkt)
{
    const bool same = entry.stats.last_seen == pkt.match;
    entry.stats.packet_count += 1;
    entry.stats.byte_count += pkt.size_bytes;
    entry.stats.last_seen = pkt.match;
    return same ? StatsOutcome::consistent : StatsOutcome::mismatch;
}

} // namespace lcsim
