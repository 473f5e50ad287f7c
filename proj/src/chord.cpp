#include "lcsim/chord.hpp"

#include "lcsim/errors.hpp"
#include "lcsim/hash.hpp"

#include <algorithm>
#include <string>

namespace lcsim {

namespace {

std::uint64_t
truncate(std::uint32_t digest, unsigned bits)
{
    return bits >= 32 ? digest : (digest & ((std::uint64_t{1} << bits) - 1));
}

// x in (a, b] on the ring; a == b denotes the whole ring.
bool
in_open_closed(std::uint64_t x, std::uint64_t a, std::uint64_t b)
{
    if (a < b)
    {
        return a < x && x <= b;
    }
    return x > a || x <= b;
}

// x in (a, b) on the ring.
bool
in_open_open(std::uint64_t x, std::uint64_t a, std::uint64_t b)
{
    if (a < b)
    {
        return a < x && x < b;
    }
    return (x > a || x < b) && x != a;
}

} // namespace

RingKey
ring_position(const ContextKey& key, unsigned bits)
{
    return RingKey{truncate(fnv1a32(key.value), bits)};
}

RingKey
ring_position(const SinkId& sink, unsigned bits)
{
    std::string bytes;
    append_le32(bytes, sink.value);
    append_le32(bytes, sink.network.value);
    return RingKey{truncate(fnv1a32(bytes), bits)};
}

ChordRing::ChordRing(std::vector<Member> members, unsigned bits)
    : m_bits(bits)
{
    if (bits < 1 || bits > 32)
    {
        throw ConfigError("ring_bits", "must be in [1, 32], got " + std::to_string(bits));
    }
    std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
        return a.id < b.id;
    });
    for (std::size_t i = 0; i < members.size(); ++i)
    {
        if (members[i].id.value >= modulus())
        {
            throw ConfigError("ring", "node id outside the key space");
        }
        if (i > 0 && members[i].id == members[i - 1].id)
        {
            throw ConfigError("ring", "two sinks hash to ring position " +
                                          std::to_string(members[i].id.value));
        }
    }

    m_nodes.reserve(members.size());
    for (const auto& m : members)
    {
        m_nodes.push_back(ChordNode{m.id, m.sink, {}, 0});
    }
    const std::size_t n = m_nodes.size();
    for (std::size_t i = 0; i < n; ++i)
    {
        auto& node = m_nodes[i];
        node.predecessor = (i + n - 1) % n;
        node.fingers.resize(m_bits);
        for (unsigned k = 0; k < m_bits; ++k)
        {
            const std::uint64_t start = (node.id.value + (std::uint64_t{1} << k)) % modulus();
            node.fingers[k] = successor_index(start);
        }
    }
}

ChordRing
ChordRing::from_sinks(std::span<const SinkId> sinks, unsigned bits)
{
    std::vector<Member> members;
    members.reserve(sinks.size());
    for (const auto& s : sinks)
    {
        members.push_back(Member{ring_position(s, bits), s});
    }
    return ChordRing(std::move(members), bits);
}

std::optional<std::size_t>
ChordRing::index_of(SinkId sink) const
{
    for (std::size_t i = 0; i < m_nodes.size(); ++i)
    {
        if (m_nodes[i].sink == sink)
        {
            return i;
        }
    }
    return std::nullopt;
}

std::size_t
ChordRing::successor_index(std::uint64_t key) const
{
    auto it = std::lower_bound(m_nodes.begin(), m_nodes.end(), key,
                               [](const ChordNode& node, std::uint64_t k) {
                                   return node.id.value < k;
                               });
    if (it == m_nodes.end())
    {
        return 0;
    }
    return static_cast<std::size_t>(it - m_nodes.begin());
}

std::size_t
ChordRing::closest_preceding(std::size_t n, std::uint64_t key) const
{
    const auto& node = m_nodes[n];
    for (unsigned k = m_bits; k-- > 0;)
    {
        const std::size_t f = node.fingers[k];
        if (in_open_open(m_nodes[f].id.value, node.id.value, key))
        {
            return f;
        }
    }
    return n;
}

ChordRing::Lookup
ChordRing::find_successor(RingKey key, std::size_t from) const
{
    if (m_nodes.empty())
    {
        throw NoNodesError();
    }
    if (from >= m_nodes.size())
    {
        throw ContractViolation("lookup started from a node outside the ring");
    }
    const std::uint64_t k = key.value % modulus();
    if (m_nodes.size() == 1)
    {
        return Lookup{0, 0};
    }
    std::size_t n = from;
    if (in_open_closed(k, m_nodes[m_nodes[n].predecessor].id.value, m_nodes[n].id.value))
    {
        return Lookup{n, 0};
    }
    unsigned hops = 0;
    while (!in_open_closed(k, m_nodes[n].id.value, m_nodes[m_nodes[n].successor()].id.value))
    {
        const std::size_t next = closest_preceding(n, k);
        if (next == n)
        {
            break;
        }
        n = next;
        ++hops;
    }
    return Lookup{m_nodes[n].successor(), hops};
}

LookupResult
lookup_context(const ChordRing& ring,
               SinkId initiator,
               const ContextKey& key,
               const RegistryQuery& registry)
{
    if (ring.empty())
    {
        throw NoNodesError();
    }
    const auto from = ring.index_of(initiator);
    if (!from)
    {
        throw ContractViolation("lookup initiator is not on the ring");
    }
    const auto hit = ring.find_successor(ring_position(key, ring.bits()), *from);
    const SinkId responsible = ring.node(hit.node).sink;
    const unsigned hops = hit.hops + (hit.node == *from ? 0U : 1U);
    if (auto ctx = registry(responsible, key))
    {
        return LookupFound{*ctx, responsible, hops};
    }
    return LookupNotFound{responsible, hops};
}

} // namespace lcsim
