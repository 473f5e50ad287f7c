#pragma once

#include "lcsim/ids.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace lcsim {

/// Identifier on a 2^m ring; all arithmetic is modulo 2^m.
struct RingKey
{
    std::uint64_t value = 0;
    auto operator<=>(const RingKey&) const = default;
};

/// 32-bit FNV-1a digest of the key bytes, truncated to the low `bits` bits.
RingKey ring_position(const ContextKey& key, unsigned bits = 32);

/// Digest of the SinkId's canonical bytes: value (u32 LE) | network (u32 LE).
RingKey ring_position(const SinkId& sink, unsigned bits = 32);

struct ChordNode
{
    RingKey id;
    SinkId sink;
    /// fingers[i] = index of successor(id + 2^i); fingers[0] is the successor.
    std::vector<std::size_t> fingers;
    std::size_t predecessor = 0;

    std::size_t successor() const { return fingers.front(); }
};

/// Static CHORD ring. Nodes are held sorted by RingKey; the ring never changes after
/// construction, so finger tables are exact.
class ChordRing
{
  public:
    static constexpr unsigned kDefaultBits = 32;

    struct Member
    {
        RingKey id;
        SinkId sink;
    };

    struct Lookup
    {
        std::size_t node; // index of the responsible node
        unsigned hops;    // nodes forwarded through before the answer was known
    };

    /// Throws ConfigError on duplicate ids, ids outside the key space, or bad `bits`.
    explicit ChordRing(std::vector<Member> members, unsigned bits = kDefaultBits);

    /// Ring over sinks placed at ring_position(sink). A position collision is a config error.
    static ChordRing from_sinks(std::span<const SinkId> sinks, unsigned bits = kDefaultBits);

    unsigned bits() const { return m_bits; }
    std::uint64_t modulus() const { return std::uint64_t{1} << m_bits; }
    std::size_t size() const { return m_nodes.size(); }
    bool empty() const { return m_nodes.empty(); }
    const ChordNode& node(std::size_t i) const { return m_nodes.at(i); }
    std::span<const ChordNode> nodes() const { return m_nodes; }
    std::optional<std::size_t> index_of(SinkId sink) const;

    /// Iterative finger-table lookup starting at node `from`.
    /// Throws NoNodesError on an empty ring.
    Lookup find_successor(RingKey key, std::size_t from = 0) const;

  private:
    std::size_t successor_index(std::uint64_t key) const;
    std::size_t closest_preceding(std::size_t n, std::uint64_t key) const;

    unsigned m_bits;
    std::vector<ChordNode> m_nodes;
};

struct LookupFound
{
    ContextId context;
    SinkId responsible;
    unsigned overlay_hops;
};

struct LookupNotFound
{
    SinkId responsible; // sink that must define the new ContextId
    unsigned overlay_hops;
};

using LookupResult = std::variant<LookupFound, LookupNotFound>;

/// Registry view of one sink: the ContextId it holds for a key, if any.
using RegistryQuery = std::function<std::optional<ContextId>(SinkId, const ContextKey&)>;

/// Routes to the sink responsible for ring_position(key) and asks its registry.
/// overlay_hops counts forwarding hops plus the final hop to the responsible sink
/// (zero when the initiator is itself responsible).
LookupResult lookup_context(const ChordRing& ring,
                            SinkId initiator,
                            const ContextKey& key,
                            const RegistryQuery& registry);

} // namespace lcsim
