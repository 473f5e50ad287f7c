#pragma once

#include "lcsim/chord.hpp"
#include "lcsim/core_model.hpp"
#include "lcsim/ids.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lcsim {

/// Change notification one sink broadcasts to its peers.
struct SyncUpdate
{
    struct NewContext
    {
        ContextKey key;
        ContextId id;
    };
    struct NewMember
    {
        ContextId context;
        SensorId sensor;
        FlowId flow;
    };
    struct Publish
    {
        ContextId context;
    };
    struct Subscribe
    {
        ContextId context;
        SensorId sensor;
    };
    using Kind = std::variant<NewContext, NewMember, Publish, Subscribe>;

    SinkIndex origin = 0;
    std::uint64_t seq = 0; // strictly increasing per origin, starting at 1
    Kind kind;
};

struct Resolution
{
    ContextId context_id;
    SensorId sensor_id;
    FlowId flow_id; // flow bound in the context flow-table
    bool newly_defined = false;
    unsigned overlay_hops = 0;
};

/// Flow-ID resolution request a sensor sends to the sink of its own network.
/// `match` is the header the flow-ID was derived from; the sink re-derives the
/// flow-ID when it assigns a SensorId, since the source field changes.
struct ResolveRequest
{
    SensorAddr requester = 0;
    std::optional<SensorId> sensor;
    FlowId flow_id;
    ContextKey key;
    MatchFields match;

    static ResolveRequest from_match(SensorAddr requester,
                                     std::optional<SensorId> sensor,
                                     const MatchFields& match);
};

/// Contact sink -> responsible sink, after a local registry miss.
struct LookupRequest
{
    SinkIndex origin = 0;
    unsigned hops = 0;
    ResolveRequest request;
};

/// Responsible sink -> contact sink.
struct LookupReply
{
    SinkIndex responder = 0;
    unsigned hops = 0;
    ContextId context;
    std::optional<SensorId> assigned_sensor;
    bool newly_defined = false;
    ResolveRequest request;
};

struct ResolveReply
{
    SensorAddr requester = 0;
    Resolution resolution;
};

using SinkMessage = std::variant<LookupRequest, LookupReply, SyncUpdate>;

struct SinkEnvelope
{
    SinkIndex to = 0;
    SinkMessage message;
};

/// Effects of handling one message. Sync updates are not listed here: they
/// accumulate in the sink's outbox (see SinkState::take_outbox).
struct SinkStep
{
    std::vector<SinkEnvelope> to_sinks;
    std::optional<ResolveReply> to_sensor;
};

enum class ApplyOutcome
{
    applied,
    duplicate,
    deferred // references a ContextId this sink has not learned yet
};

enum class SubscribeOutcome
{
    subscribed,
    unknown_context
};

/// State of one physical sink of the logical-sink.
class SinkState
{
  public:
    SinkState(SinkId id, std::shared_ptr<const ChordRing> ring);

    SinkId id() const { return m_id; }
    SinkIndex index() const { return m_id.value; }

    // Protocol message handlers.
    SinkStep handle(const ResolveRequest& req);
    SinkStep handle(const LookupRequest& req);
    SinkStep handle(const LookupReply& rep);
    SinkStep handle(const SinkMessage& msg);

    /// Defines a fresh ContextId for key here and queues new_context.
    ContextId mint_context(const ContextKey& key);

    /// Mints and publishes a ContextId for key without consulting peers. The
    /// protocol only mints at the key's responsible sink; calling this on other
    /// sinks forces a concurrent-definition race.
    ContextId define_context(const ContextKey& key);

    SensorId allocate_sensor_id();

    /// Records (sensor, flow) -> context in the context flow-table and group table.
    void bind(SensorId sensor, FlowId flow, ContextId context);

    /// Throws InvalidRequest when id is unknown here. Re-publishing is a no-op.
    void publish_context(ContextId id);

    /// Throws InvalidRequest when the sensor is unknown to this sink.
    SubscribeOutcome subscribe(SensorId sensor, ContextId id);

    /// Applies a peer's update. Replays of (origin, seq) are reported as duplicate.
    ApplyOutcome apply_sync(const SyncUpdate& update);

    std::vector<SyncUpdate> take_outbox();
    bool outbox_empty() const { return m_outbox.empty(); }

    std::optional<ContextId> local_lookup(const ContextKey& key) const;
    std::optional<ContextId> bound_context(SensorId sensor, FlowId flow) const;
    ContextId canonical(ContextId id) const;
    bool knows_context(ContextId id) const;
    bool knows_sensor(SensorId sensor) const { return m_known_sensors.contains(sensor); }
    bool is_published(ContextId id) const;

    const std::map<ContextKey, ContextId>& registry() const { return m_registry; }
    const std::map<ContextId, ContextId>& aliases() const { return m_aliases; }
    std::vector<ContextFlowTableEntry> context_flow_table() const;
    const GroupTable& group_table() const { return m_groups; }
    const std::set<ContextId>& published() const { return m_published; }
    const std::set<std::pair<ContextId, SensorId>>& subscriptions() const
    {
        return m_subscriptions;
    }
    std::size_t deferred_count() const { return m_deferred.size(); }

    /// Sorted text form of the replicated state; identical on converged sinks.
    std::string serialize() const;

    /// serialize() plus the bookkeeping it leaves out (counters, dedup sets,
    /// deferred updates, pending outbox). Equal fingerprints mean equal sinks.
    std::string fingerprint() const;

  private:
    void enqueue(SyncUpdate::Kind kind);
    // Installs key -> id, resolving a clash with an existing id (lower id wins).
    bool adopt_context(const ContextKey& key, ContextId id);
    void remap(ContextId loser, ContextId winner);
    bool try_apply(const SyncUpdate::Kind& kind);
    void retry_deferred();
    SensorId sensor_for(const ResolveRequest& req, std::optional<SensorId> assigned);
    FlowId bound_flow(const ResolveRequest& req, SensorId sensor) const;
    Resolution bind_and_resolve(const ResolveRequest& req,
                                SensorId sensor,
                                ContextId context,
                                bool newly_defined,
                                unsigned hops);

    SinkId m_id;
    std::shared_ptr<const ChordRing> m_ring;
    std::size_t m_ring_index = 0;

    std::map<ContextKey, ContextId> m_registry;
    std::map<ContextId, ContextId> m_aliases; // superseded id -> winner
    std::map<ContextId, ContextKey> m_reverse;
    std::map<std::pair<SensorId, FlowId>, ContextId> m_flow_table;
    GroupTable m_groups;
    std::set<ContextId> m_published;
    std::set<std::pair<ContextId, SensorId>> m_subscriptions;
    std::set<SensorId> m_known_sensors;

    std::deque<SyncUpdate> m_outbox; // pending notifications to peers
    std::vector<SyncUpdate> m_deferred;
    std::map<SinkIndex, std::set<std::uint64_t>> m_applied;
    std::uint64_t m_next_seq = 1;
    std::uint64_t m_context_counter = 0;
    std::uint64_t m_sensor_counter = 0;
};

/// One-line text form of a message, for traces and state hashing.
std::string describe(const ResolveRequest& req);
std::string describe(const SyncUpdate& update);
std::string describe(const SinkMessage& msg);

/// ContextId minted by sink `index` with local counter `counter`.
ContextId make_context_id(SinkIndex index, std::uint64_t counter);
/// SensorId allocated by sink `index` with local counter `counter`.
SensorId make_sensor_id(SinkIndex index, std::uint64_t counter);

/// The synchronized set of sinks plus the overlay, with an explicit in-flight
/// sync transport (one FIFO per ordered sink pair) so tests can pick delivery orders.
class LogicalSink
{
  public:
    explicit LogicalSink(std::vector<SinkId> sinks, unsigned ring_bits = ChordRing::kDefaultBits);

    std::size_t size() const { return m_sinks.size(); }
    SinkState& sink(SinkIndex i) { return m_sinks.at(i); }
    const SinkState& sink(SinkIndex i) const { return m_sinks.at(i); }
    const ChordRing& ring() const { return *m_ring; }
    std::shared_ptr<const ChordRing> ring_ptr() const { return m_ring; }

    void set_online(SinkIndex i, bool online) { m_online.at(i) = online; }
    bool online(SinkIndex i) const { return m_online.at(i); }

    /// Resolves a flow at `contact`, routing lookups to the responsible sink at once.
    /// Sync updates stay in flight until delivered. Throws ResolutionFailed (retriable)
    /// when a sink on the path is offline, InvalidRequest on an empty key.
    Resolution resolve_flow(SinkIndex contact, const ResolveRequest& req);

    LookupResult lookup_context(SinkIndex initiator, const ContextKey& key) const;

    /// Moves every sink's outbox into the per-pair FIFOs.
    void flush_outboxes();
    std::size_t in_flight() const;
    /// Origin/destination pairs with a message waiting, in deterministic order.
    std::vector<std::pair<SinkIndex, SinkIndex>> ready_channels() const;
    /// Delivers the head of the (origin, dest) FIFO.
    ApplyOutcome deliver(SinkIndex origin, SinkIndex dest);
    /// Flushes and delivers until nothing is in flight.
    void synchronize();

    bool converged() const;
    /// Concatenated dumps of every sink, headed by "== sink <i> (network <n>) ==".
    std::string dump_state() const;

  private:
    std::shared_ptr<const ChordRing> m_ring;
    std::vector<SinkState> m_sinks;
    std::vector<bool> m_online;
    std::map<std::pair<SinkIndex, SinkIndex>, std::deque<SyncUpdate>> m_channels;
};

} // namespace lcsim
