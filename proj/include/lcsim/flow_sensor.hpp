#pragma once

#include "lcsim/core_model.hpp"
#include "lcsim/ids.hpp"
#include "lcsim/logical_sink.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <set>
#include <variant>
#include <vector>

namespace lcsim {

struct Position
{
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Position&) const = default;
};

struct Drop
{
};

struct ForwardToSink
{
    FlowId flow_id;
    Packet packet;
};

using SensorAction = std::variant<Drop, ForwardToSink>;

struct JoinOutcome
{
    enum class Kind
    {
        joined_existing,
        formed_new
    };

    Kind kind;
    ContextId context;
    SensorId sensor;
    unsigned overlay_hops = 0;
};

/// An OpenFlow-style sensor: local flow-table pipeline plus the join handshake with
/// the sink of its own network.
class FlowSensor
{
  public:
    static constexpr std::size_t kPreJoinBufferLimit = 16;

    FlowSensor(SensorAddr addr, NetworkId network, Position position, bool mobile,
               MatchFields flow);

    SensorAddr addr() const { return m_addr; }
    NetworkId network() const { return m_network; }
    const std::optional<SensorId>& sensor_id() const { return m_sensor_id; }
    const std::optional<ContextId>& context_id() const { return m_context_id; }
    bool joined() const { return m_context_id.has_value(); }
    bool mobile() const { return m_mobile; }
    Position position() const { return m_position; }
    const MatchFields& flow() const { return m_flow; }
    const std::vector<FlowEntry>& flow_table() const { return m_flow_table; }
    const std::set<ContextId>& subscriptions() const { return m_subscriptions; }

    /// Throws ContractViolation on a fixed sensor.
    void set_position(Position p);

    /// Changes what the sensor is interested in; its FlowId follows.
    void set_flow(MatchFields flow);

    /// Next packet of the sensor's current flow.
    Packet make_packet(std::uint64_t seq, std::uint32_t size_bytes, SimTime now) const;

    /// Flow-table pipeline: drop invalid packets, otherwise match (installing on a
    /// miss), account statistics and forward with the current FlowId.
    SensorAction process_packet(const Packet& pkt);

    /// Join handshake. begin_join requires a pending context.
    ResolveRequest begin_join() const;
    JoinOutcome complete_join(const Resolution& res);

    /// Holds traffic produced before the join finished. Returns false when the
    /// buffer is full and the packet is dropped.
    bool buffer_pre_join(Packet pkt);
    std::size_t pre_join_buffered() const { return m_pre_join.size(); }
    std::vector<Packet> take_pre_join();

    void add_subscription(ContextId id) { m_subscriptions.insert(id); }

  private:
    SensorAddr m_addr;
    NetworkId m_network;
    Position m_position;
    bool m_mobile;
    MatchFields m_flow;
    std::optional<SensorId> m_sensor_id;
    std::optional<ContextId> m_context_id;
    std::vector<FlowEntry> m_flow_table;
    std::set<ContextId> m_subscriptions;
    std::deque<Packet> m_pre_join;
};

/// Synchronous join through the logical-sink. The contact is the sink of the
/// sensor's own network. Throws JoinFailed (retriable) if it cannot be reached.
JoinOutcome join(FlowSensor& sensor, LogicalSink& sinks, SinkIndex contact);

} // namespace lcsim
