#pragma once

#include "lcsim/core_model.hpp"
#include "lcsim/flow_sensor.hpp"
#include "lcsim/logical_sink.hpp"
#include "lcsim/metrics.hpp"
#include "lcsim/scenario.hpp"
#include "lcsim/sim_time.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace lcsim {

/// size_bytes * 8 / data_rate_bps, in seconds. Throws ConfigError on non-positive input.
double transmission_delay(std::int64_t size_bytes, std::int64_t data_rate_bps);

/// Same, on the integer clock (rounded to the nearest nanosecond).
SimTime transmission_time(std::int64_t size_bytes, std::int64_t data_rate_bps);

/// Seeded stream; uniform() uses the top 53 bits so draws are identical everywhere.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    /// Independent stream `stream` derived from a scenario seed.
    static Rng stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return m_engine(); }
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  private:
    std::mt19937_64 m_engine;
};

/// Single-server FIFO wireless channel with a bounded waiting queue.
class Channel
{
  public:
    struct Enqueued
    {
        SimTime depart;
    };
    struct DroppedQueueFull
    {
    };
    using SendOutcome = std::variant<Enqueued, DroppedQueueFull>;

    Channel(NetworkId network, std::int64_t data_rate_bps, std::int64_t queue_capacity);

    /// depart = max(now, busy_until) + transmission time; drops when the waiting
    /// queue already holds queue_capacity packets.
    SendOutcome send(const Packet& pkt, SimTime now);

    /// Packets waiting for the server at `now` (the one in service excluded).
    std::size_t queue_length(SimTime now);
    SimTime busy_until() const { return m_busy_until; }
    NetworkId network() const { return m_network; }

  private:
    void purge(SimTime now);

    NetworkId m_network;
    std::int64_t m_data_rate_bps;
    std::size_t m_capacity;
    SimTime m_busy_until;
    std::deque<SimTime> m_departures;
};

/// One random-walk step: fresh uniform direction, move speed*dt, reflect at the bounds.
/// Throws ContractViolation on a fixed sensor.
Position step_mobility(FlowSensor& sensor, double dt, Rng& rng, const MobilityConfig& mobility);

/// Reflects v into [lo, hi].
double reflect_into(double v, double lo, double hi);

enum class EventKind
{
    generate,
    channel_tx_done,
    deliver,
    sink_sync,
    mobility_step,
    resolution_request,
    resolution_reply
};

/// What happened to one data packet.
struct PacketRecord
{
    enum class Kind
    {
        rx,
        drop_queue,
        drop_channel
    };

    Kind kind;
    SimTime time;
    std::uint32_t group = 0;
    SensorAddr sensor_addr = 0;
    SensorId sensor;
    std::uint64_t seq = 0;
    SimTime created;
    std::optional<SimTime> delay; // rx only
};

using PacketObserver = std::function<void(const PacketRecord&)>;

/// Built topology: sinks, overlay, sensors and group assignment.
struct SimWorld
{
    ScenarioConfig config;
    LogicalSink sinks;
    std::vector<FlowSensor> sensors;
    std::vector<std::optional<std::uint32_t>> group_of; // 0-based group per sensor
    std::vector<ContextKey> group_keys;
    Position gateway;

    std::vector<std::size_t> active_senders() const;
};

/// Throws ConfigError on an invalid config.
SimWorld build_topology(const ScenarioConfig& cfg);

/// Context label assigned to 0-based group g.
std::string group_label(std::uint32_t g);

/// Discrete-event run of one scenario: join phase, traffic phase, drain.
class Simulation
{
  public:
    explicit Simulation(const ScenarioConfig& cfg);

    void set_observer(PacketObserver observer) { m_observer = std::move(observer); }

    /// Runs to quiescence. Can be called once.
    MetricsReport run();

    const SimWorld& world() const { return m_world; }
    SimTime join_completed_at() const { return m_join_done; }
    std::uint64_t events_dispatched() const { return m_events; }
    /// Count of dispatched events per kind, indexed by EventKind.
    const std::vector<std::uint64_t>& events_by_kind() const { return m_events_by_kind; }

  private:
    struct InFlight
    {
        Packet packet;
        std::size_t sensor = 0;
        std::uint32_t group = 0;
    };
    struct Generate
    {
        std::size_t sensor;
    };
    struct TxDone
    {
        InFlight p;
    };
    struct Deliver
    {
        InFlight p;
    };
    struct SinkSync
    {
        SinkIndex to;
        SinkMessage message;
    };
    struct MobilityStep
    {
    };
    struct ResolutionRequestArrives
    {
        SinkIndex sink;
        ResolveRequest request;
    };
    struct ResolutionReplyArrives
    {
        ResolveReply reply;
    };
    using Payload = std::variant<Generate, TxDone, Deliver, SinkSync, MobilityStep,
                                 ResolutionRequestArrives, ResolutionReplyArrives>;

    struct Event
    {
        SimTime time;
        std::uint64_t seq;
        Payload payload;
    };
    struct Later
    {
        bool operator()(const Event& a, const Event& b) const
        {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    void schedule(SimTime at, Payload payload);
    void drain();
    void dispatch(Event& ev);
    void on_sink_step(SinkIndex from, SinkStep step);
    void flush_sync(SinkIndex from);
    bool out_of_range(const FlowSensor& s) const;
    SimTime uplink_latency(const FlowSensor& s) const;
    Channel& channel_for(const FlowSensor& s);
    void start_traffic();

    void handle(const Generate& e);
    void handle(TxDone& e);
    void handle(const Deliver& e);
    void handle(const SinkSync& e);
    void handle(const MobilityStep& e);
    void handle(const ResolutionRequestArrives& e);
    void handle(const ResolutionReplyArrives& e);

    SimWorld m_world;
    PacketObserver m_observer;
    std::vector<Channel> m_channels;
    std::vector<Event> m_heap;
    std::uint64_t m_next_seq = 0;
    SimTime m_now;
    SimTime m_join_done;
    SimTime m_deadline;
    SimTime m_gap;
    std::vector<SimTime> m_sensor_gap; // nominal gap scaled by each sensor's clock skew
    SimTime m_tx_time;
    SimTime m_prop;
    SimTime m_link;
    std::uint64_t m_events = 0;
    std::vector<std::uint64_t> m_events_by_kind;
    bool m_ran = false;
    bool m_traffic = false;

    Rng m_join_rng;
    Rng m_phase_rng;
    Rng m_loss_rng;
    std::vector<Rng> m_mobility_rng;

    std::vector<std::int64_t> m_sent;
    std::size_t m_generators_left = 0;
    std::size_t m_joins_pending = 0;
    std::uint64_t m_in_flight = 0;
    std::vector<GroupStats> m_groups;
};

/// Convenience: build, run, return the report.
MetricsReport run(const ScenarioConfig& cfg);

/// Per-packet trace writer: `time,event,group,sensor,seq,delay`.
class TraceWriter
{
  public:
    static constexpr const char* kHeader = "time,event,group,sensor,seq,delay";

    explicit TraceWriter(std::ostream& os);
    void operator()(const PacketRecord& rec);

  private:
    std::ostream* m_os;
};

const char* to_string(PacketRecord::Kind kind);

} // namespace lcsim
