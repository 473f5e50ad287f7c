#include "lcsim/sim_engine.hpp"

#include "lcsim/errors.hpp"
#include "lcsim/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace lcsim {

namespace {

// RNG stream ids.
constexpr std::uint64_t kJoinStream = 1;
constexpr std::uint64_t kPhaseStream = 2;
constexpr std::uint64_t kLossStream = 3;
constexpr std::uint64_t kPlacementStream = 4;
constexpr std::uint64_t kMobilityStreamBase = 1000;

constexpr std::uint16_t kDataPort = 1;

template <class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

double
transmission_delay(std::int64_t size_bytes, std::int64_t data_rate_bps)
{
    if (size_bytes <= 0)
    {
        throw ConfigError("packet_size_bytes", "must be positive");
    }
    if (data_rate_bps <= 0)
    {
        throw ConfigError("data_rate_bps", "must be positive");
    }
    return static_cast<double>(size_bytes) * 8.0 / static_cast<double>(data_rate_bps);
}

SimTime
transmission_time(std::int64_t size_bytes, std::int64_t data_rate_bps)
{
    transmission_delay(size_bytes, data_rate_bps); // validates
    if (size_bytes > std::numeric_limits<std::int64_t>::max() / 8)
    {
        throw ConfigError("packet_size_bytes", "too large");
    }
    constexpr std::int64_t kNs = 1'000'000'000;
    const std::int64_t bits = size_bytes * 8;
    const std::int64_t whole = bits / data_rate_bps;
    const std::int64_t rem = bits % data_rate_bps;
    if (data_rate_bps > std::numeric_limits<std::int64_t>::max() / kNs ||
        whole > std::numeric_limits<std::int64_t>::max() / kNs - 1)
    {
        throw ConfigError("data_rate_bps", "transmission time out of range");
    }
    return SimTime::from_ns(whole * kNs + (rem * kNs + data_rate_bps / 2) / data_rate_bps);
}

Rng
Rng::stream(std::uint64_t seed, std::uint64_t stream)
{
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5eed)));
}

Channel::Channel(NetworkId network, std::int64_t data_rate_bps, std::int64_t queue_capacity)
    : m_network(network), m_data_rate_bps(data_rate_bps),
      m_capacity(static_cast<std::size_t>(queue_capacity))
{
    if (data_rate_bps <= 0)
    {
        throw ConfigError("data_rate_bps", "must be positive");
    }
    if (queue_capacity < 0)
    {
        throw ConfigError("queue_capacity_pkts", "must be >= 0");
    }
}

void
Channel::purge(SimTime now)
{
    while (!m_departures.empty() && m_departures.front() <= now)
    {
        m_departures.pop_front();
    }
}

std::size_t
Channel::queue_length(SimTime now)
{
    purge(now);
    return m_departures.empty() ? 0 : m_departures.size() - 1;
}

Channel::SendOutcome
Channel::send(const Packet& pkt, SimTime now)
{
    if (queue_length(now) >= m_capacity && !m_departures.empty())
    {
        return DroppedQueueFull{};
    }
    const SimTime depart = std::max(now, m_busy_until) + transmission_time(pkt.size_bytes, m_data_rate_bps);
    m_busy_until = depart;
    m_departures.push_back(depart);
    return Enqueued{depart};
}

double
reflect_into(double v, double lo, double hi)
{
    const double width = hi - lo;
    if (width <= 0.0)
    {
        return lo;
    }
    double t = std::fmod(v - lo, 2.0 * width);
    if (t < 0.0)
    {
        t += 2.0 * width;
    }
    if (t > width)
    {
        t = 2.0 * width - t;
    }
    return lo + t;
}

Position
step_mobility(FlowSensor& sensor, double dt, Rng& rng, const MobilityConfig& mobility)
{
    if (!sensor.mobile())
    {
        throw ContractViolation("step_mobility on fixed sensor " + std::to_string(sensor.addr()));
    }
    const double direction = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dist = mobility.speed_mps * dt;
    const Position p = sensor.position();
    const auto& b = mobility.bounds;
    const Position next{reflect_into(p.x + dist * std::cos(direction), b.x_min, b.x_max),
                        reflect_into(p.y + dist * std::sin(direction), b.y_min, b.y_max)};
    sensor.set_position(next);
    return next;
}

std::string
group_label(std::uint32_t g)
{
    return "group-" + std::to_string(g + 1);
}

std::vector<std::size_t>
SimWorld::active_senders() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < group_of.size(); ++i)
    {
        if (group_of[i])
        {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

std::vector<SinkId>
sink_ids(const ScenarioConfig& cfg)
{
    std::vector<SinkId> ids;
    for (std::uint32_t n = 0; n < cfg.num_networks; ++n)
    {
        ids.push_back(SinkId{n, NetworkId{n + 1}});
    }
    return ids;
}

} // namespace

SimWorld
build_topology(const ScenarioConfig& cfg)
{
    cfg.validate();
    const auto& b = cfg.mobility.bounds;
    SimWorld world{cfg, LogicalSink(sink_ids(cfg)), {}, {}, {},
                   Position{(b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2}};

    // Sinks are placed so every sensor starts covered: initial positions are uniform
    // over the bounds intersected with the gateway's range.
    Rng place = Rng::stream(cfg.seed, kPlacementStream);
    const std::size_t total = std::size_t{cfg.num_networks} * cfg.nodes_per_network;
    world.sensors.reserve(total);
    world.group_of.assign(total, std::nullopt);
    for (std::uint32_t n = 0; n < cfg.num_networks; ++n)
    {
        const bool mobile = cfg.network_is_mobile(n + 1);
        for (std::uint32_t k = 0; k < cfg.nodes_per_network; ++k)
        {
            Position pos;
            for (int attempt = 0;; ++attempt)
            {
                pos = Position{place.uniform(b.x_min, b.x_max), place.uniform(b.y_min, b.y_max)};
                if (std::hypot(pos.x - world.gateway.x, pos.y - world.gateway.y) <= cfg.range_m ||
                    attempt > 10'000)
                {
                    break;
                }
            }
            const auto addr = static_cast<SensorAddr>(n * cfg.nodes_per_network + k);
            world.sensors.emplace_back(addr, NetworkId{n + 1}, pos, mobile,
                                       MatchFields{std::nullopt, std::string{}, kDataPort});
        }
    }

    for (std::uint32_t g = 0; g < cfg.num_groups; ++g)
    {
        world.group_keys.push_back(normalize_context_label(group_label(g)));
    }

    // Senders are taken round-robin across networks so each group spans networks.
    const std::uint32_t wanted = cfg.num_groups * cfg.nodes_per_group;
    std::uint32_t taken = 0;
    for (std::uint32_t k = 0; k < cfg.nodes_per_network && taken < wanted; ++k)
    {
        for (std::uint32_t n = 0; n < cfg.num_networks && taken < wanted; ++n)
        {
            const std::size_t addr = std::size_t{n} * cfg.nodes_per_network + k;
            const std::uint32_t g = taken / cfg.nodes_per_group;
            world.group_of[addr] = g;
            world.sensors[addr].set_flow(MatchFields{std::nullopt, group_label(g), kDataPort});
            ++taken;
        }
    }
    return world;
}

Simulation::Simulation(const ScenarioConfig& cfg)
    : m_world(build_topology(cfg)), m_events_by_kind(7, 0),
      m_join_rng(Rng::stream(cfg.seed, kJoinStream)),
      m_phase_rng(Rng::stream(cfg.seed, kPhaseStream)),
      m_loss_rng(Rng::stream(cfg.seed, kLossStream))
{
    const auto& c = m_world.config;
    const std::size_t n_channels = c.shared_medium ? 1 : c.num_networks;
    for (std::size_t i = 0; i < n_channels; ++i)
    {
        m_channels.emplace_back(NetworkId{c.shared_medium ? 0U : static_cast<std::uint32_t>(i + 1)},
                                c.data_rate_bps, c.queue_capacity_pkts);
    }
    for (std::size_t i = 0; i < m_world.sensors.size(); ++i)
    {
        m_mobility_rng.push_back(Rng::stream(c.seed, kMobilityStreamBase + i));
    }
    m_gap = SimTime::from_ns(std::max<std::int64_t>(1, std::llround(1e9 / c.flow_rate_pps)));
    m_tx_time = transmission_time(c.packet_size_bytes, c.data_rate_bps);
    m_prop = SimTime::from_seconds(c.prop_delay_s);
    m_link = SimTime::from_seconds(c.sink_link_delay_s);
    m_sent.assign(m_world.sensors.size(), 0);
    m_sensor_gap.assign(m_world.sensors.size(), m_gap);
    for (std::uint32_t g = 0; g < c.num_groups; ++g)
    {
        GroupStats s;
        s.group = g + 1;
        m_groups.push_back(s);
    }
}

void
Simulation::schedule(SimTime at, Payload payload)
{
    if (at < m_now)
    {
        throw InternalError("event scheduled in the past");
    }
    m_heap.push_back(Event{at, m_next_seq++, std::move(payload)});
    std::push_heap(m_heap.begin(), m_heap.end(), Later{});
}

void
Simulation::drain()
{
    while (!m_heap.empty())
    {
        std::pop_heap(m_heap.begin(), m_heap.end(), Later{});
        Event ev = std::move(m_heap.back());
        m_heap.pop_back();
        if (ev.time < m_now)
        {
            throw InternalError("event clock went backwards");
        }
        m_now = ev.time;
        dispatch(ev);
    }
}

void
Simulation::dispatch(Event& ev)
{
    ++m_events;
    ++m_events_by_kind[ev.payload.index()];
    std::visit([this](auto& e) { handle(e); }, ev.payload);
}

bool
Simulation::out_of_range(const FlowSensor& s) const
{
    const Position p = s.position();
    return std::hypot(p.x - m_world.gateway.x, p.y - m_world.gateway.y) > m_world.config.range_m;
}

SimTime
Simulation::uplink_latency(const FlowSensor& s) const
{
    // Out-of-range sensors reach their sink through one relay (overlay) hop.
    return out_of_range(s) ? m_prop + m_link : m_prop;
}

Channel&
Simulation::channel_for(const FlowSensor& s)
{
    return m_world.config.shared_medium ? m_channels.front() : m_channels.at(s.network().value - 1);
}

void
Simulation::flush_sync(SinkIndex from)
{
    for (auto& update : m_world.sinks.sink(from).take_outbox())
    {
        for (SinkIndex peer = 0; peer < m_world.sinks.size(); ++peer)
        {
            if (peer != from)
            {
                schedule(m_now + m_link, SinkSync{peer, update});
            }
        }
    }
}

void
Simulation::on_sink_step(SinkIndex from, SinkStep step)
{
    for (auto& env : step.to_sinks)
    {
        SimTime latency = m_link;
        if (const auto* lr = std::get_if<LookupRequest>(&env.message))
        {
            latency = m_link * static_cast<std::int64_t>(lr->hops);
        }
        schedule(m_now + latency, SinkSync{env.to, std::move(env.message)});
    }
    if (step.to_sensor)
    {
        const auto& sensor = m_world.sensors.at(step.to_sensor->requester);
        schedule(m_now + uplink_latency(sensor), ResolutionReplyArrives{*step.to_sensor});
    }
    flush_sync(from);
}

void
Simulation::handle(const ResolutionRequestArrives& e)
{
    on_sink_step(e.sink, m_world.sinks.sink(e.sink).handle(e.request));
}

void
Simulation::handle(const SinkSync& e)
{
    on_sink_step(e.to, m_world.sinks.sink(e.to).handle(e.message));
}

void
Simulation::handle(const ResolutionReplyArrives& e)
{
    auto& sensor = m_world.sensors.at(e.reply.requester);
    sensor.complete_join(e.reply.resolution);
    --m_joins_pending;
}

void
Simulation::handle(const Generate& e)
{
    const auto& cfg = m_world.config;
    auto& sensor = m_world.sensors[e.sensor];
    if (m_now >= m_deadline || m_sent[e.sensor] >= cfg.total_packets)
    {
        --m_generators_left;
        return;
    }
    const Packet pkt = sensor.make_packet(static_cast<std::uint64_t>(m_sent[e.sensor]++),
                                          static_cast<std::uint32_t>(cfg.packet_size_bytes), m_now);
    const SensorAction action = sensor.process_packet(pkt);
    if (std::holds_alternative<Drop>(action))
    {
        throw InternalError("active sender " + std::to_string(e.sensor) + " dropped its own packet");
    }
    const std::uint32_t g = *m_world.group_of[e.sensor];
    auto& stats = m_groups[g];
    ++stats.tx_count;
    InFlight inflight{std::get<ForwardToSink>(action).packet, e.sensor, g};

    const auto outcome = channel_for(sensor).send(inflight.packet, m_now);
    if (const auto* ok = std::get_if<Channel::Enqueued>(&outcome))
    {
        ++m_in_flight;
        schedule(ok->depart, TxDone{std::move(inflight)});
    }
    else
    {
        ++stats.lost_queue;
        if (m_observer)
        {
            m_observer(PacketRecord{PacketRecord::Kind::drop_queue, m_now, g + 1, sensor.addr(),
                                    *pkt.sender, pkt.seq, pkt.created_at, std::nullopt});
        }
    }

    const SimTime next = m_now + m_sensor_gap[e.sensor];
    if (m_sent[e.sensor] < cfg.total_packets && next < m_deadline)
    {
        schedule(next, Generate{e.sensor});
    }
    else
    {
        --m_generators_left;
    }
}

void
Simulation::handle(TxDone& e)
{
    const auto& cfg = m_world.config;
    const auto& sensor = m_world.sensors[e.p.sensor];
    const bool far = out_of_range(sensor);
    const double p = far ? cfg.out_of_range_loss_prob : cfg.base_loss_prob;
    // Always draw so the loss stream stays aligned across loss probabilities.
    const double u = m_loss_rng.uniform();
    if (u < p)
    {
        --m_in_flight;
        ++m_groups[e.p.group].lost_channel;
        if (m_observer)
        {
            m_observer(PacketRecord{PacketRecord::Kind::drop_channel, m_now, e.p.group + 1,
                                    sensor.addr(), *e.p.packet.sender, e.p.packet.seq,
                                    e.p.packet.created_at, std::nullopt});
        }
        return;
    }
    schedule(m_now + m_prop + (far ? m_link : SimTime{}), Deliver{std::move(e.p)});
}

void
Simulation::handle(const Deliver& e)
{
    --m_in_flight;
    const SimTime delay = m_now - e.p.packet.created_at;
    record_rx(m_groups[e.p.group], delay.seconds());
    if (m_observer)
    {
        m_observer(PacketRecord{PacketRecord::Kind::rx, m_now, e.p.group + 1,
                                m_world.sensors[e.p.sensor].addr(),
                                *e.p.packet.sender, e.p.packet.seq, e.p.packet.created_at, delay});
    }
}

void
Simulation::handle(const MobilityStep&)
{
    if (m_generators_left == 0)
    {
        return;
    }
    const auto& cfg = m_world.config;
    for (std::size_t i = 0; i < m_world.sensors.size(); ++i)
    {
        auto& s = m_world.sensors[i];
        if (s.mobile())
        {
            step_mobility(s, cfg.mobility.step_s, m_mobility_rng[i], cfg.mobility);
        }
    }
    schedule(m_now + SimTime::from_seconds(cfg.mobility.step_s), MobilityStep{});
}

void
Simulation::start_traffic()
{
    const auto& cfg = m_world.config;
    m_traffic = true;
    m_deadline = m_now + SimTime::from_seconds(cfg.duration_s);

    std::map<FlowId, MatchFields> flows;
    for (std::size_t i : m_world.active_senders())
    {
        const auto& flow = m_world.sensors[i].flow();
        auto [it, inserted] = flows.emplace(derive_flow_id(flow), flow);
        if (!inserted && !(it->second == flow))
        {
            throw InternalError("flow id collision between distinct match fields");
        }
        const auto phase = static_cast<std::int64_t>(m_phase_rng.uniform() * static_cast<double>(m_gap.ns));
        const double skew = m_phase_rng.uniform(-cfg.clock_skew_ppm, cfg.clock_skew_ppm) * 1e-6;
        m_sensor_gap[i] = SimTime::from_ns(
            std::max<std::int64_t>(1, std::llround(static_cast<double>(m_gap.ns) * (1.0 + skew))));
        schedule(m_now + SimTime::from_ns(phase), Generate{i});
        ++m_generators_left;
    }
    const bool any_mobile = std::any_of(m_world.sensors.begin(), m_world.sensors.end(),
                                        [](const FlowSensor& s) { return s.mobile(); });
    if (any_mobile)
    {
        schedule(m_now + SimTime::from_seconds(cfg.mobility.step_s), MobilityStep{});
    }
}

MetricsReport
Simulation::run()
{
    if (m_ran)
    {
        throw ContractViolation("a Simulation runs once");
    }
    m_ran = true;
    const auto& cfg = m_world.config;

    // Join phase: every active sender resolves its flow before traffic starts.
    for (std::size_t i : m_world.active_senders())
    {
        auto& sensor = m_world.sensors[i];
        const SimTime start = SimTime::from_seconds(m_join_rng.uniform(0.0, cfg.join_window_s));
        const SinkIndex contact = sensor.network().value - 1;
        schedule(start + uplink_latency(sensor), ResolutionRequestArrives{contact, sensor.begin_join()});
        ++m_joins_pending;
    }
    drain();

    std::set<SensorId> assigned;
    for (std::size_t i : m_world.active_senders())
    {
        const auto& s = m_world.sensors[i];
        if (!s.joined())
        {
            throw InternalError("sensor " + std::to_string(i) + " never completed its join");
        }
        if (!assigned.insert(*s.sensor_id()).second)
        {
            throw InternalError("duplicate sensor id " + to_string(*s.sensor_id()));
        }
        auto& g = m_groups[*m_world.group_of[i]];
        if (g.context.value == 0)
        {
            g.context = *s.context_id();
        }
        else if (g.context != *s.context_id())
        {
            throw InternalError("group " + std::to_string(g.group) + " split across contexts");
        }
    }
    if (m_joins_pending != 0 || !m_world.sinks.converged())
    {
        throw InternalError("logical-sink did not converge after the join phase");
    }
    m_join_done = m_now;

    start_traffic();
    drain();

    MetricsReport report;
    report.config = cfg;
    report.seed = cfg.seed;
    for (const auto& g : m_groups)
    {
        if (g.tx_count != g.rx_count + g.lost_queue + g.lost_channel)
        {
            throw InternalError("packet conservation violated in group " + std::to_string(g.group));
        }
        report.groups.push_back(GroupReport::from_stats(g));
        report.totals.tx += g.tx_count;
        report.totals.rx += g.rx_count;
        report.totals.lost_queue += g.lost_queue;
        report.totals.lost_channel += g.lost_channel;
    }
    report.totals.in_flight = m_in_flight;
    return report;
}

MetricsReport
run(const ScenarioConfig& cfg)
{
    Simulation sim(cfg);
    return sim.run();
}

const char*
to_string(PacketRecord::Kind kind)
{
    switch (kind)
    {
    case PacketRecord::Kind::rx:
        return "rx";
    case PacketRecord::Kind::drop_queue:
        return "drop_queue";
    case PacketRecord::Kind::drop_channel:
        return "drop_channel";
    }
    return "?";
}

TraceWriter::TraceWriter(std::ostream& os) : m_os(&os)
{
    *m_os << kHeader << '\n';
}

namespace {

std::string
seconds_exact(SimTime t)
{
    return fmt::format("{}.{:09}", t.ns / 1'000'000'000, t.ns % 1'000'000'000);
}

} // namespace

void
TraceWriter::operator()(const PacketRecord& rec)
{
    fmt::print(*m_os, "{},{},{},{},{},{}\n", seconds_exact(rec.time), to_string(rec.kind), rec.group,
               to_string(rec.sensor), rec.seq, rec.delay ? seconds_exact(*rec.delay) : std::string{});
}

} // namespace lcsim
