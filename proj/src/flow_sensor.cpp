#include "lcsim/flow_sensor.hpp"

#include "lcsim/errors.hpp"

namespace lcsim {

FlowSensor::FlowSensor(SensorAddr addr, NetworkId network, Position position, bool mobile,
                       MatchFields flow)
    : m_addr(addr), m_network(network), m_position(position), m_mobile(mobile),
      m_flow(std::move(flow))
{
}

void
FlowSensor::set_position(Position p)
{
    if (!m_mobile)
    {
        throw ContractViolation("fixed sensor " + std::to_string(m_addr) + " cannot move");
    }
    m_position = p;
}

void
FlowSensor::set_flow(MatchFields flow)
{
    m_flow = std::move(flow);
}

Packet
FlowSensor::make_packet(std::uint64_t seq, std::uint32_t size_bytes, SimTime now) const
{
    return Packet{seq, m_flow, size_bytes, now, m_sensor_id, m_context_id};
}

SensorAction
FlowSensor::process_packet(const Packet& pkt)
{
    if (!is_valid(pkt))
    {
        return Drop{};
    }
    if (pkt.sender && pkt.sender != m_sensor_id)
    {
        return Drop{};
    }
    auto outcome = match_packet(m_flow_table, pkt);
    if (!outcome.hit())
    {
        m_flow_table.push_back(FlowEntry::install(pkt.match));
        outcome.index = m_flow_table.size() - 1;
    }
    FlowEntry& entry = m_flow_table[*outcome.index];
    if (update_statistics(entry, pkt) == StatsOutcome::mismatch)
    {
        entry.match = pkt.match;
        entry.flow_id = derive_flow_id(pkt.match);
    }
    return ForwardToSink{entry.flow_id, pkt};
}

ResolveRequest
FlowSensor::begin_join() const
{
    if (m_context_id)
    {
        throw ContractViolation("sensor " + std::to_string(m_addr) + " has already joined");
    }
    return ResolveRequest::from_match(m_addr, m_sensor_id, m_flow);
}

JoinOutcome
FlowSensor::complete_join(const Resolution& res)
{
    if (m_sensor_id && *m_sensor_id != res.sensor_id)
    {
        throw InternalError("sink returned a different sensor id for sensor " +
                            std::to_string(m_addr));
    }
    m_sensor_id = res.sensor_id;
    m_context_id = res.context_id;
    m_flow.source = res.sensor_id;
    if (derive_flow_id(m_flow) != res.flow_id)
    {
        throw InternalError("bound flow id disagrees with the sensor's own derivation");
    }
    return JoinOutcome{res.newly_defined ? JoinOutcome::Kind::formed_new
                                         : JoinOutcome::Kind::joined_existing,
                       res.context_id, res.sensor_id, res.overlay_hops};
}

bool
FlowSensor::buffer_pre_join(Packet pkt)
{
    if (m_pre_join.size() >= kPreJoinBufferLimit)
    {
        return false;
    }
    m_pre_join.push_back(std::move(pkt));
    return true;
}

std::vector<Packet>
FlowSensor::take_pre_join()
{
    std::vector<Packet> out(m_pre_join.begin(), m_pre_join.end());
    m_pre_join.clear();
    return out;
}

JoinOutcome
join(FlowSensor& sensor, LogicalSink& sinks, SinkIndex contact)
{
    const ResolveRequest req = sensor.begin_join();
    try
    {
        return sensor.complete_join(sinks.resolve_flow(contact, req));
    }
    catch (const ResolutionFailed& e)
    {
        throw JoinFailed(std::string("join failed: ") + e.what());
    }
}

} // namespace lcsim
