#include "lcsim/logical_sink.hpp"

#include "lcsim/errors.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

namespace lcsim {

namespace {

template <class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

ContextId
make_context_id(SinkIndex index, std::uint64_t counter)
{
    return ContextId{(std::uint64_t{index} + 1) << 32 | (counter & 0xffffffffULL)};
}

SensorId
make_sensor_id(SinkIndex index, std::uint64_t counter)
{
    return SensorId{(std::uint64_t{index} + 1) << 40 | (counter & 0xffffffffffULL)};
}

ResolveRequest
ResolveRequest::from_match(SensorAddr requester,
                           std::optional<SensorId> sensor,
                           const MatchFields& match)
{
    return ResolveRequest{requester, sensor, derive_flow_id(match), extract_context_key(match),
                          match};
}

SinkState::SinkState(SinkId id, std::shared_ptr<const ChordRing> ring)
    : m_id(id), m_ring(std::move(ring))
{
    if (!m_ring)
    {
        throw ContractViolation("sink constructed without a ring");
    }
    const auto idx = m_ring->index_of(id);
    if (!idx)
    {
        throw ContractViolation("sink " + std::to_string(id.value) + " is not on the ring");
    }
    m_ring_index = *idx;
}

void
SinkState::enqueue(SyncUpdate::Kind kind)
{
    m_outbox.push_back(SyncUpdate{index(), m_next_seq++, std::move(kind)});
}

std::vector<SyncUpdate>
SinkState::take_outbox()
{
    std::vector<SyncUpdate> out(std::make_move_iterator(m_outbox.begin()),
                                std::make_move_iterator(m_outbox.end()));
    m_outbox.clear();
    return out;
}

ContextId
SinkState::canonical(ContextId id) const
{
    for (auto it = m_aliases.find(id); it != m_aliases.end(); it = m_aliases.find(id))
    {
        id = it->second;
    }
    return id;
}

bool
SinkState::knows_context(ContextId id) const
{
    return m_reverse.contains(id);
}

bool
SinkState::is_published(ContextId id) const
{
    return knows_context(id) && m_published.contains(canonical(id));
}

std::optional<ContextId>
SinkState::local_lookup(const ContextKey& key) const
{
    auto it = m_registry.find(key);
    if (it == m_registry.end())
    {
        return std::nullopt;
    }
    return it->second;
}

std::optional<ContextId>
SinkState::bound_context(SensorId sensor, FlowId flow) const
{
    auto it = m_flow_table.find({sensor, flow});
    if (it == m_flow_table.end())
    {
        return std::nullopt;
    }
    return canonical(it->second);
}

std::vector<ContextFlowTableEntry>
SinkState::context_flow_table() const
{
    std::vector<ContextFlowTableEntry> rows;
    rows.reserve(m_flow_table.size());
    for (const auto& [k, ctx] : m_flow_table)
    {
        rows.push_back(ContextFlowTableEntry{k.first, k.second, ctx});
    }
    return rows;
}

bool
SinkState::adopt_context(const ContextKey& key, ContextId id)
{
    if (knows_context(id))
    {
        id = canonical(id);
    }
    m_reverse.emplace(id, key);
    auto it = m_registry.find(key);
    if (it == m_registry.end())
    {
        m_registry.emplace(key, id);
        return true;
    }
    if (it->second == id)
    {
        return false;
    }
    const ContextId winner = std::min(it->second, id);
    const ContextId loser = std::max(it->second, id);
    it->second = winner;
    m_aliases[loser] = winner;
    remap(loser, winner);
    return true;
}

void
SinkState::remap(ContextId loser, ContextId winner)
{
    for (auto& [from, to] : m_aliases)
    {
        if (to == loser)
        {
            to = winner;
        }
    }
    for (auto& [k, ctx] : m_flow_table)
    {
        if (ctx == loser)
        {
            ctx = winner;
        }
    }
    if (auto node = m_groups.extract(loser))
    {
        m_groups[winner].merge(node.mapped());
    }
    if (m_published.erase(loser) > 0)
    {
        m_published.insert(winner);
    }
    std::set<std::pair<ContextId, SensorId>> subs;
    for (const auto& [ctx, sensor] : m_subscriptions)
    {
        subs.emplace(ctx == loser ? winner : ctx, sensor);
    }
    m_subscriptions = std::move(subs);
}

ContextId
SinkState::mint_context(const ContextKey& key)
{
    if (key.value.empty())
    {
        throw InvalidRequest("cannot define a context for an empty key");
    }
    const ContextId id = make_context_id(index(), ++m_context_counter);
    adopt_context(key, id);
    enqueue(SyncUpdate::NewContext{key, id});
    retry_deferred();
    return canonical(id);
}

ContextId
SinkState::define_context(const ContextKey& key)
{
    const ContextId id = mint_context(key);
    publish_context(id);
    return id;
}

SensorId
SinkState::allocate_sensor_id()
{
    const SensorId id = make_sensor_id(index(), ++m_sensor_counter);
    m_known_sensors.insert(id);
    return id;
}

void
SinkState::bind(SensorId sensor, FlowId flow, ContextId context)
{
    if (!knows_context(context))
    {
        throw ContractViolation("bind to unknown context " + to_string(context));
    }
    const ContextId c = canonical(context);
    m_known_sensors.insert(sensor);
    auto [it, inserted] = m_flow_table.try_emplace({sensor, flow}, c);
    if (!inserted)
    {
        if (canonical(it->second) == c)
        {
            return;
        }
        throw ContractViolation("flow " + to_string(flow) + " of sensor " + to_string(sensor) +
                                " is already bound to another context");
    }
    m_groups[c].insert(sensor);
    enqueue(SyncUpdate::NewMember{c, sensor, flow});
}

void
SinkState::publish_context(ContextId id)
{
    if (!knows_context(id))
    {
        throw InvalidRequest("publish of unknown context " + to_string(id));
    }
    const ContextId c = canonical(id);
    if (m_published.insert(c).second)
    {
        enqueue(SyncUpdate::Publish{c});
    }
}

SubscribeOutcome
SinkState::subscribe(SensorId sensor, ContextId id)
{
    if (!knows_sensor(sensor))
    {
        throw InvalidRequest("sensor " + to_string(sensor) + " is not registered");
    }
    if (!is_published(id))
    {
        return SubscribeOutcome::unknown_context;
    }
    const ContextId c = canonical(id);
    if (m_subscriptions.emplace(c, sensor).second)
    {
        m_groups[c].insert(sensor);
        enqueue(SyncUpdate::Subscribe{c, sensor});
    }
    return SubscribeOutcome::subscribed;
}

bool
SinkState::try_apply(const SyncUpdate::Kind& kind)
{
    return std::visit(
        Overloaded{
            [&](const SyncUpdate::NewContext& u) {
                adopt_context(u.key, u.id);
                return true;
            },
            [&](const SyncUpdate::NewMember& u) {
                if (!knows_context(u.context))
                {
                    return false;
                }
                const ContextId c = canonical(u.context);
                m_known_sensors.insert(u.sensor);
                auto [it, inserted] = m_flow_table.try_emplace({u.sensor, u.flow}, c);
                if (!inserted)
                {
                    // A flow maps to one key; keep the lower id if peers ever disagree.
                    it->second = std::min(canonical(it->second), c);
                }
                m_groups[c].insert(u.sensor);
                return true;
            },
            [&](const SyncUpdate::Publish& u) {
                if (!knows_context(u.context))
                {
                    return false;
                }
                m_published.insert(canonical(u.context));
                return true;
            },
            [&](const SyncUpdate::Subscribe& u) {
                if (!knows_context(u.context))
                {
                    return false;
                }
                const ContextId c = canonical(u.context);
                m_known_sensors.insert(u.sensor);
                m_subscriptions.emplace(c, u.sensor);
                m_groups[c].insert(u.sensor);
                return true;
            },
        },
        kind);
}

void
SinkState::retry_deferred()
{
    bool progress = true;
    while (progress && !m_deferred.empty())
    {
        progress = false;
        for (auto it = m_deferred.begin(); it != m_deferred.end();)
        {
            if (try_apply(it->kind))
            {
                it = m_deferred.erase(it);
                progress = true;
            }
            else
            {
                ++it;
            }
        }
    }
}

ApplyOutcome
SinkState::apply_sync(const SyncUpdate& update)
{
    if (update.origin == index())
    {
        throw ContractViolation("sink received its own sync update");
    }
    if (!m_applied[update.origin].insert(update.seq).second)
    {
        return ApplyOutcome::duplicate;
    }
    if (!try_apply(update.kind))
    {
        m_deferred.push_back(update);
        return ApplyOutcome::deferred;
    }
    retry_deferred();
    return ApplyOutcome::applied;
}

SensorId
SinkState::sensor_for(const ResolveRequest& req, std::optional<SensorId> assigned)
{
    if (req.sensor)
    {
        return *req.sensor;
    }
    if (assigned)
    {
        return *assigned;
    }
    return allocate_sensor_id();
}

FlowId
SinkState::bound_flow(const ResolveRequest& req, SensorId sensor) const
{
    if (req.sensor)
    {
        return req.flow_id;
    }
    MatchFields m = req.match;
    m.source = sensor;
    return derive_flow_id(m);
}

Resolution
SinkState::bind_and_resolve(const ResolveRequest& req,
                            SensorId sensor,
                            ContextId context,
                            bool newly_defined,
                            unsigned hops)
{
    const FlowId flow = bound_flow(req, sensor);
    if (auto existing = bound_context(sensor, flow))
    {
        return Resolution{*existing, sensor, flow, false, hops};
    }
    bind(sensor, flow, context);
    return Resolution{canonical(context), sensor, flow, newly_defined, hops};
}

SinkStep
SinkState::handle(const ResolveRequest& req)
{
    if (req.key.value.empty())
    {
        throw InvalidRequest("resolution request with an empty context key");
    }
    SinkStep step;
    if (req.sensor)
    {
        if (auto ctx = bound_context(*req.sensor, req.flow_id))
        {
            step.to_sensor =
                ResolveReply{req.requester, Resolution{*ctx, *req.sensor, req.flow_id, false, 0}};
            return step;
        }
    }
    if (auto ctx = local_lookup(req.key))
    {
        const SensorId sensor = sensor_for(req, std::nullopt);
        step.to_sensor = ResolveReply{req.requester, bind_and_resolve(req, sensor, *ctx, false, 0)};
        return step;
    }
    const auto hit = m_ring->find_successor(ring_position(req.key, m_ring->bits()), m_ring_index);
    if (hit.node == m_ring_index)
    {
        const ContextId ctx = mint_context(req.key);
        publish_context(ctx);
        const SensorId sensor = sensor_for(req, std::nullopt);
        step.to_sensor = ResolveReply{req.requester, bind_and_resolve(req, sensor, ctx, true, 0)};
        return step;
    }
    const SinkIndex target = m_ring->node(hit.node).sink.value;
    step.to_sinks.push_back(SinkEnvelope{target, LookupRequest{index(), hit.hops + 1, req}});
    return step;
}

SinkStep
SinkState::handle(const LookupRequest& lr)
{
    SinkStep step;
    bool newly = false;
    auto ctx = local_lookup(lr.request.key);
    if (!ctx)
    {
        ctx = mint_context(lr.request.key);
        publish_context(*ctx);
        newly = true;
    }
    std::optional<SensorId> assigned;
    if (!lr.request.sensor)
    {
        assigned = allocate_sensor_id();
    }
    step.to_sinks.push_back(SinkEnvelope{
        lr.origin, LookupReply{index(), lr.hops, *ctx, assigned, newly, lr.request}});
    return step;
}

SinkStep
SinkState::handle(const LookupReply& rep)
{
    if (adopt_context(rep.request.key, rep.context))
    {
        retry_deferred();
    }
    const SensorId sensor = sensor_for(rep.request, rep.assigned_sensor);
    SinkStep step;
    step.to_sensor = ResolveReply{
        rep.request.requester,
        bind_and_resolve(rep.request, sensor, rep.context, rep.newly_defined, rep.hops)};
    return step;
}

SinkStep
SinkState::handle(const SinkMessage& msg)
{
    return std::visit(Overloaded{
                          [&](const LookupRequest& m) { return handle(m); },
                          [&](const LookupReply& m) { return handle(m); },
                          [&](const SyncUpdate& m) {
                              apply_sync(m);
                              return SinkStep{};
                          },
                      },
                      msg);
}

std::string
SinkState::serialize() const
{
    std::ostringstream os;
    os << "registry\n";
    for (const auto& [key, id] : m_registry)
    {
        os << "  " << to_string(id) << ' ' << key.value << '\n';
    }
    os << "aliases\n";
    for (const auto& [from, to] : m_aliases)
    {
        os << "  " << to_string(from) << " -> " << to_string(to) << '\n';
    }
    os << "context_flow_table\n";
    for (const auto& [k, ctx] : m_flow_table)
    {
        os << "  " << to_string(k.first) << ' ' << to_string(k.second) << ' '
           << to_string(ctx) << '\n';
    }
    os << "group_table\n";
    for (const auto& [ctx, members] : m_groups)
    {
        os << "  " << to_string(ctx) << ':';
        for (const auto& s : members)
        {
            os << ' ' << to_string(s);
        }
        os << '\n';
    }
    os << "published\n";
    for (const auto& ctx : m_published)
    {
        os << "  " << to_string(ctx) << '\n';
    }
    os << "subscriptions\n";
    for (const auto& [ctx, sensor] : m_subscriptions)
    {
        os << "  " << to_string(ctx) << ' ' << to_string(sensor) << '\n';
    }
    return os.str();
}

std::string
SinkState::fingerprint() const
{
    std::ostringstream os;
    os << serialize() << "sensors";
    for (const auto& s : m_known_sensors)
    {
        os << ' ' << to_string(s);
    }
    os << "\nreverse";
    for (const auto& [id, key] : m_reverse)
    {
        os << ' ' << to_string(id) << '=' << key.value;
    }
    os << "\ncounters " << m_next_seq << ' ' << m_context_counter << ' ' << m_sensor_counter;
    os << "\napplied";
    for (const auto& [origin, seqs] : m_applied)
    {
        os << ' ' << origin << ':';
        for (auto q : seqs)
        {
            os << q << ',';
        }
    }
    os << "\ndeferred";
    for (const auto& u : m_deferred)
    {
        os << ' ' << describe(u);
    }
    os << "\noutbox";
    for (const auto& u : m_outbox)
    {
        os << ' ' << describe(u);
    }
    os << '\n';
    return os.str();
}

std::string
describe(const ResolveRequest& req)
{
    return fmt::format("req({},{},{},{})", req.requester, req.sensor ? to_string(*req.sensor) : "-",
                       to_string(req.flow_id), req.key.value);
}

std::string
describe(const SyncUpdate& u)
{
    const std::string body = std::visit(
        Overloaded{
            [](const SyncUpdate::NewContext& k) { return fmt::format("new_context {} {}", k.key.value, to_string(k.id)); },
            [](const SyncUpdate::NewMember& k) {
                return fmt::format("new_member {} {} {}", to_string(k.context), to_string(k.sensor), to_string(k.flow));
            },
            [](const SyncUpdate::Publish& k) { return fmt::format("publish {}", to_string(k.context)); },
            [](const SyncUpdate::Subscribe& k) {
                return fmt::format("subscribe {} {}", to_string(k.context), to_string(k.sensor));
            },
        },
        u.kind);
    return fmt::format("sync({}#{} {})", u.origin, u.seq, body);
}

std::string
describe(const SinkMessage& msg)
{
    return std::visit(
        Overloaded{
            [](const LookupRequest& m) { return fmt::format("lookup({} h{} {})", m.origin, m.hops, describe(m.request)); },
            [](const LookupReply& m) {
                return fmt::format("reply({} h{} {} {} {} {})", m.responder, m.hops, to_string(m.context),
                                   m.assigned_sensor ? to_string(*m.assigned_sensor) : "-", m.newly_defined,
                                   describe(m.request));
            },
            [](const SyncUpdate& m) { return describe(m); },
        },
        msg);
}

LogicalSink::LogicalSink(std::vector<SinkId> sinks, unsigned ring_bits)
{
    if (sinks.empty())
    {
        throw ConfigError("num_networks", "a logical-sink needs at least one sink");
    }
    for (std::size_t i = 0; i < sinks.size(); ++i)
    {
        if (sinks[i].value != i)
        {
            throw ConfigError("sinks", "sink ids must be 0..n-1 in order");
        }
    }
    m_ring = std::make_shared<const ChordRing>(ChordRing::from_sinks(sinks, ring_bits));
    m_sinks.reserve(sinks.size());
    for (const auto& s : sinks)
    {
        m_sinks.emplace_back(s, m_ring);
    }
    m_online.assign(sinks.size(), true);
}

Resolution
LogicalSink::resolve_flow(SinkIndex contact, const ResolveRequest& req)
{
    if (!online(contact))
    {
        throw ResolutionFailed("contact sink " + std::to_string(contact) + " is offline");
    }
    auto step = sink(contact).handle(req);
    std::deque<SinkEnvelope> queue(step.to_sinks.begin(), step.to_sinks.end());
    std::optional<ResolveReply> reply = step.to_sensor;
    while (!queue.empty())
    {
        SinkEnvelope env = std::move(queue.front());
        queue.pop_front();
        if (!online(env.to))
        {
            throw ResolutionFailed("sink " + std::to_string(env.to) + " is unreachable");
        }
        auto next = sink(env.to).handle(env.message);
        queue.insert(queue.end(), next.to_sinks.begin(), next.to_sinks.end());
        if (next.to_sensor)
        {
            reply = next.to_sensor;
        }
    }
    if (!reply)
    {
        throw InternalError("resolution finished without a reply");
    }
    return reply->resolution;
}

LookupResult
LogicalSink::lookup_context(SinkIndex initiator, const ContextKey& key) const
{
    return lcsim::lookup_context(*m_ring, sink(initiator).id(), key,
                                 [this](SinkId s, const ContextKey& k) {
                                     return sink(s.value).local_lookup(k);
                                 });
}

void
LogicalSink::flush_outboxes()
{
    for (auto& s : m_sinks)
    {
        for (auto& update : s.take_outbox())
        {
            for (const auto& peer : m_sinks)
            {
                if (peer.index() != s.index())
                {
                    m_channels[{s.index(), peer.index()}].push_back(update);
                }
            }
        }
    }
}

std::size_t
LogicalSink::in_flight() const
{
    std::size_t n = 0;
    for (const auto& [k, q] : m_channels)
    {
        n += q.size();
    }
    return n;
}

std::vector<std::pair<SinkIndex, SinkIndex>>
LogicalSink::ready_channels() const
{
    std::vector<std::pair<SinkIndex, SinkIndex>> out;
    for (const auto& [k, q] : m_channels)
    {
        if (!q.empty())
        {
            out.push_back(k);
        }
    }
    return out;
}

ApplyOutcome
LogicalSink::deliver(SinkIndex origin, SinkIndex dest)
{
    auto it = m_channels.find({origin, dest});
    if (it == m_channels.end() || it->second.empty())
    {
        throw ContractViolation("no sync update in flight on that channel");
    }
    SyncUpdate u = std::move(it->second.front());
    it->second.pop_front();
    return sink(dest).apply_sync(u);
}

void
LogicalSink::synchronize()
{
    flush_outboxes();
    while (in_flight() > 0)
    {
        for (const auto& [o, d] : ready_channels())
        {
            deliver(o, d);
        }
        flush_outboxes();
    }
}

bool
LogicalSink::converged() const
{
    if (in_flight() > 0)
    {
        return false;
    }
    const std::string first = m_sinks.front().serialize();
    return std::all_of(m_sinks.begin(), m_sinks.end(), [&](const SinkState& s) {
        return s.deferred_count() == 0 && s.outbox_empty() && s.serialize() == first;
    });
}

std::string
LogicalSink::dump_state() const
{
    std::ostringstream os;
    for (const auto& s : m_sinks)
    {
        os << "== sink " << s.index() << " (network " << s.id().network.value << ") ==\n"
           << s.serialize();
    }
    return os.str();
}

} // namespace lcsim
