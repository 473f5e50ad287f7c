#pragma once

// Exhaustive state-space search over the sensor/sink message system at tiny
// scale. Sensors and sinks are automata; every message travels over a bounded
// channel (sensor -> contact sink, sink -> sensor, one per ordered sink pair).
// Each step delivers one channel head (or any element in unordered mode) or lets
// an idle sensor send its resolution request. A transition whose outputs would
// overflow a channel is disabled, as a blocking send would be.

#include "lcsim/flow_sensor.hpp"
#include "lcsim/logical_sink.hpp"

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lcsim::testing {

struct ExploreSpec
{
    std::size_t sinks = 2;
    struct Sensor
    {
        SinkIndex contact = 0;
        std::string key;
    };
    std::vector<Sensor> sensors;
    std::size_t channel_bound = 4;
    bool unordered = false; // deliver any queued message, not just the head
};

struct ExploreResult
{
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t terminal_states = 0;
    std::size_t max_depth = 0;
    std::size_t blocked_sends = 0; // transitions disabled by a full channel
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

namespace detail {

enum class Phase
{
    idle,
    waiting,
    done
};

struct World
{
    LogicalSink sinks;
    std::vector<FlowSensor> sensors;
    std::vector<Phase> phase;
    std::vector<SinkIndex> contact;
    std::vector<std::deque<ResolveRequest>> up;
    std::vector<std::deque<ResolveReply>> down;
    std::map<std::pair<SinkIndex, SinkIndex>, std::deque<SinkMessage>> links;

    std::string key() const
    {
        std::string k;
        for (SinkIndex i = 0; i < sinks.size(); ++i)
        {
            k += sinks.sink(i).fingerprint();
        }
        for (std::size_t i = 0; i < sensors.size(); ++i)
        {
            const auto& s = sensors[i];
            k += "s" + std::to_string(static_cast<int>(phase[i]));
            k += s.context_id() ? to_string(*s.context_id()) : "-";
            k += s.sensor_id() ? to_string(*s.sensor_id()) : "-";
            for (const auto& r : up[i])
            {
                k += " up " + describe(r);
            }
            for (const auto& r : down[i])
            {
                k += " down " + to_string(r.resolution.context_id) + to_string(r.resolution.sensor_id) +
                     to_string(r.resolution.flow_id);
            }
            k += '\n';
        }
        for (const auto& [pair, q] : links)
        {
            if (q.empty())
            {
                continue;
            }
            k += std::to_string(pair.first) + ">" + std::to_string(pair.second);
            for (const auto& m : q)
            {
                k += ' ' + describe(m);
            }
            k += '\n';
        }
        return k;
    }
};

class Explorer
{
  public:
    explicit Explorer(ExploreSpec spec) : m_spec(std::move(spec)) {}

    ExploreResult run()
    {
        World init = initial();
        struct Frame
        {
            std::string key;
            std::vector<World> next;
            std::size_t i = 0;
        };
        std::vector<Frame> stack;
        auto enter = [&](World w) -> bool {
            std::string k = w.key();
            auto [it, fresh] = m_color.try_emplace(k, Color::grey);
            if (!fresh)
            {
                if (it->second == Color::grey)
                {
                    fail("cycle in the state graph: a run can loop forever");
                }
                return false;
            }
            ++m_result.states;
            auto next = successors(w);
            m_result.transitions += next.size();
            if (next.empty())
            {
                check_terminal(w);
            }
            stack.push_back(Frame{std::move(k), std::move(next), 0});
            m_result.max_depth = std::max(m_result.max_depth, stack.size());
            return true;
        };
        enter(std::move(init));
        while (!stack.empty() && m_result.violations.size() < 10)
        {
            Frame& top = stack.back();
            if (top.i == top.next.size())
            {
                m_color[top.key] = Color::black;
                stack.pop_back();
                continue;
            }
            World w = std::move(top.next[top.i++]);
            enter(std::move(w));
        }
        return m_result;
    }

  private:
    enum class Color
    {
        grey,
        black
    };

    void fail(std::string what) { m_result.violations.push_back(std::move(what)); }

    World initial() const
    {
        std::vector<SinkId> ids;
        for (std::uint32_t i = 0; i < m_spec.sinks; ++i)
        {
            ids.push_back(SinkId{i, NetworkId{i + 1}});
        }
        World w{LogicalSink(std::move(ids)), {}, {}, {}, {}, {}, {}};
        for (std::size_t i = 0; i < m_spec.sensors.size(); ++i)
        {
            const auto& s = m_spec.sensors[i];
            w.sensors.emplace_back(static_cast<SensorAddr>(i), NetworkId{s.contact + 1}, Position{}, false,
                                   MatchFields{std::nullopt, s.key, 7});
            w.phase.push_back(Phase::idle);
            w.contact.push_back(s.contact);
            w.up.emplace_back();
            w.down.emplace_back();
        }
        return w;
    }

    bool room(const World& w, SinkIndex from, SinkIndex to, std::size_t extra) const
    {
        auto it = w.links.find({from, to});
        const std::size_t used = it == w.links.end() ? 0 : it->second.size();
        return used + extra <= m_spec.channel_bound;
    }

    // Applies a sink step; false if a channel would overflow.
    bool route(World& w, SinkIndex at, SinkStep step)
    {
        std::map<std::pair<SinkIndex, SinkIndex>, std::size_t> need;
        for (const auto& env : step.to_sinks)
        {
            ++need[{at, env.to}];
        }
        auto outbox = w.sinks.sink(at).take_outbox();
        for (SinkIndex peer = 0; peer < w.sinks.size(); ++peer)
        {
            if (peer != at && !outbox.empty())
            {
                need[{at, peer}] += outbox.size();
            }
        }
        for (const auto& [pair, n] : need)
        {
            if (!room(w, pair.first, pair.second, n))
            {
                return false;
            }
        }
        if (step.to_sensor)
        {
            const auto r = step.to_sensor->requester;
            if (r >= w.sensors.size())
            {
                fail("reply addressed to an unknown sensor");
                return false;
            }
            if (w.down[r].size() + 1 > m_spec.channel_bound)
            {
                return false;
            }
            w.down[r].push_back(*step.to_sensor);
        }
        for (auto& env : step.to_sinks)
        {
            w.links[{at, env.to}].push_back(std::move(env.message));
        }
        for (const auto& u : outbox)
        {
            for (SinkIndex peer = 0; peer < w.sinks.size(); ++peer)
            {
                if (peer != at)
                {
                    w.links[{at, peer}].push_back(u);
                }
            }
        }
        return true;
    }

    std::vector<World> successors(const World& w)
    {
        std::vector<World> out;
        auto keep = [&](World&& n, bool ok) {
            if (ok)
            {
                out.push_back(std::move(n));
            }
            else
            {
                ++m_result.blocked_sends;
            }
        };
        for (std::size_t i = 0; i < w.sensors.size(); ++i)
        {
            if (w.phase[i] == Phase::idle && w.up[i].size() < m_spec.channel_bound)
            {
                World n = w;
                n.up[i].push_back(n.sensors[i].begin_join());
                n.phase[i] = Phase::waiting;
                out.push_back(std::move(n));
            }
            if (!w.up[i].empty())
            {
                World n = w;
                const ResolveRequest req = n.up[i].front();
                n.up[i].pop_front();
                SinkStep step;
                try
                {
                    step = n.sinks.sink(n.contact[i]).handle(req);
                }
                catch (const std::exception& e)
                {
                    fail(std::string("sink threw on a resolution request: ") + e.what());
                    continue;
                }
                const bool ok = route(n, n.contact[i], std::move(step));
                keep(std::move(n), ok);
            }
            if (!w.down[i].empty())
            {
                World n = w;
                const ResolveReply rep = n.down[i].front();
                n.down[i].pop_front();
                if (n.phase[i] != Phase::waiting)
                {
                    fail("sensor " + std::to_string(i) + " got a reply it did not ask for");
                    continue;
                }
                n.sensors[i].complete_join(rep.resolution);
                n.phase[i] = Phase::done;
                out.push_back(std::move(n));
            }
        }
        for (const auto& [pair, q] : w.links)
        {
            const std::size_t choices = m_spec.unordered ? q.size() : std::min<std::size_t>(q.size(), 1);
            for (std::size_t j = 0; j < choices; ++j)
            {
                World n = w;
                auto& nq = n.links[pair];
                const SinkMessage msg = nq[j];
                nq.erase(nq.begin() + static_cast<std::ptrdiff_t>(j));
                SinkStep step;
                try
                {
                    step = n.sinks.sink(pair.second).handle(msg);
                }
                catch (const std::exception& e)
                {
                    fail(std::string("sink threw on ") + describe(msg) + ": " + e.what());
                    continue;
                }
                const bool ok = route(n, pair.second, std::move(step));
                keep(std::move(n), ok);
            }
        }
        return out;
    }

    void check_terminal(const World& w)
    {
        ++m_result.terminal_states;
        for (std::size_t i = 0; i < w.sensors.size(); ++i)
        {
            if (w.phase[i] != Phase::done)
            {
                fail("deadlock: sensor " + std::to_string(i) + " never received a context id\n" + w.key());
                return;
            }
        }
        if (!w.sinks.converged())
        {
            fail("terminal state with diverged sinks\n" + w.key());
            return;
        }
        for (std::size_t i = 0; i < w.sensors.size(); ++i)
        {
            const auto& s = w.sensors[i];
            for (SinkIndex k = 0; k < w.sinks.size(); ++k)
            {
                const auto& sink = w.sinks.sink(k);
                const auto reg = sink.local_lookup(extract_context_key(s.flow()));
                if (!reg || sink.canonical(*s.context_id()) != *reg)
                {
                    fail("sensor " + std::to_string(i) + " holds a context its key does not map to");
                    return;
                }
                if (!sink.group_table().contains(*reg) || !sink.group_table().at(*reg).contains(*s.sensor_id()))
                {
                    fail("sensor " + std::to_string(i) + " missing from the group table");
                    return;
                }
            }
        }
    }

    ExploreSpec m_spec;
    ExploreResult m_result;
    std::unordered_map<std::string, Color> m_color;
};

} // namespace detail

inline ExploreResult
explore(ExploreSpec spec)
{
    return detail::Explorer(std::move(spec)).run();
}

} // namespace lcsim::testing
