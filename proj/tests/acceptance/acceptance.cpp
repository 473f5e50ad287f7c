// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if any fails.

#include "lcsim/config_file.hpp"
#include "lcsim/sim_engine.hpp"
#include "lcsim/sweep.hpp"

#include "../support/drive.hpp"
#include "../support/explorer.hpp"
#include "../support/fifo_oracle.hpp"
#include "../support/gen.hpp"
#include "../support/ring_oracle.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

using namespace lcsim;
using namespace lcsim::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SweepSpec
load_preset(const std::string& name)
{
    const auto parsed = load_config(fs::path(LCSIM_PRESET_DIR) / (name + ".cfg"));
    return std::get<SweepSpec>(parsed);
}

const GroupReport&
group(const MetricsReport& r, std::uint32_t g)
{
    for (const auto& gr : r.groups)
    {
        if (gr.group == g)
        {
            return gr;
        }
    }
    throw std::runtime_error(fmt::format("group {} missing", g));
}

double
queue_loss(const MetricsReport& r)
{
    return static_cast<double>(r.totals.lost_queue) / static_cast<double>(r.totals.tx);
}

std::string
slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// 1: CHORD lookups against the linear scan on random m = 8 rings.
Verdict
chord_oracle()
{
    const auto t0 = Clock::now();
    Gen gen(2024);
    std::size_t lookups = 0, wrong = 0, over = 0;
    unsigned worst_excess = 0;
    for (int ring_no = 0; ring_no < 200; ++ring_no)
    {
        std::vector<std::uint64_t> ids;
        const auto n = static_cast<std::size_t>(gen.range(1, 64));
        const ChordRing ring = random_ring(gen, n, 8, &ids);
        const auto c = check_ring_exhaustive(ring, ids);
        lookups += c.lookups;
        wrong += c.wrong_successor;
        over += c.over_bound;
        if (c.max_hops > hop_bound(n))
        {
            worst_excess = std::max(worst_excess, c.max_hops - hop_bound(n));
        }
    }
    const double secs = seconds_since(t0);
    return {wrong == 0 && over == 0 && secs < 5.0,
            fmt::format("{} lookups (every key from every node), {} wrong successors, {} over the hop bound "
                        "(worst excess {}), {:.2f} s",
                        lookups, wrong, over, worst_excess, secs)};
}

// 2: key <-> context bijection and identical registries under random interleavings.
Verdict
context_bijection()
{
    Gen gen(77);
    std::size_t failures = 0;
    std::string first;
    std::size_t deliveries = 0;
    for (int scenario = 0; scenario < 500; ++scenario)
    {
        const auto n_sinks = static_cast<std::size_t>(gen.range(1, 4));
        LogicalSink ls(sink_ids(n_sinks));
        Driver driver(ls, gen);
        std::vector<JoinSpec> joins;
        const auto n = gen.range(1, 60);
        for (SensorAddr a = 0; a < n; ++a)
        {
            MatchFields m{std::nullopt, "ctx-" + std::to_string(gen.range(0, 7)), static_cast<std::uint16_t>(gen.range(0, 3))};
            joins.push_back({a, static_cast<SinkIndex>(gen.range(0, static_cast<std::int64_t>(n_sinks) - 1)), m});
            driver.add(joins.back());
        }
        const auto result = driver.run();
        deliveries += result.deliveries;
        std::string err = check_quiescent(ls, joins, result);
        for (SinkIndex i = 1; err.empty() && i < n_sinks; ++i)
        {
            if (ls.sink(i).registry() != ls.sink(0).registry() || ls.sink(i).serialize() != ls.sink(0).serialize())
            {
                err = "registries differ";
            }
        }
        if (!err.empty())
        {
            ++failures;
            if (first.empty())
            {
                first = fmt::format(" (scenario {}: {})", scenario, err);
            }
        }
    }
    return {failures == 0, fmt::format("500 scenarios, {} message deliveries, {} failures{}", deliveries, failures, first)};
}

// 3: forced concurrent definitions of one key converge to one winner.
Verdict
race_confluence()
{
    Gen gen(31337);
    int failures = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t)
    {
        const auto n_sinks = static_cast<std::size_t>(gen.range(2, 4));
        LogicalSink ls(sink_ids(n_sinks));
        Driver driver(ls, gen);
        const ContextKey key{"race"};
        for (SinkIndex i = 0; i < n_sinks; ++i)
        {
            driver.force_define(i, key);
        }
        std::vector<JoinSpec> joins;
        for (SensorAddr a = 0; a < 4; ++a)
        {
            joins.push_back({a, static_cast<SinkIndex>(gen.range(0, static_cast<std::int64_t>(n_sinks) - 1)),
                             MatchFields{std::nullopt, "race", 1}});
            driver.add(joins.back());
        }
        const auto result = driver.run();
        bool ok = check_quiescent(ls, joins, result).empty();
        const auto winner = ls.sink(0).local_lookup(key);
        ok = ok && winner.has_value();
        for (SinkIndex i = 0; ok && i < n_sinks; ++i)
        {
            ok = ls.sink(i).local_lookup(key) == winner;
            // every other definition of the key lost to a lower id
            for (const auto& [loser, to] : ls.sink(i).aliases())
            {
                ok = ok && ls.sink(i).canonical(loser) == *winner && *winner < loser;
            }
            ok = ok && ls.sink(i).aliases().size() + 1 >= n_sinks;
        }
        failures += ok ? 0 : 1;
    }
    return {failures == 0, fmt::format("{} adversarial orderings over 2-4 sinks, {} without a single common winner", trials, failures)};
}

// 4: closed-form delay and the FIFO recurrence.
Verdict
closed_form_delay()
{
    ScenarioConfig lone = deterministic_config();
    lone.num_groups = 1;
    lone.nodes_per_group = 1;
    Simulation sim(lone);
    Recorder rec;
    sim.set_observer(std::ref(rec));
    sim.run();
    const double expected = lone.prop_delay_s + 0.004096;
    double worst_closed = 0.0;
    for (const auto& p : rec.packets)
    {
        worst_closed = std::max(worst_closed, std::abs(static_cast<double>(p.delay_ns) * 1e-9 - expected));
    }
    const bool closed_ok = rec.packets.size() == 2000 && worst_closed <= 1e-12;

    double worst_fifo = 0.0;
    std::size_t mismatches = 0;
    std::size_t checked = 0;
    for (double skew : {0.0, 2000.0})
    {
        for (double rate : {6.0, 9.0, 10.0, 11.0})
        {
            ScenarioConfig c = deterministic_config();
            c.clock_skew_ppm = skew;
            c.flow_rate_pps = rate;
            Simulation s(c);
            Recorder r;
            s.set_observer(std::ref(r));
            s.run();
            const auto f = check_fifo(r.packets, transmission_time(c.packet_size_bytes, c.data_rate_bps).ns,
                                      SimTime::from_seconds(c.prop_delay_s).ns,
                                      static_cast<std::size_t>(c.queue_capacity_pkts));
            worst_fifo = std::max(worst_fifo, f.max_abs_error_s);
            mismatches += f.delay_mismatches + f.drop_mismatches + f.ties;
            checked += f.packets;
        }
    }
    return {closed_ok && worst_fifo <= 1e-12 && mismatches == 0,
            fmt::format("lone sender: {} packets, max |delay - {}| = {:.3g} s; FIFO oracle: {} packets, max error "
                        "{:.3g} s, {} mismatches",
                        rec.packets.size(), expected, worst_closed, checked, worst_fifo, mismatches)};
}

// 5: binomial loss for a single sender.
Verdict
loss_statistics()
{
    ScenarioConfig c = deterministic_config();
    c.num_groups = 1;
    c.nodes_per_group = 1;
    c.base_loss_prob = 0.05;
    const double p = c.base_loss_prob;
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(c.total_packets));
    int inside = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
    {
        c.seed = seed;
        const auto r = run(c);
        const double dev = std::abs(*r.groups.at(0).loss_ratio - p) / sigma;
        worst = std::max(worst, dev);
        inside += dev <= 3.0 ? 1 : 0;
    }
    return {inside >= 95, fmt::format("{}/100 seeds within 3 sigma ({:.5f}) of {}; worst {:.2f} sigma", inside, sigma, p, worst)};
}

// 6: delay and loss versus flow rate on the fig7 preset.
Verdict
flow_rate_trend()
{
    const auto t0 = Clock::now();
    const SweepSpec spec = load_preset("fig7");
    SweepOptions opt;
    opt.workers = 4;
    const auto result = run_sweep(spec, opt);
    if (!result.ok())
    {
        return {false, "sweep had failed runs"};
    }
    const auto reports = result.reports();
    // knee: first rate whose queue loss exceeds 1%
    std::optional<std::size_t> knee;
    for (std::size_t i = 0; i < reports.size(); ++i)
    {
        if (queue_loss(reports[i]) > 0.01)
        {
            knee = i;
            break;
        }
    }
    if (!knee)
    {
        return {false, "no saturation knee in 6..11 pps"};
    }
    const double knee_rate = reports[*knee].config.flow_rate_pps;
    bool monotone = true;
    std::string where;
    const std::size_t from = *knee > 0 ? *knee - 1 : 0;
    for (std::size_t i = from; i + 1 < reports.size(); ++i)
    {
        for (const auto& g : reports[i].groups)
        {
            const auto& next = group(reports[i + 1], g.group);
            const bool ok = *next.mean_delay_s >= *g.mean_delay_s && *next.loss_ratio >= *g.loss_ratio;
            if (!ok && monotone)
            {
                where = fmt::format(" (group {} at {} -> {} pps)", g.group, reports[i].config.flow_rate_pps,
                                    reports[i + 1].config.flow_rate_pps);
            }
            monotone = monotone && ok;
        }
    }
    std::string delays;
    for (const auto& r : reports)
    {
        delays += fmt::format(" {}:{:.4f}/{:.3f}", r.config.flow_rate_pps, *group(r, 1).mean_delay_s,
                              *group(r, 1).loss_ratio);
    }
    const double secs = seconds_since(t0);
    return {knee_rate > 9.0 && knee_rate <= 11.0 && monotone && secs < 60.0,
            fmt::format("knee at {} pps; per-group delay and loss non-decreasing from {} pps: {}{}; "
                        "group 1 rate:delay/loss{}; {:.2f} s",
                        knee_rate, reports[from].config.flow_rate_pps, monotone ? "yes" : "no", where, delays, secs)};
}

// 7: three versus nine senders per group at 10 pps.
Verdict
scale_trend()
{
    const SweepSpec spec = load_preset("fig10");
    SweepOptions opt;
    opt.workers = 3;
    const auto result = run_sweep(spec, opt);
    if (!result.ok())
    {
        return {false, "sweep had failed runs"};
    }
    const auto reports = result.reports();
    const MetricsReport* small = nullptr;
    const MetricsReport* large = nullptr;
    for (const auto& r : reports)
    {
        small = r.config.nodes_per_group == 3 ? &r : small;
        large = r.config.nodes_per_group == 9 ? &r : large;
    }
    if (!small || !large)
    {
        return {false, "preset lacks 3 and 9 senders per group"};
    }
    bool pass = true;
    std::string detail;
    for (std::uint32_t g = 1; g <= small->config.num_groups; ++g)
    {
        const auto& a = group(*small, g);
        const auto& b = group(*large, g);
        const double increase = *b.mean_delay_s / *a.mean_delay_s - 1.0;
        const bool up = *b.mean_delay_s > *a.mean_delay_s && b.mean_jitter_s > a.mean_jitter_s;
        const bool in_band = increase >= 0.0 && increase <= 0.75;
        pass = pass && up && in_band;
        detail += fmt::format("{}group {}: delay {:.4f} -> {:.4f} s ({:+.0f}%), jitter {:.5f} -> {:.5f} s", g > 1 ? "; " : "",
                              g, *a.mean_delay_s, *b.mean_delay_s, 100 * increase, a.mean_jitter_s, b.mean_jitter_s);
    }
    return {pass, detail + " (band: +0..75%)"};
}

// 8: max sustainable rate, 256 B versus 512 B.
Verdict
packet_size_trend()
{
    auto sustainable = [](std::int64_t size, double rate) {
        ScenarioConfig c;
        c.packet_size_bytes = size;
        c.flow_rate_pps = rate;
        return queue_loss(run(c)) <= 0.01;
    };
    auto max_rate = [&](std::int64_t size) {
        double lo = 1.0;
        double hi = 64.0;
        for (int i = 0; i < 14; ++i)
        {
            const double mid = 0.5 * (lo + hi);
            (sustainable(size, mid) ? lo : hi) = mid;
        }
        return lo;
    };
    const double r512 = max_rate(512);
    const double r256 = max_rate(256);
    const double gain = r256 / r512 - 1.0;
    return {gain >= 0.80, fmt::format("max sustainable rate (queue loss <= 1%): 512 B {:.2f} pps, 256 B {:.2f} pps, "
                                      "gain {:+.0f}% (floor +80%)",
                                      r512, r256, 100 * gain)};
}

// 9: presets replay byte-identically; another seed changes traces, invariants hold.
Verdict
determinism()
{
    const fs::path root = fs::temp_directory_path() / fmt::format("lcsim_acceptance_{}", ::getpid());
    fs::remove_all(root);
    std::vector<std::string> problems;
    std::size_t runs = 0;
    for (const std::string name : {"fig7", "fig10", "fig11", "fig14", "fig16"})
    {
        SweepSpec spec = load_preset(name);
        std::string outputs[2];
        std::vector<std::string> traces[2];
        for (int pass = 0; pass < 2; ++pass)
        {
            const fs::path dir = root / fmt::format("{}_{}", name, pass);
            fs::create_directories(dir);
            SweepOptions opt;
            opt.workers = pass == 0 ? 1 : 4;
            opt.trace_dir = dir;
            const auto result = run_sweep(spec, opt);
            write_sweep_outputs(dir, spec, result);
            outputs[pass] = slurp(dir / "sweep.csv") + slurp(dir / "summary.dat") + slurp(dir / "manifest.txt");
            for (const auto& j : result.jobs)
            {
                traces[pass].push_back(slurp(dir / fmt::format("trace_{}.csv", j.job.run_id)));
            }
        }
        if (outputs[0] != outputs[1] || traces[0] != traces[1])
        {
            problems.push_back(name + ": replay differs");
        }

        spec.base.seed += 1000;
        SweepOptions opt;
        opt.workers = 4;
        opt.trace_dir = root / (name + "_reseeded");
        fs::create_directories(*opt.trace_dir);
        const auto other = run_sweep(spec, opt);
        if (!other.ok())
        {
            problems.push_back(name + ": reseeded run failed");
            continue;
        }
        for (const auto& j : other.jobs)
        {
            ++runs;
            const auto& r = *j.report;
            const std::string trace = slurp(*opt.trace_dir / fmt::format("trace_{}.csv", j.job.run_id));
            if (trace == traces[0].at(j.job.run_id))
            {
                problems.push_back(fmt::format("{} run {}: trace unchanged by the seed", name, j.job.run_id));
            }
            std::uint64_t tx = 0;
            for (const auto& g : r.groups)
            {
                tx += g.tx;
                if (g.tx != g.rx + g.lost_queue + g.lost_channel || g.tx == 0 || !g.mean_delay_s ||
                    *g.mean_delay_s < transmission_delay(r.config.packet_size_bytes, r.config.data_rate_bps) +
                                          r.config.prop_delay_s - 1e-12)
                {
                    problems.push_back(fmt::format("{} run {} group {}: invariant broken", name, j.job.run_id, g.group));
                }
            }
            const auto expected_tx = static_cast<std::uint64_t>(r.config.num_groups) * r.config.nodes_per_group *
                                     static_cast<std::uint64_t>(r.config.total_packets);
            if (tx != expected_tx || r.totals.in_flight != 0 || r.groups.size() != r.config.num_groups)
            {
                problems.push_back(fmt::format("{} run {}: packet accounting broken", name, j.job.run_id));
            }
        }
    }
    fs::remove_all(root);
    return {problems.empty(),
            fmt::format("5 presets replayed with 1 and 4 workers; {} reseeded runs checked{}", runs,
                        problems.empty() ? std::string() : "; first problem: " + problems.front())};
}

// 10: exhaustive exploration of 2 sensors x 2 sinks.
Verdict
liveness()
{
    const auto t0 = Clock::now();
    std::size_t states = 0, terminals = 0, configs = 0;
    std::vector<std::string> violations;
    for (bool unordered : {false, true})
    {
        for (auto [a, b] : {std::pair{"temp-high", "temp-high"}, std::pair{"temp-high", "humidity"}})
        {
            for (auto [ca, cb] : {std::pair{0U, 1U}, std::pair{1U, 0U}, std::pair{0U, 0U}, std::pair{1U, 1U}})
            {
                ExploreSpec s;
                s.sensors = {{ca, a}, {cb, b}};
                s.unordered = unordered;
                const auto r = explore(s);
                ++configs;
                states += r.states;
                terminals += r.terminal_states;
                violations.insert(violations.end(), r.violations.begin(), r.violations.end());
            }
        }
    }
    const double secs = seconds_since(t0);
    std::string first = violations.empty() ? std::string() : "; first: " + violations.front().substr(0, 120);
    return {violations.empty() && secs < 30.0,
            fmt::format("{} configurations, {} states, {} terminal, {} violations (deadlock, cycle, unresolved flow, "
                        "divergence){}; {:.2f} s",
                        configs, states, terminals, violations.size(), first, secs)};
}

} // namespace

int
main()
{
    const std::vector<std::pair<const char*, Verdict (*)()>> criteria{
        {"CHORD oracle", chord_oracle},
        {"context bijection", context_bijection},
        {"race confluence", race_confluence},
        {"closed-form delay", closed_form_delay},
        {"loss statistics", loss_statistics},
        {"flow-rate trend", flow_rate_trend},
        {"scale trend", scale_trend},
        {"packet-size trend", packet_size_trend},
        {"determinism", determinism},
        {"state-machine liveness", liveness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Verdict v;
        try
        {
            v = criteria[i].second();
        }
        catch (const std::exception& e)
        {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << fmt::format("[{}] criterion {:>2} {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
