#include "lcsim/sweep.hpp"

#include "lcsim/errors.hpp"
#include "lcsim/hash.hpp"
#include "lcsim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace lcsim {

std::uint64_t
derive_seed(std::uint64_t base_seed, Axis axis, double value, std::uint32_t rep)
{
    std::string bytes;
    append_le64(bytes, base_seed);
    bytes += to_string(axis);
    bytes += fmt::format("{}", value);
    append_le32(bytes, rep);
    return fnv1a64(bytes);
}

std::vector<SweepJob>
expand(const SweepSpec& spec)
{
    if (spec.values.empty())
    {
        throw ConfigError(std::string(to_string(spec.axis)), "sweep list is empty");
    }
    if (spec.repetitions == 0)
    {
        throw ConfigError("repetitions", "must be at least 1");
    }
    std::vector<double> values = spec.values;
    std::sort(values.begin(), values.end());
    std::vector<SweepJob> jobs;
    for (double v : values)
    {
        for (std::uint32_t r = 0; r < spec.repetitions; ++r)
        {
            SweepJob job;
            job.run_id = jobs.size();
            job.value = v;
            job.rep = r;
            job.config = with_axis(spec.base, spec.axis, v);
            job.config.seed = derive_seed(spec.base.seed, spec.axis, v, r);
            job.config.validate();
            jobs.push_back(std::move(job));
        }
    }
    return jobs;
}

RunOutput
run_scenario(const ScenarioConfig& cfg, std::uint64_t run_id,
             const std::optional<std::filesystem::path>& trace_path, bool capture_state)
{
    Simulation sim(cfg);
    std::ofstream trace;
    if (trace_path)
    {
        trace.open(*trace_path, std::ios::binary | std::ios::trunc);
        if (!trace)
        {
            throw IoError(trace_path->string(), "cannot open trace for writing");
        }
        sim.set_observer(TraceWriter(trace));
    }
    RunOutput out{sim.run(), {}};
    out.report.run_id = run_id;
    if (capture_state)
    {
        out.state = sim.world().sinks.dump_state();
    }
    if (trace_path)
    {
        trace.flush();
        if (!trace)
        {
            throw IoError(trace_path->string(), "trace write failed");
        }
    }
    return out;
}

bool
SweepResult::ok() const
{
    return std::all_of(jobs.begin(), jobs.end(), [](const JobResult& j) { return j.report.has_value(); });
}

std::vector<MetricsReport>
SweepResult::reports() const
{
    std::vector<MetricsReport> out;
    for (const auto& j : jobs)
    {
        if (j.report)
        {
            out.push_back(*j.report);
        }
    }
    return out;
}

SweepResult
run_sweep(const SweepSpec& spec, const SweepOptions& options)
{
    SweepResult result;
    for (auto& job : expand(spec))
    {
        result.jobs.push_back(JobResult{std::move(job), std::nullopt, {}, {}});
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < result.jobs.size(); i = next++)
        {
            JobResult& slot = result.jobs[i];
            try
            {
                std::optional<std::filesystem::path> trace;
                if (options.trace_dir)
                {
                    trace = *options.trace_dir / fmt::format("trace_{}.csv", slot.job.run_id);
                }
                RunOutput out = run_scenario(slot.job.config, slot.job.run_id, trace, options.capture_state);
                slot.report = std::move(out.report);
                slot.state = std::move(out.state);
            }
            catch (const std::exception& e)
            {
                slot.error = e.what();
                if (slot.error.empty())
                {
                    slot.error = "unknown failure";
                }
            }
        }
    };

    const unsigned n = std::max(1U, std::min<unsigned>(options.workers, static_cast<unsigned>(result.jobs.size())));
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n; ++w)
    {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    return result;
}

void
write_manifest(std::ostream& os, const SweepSpec& spec, const SweepResult& result)
{
    fmt::print(os, "# axis {} base_seed {} repetitions {}\n", to_string(spec.axis), spec.base.seed,
               spec.repetitions);
    os << "# run_id value rep seed status\n";
    for (const auto& j : result.jobs)
    {
        fmt::print(os, "{} {} {} {} {}\n", j.job.run_id, j.job.value, j.job.rep, j.job.config.seed,
                   j.report ? std::string("ok") : "failed: " + j.error);
    }
}

namespace {

template <class F>
void
write_file(const std::filesystem::path& path, F&& body)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
    {
        throw IoError(path.string(), "cannot open for writing");
    }
    body(os);
    os.flush();
    if (!os)
    {
        throw IoError(path.string(), "write failed");
    }
}

} // namespace

void
write_sweep_outputs(const std::filesystem::path& dir, const SweepSpec& spec, const SweepResult& result)
{
    const auto reports = result.reports();
    emit(reports, dir / "sweep.csv");

    std::vector<SweepPoint> points;
    for (const auto& j : result.jobs)
    {
        if (j.report)
        {
            points.push_back(SweepPoint{j.job.value, &*j.report});
        }
    }
    write_file(dir / "summary.dat",
               [&](std::ostream& os) { write_gnuplot_summary(os, to_string(spec.axis), points); });
    write_file(dir / "manifest.txt", [&](std::ostream& os) { write_manifest(os, spec, result); });
}

} // namespace lcsim
