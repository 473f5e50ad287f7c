// lcsim: run one scenario or a parameter sweep and write CSV results.

#include "lcsim/config_file.hpp"
#include "lcsim/errors.hpp"
#include "lcsim/sweep.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Options
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned workers = 1;
    bool trace = false;
    bool dump_state = false;
};

fs::path
output_dir(const Options& opt)
{
    if (!opt.out.empty())
    {
        return opt.out;
    }
    if (const char* env = std::getenv("LCSIM_OUT_DIR"); env && *env)
    {
        return env;
    }
    return "out";
}

fs::path
prepare_output_dir(const Options& opt)
{
    const fs::path dir = output_dir(opt);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
    {
        throw lcsim::IoError(dir.string(), ec.message());
    }
    return dir;
}

void
write_text(const fs::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os.flush())
    {
        throw lcsim::IoError(path.string(), "write failed");
    }
}

lcsim::ParsedConfig
load(const Options& opt)
{
    lcsim::ParsedConfig parsed;
    try
    {
        parsed = lcsim::load_config(opt.config);
    }
    catch (const lcsim::IoError& e)
    {
        throw lcsim::ConfigError("config", e.what());
    }
    if (opt.seed)
    {
        std::visit(
            [&](auto& c) {
                if constexpr (std::is_same_v<std::decay_t<decltype(c)>, lcsim::ScenarioConfig>)
                {
                    c.seed = *opt.seed;
                }
                else
                {
                    c.base.seed = *opt.seed;
                }
            },
            parsed);
    }
    return parsed;
}

int
cmd_run(const Options& opt)
{
    auto parsed = load(opt);
    const auto* cfg = std::get_if<lcsim::ScenarioConfig>(&parsed);
    if (!cfg)
    {
        throw lcsim::ConfigError(std::string(lcsim::to_string(std::get<lcsim::SweepSpec>(parsed).axis)),
                                 "config has a sweep list; use 'lcsim sweep'");
    }
    const fs::path dir = prepare_output_dir(opt);
    std::optional<fs::path> trace;
    if (opt.trace)
    {
        trace = dir / "trace.csv";
    }
    const auto out = lcsim::run_scenario(*cfg, 0, trace, opt.dump_state);
    lcsim::emit(out.report, dir / "run.csv");
    lcsim::write_csv(std::cout, std::span(&out.report, 1));
    if (opt.dump_state)
    {
        write_text(dir / "state.txt", out.state);
        std::cout << out.state;
    }
    return kOk;
}

int
cmd_sweep(const Options& opt)
{
    auto parsed = load(opt);
    const auto* spec = std::get_if<lcsim::SweepSpec>(&parsed);
    if (!spec)
    {
        throw lcsim::ConfigError("flow_rate_pps", "config has no sweep list; use 'lcsim run'");
    }
    lcsim::expand(*spec); // surface config errors before touching the output dir
    const fs::path dir = prepare_output_dir(opt);
    lcsim::SweepOptions so;
    so.workers = opt.workers;
    so.capture_state = opt.dump_state;
    if (opt.trace)
    {
        so.trace_dir = dir;
    }
    const auto result = lcsim::run_sweep(*spec, so);
    lcsim::write_sweep_outputs(dir, *spec, result);

    std::string states;
    for (const auto& j : result.jobs)
    {
        if (!j.report)
        {
            fmt::print(std::cerr, "run {} ({} = {}, rep {}) failed: {}\n", j.job.run_id,
                       lcsim::to_string(spec->axis), j.job.value, j.job.rep, j.error);
        }
        else if (opt.dump_state)
        {
            states += fmt::format("## run {}\n{}", j.job.run_id, j.state);
        }
    }
    if (opt.dump_state)
    {
        write_text(dir / "state.txt", states);
        std::cout << states;
    }
    fmt::print(std::cerr, "{} of {} runs ok; results in {}\n", result.reports().size(), result.jobs.size(),
               dir.string());
    return result.ok() ? kOk : kRuntimeError;
}

} // namespace

int
main(int argc, char** argv)
{
    CLI::App app{"Logical-clustering sensor network simulator"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", opt.config, "Scenario or sweep config file")->required();
        sub->add_option("--seed", opt.seed, "Override the (base) seed");
        sub->add_option("--out", opt.out, "Output directory (default $LCSIM_OUT_DIR or ./out)");
        sub->add_flag("--trace", opt.trace, "Write per-packet trace CSV");
        sub->add_flag("--dump-state", opt.dump_state, "Print every sink's replicated state after the run");
    };
    auto* run = app.add_subcommand("run", "Run a single scenario");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep);
    sweep->add_option("--workers", opt.workers, "Parallel scenario workers")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return kConfigError;
    }

    try
    {
        return run->parsed() ? cmd_run(opt) : cmd_sweep(opt);
    }
    catch (const lcsim::ConfigError& e)
    {
        fmt::print(std::cerr, "config error: {}\n", e.what());
        return kConfigError;
    }
    catch (const lcsim::ParseError& e)
    {
        fmt::print(std::cerr, "config error: {}\n", e.what());
        return kConfigError;
    }
    catch (const std::exception& e)
    {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kRuntimeError;
    }
}
