#pragma once

#include "lcsim/config_file.hpp"
#include "lcsim/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lcsim {

/// Seed for repetition `rep` of axis value `value`: FNV-1a 64 over
/// base_seed (u64 LE) | axis name | value as text | rep (u32 LE).
std::uint64_t derive_seed(std::uint64_t base_seed, Axis axis, double value, std::uint32_t rep);

struct SweepJob
{
    std::uint64_t run_id = 0;
    double value = 0.0;
    std::uint32_t rep = 0;
    ScenarioConfig config;
};

/// Jobs ordered by (value, rep); run_id is the position in that order.
/// Throws ConfigError when a derived config is invalid or there are no values.
std::vector<SweepJob> expand(const SweepSpec& spec);

struct SweepOptions
{
    unsigned workers = 1;
    /// When set, writes trace_<run_id>.csv for every job into this directory.
    std::optional<std::filesystem::path> trace_dir;
    bool capture_state = false;
};

struct JobResult
{
    SweepJob job;
    std::optional<MetricsReport> report;
    std::string error; // non-empty iff report is empty
    std::string state; // dump_state() text when captured
};

struct SweepResult
{
    std::vector<JobResult> jobs; // in run_id order

    bool ok() const;
    std::vector<MetricsReport> reports() const; // successful jobs only
};

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// One line per job: run_id, value, rep, seed, status.
void write_manifest(std::ostream& os, const SweepSpec& spec, const SweepResult& result);

/// Writes sweep.csv, summary.dat and manifest.txt into dir.
void write_sweep_outputs(const std::filesystem::path& dir, const SweepSpec& spec,
                         const SweepResult& result);

/// Single scenario plus optional trace and state capture.
struct RunOutput
{
    MetricsReport report;
    std::string state;
};
RunOutput run_scenario(const ScenarioConfig& cfg, std::uint64_t run_id,
                       const std::optional<std::filesystem::path>& trace_path, bool capture_state);

} // namespace lcsim
