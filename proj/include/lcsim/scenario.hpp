#pragma once

#include "lcsim/ids.hpp"

#include <cstdint>
#include <vector>

namespace lcsim {

struct Bounds
{
    double x_min = 0.0;
    double x_max = 100.0;
    double y_min = 0.0;
    double y_max = 100.0;

    bool operator==(const Bounds&) const = default;
};

struct MobilityConfig
{
    bool enabled = true;
    /// 1-based network numbers whose sensors random-walk. Empty means every
    /// network except network 1.
    std::vector<std::uint32_t> mobile_networks;
    double speed_mps = 3.0;
    Bounds bounds;
    double step_s = 1.0;

    bool operator==(const MobilityConfig&) const = default;
};

/// Full description of one experiment. Defaults follow the reference setup:
/// 3 networks x 20 sensors, 3 groups of 9 senders, 8 p/s, 512 B, 1 Mbps, 2000 packets.
struct ScenarioConfig
{
    std::uint32_t num_networks = 3;
    std::uint32_t nodes_per_network = 20;
    std::uint32_t num_groups = 3;
    std::uint32_t nodes_per_group = 9;
    double flow_rate_pps = 8.0;
    std::int64_t packet_size_bytes = 512;
    std::int64_t data_rate_bps = 1'000'000;
    std::int64_t total_packets = 2000; // per active sender
    double prop_delay_s = 0.001;
    double sink_link_delay_s = 0.002; // per overlay hop
    double base_loss_prob = 0.02;
    MobilityConfig mobility;
    double out_of_range_loss_prob = 0.25;
    double range_m = 60.0;
    std::int64_t queue_capacity_pkts = 50;
    std::uint64_t seed = 1;
    double duration_s = 3600.0;
    /// All networks contend for one channel (one collision domain).
    bool shared_medium = true;
    double join_window_s = 0.1;
    /// Each sender's clock runs fast or slow by a uniform draw in [-x, x] ppm,
    /// so its packet gap is (1 + skew) / flow_rate_pps.
    double clock_skew_ppm = 2000.0;

    bool operator==(const ScenarioConfig&) const = default;

    /// Throws ConfigError naming the first offending field.
    void validate() const;

    /// network is 1-based.
    bool network_is_mobile(std::uint32_t network) const;
};

} // namespace lcsim
