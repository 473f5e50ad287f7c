#include "lcsim/scenario.hpp"

#include "lcsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lcsim {

namespace {

void
require(bool ok, const char* field, const std::string& what)
{
    if (!ok)
    {
        throw ConfigError(field, what);
    }
}

bool
probability(double p)
{
    return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

} // namespace

void
ScenarioConfig::validate() const
{
    require(num_networks >= 1, "num_networks", "must be at least 1");
    require(nodes_per_network >= 1, "nodes_per_network", "must be at least 1");
    require(num_groups >= 1, "num_groups", "must be at least 1");
    require(nodes_per_group >= 1, "nodes_per_group", "must be at least 1");
    require(std::uint64_t{num_groups} * nodes_per_group <=
                std::uint64_t{num_networks} * nodes_per_network,
            "nodes_per_group", "num_groups x nodes_per_group exceeds the number of sensors");
    require(std::isfinite(flow_rate_pps) && flow_rate_pps > 0.0, "flow_rate_pps", "must be positive");
    require(packet_size_bytes > 0, "packet_size_bytes", "must be positive");
    require(packet_size_bytes <= 65535, "packet_size_bytes", "must not exceed 65535");
    require(data_rate_bps > 0, "data_rate_bps", "must be positive");
    require(total_packets > 0, "total_packets", "must be positive");
    require(std::isfinite(prop_delay_s) && prop_delay_s >= 0.0, "prop_delay_s", "must be >= 0");
    require(std::isfinite(sink_link_delay_s) && sink_link_delay_s >= 0.0, "sink_link_delay_s",
            "must be >= 0");
    require(probability(base_loss_prob), "base_loss_prob", "must be in [0, 1]");
    require(probability(out_of_range_loss_prob), "out_of_range_loss_prob", "must be in [0, 1]");
    require(std::isfinite(range_m) && range_m > 0.0, "range_m", "must be positive");
    require(queue_capacity_pkts >= 0, "queue_capacity_pkts", "must be >= 0");
    require(std::isfinite(duration_s) && duration_s > 0.0, "duration_s", "must be positive");
    require(std::isfinite(clock_skew_ppm) && clock_skew_ppm >= 0.0 && clock_skew_ppm < 1e5, "clock_skew_ppm",
            "must be in [0, 100000)");
    require(std::isfinite(join_window_s) && join_window_s >= 0.0, "join_window_s", "must be >= 0");

    require(std::isfinite(mobility.speed_mps) && mobility.speed_mps >= 0.0, "mobility_speed_mps",
            "must be >= 0");
    require(std::isfinite(mobility.step_s) && mobility.step_s > 0.0, "mobility_step_s",
            "must be positive");
    const auto& b = mobility.bounds;
    require(std::isfinite(b.x_min) && std::isfinite(b.x_max) && std::isfinite(b.y_min) &&
                std::isfinite(b.y_max) && b.x_min < b.x_max && b.y_min < b.y_max,
            "mobility_bounds", "must satisfy x_min < x_max and y_min < y_max");
    for (auto n : mobility.mobile_networks)
    {
        require(n >= 1 && n <= num_networks, "mobile_networks",
                "network " + std::to_string(n) + " does not exist");
    }
}

bool
ScenarioConfig::network_is_mobile(std::uint32_t network) const
{
    if (!mobility.enabled)
    {
        return false;
    }
    if (mobility.mobile_networks.empty())
    {
        return network != 1;
    }
    return std::find(mobility.mobile_networks.begin(), mobility.mobile_networks.end(), network) !=
           mobility.mobile_networks.end();
}

} // namespace lcsim
