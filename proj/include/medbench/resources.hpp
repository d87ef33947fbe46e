#pragma once

#include "medbench/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>

namespace medbench::resources {

/// Energy is modelled, not measured: wall-clock time times an average power
/// draw. source_note says where the constants came from and is echoed into
/// every run summary.
struct PowerProfile {
    std::string profile_id;
    double avg_power_w = 0.0;
    double carbon_intensity_g_per_kwh = 0.0;
    std::string source_note;
};

void validate(const PowerProfile& profile);  // throws ConfigError

/// Placeholder constants for smoke runs. Reports flag runs that use it.
PowerProfile placeholder_profile();
bool is_placeholder(const PowerProfile& profile);

PowerProfile power_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PowerProfile& profile);
PowerProfile load_power_profile(const std::filesystem::path& path);

/// avg_power_w * exec_time_s / 3600. Throws ConfigError for negative time.
double energy_wh(double exec_time_s, const PowerProfile& profile);

/// energy_wh / 1000 * carbon intensity. Throws ConfigError for negative energy.
double co2_grams(double energy_wh, const PowerProfile& profile);

struct ResourceSummary {
    double avg_exec_time_s = 0.0;
    double avg_energy_wh = 0.0;  // energy_wh(avg_exec_time_s)
    double total_co2_g = 0.0;    // sum over outcomes of co2(energy(t_i))
    bool operator==(const ResourceSummary&) const = default;
};

ResourceSummary aggregate_resources(std::span<const ClassificationOutcome> outcomes, const PowerProfile& profile);

}  // namespace medbench::resources
