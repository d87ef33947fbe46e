#include "medbench/resources.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>

namespace medbench::resources {

using nlohmann::json;

namespace {
constexpr std::string_view kPlaceholderId = "placeholder";
}

void validate(const PowerProfile& p) {
    if (p.profile_id.empty()) throw ConfigError("power profile: profile_id is empty");
    if (!(p.avg_power_w > 0.0) || !std::isfinite(p.avg_power_w))
        throw ConfigError(fmt::format("power profile '{}': avg_power_w must be > 0", p.profile_id));
    if (!(p.carbon_intensity_g_per_kwh >= 0.0) || !std::isfinite(p.carbon_intensity_g_per_kwh))
        throw ConfigError(fmt::format("power profile '{}': carbon_intensity_g_per_kwh must be >= 0", p.profile_id));
}

PowerProfile placeholder_profile() {
    return {std::string(kPlaceholderId), 100.0, 400.0,
            "placeholder constants, not measured; supply a power profile for reportable numbers"};
}

bool is_placeholder(const PowerProfile& p) { return p.profile_id == kPlaceholderId; }

PowerProfile power_profile_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("power profile: expected a JSON object");
    static const std::set<std::string> kKnown = {"profile_id", "avg_power_w", "carbon_intensity_g_per_kwh",
                                                 "source_note"};
    for (const auto& [key, _] : j.items())
        if (!kKnown.count(key)) throw ConfigError(fmt::format("power profile: unknown field '{}'", key));
    PowerProfile p;
    try {
        p.profile_id = j.at("profile_id").get<std::string>();
        p.avg_power_w = j.at("avg_power_w").get<double>();
        p.carbon_intensity_g_per_kwh = j.at("carbon_intensity_g_per_kwh").get<double>();
        p.source_note = j.at("source_note").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("power profile: {}", e.what()));
    }
    validate(p);
    return p;
}

json to_json(const PowerProfile& p) {
    return {{"profile_id", p.profile_id},
            {"avg_power_w", p.avg_power_w},
            {"carbon_intensity_g_per_kwh", p.carbon_intensity_g_per_kwh},
            {"source_note", p.source_note}};
}

PowerProfile load_power_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("power profile not found or unreadable: {}", path.string()));
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(fmt::format("power profile {}: invalid JSON", path.string()));
    return power_profile_from_json(j);
}

double energy_wh(double exec_time_s, const PowerProfile& profile) {
    if (!(exec_time_s >= 0.0)) throw ConfigError(fmt::format("negative execution time {}", exec_time_s));
    // hours first, so a full hour yields exactly avg_power_w
    return profile.avg_power_w * (exec_time_s / 3600.0);
}

double co2_grams(double energy, const PowerProfile& profile) {
    if (!(energy >= 0.0)) throw ConfigError(fmt::format("negative energy {}", energy));
    return energy / 1000.0 * profile.carbon_intensity_g_per_kwh;
}

ResourceSummary aggregate_resources(std::span<const ClassificationOutcome> outcomes, const PowerProfile& profile) {
    if (outcomes.empty()) throw ConfigError("aggregate_resources: no outcomes");
    ResourceSummary s;
    double time_sum = 0.0;
    for (const auto& o : outcomes) {
        time_sum += o.exec_time_s;
        s.total_co2_g += co2_grams(energy_wh(o.exec_time_s, profile), profile);
    }
    s.avg_exec_time_s = time_sum / static_cast<double>(outcomes.size());
    s.avg_energy_wh = energy_wh(s.avg_exec_time_s, profile);
    return s;
}

}  // namespace medbench::resources
