#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "coagdiff/config.hpp"
#include "coagdiff/duality.hpp"
#include "coagdiff/grid.hpp"
#include "coagdiff/simulator.hpp"

namespace coagdiff {

inline constexpr int summary_schema = 1;
inline constexpr const char* tool_version = "0.3.0";

/// Shortest round-trip decimal form; the same bits always print the same.
std::string format_number(double v);

/// CSV with one "t,x,value" row per grid point and frame.
std::string frames_csv(const SpaceTimeSeries& s);
/// CSV with the given header and rows of numbers.
std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// Per-step scalar series: t, mass, tail_mass and the moment integrals.
std::string trajectory_csv(const TrajectoryRecord& rec);

nlohmann::json trajectory_json(const TrajectoryRecord& rec);
nlohmann::json k_estimate_json(const KEstimate& est);
nlohmann::json closeness_json(const ClosenessReport& r);
nlohmann::json contraction_json(const ContractionResult& r);
nlohmann::json config_json(const Config& cfg);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace coagdiff
