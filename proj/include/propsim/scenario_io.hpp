#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "propsim/model.hpp"

namespace propsim {

/// Parses a scenario JSON document. Unknown keys, missing required keys and
/// mistyped values raise Error(SchemaError) with the dotted field path;
/// invariant violations raise Error(RangeError). Defaults are applied.
Scenario parse_scenario(std::string_view text);
Scenario scenario_from_json(const nlohmann::json& doc);

/// Canonical JSON form with every default resolved.
nlohmann::json scenario_to_json(const Scenario& s);

/// Trajectory as CSV: "#" comment lines carrying the scenario and the
/// termination reason, a header, then one row per state (12 significant
/// digits). Breakdown columns are empty on the final row.
std::string serialize_trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(std::string_view text);

/// Standalone SVG 1.1 plot of capital against step with gap markers.
std::string render_capital_svg(const Trajectory& traj, int width = 800, int height = 400);

inline constexpr std::string_view kTrajectoryCsvHeader =
    "step,t,capital,avg_maturity,implied,vega,aged_vega,trade,realized_pnl,implied_pnl,"
    "total_pnl,denom_margin";

}  // namespace propsim
