#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "crharvest/simulator.hpp"

namespace crharvest::io {

/// Parses a scenario document. Every field is optional; omitted fields take
/// the built-in defaults (seven bands, 60 SUs, 40 m x 40 m arena). Quantity
/// fields accept plain SI numbers or unit-suffixed strings such as "0 dBm",
/// "0.9 GHz", "1 us" or "1 mJ". Throws ConfigError with the offending field
/// path on malformed input or range violations.
sim::Scenario parse_scenario(const std::string& text);

sim::Scenario parse_scenario_file(const std::string& path);

/// Canonical SI serialization; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const sim::Scenario& scenario);

/// Unit-suffixed quantity to SI ("0 dBm" -> 1e-3). Exposed for tests.
double parse_quantity(const nlohmann::json& value, const std::string& path);

/// Per-band region map: one row per SU with truth and assigned labels,
/// training membership and support-vector flag. Bands are 1-based in the
/// output.
void write_region_map_csv(std::ostream& out, const sim::RunResult& result, int band_index);

/// Per-slot sensing plan rows: slot, su, band, theta, epsilon, feasible,
/// limiting_constraint, sensing_energy_J.
void write_plan_csv(std::ostream& out, const sim::RunResult& result);

/// Per-slot energy ledger rows: slot, su, battery_before_J, harvest_J,
/// sensing_J, battery_after_J.
void write_ledger_csv(std::ostream& out, const sim::RunResult& result);

/// Single-run summary with a config echo of the effective parameters.
nlohmann::json make_summary(const sim::Scenario& scenario, const sim::RunResult& result);

/// Training-fraction sweep summary; rows ascend by fraction.
nlohmann::json make_sweep_summary(const sim::Scenario& scenario,
                                  std::span<const sim::SweepRow> rows);

}  // namespace crharvest::io
