#include "crharvest/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace crharvest::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& reason) {
  throw ConfigError("scenario." + path + ": " + reason);
}

double unit_factor(const std::string& unit, const std::string& path) {
  if (unit == "W" || unit == "Hz" || unit == "s" || unit == "J" || unit == "m") return 1.0;
  if (unit == "mW" || unit == "ms" || unit == "mJ") return 1e-3;
  if (unit == "uW" || unit == "us" || unit == "uJ") return 1e-6;
  if (unit == "nW" || unit == "ns" || unit == "nJ") return 1e-9;
  if (unit == "kHz") return 1e3;
  if (unit == "MHz") return 1e6;
  if (unit == "GHz") return 1e9;
  fail(path, "unknown unit '" + unit + "'");
}

}  // namespace

double parse_quantity(const json& value, const std::string& path) {
  if (value.is_number()) {
    return value.get<double>();
  }
  if (!value.is_string()) {
    fail(path, "expected a number or a unit-suffixed string");
  }
  std::istringstream stream(value.get<std::string>());
  double magnitude = 0.0;
  std::string unit;
  if (!(stream >> magnitude)) {
    fail(path, "could not parse a numeric magnitude");
  }
  if (!(stream >> unit)) {
    fail(path, "unit suffix missing, use a plain number for SI values");
  }
  std::string trailing;
  if (stream >> trailing) {
    fail(path, "unexpected trailing content '" + trailing + "'");
  }
  if (unit == "dBm") {
    return 1e-3 * std::pow(10.0, magnitude / 10.0);
  }
  return magnitude * unit_factor(unit, path);
}

namespace {

const json* find(const json& object, const char* key) {
  auto it = object.find(key);
  return it == object.end() ? nullptr : &*it;
}

void reject_unknown_keys(const json& object, std::initializer_list<const char*> known,
                         const std::string& path) {
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (const char* candidate : known) {
      if (key == candidate) {
        ok = true;
        break;
      }
    }
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown field");
  }
}

double quantity_or(const json& object, const char* key, double fallback,
                   const std::string& path) {
  const json* value = find(object, key);
  return value == nullptr ? fallback : parse_quantity(*value, path + "." + key);
}

void parse_sensing(const json& object, SensingConfig& sensing, int& slot_count) {
  const std::string path = "sensing";
  reject_unknown_keys(object,
                      {"sample_time", "slot_length", "sensing_power", "false_alarm_cap",
                       "detection_floor", "min_samples", "harvest_sensitivity",
                       "battery_threshold"},
                      path);
  sensing.sample_time_s = quantity_or(object, "sample_time", sensing.sample_time_s, path);
  sensing.slot_length_s = quantity_or(object, "slot_length", sensing.slot_length_s, path);
  sensing.sensing_power_w = quantity_or(object, "sensing_power", sensing.sensing_power_w, path);
  sensing.false_alarm_cap =
      quantity_or(object, "false_alarm_cap", sensing.false_alarm_cap, path);
  sensing.detection_floor =
      quantity_or(object, "detection_floor", sensing.detection_floor, path);
  sensing.min_samples = quantity_or(object, "min_samples", sensing.min_samples, path);
  sensing.harvest_sensitivity_w =
      quantity_or(object, "harvest_sensitivity", sensing.harvest_sensitivity_w, path);
  sensing.battery_threshold_j =
      quantity_or(object, "battery_threshold", sensing.battery_threshold_j, path);
  sensing.slot_count = slot_count;
}

void validate_ranges(const sim::Scenario& scenario) {
  const SensingConfig& s = scenario.sensing;
  if (!(s.false_alarm_cap > 0.0 && s.false_alarm_cap < 0.5)) {
    fail("sensing.false_alarm_cap", "must lie in (0, 0.5)");
  }
  if (!(s.detection_floor > 0.5 && s.detection_floor < 1.0)) {
    fail("sensing.detection_floor", "must lie in (0.5, 1)");
  }
  if (!(s.sample_time_s > 0.0)) fail("sensing.sample_time", "must be positive");
  if (!(s.slot_length_s > 0.0)) fail("sensing.slot_length", "must be positive");
  if (!(s.sensing_power_w >= 0.0)) fail("sensing.sensing_power", "must be nonnegative");
  if (!(s.min_samples >= 1.0)) fail("sensing.min_samples", "must be at least one");
  if (!(s.min_samples <= s.max_samples())) {
    fail("sensing.min_samples", "exceeds the per-slot sample budget T/T_s");
  }
  if (!(s.harvest_sensitivity_w > 0.0)) {
    fail("sensing.harvest_sensitivity", "must be positive");
  }
  if (!(scenario.channel.tx_gain > 0.0) || !(scenario.channel.rx_gain > 0.0)) {
    fail("channel", "antenna gains must be positive");
  }
  if (!(scenario.channel.noise_variance_w > 0.0)) {
    fail("channel.noise_variance", "must be positive");
  }
  for (std::size_t b = 0; b < scenario.bands.size(); ++b) {
    const Band& band = scenario.bands[b];
    const std::string path = "bands[" + std::to_string(b) + "]";
    if (!(band.frequency_hz > 0.0)) fail(path + ".frequency", "must be positive");
    if (!(band.pu_power_w >= 0.0)) fail(path + ".pu_power", "must be nonnegative");
    if (!(band.rf_dc_efficiency >= 0.0 && band.rf_dc_efficiency <= 1.0)) {
      fail(path + ".efficiency", "must lie in [0, 1]");
    }
  }
  if (!(scenario.initial_battery_j >= 0.0)) fail("initial_battery", "must be nonnegative");
  if (!(scenario.pu_activity >= 0.0 && scenario.pu_activity <= 1.0)) {
    fail("pu_activity", "must lie in [0, 1]");
  }
}

}  // namespace

sim::Scenario parse_scenario(const std::string& text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: not valid JSON: ") + e.what());
  }
  if (!document.is_object()) {
    throw ConfigError("scenario: the top-level document must be a JSON object");
  }
  reject_unknown_keys(document,
                      {"arena", "seed", "slots", "mode", "training_fraction",
                       "redraw_training_each_slot", "constraint_form", "pu_activity",
                       "sensing", "channel", "bands", "pus", "sus", "initial_battery"},
                      "");

  sim::Scenario scenario;

  if (const json* arena = find(document, "arena")) {
    reject_unknown_keys(*arena, {"width", "height"}, "arena");
    scenario.arena_width_m = quantity_or(*arena, "width", scenario.arena_width_m, "arena");
    scenario.arena_height_m = quantity_or(*arena, "height", scenario.arena_height_m, "arena");
    if (!(scenario.arena_width_m > 0.0) || !(scenario.arena_height_m > 0.0)) {
      fail("arena", "dimensions must be positive");
    }
  }
  if (const json* seed = find(document, "seed")) {
    if (!seed->is_number_unsigned()) fail("seed", "must be a nonnegative integer");
    scenario.seed = seed->get<std::uint64_t>();
  }
  int slot_count = scenario.sensing.slot_count;
  if (const json* slots = find(document, "slots")) {
    if (!slots->is_number_integer() || slots->get<int>() < 1) {
      fail("slots", "must be a positive integer");
    }
    slot_count = slots->get<int>();
  }
  if (const json* mode = find(document, "mode")) {
    const std::string name = mode->is_string() ? mode->get<std::string>() : "";
    if (name == "all-sensing") {
      scenario.mode = sim::SolutionMode::AllSensing;
    } else if (name == "svm") {
      scenario.mode = sim::SolutionMode::Svm;
    } else {
      fail("mode", "expected \"all-sensing\" or \"svm\"");
    }
  }
  if (const json* fraction = find(document, "training_fraction")) {
    scenario.training_fraction = parse_quantity(*fraction, "training_fraction");
    if (!(scenario.training_fraction > 0.0 && scenario.training_fraction <= 1.0)) {
      fail("training_fraction", "must lie in (0, 1]");
    }
  }
  if (const json* redraw = find(document, "redraw_training_each_slot")) {
    if (!redraw->is_boolean()) fail("redraw_training_each_slot", "must be a boolean");
    scenario.redraw_training_each_slot = redraw->get<bool>();
  }
  if (const json* form = find(document, "constraint_form")) {
    const std::string name = form->is_string() ? form->get<std::string>() : "";
    if (name == "corrected") {
      scenario.constraint_form = sensing::ConstraintForm::Corrected;
    } else if (name == "paper") {
      scenario.constraint_form = sensing::ConstraintForm::PaperForm;
    } else {
      fail("constraint_form", "expected \"corrected\" or \"paper\"");
    }
  }
  scenario.pu_activity = quantity_or(document, "pu_activity", scenario.pu_activity, "");

  if (const json* sensing = find(document, "sensing")) {
    parse_sensing(*sensing, scenario.sensing, slot_count);
  }
  scenario.sensing.slot_count = slot_count;

  if (const json* channel = find(document, "channel")) {
    reject_unknown_keys(*channel, {"tx_gain", "rx_gain", "speed_of_light", "noise_variance"},
                        "channel");
    scenario.channel.tx_gain =
        quantity_or(*channel, "tx_gain", scenario.channel.tx_gain, "channel");
    scenario.channel.rx_gain =
        quantity_or(*channel, "rx_gain", scenario.channel.rx_gain, "channel");
    scenario.channel.speed_of_light =
        quantity_or(*channel, "speed_of_light", scenario.channel.speed_of_light, "channel");
    scenario.channel.noise_variance_w =
        quantity_or(*channel, "noise_variance", scenario.channel.noise_variance_w, "channel");
  }

  if (const json* bands = find(document, "bands")) {
    if (!bands->is_array() || bands->empty()) fail("bands", "must be a non-empty array");
    scenario.bands.clear();
    for (std::size_t b = 0; b < bands->size(); ++b) {
      const json& entry = (*bands)[b];
      const std::string path = "bands[" + std::to_string(b) + "]";
      reject_unknown_keys(entry, {"frequency", "pu_power", "efficiency"}, path);
      Band band;
      const json* frequency = find(entry, "frequency");
      if (frequency == nullptr) fail(path + ".frequency", "required");
      band.frequency_hz = parse_quantity(*frequency, path + ".frequency");
      band.pu_power_w = quantity_or(entry, "pu_power", band.pu_power_w, path);
      band.rf_dc_efficiency = quantity_or(entry, "efficiency", band.rf_dc_efficiency, path);
      scenario.bands.push_back(band);
    }
  } else {
    scenario.bands = sim::default_bands();
  }

  if (const json* pus = find(document, "pus")) {
    if (!pus->is_array()) fail("pus", "must be an array");
    scenario.pus.clear();
    for (std::size_t p = 0; p < pus->size(); ++p) {
      const json& entry = (*pus)[p];
      const std::string path = "pus[" + std::to_string(p) + "]";
      reject_unknown_keys(entry, {"x", "y", "band"}, path);
      Node pu;
      pu.position.x_m = quantity_or(entry, "x", 0.0, path);
      pu.position.y_m = quantity_or(entry, "y", 0.0, path);
      const json* band = find(entry, "band");
      if (band == nullptr || !band->is_number_integer()) {
        fail(path + ".band", "required integer band index");
      }
      pu.band_index = band->get<int>();
      scenario.pus.push_back(pu);
    }
  } else {
    scenario.pus = sim::default_pus(scenario.arena_width_m, scenario.arena_height_m,
                                    scenario.bands.size());
  }

  if (const json* sus = find(document, "sus")) {
    reject_unknown_keys(*sus, {"count", "positions"}, "sus");
    const json* count = find(*sus, "count");
    const json* positions = find(*sus, "positions");
    if (count != nullptr && positions != nullptr) {
      fail("sus", "give either a count or explicit positions, not both");
    }
    if (count != nullptr) {
      if (!count->is_number_integer() || count->get<int>() < 1) {
        fail("sus.count", "must be a positive integer");
      }
      scenario.su_count = count->get<int>();
    }
    if (positions != nullptr) {
      if (!positions->is_array() || positions->empty()) {
        fail("sus.positions", "must be a non-empty array of [x, y] pairs");
      }
      for (std::size_t m = 0; m < positions->size(); ++m) {
        const json& pair = (*positions)[m];
        const std::string path = "sus.positions[" + std::to_string(m) + "]";
        if (!pair.is_array() || pair.size() != 2) fail(path, "expected [x, y]");
        scenario.su_positions.push_back(
            {parse_quantity(pair[0], path + "[0]"), parse_quantity(pair[1], path + "[1]")});
      }
      scenario.su_count = static_cast<int>(scenario.su_positions.size());
    }
  }

  if (const json* battery = find(document, "initial_battery")) {
    if (battery->is_string() && battery->get<std::string>() == "auto") {
      scenario.initial_battery_j =
          scenario.sensing.sensing_power_w * scenario.sensing.slot_length_s;
    } else {
      scenario.initial_battery_j = parse_quantity(*battery, "initial_battery");
    }
  } else {
    scenario.initial_battery_j =
        scenario.sensing.sensing_power_w * scenario.sensing.slot_length_s;
  }

  validate_ranges(scenario);
  return scenario;
}

sim::Scenario parse_scenario_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) {
    throw ConfigError("scenario: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize_scenario(const sim::Scenario& scenario) {
  json document;
  document["arena"] = {{"width", scenario.arena_width_m}, {"height", scenario.arena_height_m}};
  document["seed"] = scenario.seed;
  document["slots"] = scenario.sensing.slot_count;
  document["mode"] = scenario.mode == sim::SolutionMode::Svm ? "svm" : "all-sensing";
  document["training_fraction"] = scenario.training_fraction;
  document["redraw_training_each_slot"] = scenario.redraw_training_each_slot;
  document["constraint_form"] =
      scenario.constraint_form == sensing::ConstraintForm::PaperForm ? "paper" : "corrected";
  document["pu_activity"] = scenario.pu_activity;
  document["sensing"] = {{"sample_time", scenario.sensing.sample_time_s},
                         {"slot_length", scenario.sensing.slot_length_s},
                         {"sensing_power", scenario.sensing.sensing_power_w},
                         {"false_alarm_cap", scenario.sensing.false_alarm_cap},
                         {"detection_floor", scenario.sensing.detection_floor},
                         {"min_samples", scenario.sensing.min_samples},
                         {"harvest_sensitivity", scenario.sensing.harvest_sensitivity_w},
                         {"battery_threshold", scenario.sensing.battery_threshold_j}};
  document["channel"] = {{"tx_gain", scenario.channel.tx_gain},
                         {"rx_gain", scenario.channel.rx_gain},
                         {"speed_of_light", scenario.channel.speed_of_light},
                         {"noise_variance", scenario.channel.noise_variance_w}};
  document["bands"] = json::array();
  for (const Band& band : scenario.bands) {
    document["bands"].push_back({{"frequency", band.frequency_hz},
                                 {"pu_power", band.pu_power_w},
                                 {"efficiency", band.rf_dc_efficiency}});
  }
  document["pus"] = json::array();
  for (const Node& pu : scenario.pus) {
    document["pus"].push_back(
        {{"x", pu.position.x_m}, {"y", pu.position.y_m}, {"band", pu.band_index}});
  }
  if (scenario.su_positions.empty()) {
    document["sus"] = {{"count", scenario.su_count}};
  } else {
    json positions = json::array();
    for (const Position& p : scenario.su_positions) {
      positions.push_back({p.x_m, p.y_m});
    }
    document["sus"] = {{"positions", positions}};
  }
  document["initial_battery"] = scenario.initial_battery_j;
  return document.dump(2);
}

void write_region_map_csv(std::ostream& out, const sim::RunResult& result,
                          int band_index) {
  const std::size_t b = static_cast<std::size_t>(band_index);
  if (b >= result.truth.size()) {
    throw IoError("write_region_map_csv: band index out of range");
  }
  const sim::SlotRecord& last = result.slots.back();
  out.precision(17);
  out << "su,x_m,y_m,band,truth_label,predicted_label,is_training,is_support_vector\n";
  for (std::size_t m = 0; m < result.su_positions.size(); ++m) {
    const sim::SuBandRecord& cell = last.cells[m][b];
    out << m << ',' << result.su_positions[m].x_m << ',' << result.su_positions[m].y_m << ','
        << band_index + 1 << ',' << regions::to_string(cell.truth) << ','
        << regions::to_string(cell.label) << ',' << (last.is_training[m] ? 1 : 0) << ','
        << (result.is_support[b][m] ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write_region_map_csv: stream failure");
}

void write_plan_csv(std::ostream& out, const sim::RunResult& result) {
  out.precision(17);
  out << "slot,su,band,theta,epsilon,feasible,limiting_constraint,sensing_energy_J\n";
  for (const sim::SlotRecord& record : result.slots) {
    for (std::size_t m = 0; m < record.cells.size(); ++m) {
      for (std::size_t b = 0; b < record.cells[m].size(); ++b) {
        const sim::SuBandRecord& cell = record.cells[m][b];
        out << record.slot << ',' << m << ',' << b + 1 << ',' << cell.samples << ','
            << cell.threshold << ',' << (cell.feasible ? 1 : 0) << ','
            << sensing::to_string(cell.limiting) << ',' << cell.sensing_j << '\n';
      }
    }
  }
  if (!out) throw IoError("write_plan_csv: stream failure");
}

void write_ledger_csv(std::ostream& out, const sim::RunResult& result) {
  out.precision(17);
  out << "slot,su,battery_before_J,harvest_J,sensing_J,battery_after_J\n";
  for (const sim::SlotRecord& record : result.slots) {
    for (std::size_t m = 0; m < record.battery_before_j.size(); ++m) {
      out << record.slot << ',' << m << ',' << record.battery_before_j[m] << ','
          << record.harvest_j[m] << ',' << record.sensing_j[m] << ','
          << record.battery_after_j[m] << '\n';
    }
  }
  if (!out) throw IoError("write_ledger_csv: stream failure");
}

nlohmann::json make_summary(const sim::Scenario& scenario, const sim::RunResult& result) {
  int max_sca = 0;
  for (const sim::SlotRecord& record : result.slots) {
    max_sca = std::max(max_sca, record.max_sca_iterations);
  }
  json band_error = json::array();
  for (double e : result.band_error) band_error.push_back(e);
  return json{{"config", json::parse(serialize_scenario(scenario))},
              {"results",
               {{"slots", result.slots.size()},
                {"total_sensing_energy_J", result.total_sensing_j},
                {"classification_error", result.classification_error},
                {"band_error", band_error},
                {"max_sca_iterations", max_sca}}}};
}

nlohmann::json make_sweep_summary(const sim::Scenario& scenario,
                                  std::span<const sim::SweepRow> rows) {
  json out{{"config", json::parse(serialize_scenario(scenario))}, {"rows", json::array()}};
  for (const sim::SweepRow& row : rows) {
    out["rows"].push_back({{"fraction", row.fraction},
                           {"mean_error", row.mean_error},
                           {"stddev_error", row.stddev_error},
                           {"mean_sensing_energy_J", row.mean_energy_j},
                           {"stddev_sensing_energy_J", row.stddev_energy_j}});
  }
  return out;
}

}  // namespace crharvest::io
