#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "crharvest/scenario_io.hpp"

using namespace crharvest;
using nlohmann::json;
using sim::Scenario;

namespace {

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST_CASE("empty document yields the full default scenario") {
  const Scenario scenario = io::parse_scenario("{}");
  CHECK(scenario.arena_width_m == 40.0);
  CHECK(scenario.arena_height_m == 40.0);
  CHECK(scenario.su_count == 60);
  REQUIRE(scenario.bands.size() == 7);
  CHECK(scenario.bands[0].frequency_hz == doctest::Approx(0.9e9));
  CHECK(scenario.bands[6].frequency_hz == doctest::Approx(2.68e9));
  CHECK(scenario.bands[0].rf_dc_efficiency == 0.45);
  CHECK(scenario.sensing.sample_time_s == 1e-6);
  CHECK(scenario.sensing.slot_length_s == 1.0);
  CHECK(scenario.sensing.sensing_power_w == doctest::Approx(1e-3));  // 0 dBm
  CHECK(scenario.sensing.harvest_sensitivity_w == doctest::Approx(1e-5));  // -20 dBm
  CHECK(scenario.sensing.false_alarm_cap == 0.1);
  CHECK(scenario.sensing.detection_floor == 0.9);
  CHECK(scenario.channel.speed_of_light == 3e8);
  CHECK(scenario.pus.size() == 7);
  // B_0 = P_s T applied automatically
  CHECK(scenario.initial_battery_j == doctest::Approx(1e-3));
  CHECK(scenario.mode == sim::SolutionMode::AllSensing);
}

TEST_CASE("unit-suffixed quantities") {
  CHECK(io::parse_quantity(json("0 dBm"), "x") == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(io::parse_quantity(json("-20 dBm"), "x") == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(io::parse_quantity(json("0.9 GHz"), "x") == doctest::Approx(0.9e9));
  CHECK(io::parse_quantity(json("1 us"), "x") == doctest::Approx(1e-6));
  CHECK(io::parse_quantity(json("1 mJ"), "x") == doctest::Approx(1e-3));
  CHECK(io::parse_quantity(json("2.5 m"), "x") == doctest::Approx(2.5));
  CHECK(io::parse_quantity(json(42.0), "x") == 42.0);
  CHECK_THROWS_AS(io::parse_quantity(json("1 furlong"), "x"), ConfigError);
  CHECK_THROWS_AS(io::parse_quantity(json("abc"), "x"), ConfigError);
  CHECK_THROWS_AS(io::parse_quantity(json(true), "x"), ConfigError);
}

TEST_CASE("range and structure validation") {
  CHECK_THROWS_AS(io::parse_scenario(R"({"sensing": {"false_alarm_cap": 0.6}})"),
                  ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"sensing": {"detection_floor": 0.4}})"),
                  ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"sensing": {"min_samples": 2e6}})"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"training_fraction": 1.5})"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"no_such_field": 1})"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario("not json"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario("[1,2]"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"bands": []})"), ConfigError);
  CHECK_THROWS_AS(io::parse_scenario(R"({"sus": {"count": 3, "positions": [[1,1]]}})"),
                  ConfigError);

  // descriptive field path in the message
  try {
    io::parse_scenario(R"({"sensing": {"false_alarm_cap": 0.6}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("false_alarm_cap") != std::string::npos);
  }
}

TEST_CASE("serialization round trip") {
  const Scenario defaults = io::parse_scenario("{}");
  CHECK(io::parse_scenario(io::serialize_scenario(defaults)) == defaults);

  const char* custom = R"({
    "arena": {"width": 25, "height": "30 m"},
    "seed": 17,
    "slots": 4,
    "mode": "svm",
    "training_fraction": 0.35,
    "constraint_form": "corrected",
    "sensing": {"sensing_power": "3 dBm", "min_samples": 64},
    "bands": [{"frequency": "1.8 GHz", "pu_power": 0.5, "efficiency": 0.4}],
    "pus": [{"x": 10, "y": 12, "band": 0}],
    "sus": {"positions": [[1.0, 2.0], [3.5, 4.25], [20.0, 29.5]]},
    "initial_battery": "2 mJ"
  })";
  const Scenario scenario = io::parse_scenario(custom);
  CHECK(scenario.su_count == 3);
  CHECK(scenario.bands.size() == 1);
  CHECK(scenario.training_fraction == 0.35);
  CHECK(scenario.initial_battery_j == doctest::Approx(2e-3));
  CHECK(io::parse_scenario(io::serialize_scenario(scenario)) == scenario);
}

TEST_CASE("csv emission shapes") {
  Scenario scenario = io::parse_scenario(R"({"sus": {"count": 6}, "slots": 2})");
  const sim::RunResult result = sim::run(scenario);

  for (std::size_t b = 0; b < scenario.bands.size(); ++b) {
    std::ostringstream out;
    io::write_region_map_csv(out, result, static_cast<int>(b));
    const std::string text = out.str();
    CHECK(count_lines(text) == 6 + 1);  // header + one row per SU
    CHECK(text.rfind("su,x_m,y_m,band,truth_label,predicted_label,is_training,"
                     "is_support_vector\n", 0) == 0);
  }

  // all-sensing: the predicted column equals the truth column
  std::ostringstream region;
  io::write_region_map_csv(region, result, 0);
  std::istringstream lines(region.str());
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream fs(line);
    while (std::getline(fs, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 8);
    CHECK(fields[4] == fields[5]);
    CHECK(fields[6] == "1");
  }

  std::ostringstream plan;
  io::write_plan_csv(plan, result);
  CHECK(count_lines(plan.str()) == 2 * 6 * 7 + 1);  // slots x SUs x bands + header

  std::ostringstream ledger;
  io::write_ledger_csv(ledger, result);
  CHECK(count_lines(ledger.str()) == 2 * 6 + 1);

  // numeric fields stay finite
  for (const std::string& text : {plan.str(), ledger.str(), region.str()}) {
    CHECK(text.find("nan") == std::string::npos);
    CHECK(text.find("inf") == std::string::npos);
  }
}

TEST_CASE("svm region map marks the training subset") {
  Scenario scenario =
      io::parse_scenario(R"({"sus": {"count": 10}, "slots": 1, "mode": "svm",
                             "training_fraction": 0.5})");
  const sim::RunResult result = sim::run(scenario);
  std::ostringstream out;
  io::write_region_map_csv(out, result, 0);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  int training = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream fs(line);
    while (std::getline(fs, field, ',')) fields.push_back(field);
    if (fields[6] == "1") ++training;
  }
  CHECK(training == 5);  // ceil(0.5 * 10)
}

TEST_CASE("summaries") {
  Scenario scenario = io::parse_scenario(R"({"sus": {"count": 5}, "slots": 1})");
  const sim::RunResult result = sim::run(scenario);
  const json summary = io::make_summary(scenario, result);
  CHECK(summary.contains("config"));
  CHECK(summary["results"]["total_sensing_energy_J"].get<double>() ==
        doctest::Approx(result.total_sensing_j));
  // the config echo reproduces the effective scenario including defaults
  CHECK(io::parse_scenario(summary["config"].dump()) == scenario);

  scenario.sensing.slot_count = 1;
  const std::vector<double> fractions{0.5, 0.2, 1.0};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto rows = sim::energy_vs_training_fraction(scenario, fractions, seeds);
  const json sweep = io::make_sweep_summary(scenario, rows);
  REQUIRE(sweep["rows"].size() == 3);
  CHECK(sweep["rows"][0]["fraction"].get<double>() == 0.2);
  CHECK(sweep["rows"][1]["fraction"].get<double>() == 0.5);
  CHECK(sweep["rows"][2]["fraction"].get<double>() == 1.0);
  // training on every SU reproduces the exact labels
  CHECK(sweep["rows"][2]["mean_error"].get<double>() == 0.0);
}
