#include "crharvest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace crharvest::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream)));
}

constexpr std::uint64_t kPlacementStream = 1;
constexpr std::uint64_t kTrainingStream = 2;
constexpr std::uint64_t kActivityStream = 3;

void validate(const Scenario& scenario) {
  if (scenario.bands.empty()) throw ConfigError("scenario: at least one band required");
  if (scenario.pus.size() != scenario.bands.size()) {
    throw ConfigError("scenario: exactly one PU per band required");
  }
  std::vector<bool> owned(scenario.bands.size(), false);
  for (const Node& pu : scenario.pus) {
    if (pu.band_index < 0 || static_cast<std::size_t>(pu.band_index) >= scenario.bands.size() ||
        owned[static_cast<std::size_t>(pu.band_index)]) {
      throw ConfigError("scenario: PU band ownership must cover every band exactly once");
    }
    owned[static_cast<std::size_t>(pu.band_index)] = true;
    if (pu.position.x_m < 0 || pu.position.x_m > scenario.arena_width_m ||
        pu.position.y_m < 0 || pu.position.y_m > scenario.arena_height_m) {
      throw ConfigError("scenario: PU position outside the arena");
    }
  }
  for (const Position& su : scenario.su_positions) {
    if (su.x_m < 0 || su.x_m > scenario.arena_width_m || su.y_m < 0 ||
        su.y_m > scenario.arena_height_m) {
      throw ConfigError("scenario: SU position outside the arena");
    }
  }
  if (scenario.su_positions.empty() && scenario.su_count < 1) {
    throw ConfigError("scenario: at least one SU required");
  }
  if (scenario.sensing.slot_count < 1) throw ConfigError("scenario: at least one slot required");
  if (scenario.mode == SolutionMode::Svm &&
      !(scenario.training_fraction > 0.0 && scenario.training_fraction <= 1.0)) {
    throw ConfigError("scenario: training fraction must lie in (0, 1]");
  }
}

}  // namespace

std::vector<Band> default_bands() {
  std::vector<Band> bands;
  for (double ghz : {0.9, 1.24, 1.56, 1.78, 2.19, 2.46, 2.68}) {
    Band band;
    band.frequency_hz = ghz * 1e9;
    bands.push_back(band);
  }
  return bands;
}

std::vector<Node> default_pus(double arena_width_m, double arena_height_m,
                               std::size_t band_count) {
  std::vector<Node> pus;
  const double radius = 0.25 * std::min(arena_width_m, arena_height_m);
  const Position center{0.5 * arena_width_m, 0.5 * arena_height_m};
  for (std::size_t b = 0; b < band_count; ++b) {
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(band_count);
    pus.push_back({{center.x_m + radius * std::cos(angle),
                    center.y_m + radius * std::sin(angle)},
                   static_cast<int>(b)});
  }
  return pus;
}

Scenario default_scenario() {
  Scenario scenario;
  scenario.bands = default_bands();
  scenario.pus = default_pus(scenario.arena_width_m, scenario.arena_height_m,
                             scenario.bands.size());
  scenario.initial_battery_j =
      scenario.sensing.sensing_power_w * scenario.sensing.slot_length_s;
  return scenario;
}

std::vector<Position> place_random(int count, double width_m, double height_m,
                                   std::uint64_t seed) {
  if (count < 1) throw DomainError("place_random: count must be at least one");
  std::mt19937_64 rng = seeded_rng(seed, kPlacementStream);
  std::uniform_real_distribution<double> x(0.0, width_m), y(0.0, height_m);
  std::vector<Position> positions(static_cast<std::size_t>(count));
  for (Position& p : positions) {
    p.x_m = x(rng);
    p.y_m = y(rng);
  }
  return positions;
}

namespace {

std::vector<bool> draw_training_set(std::size_t su_count, double fraction,
                                    std::uint64_t seed, std::uint64_t slot_stream) {
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(su_count) - 1e-9));
  std::vector<std::size_t> order(su_count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng = seeded_rng(seed, kTrainingStream + (slot_stream << 8));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> training(su_count, false);
  for (std::size_t i = 0; i < std::min(k, su_count); ++i) {
    training[order[i]] = true;
  }
  return training;
}

}  // namespace

RunResult run(const Scenario& scenario, const RunOptions& options) {
  validate(scenario);

  RunResult result;
  result.su_positions = scenario.su_positions.empty()
                            ? place_random(scenario.su_count, scenario.arena_width_m,
                                           scenario.arena_height_m, scenario.seed)
                            : scenario.su_positions;
  const std::size_t su_count = result.su_positions.size();
  const std::size_t band_count = scenario.bands.size();

  // Static geometry: channel gain, received power and SNR per (SU, band);
  // the band's owning PU provides the link.
  std::vector<const Node*> pu_of_band(band_count, nullptr);
  for (const Node& pu : scenario.pus) {
    pu_of_band[static_cast<std::size_t>(pu.band_index)] = &pu;
  }
  std::vector<std::vector<double>> gain(su_count, std::vector<double>(band_count));
  std::vector<std::vector<double>> rx_power(su_count, std::vector<double>(band_count));
  std::vector<std::vector<double>> gamma(su_count, std::vector<double>(band_count));
  std::vector<std::vector<double>> pu_distance(su_count, std::vector<double>(band_count));
  for (std::size_t m = 0; m < su_count; ++m) {
    for (std::size_t b = 0; b < band_count; ++b) {
      const Band& band = scenario.bands[b];
      const double d = distance(result.su_positions[m], pu_of_band[b]->position);
      pu_distance[m][b] = d;
      gain[m][b] = channel_gain(d, band.frequency_hz, scenario.channel);
      rx_power[m][b] = band.pu_power_w * gain[m][b];
      gamma[m][b] = snr(band.pu_power_w, gain[m][b], scenario.channel.noise_variance_w);
    }
  }

  // Ground truth is geometric and constant across slots (labels are defined
  // under an active PU).
  result.truth.assign(band_count, std::vector<regions::RegionLabel>(su_count));
  for (std::size_t b = 0; b < band_count; ++b) {
    for (std::size_t m = 0; m < su_count; ++m) {
      const bool detection_feasible =
          gamma[m][b] > 0.0 &&
          sensing::closed_form_min_samples(gamma[m][b], scenario.sensing.false_alarm_cap,
                                           scenario.sensing.detection_floor) <=
              scenario.sensing.max_samples();
      result.truth[b][m] = regions::label_ground_truth(
          rx_power[m][b], detection_feasible, scenario.sensing.harvest_sensitivity_w, true);
    }
  }
  result.is_support.assign(band_count, std::vector<bool>(su_count, false));
  result.band_error.assign(band_count, 0.0);

  const bool svm_mode = scenario.mode == SolutionMode::Svm;
  std::vector<bool> is_training(su_count, true);
  std::vector<std::vector<regions::RegionLabel>> assigned = result.truth;

  auto refresh_classification = [&](std::uint64_t slot_stream) {
    is_training = draw_training_set(su_count, scenario.training_fraction, scenario.seed,
                                    slot_stream);
    for (std::size_t b = 0; b < band_count; ++b) {
      regions::BandClassification classified = regions::classify_band(
          result.su_positions, result.truth[b], is_training);
      assigned[b] = std::move(classified.labels);
      result.is_support[b] = std::move(classified.is_support);
    }
  };
  if (svm_mode) {
    refresh_classification(0);
  }

  // single-writer energy state per SU; snapshots land in the SlotRecords
  std::vector<EnergyLedger> ledgers(su_count);
  for (EnergyLedger& ledger : ledgers) {
    ledger.initial_battery_j = scenario.initial_battery_j;
    ledger.battery_j = scenario.initial_battery_j;
  }
  std::mt19937_64 activity_rng = seeded_rng(scenario.seed, kActivityStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  sensing::OptimizeOptions optimize_options;
  optimize_options.form = scenario.constraint_form;
  optimize_options.trace = options.sca_trace;
  optimize_options.sca_tolerance = options.sca_tolerance;
  optimize_options.epsilon_rule = options.epsilon_rule;

  for (int t = 1; t <= scenario.sensing.slot_count; ++t) {
    if (svm_mode && scenario.redraw_training_each_slot && t > 1) {
      refresh_classification(static_cast<std::uint64_t>(t));
    }

    std::vector<bool> pu_active(band_count, true);
    if (scenario.pu_activity < 1.0) {
      for (std::size_t b = 0; b < band_count; ++b) {
        pu_active[b] = unit(activity_rng) < scenario.pu_activity;
      }
    }

    SlotRecord record;
    record.slot = t;
    record.battery_before_j.reserve(su_count);
    for (const EnergyLedger& ledger : ledgers) {
      record.battery_before_j.push_back(ledger.battery_j);
    }
    record.is_training = is_training;
    record.harvest_j.assign(su_count, 0.0);
    record.sensing_j.assign(su_count, 0.0);
    record.cells.assign(su_count, std::vector<SuBandRecord>(band_count));

    for (std::size_t m = 0; m < su_count; ++m) {
      for (std::size_t b = 0; b < band_count; ++b) {
        SuBandRecord& cell = record.cells[m][b];
        cell.truth = result.truth[b][m];
        cell.label = assigned[b][m];
        cell.delta = harvest_indicator(rx_power[m][b],
                                       scenario.sensing.harvest_sensitivity_w, pu_active[b]);
      }

      const bool senses = !svm_mode || is_training[m];
      double harvest = 0.0;
      double spend = 0.0;
      if (senses) {
        sensing::SuState su_state;
        su_state.su_index = static_cast<int>(m);
        su_state.battery_j = ledgers[m].battery_j;
        for (std::size_t b = 0; b < band_count; ++b) {
          su_state.bands.push_back({static_cast<int>(b), gamma[m][b], pu_distance[m][b]});
        }
        try {
          sensing::SensingPlan plan =
              sensing::optimize_slot({{su_state}}, scenario.sensing, optimize_options);
          record.max_sca_iterations =
              std::max(record.max_sca_iterations, plan.sca_iterations[0]);
          std::vector<BandHarvest> harvesting;
          for (const sensing::PlanEntry& entry : plan.entries) {
            SuBandRecord& cell = record.cells[m][static_cast<std::size_t>(entry.band)];
            cell.feasible = entry.feasible;
            cell.limiting = entry.limiting;
            if (!entry.feasible) continue;
            cell.sensed = true;
            cell.samples = entry.samples;
            cell.threshold = entry.threshold;
            cell.sensing_j = entry.sensing_energy_j;
            spend += entry.sensing_energy_j;
            const std::size_t b = static_cast<std::size_t>(entry.band);
            const BandHarvest bh{cell.delta, scenario.bands[b].rf_dc_efficiency,
                                 static_cast<double>(entry.samples),
                                 scenario.bands[b].pu_power_w, gain[m][b]};
            cell.harvest_j = harvested_energy(std::span(&bh, 1), scenario.sensing.slot_length_s,
                                              scenario.sensing.sample_time_s);
            harvest += cell.harvest_j;
            harvesting.push_back(bh);
          }
        } catch (const Error&) {
          // Optimizer failure: the SU skips this slot without aborting the run.
          for (std::size_t b = 0; b < band_count; ++b) {
            SuBandRecord& cell = record.cells[m][b];
            cell.feasible = false;
            cell.sensed = false;
            cell.samples = 0;
            cell.threshold = 0.0;
            cell.sensing_j = 0.0;
            cell.harvest_j = 0.0;
          }
          harvest = 0.0;
          spend = 0.0;
        }
      } else {
        // Non-training SUs adopt the predicted label; predicted-HR SUs spend
        // no sensing time and harvest the whole slot, gated by the physical
        // indicator.
        for (std::size_t b = 0; b < band_count; ++b) {
          SuBandRecord& cell = record.cells[m][b];
          if (cell.label == regions::RegionLabel::HR) {
            const BandHarvest bh{cell.delta, scenario.bands[b].rf_dc_efficiency, 0.0,
                                 scenario.bands[b].pu_power_w, gain[m][b]};
            cell.harvest_j = harvested_energy(std::span(&bh, 1),
                                              scenario.sensing.slot_length_s,
                                              scenario.sensing.sample_time_s);
            harvest += cell.harvest_j;
          }
        }
      }

      record.harvest_j[m] = harvest;
      record.sensing_j[m] = spend;
      record.total_sensing_j += spend;
      EnergyLedger& ledger = ledgers[m];
      ledger.harvest_j = harvest;
      ledger.sensing_spend_j = spend;
      ledger.battery_j = battery_update(ledger.battery_j, harvest, spend);
    }

    record.battery_after_j.reserve(su_count);
    for (const EnergyLedger& ledger : ledgers) {
      record.battery_after_j.push_back(ledger.battery_j);
    }

    std::size_t mismatched = 0;
    std::vector<std::size_t> band_mismatch(band_count, 0);
    for (std::size_t m = 0; m < su_count; ++m) {
      for (std::size_t b = 0; b < band_count; ++b) {
        if (record.cells[m][b].label != record.cells[m][b].truth) {
          ++mismatched;
          ++band_mismatch[b];
        }
      }
    }
    record.classification_error =
        static_cast<double>(mismatched) / static_cast<double>(su_count * band_count);
    for (std::size_t b = 0; b < band_count; ++b) {
      result.band_error[b] +=
          static_cast<double>(band_mismatch[b]) / static_cast<double>(su_count);
    }

    result.total_sensing_j += record.total_sensing_j;
    result.classification_error += record.classification_error;
    result.slots.push_back(std::move(record));
  }

  const double slots = static_cast<double>(scenario.sensing.slot_count);
  result.classification_error /= slots;
  for (double& e : result.band_error) e /= slots;
  return result;
}

std::vector<SweepRow> energy_vs_training_fraction(const Scenario& scenario,
                                                  std::span<const double> fractions,
                                                  std::span<const std::uint64_t> seeds) {
  for (double fraction : fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
      throw DomainError("energy_vs_training_fraction: fractions must lie in (0, 1]");
    }
  }
  if (seeds.empty()) {
    throw DomainError("energy_vs_training_fraction: at least one seed required");
  }

  std::vector<double> sorted(fractions.begin(), fractions.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<SweepRow> rows;
  for (double fraction : sorted) {
    double energy_sum = 0.0, energy_sq = 0.0, error_sum = 0.0, error_sq = 0.0;
    for (std::uint64_t seed : seeds) {
      Scenario variant = scenario;
      variant.mode = SolutionMode::Svm;
      variant.training_fraction = fraction;
      variant.seed = seed;
      const RunResult run_result = run(variant);
      energy_sum += run_result.total_sensing_j;
      energy_sq += run_result.total_sensing_j * run_result.total_sensing_j;
      error_sum += run_result.classification_error;
      error_sq += run_result.classification_error * run_result.classification_error;
    }
    const double n = static_cast<double>(seeds.size());
    SweepRow row;
    row.fraction = fraction;
    row.mean_energy_j = energy_sum / n;
    row.stddev_energy_j =
        std::sqrt(std::max(energy_sq / n - row.mean_energy_j * row.mean_energy_j, 0.0));
    row.mean_error = error_sum / n;
    row.stddev_error = std::sqrt(std::max(error_sq / n - row.mean_error * row.mean_error, 0.0));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace crharvest::sim
