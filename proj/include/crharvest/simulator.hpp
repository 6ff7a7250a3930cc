#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crharvest/core.hpp"
#include "crharvest/regions.hpp"
#include "crharvest/sensing.hpp"
#include "crharvest/svm.hpp"

namespace crharvest::sim {

enum class SolutionMode { AllSensing, Svm };

/// Immutable description of one experiment.
struct Scenario {
  double arena_width_m = 40.0;
  double arena_height_m = 40.0;
  std::vector<Band> bands;
  std::vector<Node> pus;  // PU nodes, exactly one per band
  int su_count = 60;
  std::vector<Position> su_positions;  // empty: drawn uniformly from the seed
  SensingConfig sensing;
  ChannelParams channel;
  double initial_battery_j = 1e-3;  // B_0, defaults to P_s T
  SolutionMode mode = SolutionMode::AllSensing;
  double training_fraction = 0.5;       // svm mode only
  bool redraw_training_each_slot = false;
  sensing::ConstraintForm constraint_form = sensing::ConstraintForm::Corrected;
  double pu_activity = 1.0;  // per-slot Bernoulli occupancy; 1 keeps PUs always on
  std::uint64_t seed = 1;

  bool operator==(const Scenario&) const = default;
};

/// The seven default bands (0.9 .. 2.68 GHz) at 1 W and eta = 0.45 each.
std::vector<Band> default_bands();

/// Default PU layout: evenly spaced on a circle of radius min(w, h)/4 around
/// the arena center, one per band.
std::vector<Node> default_pus(double arena_width_m, double arena_height_m,
                               std::size_t band_count);

/// Fully defaulted scenario: 40 m x 40 m, 7 bands, 60 SUs, all-sensing.
Scenario default_scenario();

/// Uniform i.i.d. SU placement; identical seeds give identical layouts.
std::vector<Position> place_random(int count, double width_m, double height_m,
                                   std::uint64_t seed);

struct SuBandRecord {
  long long samples = 0;
  double threshold = 0.0;
  bool sensed = false;
  bool delta = false;  // physical harvest indicator
  regions::RegionLabel truth = regions::RegionLabel::IR;
  regions::RegionLabel label = regions::RegionLabel::IR;  // sensed or predicted
  double harvest_j = 0.0;
  double sensing_j = 0.0;
  bool feasible = false;
  sensing::Limit limiting = sensing::Limit::None;
};

struct SlotRecord {
  int slot = 0;  // 1-based
  std::vector<double> battery_before_j;
  std::vector<double> battery_after_j;
  std::vector<double> harvest_j;   // per SU
  std::vector<double> sensing_j;   // per SU
  std::vector<bool> is_training;   // per SU (all true outside svm mode)
  std::vector<std::vector<SuBandRecord>> cells;  // [su][band]
  double total_sensing_j = 0.0;
  int max_sca_iterations = 0;
  double classification_error = 0.0;  // pooled over (su, band)
};

struct RunResult {
  std::vector<Position> su_positions;
  std::vector<std::vector<regions::RegionLabel>> truth;  // [band][su]
  std::vector<std::vector<bool>> is_support;             // [band][su]
  std::vector<SlotRecord> slots;
  double total_sensing_j = 0.0;
  double classification_error = 0.0;     // mean over slots
  std::vector<double> band_error;        // mean over slots, per band
};

struct RunOptions {
  std::vector<gp::ScaIterate>* sca_trace = nullptr;
  double sca_tolerance = 1e-6;
  sensing::EpsilonRule epsilon_rule = sensing::EpsilonRule::FalseAlarmTight;
};

/// Time-slotted engine over t = 1..Gamma: per-slot sensing optimization,
/// harvesting indicators, battery recursion and region labeling under the
/// configured solution mode.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

struct SweepRow {
  double fraction = 0.0;
  double mean_energy_j = 0.0;
  double stddev_energy_j = 0.0;
  double mean_error = 0.0;
  double stddev_error = 0.0;
};

/// Monte-Carlo sweep of the svm-mode training fraction; rows sorted ascending.
std::vector<SweepRow> energy_vs_training_fraction(const Scenario& scenario,
                                                  std::span<const double> fractions,
                                                  std::span<const std::uint64_t> seeds);

}  // namespace crharvest::sim
