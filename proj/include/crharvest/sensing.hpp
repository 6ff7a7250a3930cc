#pragma once

#include <optional>
#include <span>
#include <vector>

#include "crharvest/core.hpp"
#include "crharvest/gp.hpp"

namespace crharvest::sensing {

/// Which algebraic form the per-slot GP uses. Corrected derives both
/// probability constraints from the detection statistics (already posynomial,
/// no condensation needed); PaperForm keeps them as ratio constraints and
/// condenses the false-alarm denominator, which requires a detection floor
/// below one half to keep every coefficient positive.
enum class ConstraintForm { Corrected, PaperForm };

/// How the threshold is re-selected at the rounded sample count.
enum class EpsilonRule { FalseAlarmTight, Midpoint };

enum class Limit { None, DetectionWindow, SampleCap, Battery };
const char* to_string(Limit limit);

struct BandState {
  int band_index = 0;
  double snr = 0.0;        // gamma^b_m
  double distance_m = 0.0;  // to the band's PU; orders battery drops
};

struct SuState {
  int su_index = 0;
  double battery_j = 0.0;  // B_{m,t-1}
  std::vector<BandState> bands;
};

/// Per-slot network state handed to the optimizer.
struct SlotState {
  std::vector<SuState> sus;
};

/// Smallest real sample count for which some threshold satisfies both the
/// false-alarm cap and the detection floor simultaneously:
/// ((Q^-1(F) - (gamma+1) Q^-1(D)) / gamma)^2, floored at zero.
double closed_form_min_samples(double snr, double fa_cap, double det_floor);

/// Feasible threshold interval [lo, hi] at a fixed sample count, derived
/// from the detection statistics. Empty (lo > hi) below the minimum count.
struct EpsilonWindow {
  double lo = 0.0;
  double hi = 0.0;
};
EpsilonWindow epsilon_window(double samples, double snr, double fa_cap, double det_floor);

struct BandFeasibility {
  int su = 0;
  int band = 0;
  bool feasible = false;
  Limit limiting = Limit::None;
  std::optional<double> min_samples;  // present only when detection-feasible within the cap
};

struct FeasibilityReport {
  std::vector<BandFeasibility> entries;
  const BandFeasibility* find(int su, int band) const;
};

/// Detection and battery feasibility of every (SU, band) pair in the state.
/// Battery drops remove the most distant bands first.
FeasibilityReport feasibility_scan(const SlotState& state, const SensingConfig& config);

/// Variable layout of the built problem: for each SU in state order, for each
/// of its bands, [eps, theta].
gp::GpProblem build_subproblem(const SlotState& state, const SensingConfig& config,
                               ConstraintForm form, std::span<const double> z_prev);

/// Deterministic strictly feasible start: samples as large as the battery
/// budget allows (up to T/T_s), thresholds at the window midpoint.
std::vector<double> initial_point(const SlotState& state, const SensingConfig& config,
                                  ConstraintForm form = ConstraintForm::Corrected);

struct PlanEntry {
  int su = 0;
  int band = 0;
  bool feasible = false;
  Limit limiting = Limit::None;
  long long samples = 0;            // integer count after rounding
  double samples_continuous = 0.0;  // SCA optimum before rounding
  double threshold = 0.0;
  double sensing_energy_j = 0.0;
};

struct SensingPlan {
  std::vector<PlanEntry> entries;        // one per (SU, band) pair of the state
  std::vector<double> su_energy_j;       // aligned with state.sus
  std::vector<int> sca_iterations;       // aligned with state.sus
  FeasibilityReport report;

  const PlanEntry* find(int su, int band) const;
  double total_energy_j() const;
};

struct OptimizeOptions {
  ConstraintForm form = ConstraintForm::Corrected;
  EpsilonRule epsilon_rule = EpsilonRule::FalseAlarmTight;
  double sca_tolerance = 1e-6;
  int max_sca_iterations = 50;
  std::vector<gp::ScaIterate>* trace = nullptr;  // appended per SU when set
};

/// Per-slot sensing optimization: feasibility scan, per-SU SCA solve,
/// ceiling to integer samples, threshold re-selection and a final battery
/// re-check that drops the most distant bands on violation.
SensingPlan optimize_slot(const SlotState& state, const SensingConfig& config,
                          const OptimizeOptions& options = {});

}  // namespace crharvest::sensing
