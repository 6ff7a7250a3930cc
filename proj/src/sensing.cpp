#include "crharvest/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace crharvest::sensing {

const char* to_string(Limit limit) {
  switch (limit) {
    case Limit::None: return "none";
    case Limit::DetectionWindow: return "detection-window";
    case Limit::SampleCap: return "sample-cap";
    case Limit::Battery: return "battery";
  }
  return "?";
}

double closed_form_min_samples(double snr, double fa_cap, double det_floor) {
  if (!(snr > 0.0)) {
    throw DomainError("closed_form_min_samples: snr must be strictly positive");
  }
  const double q_fa = q_inverse(fa_cap);
  const double q_det = q_inverse(det_floor);
  const double gap = q_fa - (snr + 1.0) * q_det;
  if (gap <= 0.0) {
    return 0.0;  // both conditions hold for every sample count
  }
  const double root = gap / snr;
  return root * root;
}

EpsilonWindow epsilon_window(double samples, double snr, double fa_cap, double det_floor) {
  const double inv_sqrt = 1.0 / std::sqrt(samples);
  return {1.0 + q_inverse(fa_cap) * inv_sqrt,
          (snr + 1.0) * (1.0 + q_inverse(det_floor) * inv_sqrt)};
}

const BandFeasibility* FeasibilityReport::find(int su, int band) const {
  for (const BandFeasibility& entry : entries) {
    if (entry.su == su && entry.band == band) return &entry;
  }
  return nullptr;
}

const PlanEntry* SensingPlan::find(int su, int band) const {
  for (const PlanEntry& entry : entries) {
    if (entry.su == su && entry.band == band) return &entry;
  }
  return nullptr;
}

double SensingPlan::total_energy_j() const {
  double total = 0.0;
  for (double e : su_energy_j) total += e;
  return total;
}

namespace {

// Integer sample bounds implied by the config.
long long sample_floor(const SensingConfig& config) {
  return static_cast<long long>(std::ceil(config.min_samples - 1e-9));
}

long long sample_cap(const SensingConfig& config) {
  return static_cast<long long>(std::floor(config.max_samples() + 1e-9));
}

double per_sample_cost(const SensingConfig& config) {
  return config.sample_time_s * config.sensing_power_w;
}

struct BandScan {
  std::size_t band_slot = 0;  // position within the SU's band list
  bool detection_feasible = false;
  Limit limiting = Limit::None;
  double min_samples = 0.0;       // closed-form minimum, valid when detection_feasible
  double min_cost_samples = 0.0;  // max(theta-bar, min_samples): smallest plannable count
};

// Detection feasibility and minimal cost per band of one SU.
std::vector<BandScan> scan_su(const SuState& su, const SensingConfig& config) {
  std::vector<BandScan> scans(su.bands.size());
  const double cap = config.max_samples();
  for (std::size_t k = 0; k < su.bands.size(); ++k) {
    BandScan& scan = scans[k];
    scan.band_slot = k;
    const double gamma = su.bands[k].snr;
    if (!(gamma > 0.0)) {
      scan.limiting = Limit::DetectionWindow;
      continue;
    }
    const double needed = closed_form_min_samples(gamma, config.false_alarm_cap,
                                                  config.detection_floor);
    if (needed > cap) {
      scan.limiting = Limit::SampleCap;
      continue;
    }
    scan.detection_feasible = true;
    scan.min_samples = needed;
    scan.min_cost_samples = std::max(config.min_samples, needed);
  }
  return scans;
}

// Drops detection-feasible bands (largest distance first) until the relaxed
// minimal plan fits the battery. Returns indices (into su.bands) kept.
std::vector<std::size_t> battery_filter(const SuState& su, const SensingConfig& config,
                                        std::vector<BandScan>& scans) {
  std::vector<std::size_t> kept;
  double cost = 0.0;
  for (const BandScan& scan : scans) {
    if (scan.detection_feasible) {
      kept.push_back(scan.band_slot);
      cost += scan.min_cost_samples * per_sample_cost(config);
    }
  }
  while (!kept.empty() && cost > su.battery_j) {
    auto farthest = std::max_element(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
      return su.bands[a].distance_m < su.bands[b].distance_m;
    });
    BandScan& dropped = scans[*farthest];
    dropped.detection_feasible = false;
    dropped.limiting = Limit::Battery;
    cost -= dropped.min_cost_samples * per_sample_cost(config);
    kept.erase(farthest);
  }
  return kept;
}

double paper_form_epsilon_midpoint(double samples, double snr, double q_fa, double q_det) {
  const double root = std::sqrt(samples);
  const double lo = (snr + 1.0) * (1.0 + q_det / root);
  const double hi = root + q_fa / root;
  return 0.5 * (lo + hi);
}

}  // namespace

FeasibilityReport feasibility_scan(const SlotState& state, const SensingConfig& config) {
  FeasibilityReport report;
  for (const SuState& su : state.sus) {
    std::vector<BandScan> scans = scan_su(su, config);
    battery_filter(su, config, scans);
    for (const BandScan& scan : scans) {
      BandFeasibility entry;
      entry.su = su.su_index;
      entry.band = su.bands[scan.band_slot].band_index;
      entry.feasible = scan.detection_feasible;
      entry.limiting = scan.detection_feasible ? Limit::None : scan.limiting;
      if (scan.detection_feasible ||
          (scan.limiting == Limit::Battery)) {  // battery drops still know their minimum
        entry.min_samples = scan.min_samples;
      }
      if (!scan.detection_feasible && scan.limiting != Limit::Battery) {
        entry.min_samples.reset();
      }
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

gp::GpProblem build_subproblem(const SlotState& state, const SensingConfig& config,
                               ConstraintForm form, std::span<const double> z_prev) {
  std::size_t var_count = 0;
  for (const SuState& su : state.sus) var_count += 2 * su.bands.size();
  if (form == ConstraintForm::PaperForm && z_prev.size() != var_count) {
    throw DomainError("build_subproblem: z_prev arity mismatch for condensation");
  }

  const double q_fa = q_inverse(config.false_alarm_cap);
  const double q_det = q_inverse(config.detection_floor);
  if (q_fa <= 0.0) {
    throw StructuralError(
        "build_subproblem: false-alarm cap at or above one half yields a nonpositive "
        "coefficient");
  }

  std::vector<std::string> variables(var_count);
  std::vector<gp::Monomial> objective_terms;
  std::vector<gp::Posynomial> inequalities;
  const double cost = per_sample_cost(config);

  auto unit_exps = [var_count](std::size_t index, double power) {
    std::vector<double> exps(var_count, 0.0);
    exps[index] = power;
    return exps;
  };

  std::size_t base = 0;
  for (const SuState& su : state.sus) {
    if (!(su.battery_j > 0.0)) {
      throw InfeasibleError(
          "build_subproblem: empty battery admits no sensing plan (samples are bounded "
          "below)");
    }
    std::vector<gp::Monomial> battery_terms;
    for (std::size_t k = 0; k < su.bands.size(); ++k) {
      const std::size_t eps_index = base + 2 * k;
      const std::size_t theta_index = eps_index + 1;
      const BandState& band = su.bands[k];
      variables[eps_index] =
          "eps_m" + std::to_string(su.su_index) + "_b" + std::to_string(band.band_index);
      variables[theta_index] =
          "theta_m" + std::to_string(su.su_index) + "_b" + std::to_string(band.band_index);
      const double gamma = band.snr;

      objective_terms.emplace_back(cost, unit_exps(theta_index, 1.0));

      if (form == ConstraintForm::Corrected) {
        // False alarm: (1 + Q^-1(F) theta^-1/2) / eps <= 1.
        std::vector<gp::Monomial> fa_terms;
        fa_terms.emplace_back(1.0, unit_exps(eps_index, -1.0));
        {
          std::vector<double> exps(var_count, 0.0);
          exps[eps_index] = -1.0;
          exps[theta_index] = -0.5;
          fa_terms.emplace_back(q_fa, std::move(exps));
        }
        inequalities.emplace_back(std::move(fa_terms));

        // Detection with a = -Q^-1(D) > 0: eps/(gamma+1) + a theta^-1/2 <= 1.
        const double a = -q_det;
        if (a <= 0.0) {
          throw StructuralError(
              "build_subproblem: detection floor at or below one half breaks the "
              "corrected rewrite");
        }
        std::vector<gp::Monomial> det_terms;
        det_terms.emplace_back(1.0 / (gamma + 1.0), unit_exps(eps_index, 1.0));
        det_terms.emplace_back(a, unit_exps(theta_index, -0.5));
        inequalities.emplace_back(std::move(det_terms));
      } else {
        // Ratio-form false alarm: eps theta^1/2 / (Q^-1(F) + theta), with the
        // denominator condensed to a monomial at z_prev (K = 2).
        gp::Posynomial denominator({gp::Monomial(q_fa, std::vector<double>(var_count, 0.0)),
                                    gp::Monomial(1.0, unit_exps(theta_index, 1.0))});
        const gp::Monomial condensed = gp::condense(denominator, z_prev);
        std::vector<double> exps(var_count, 0.0);
        exps[eps_index] = 1.0;
        exps[theta_index] = 0.5;
        for (std::size_t v = 0; v < var_count; ++v) {
          exps[v] -= condensed.exponents()[v];
        }
        inequalities.emplace_back(
            std::vector<gp::Monomial>{gp::Monomial(1.0 / condensed.coefficient(), exps)});

        // Ratio-form detection: ((gamma+1) Q^-1(D) + (gamma+1) theta^1/2)
        // / (eps theta^1/2) <= 1. Positive coefficients require Q^-1(D) > 0.
        if (q_det <= 0.0) {
          throw StructuralError(
              "build_subproblem: ratio-form detection constraint has a nonpositive "
              "coefficient for detection floors above one half");
        }
        std::vector<gp::Monomial> det_terms;
        {
          std::vector<double> e1(var_count, 0.0);
          e1[eps_index] = -1.0;
          e1[theta_index] = -0.5;
          det_terms.emplace_back((gamma + 1.0) * q_det, std::move(e1));
        }
        det_terms.emplace_back(gamma + 1.0, unit_exps(eps_index, -1.0));
        inequalities.emplace_back(std::move(det_terms));
      }

      // Sample cap (T_s / T) theta <= 1 and floor theta-bar / theta <= 1.
      inequalities.emplace_back(std::vector<gp::Monomial>{
          gp::Monomial(config.sample_time_s / config.slot_length_s,
                       unit_exps(theta_index, 1.0))});
      inequalities.emplace_back(std::vector<gp::Monomial>{
          gp::Monomial(config.min_samples, unit_exps(theta_index, -1.0))});

      battery_terms.emplace_back(cost / su.battery_j, unit_exps(theta_index, 1.0));
    }
    if (!battery_terms.empty()) {
      inequalities.emplace_back(std::move(battery_terms));
    }
    base += 2 * su.bands.size();
  }

  gp::GpProblem problem{std::move(variables), gp::Posynomial(std::move(objective_terms)),
                        std::move(inequalities),
                        {}};
  problem.validate();
  return problem;
}

std::vector<double> initial_point(const SlotState& state, const SensingConfig& config,
                                  ConstraintForm form) {
  const double q_fa = q_inverse(config.false_alarm_cap);
  const double q_det = q_inverse(config.detection_floor);
  const double cap = config.max_samples();
  std::vector<double> z;
  for (const SuState& su : state.sus) {
    // Interior sample floors per band, then as many samples as the battery
    // budget allows, split evenly along the segment towards the cap.
    std::vector<double> mins(su.bands.size());
    double min_sum = 0.0, cap_sum = 0.0;
    for (std::size_t k = 0; k < su.bands.size(); ++k) {
      const double needed = closed_form_min_samples(std::max(su.bands[k].snr, 1e-300),
                                                    config.false_alarm_cap,
                                                    config.detection_floor);
      double lo = std::max(config.min_samples * (1.0 + 1e-9), needed * (1.0 + 1e-6));
      lo = std::min(lo, cap * (1.0 - 1e-9));
      mins[k] = lo;
      min_sum += lo;
      cap_sum += cap;
    }
    const double budget = 0.999 * su.battery_j / per_sample_cost(config);
    double fraction = 0.0;
    if (cap_sum > min_sum) {
      fraction = std::clamp((budget - min_sum) / (cap_sum - min_sum), 0.0, 1.0);
    }
    fraction *= 1.0 - 1e-6;  // keep the cap constraint strictly slack
    for (std::size_t k = 0; k < su.bands.size(); ++k) {
      const double theta0 = mins[k] + fraction * (cap - mins[k]);
      double eps0;
      if (form == ConstraintForm::PaperForm) {
        eps0 = paper_form_epsilon_midpoint(theta0, su.bands[k].snr, q_fa, q_det);
      } else {
        const EpsilonWindow window = epsilon_window(theta0, su.bands[k].snr,
                                                    config.false_alarm_cap,
                                                    config.detection_floor);
        eps0 = 0.5 * (window.lo + window.hi);
      }
      z.push_back(eps0);
      z.push_back(theta0);
    }
  }
  return z;
}

SensingPlan optimize_slot(const SlotState& state, const SensingConfig& config,
                          const OptimizeOptions& options) {
  SensingPlan plan;
  plan.su_energy_j.assign(state.sus.size(), 0.0);
  plan.sca_iterations.assign(state.sus.size(), 0);
  plan.report = feasibility_scan(state, config);

  const double q_fa = q_inverse(config.false_alarm_cap);
  const long long floor_count = sample_floor(config);
  const long long cap_count = sample_cap(config);
  const double cost = per_sample_cost(config);

  for (std::size_t s = 0; s < state.sus.size(); ++s) {
    const SuState& su = state.sus[s];

    std::vector<BandScan> scans = scan_su(su, config);
    const std::vector<std::size_t> kept = battery_filter(su, config, scans);

    // Emit skipped entries for bands that never enter the solve.
    for (const BandScan& scan : scans) {
      if (scan.detection_feasible) continue;
      PlanEntry entry;
      entry.su = su.su_index;
      entry.band = su.bands[scan.band_slot].band_index;
      entry.feasible = false;
      entry.limiting = scan.limiting;
      plan.entries.push_back(entry);
    }
    if (kept.empty()) {
      continue;
    }

    SuState reduced;
    reduced.su_index = su.su_index;
    reduced.battery_j = su.battery_j;
    for (std::size_t slot : kept) reduced.bands.push_back(su.bands[slot]);
    SlotState single{{reduced}};

    gp::ScaSettings settings;
    settings.tolerance = options.sca_tolerance;
    settings.max_iterations = options.max_sca_iterations;
    settings.start = initial_point(single, config, options.form);
    settings.record_trace = options.trace != nullptr;
    gp::ScaResult sca = gp::sca_solve(
        [&](std::span<const double> z_prev) {
          return build_subproblem(single, config, options.form, z_prev);
        },
        settings);
    plan.sca_iterations[s] = sca.iterations;
    if (options.trace != nullptr) {
      options.trace->insert(options.trace->end(), sca.trace.begin(), sca.trace.end());
    }

    // Integer recovery: ceiling, clamped to the sample bounds, then threshold
    // re-selection at the rounded count.
    struct Rounded {
      std::size_t band_slot;
      long long samples;
      double continuous;
      double threshold;
    };
    std::vector<Rounded> rounded;
    for (std::size_t k = 0; k < reduced.bands.size(); ++k) {
      const double continuous = sca.z[2 * k + 1];
      long long samples = static_cast<long long>(std::ceil(continuous - 1e-9));
      samples = std::clamp(samples, floor_count, cap_count);
      const double gamma = reduced.bands[k].snr;
      double threshold = 0.0;
      for (; samples <= cap_count; ++samples) {
        if (options.epsilon_rule == EpsilonRule::FalseAlarmTight) {
          threshold = 1.0 + q_fa * (1.0 + 1e-12) / std::sqrt(static_cast<double>(samples));
        } else {
          const EpsilonWindow window =
              epsilon_window(static_cast<double>(samples), gamma, config.false_alarm_cap,
                             config.detection_floor);
          threshold = 0.5 * (window.lo + window.hi);
        }
        if (!(threshold >= 0.0)) {
          continue;  // inverted window below the minimum count
        }
        const double fa = false_alarm_prob(threshold, static_cast<double>(samples));
        const double det = detection_prob(threshold, static_cast<double>(samples), gamma);
        if (fa <= config.false_alarm_cap && det >= config.detection_floor - 1e-12) {
          break;  // rounded entry re-validated against the detection statistics
        }
      }
      if (samples > cap_count) {
        throw Error("optimize_slot: rounding left no valid sample count below the cap");
      }
      rounded.push_back({kept[k], samples, continuous, threshold});
    }

    // Rounding may push the plan past the battery; drop the most distant
    // bands until the causality constraint holds again.
    auto plan_cost = [&]() {
      double total = 0.0;
      for (const Rounded& r : rounded) total += static_cast<double>(r.samples) * cost;
      return total;
    };
    while (!rounded.empty() && plan_cost() > su.battery_j) {
      auto farthest =
          std::max_element(rounded.begin(), rounded.end(), [&](const Rounded& a, const Rounded& b) {
            return su.bands[a.band_slot].distance_m < su.bands[b.band_slot].distance_m;
          });
      PlanEntry entry;
      entry.su = su.su_index;
      entry.band = su.bands[farthest->band_slot].band_index;
      entry.feasible = false;
      entry.limiting = Limit::Battery;
      plan.entries.push_back(entry);
      for (BandFeasibility& fe : plan.report.entries) {
        if (fe.su == entry.su && fe.band == entry.band) {
          fe.feasible = false;
          fe.limiting = Limit::Battery;
        }
      }
      rounded.erase(farthest);
    }

    double su_energy = 0.0;
    for (const Rounded& r : rounded) {
      PlanEntry entry;
      entry.su = su.su_index;
      entry.band = su.bands[r.band_slot].band_index;
      entry.feasible = true;
      entry.limiting = Limit::None;
      entry.samples = r.samples;
      entry.samples_continuous = r.continuous;
      entry.threshold = r.threshold;
      entry.sensing_energy_j = static_cast<double>(r.samples) * cost;
      su_energy += entry.sensing_energy_j;
      plan.entries.push_back(entry);
    }
    plan.su_energy_j[s] = su_energy;
  }
  return plan;
}

}  // namespace crharvest::sensing
