#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "crharvest/core.hpp"
#include "crharvest/svm.hpp"

namespace crharvest::regions {

/// Per-(SU, band) geographic classification: harvesting, inactive or
/// communication region. The order doubles as the Max-Wins tie rule.
enum class RegionLabel { HR, IR, CR };

const char* to_string(RegionLabel label);

/// Labeling primitive under an active PU: HR when the received power reaches
/// the rectifier sensitivity (inclusive), CR when the pair cannot meet the
/// detection targets within the per-slot sample budget, IR otherwise.
RegionLabel label_ground_truth(double avg_rx_power_w, bool detection_feasible,
                               double sensitivity_w, bool pu_active);

struct BandGeometry {
  Position pu;
  double frequency_hz = 0.0;
  double pu_power_w = 0.0;
};

double received_power(const Position& su, const BandGeometry& band,
                      const ChannelParams& channel);

/// Ground-truth label of one SU position on one band, deriving detection
/// feasibility from the closed-form minimum sample count.
RegionLabel classify_point(const Position& su, const BandGeometry& band,
                           const ChannelParams& channel, const SensingConfig& config,
                           double noise_w);

/// Radius of the HR disk around a band's PU: (lambda / 4 pi) sqrt(P G_t G_r / P_th).
double hr_boundary_radius(double frequency_hz, double pu_power_w,
                          const ChannelParams& channel, double sensitivity_w);

/// Fraction of mismatched labels.
double classification_error(std::span<const RegionLabel> predicted,
                            std::span<const RegionLabel> truth);

/// Trained per-band classification: training rows keep their sensed (true)
/// label, the rest receive the Max-Wins prediction.
struct BandClassification {
  std::vector<RegionLabel> labels;
  std::vector<bool> is_support;  // per SU; false outside the training set
  svm::OvoClassifier model;
};

BandClassification classify_band(std::span<const Position> sus,
                                 std::span<const RegionLabel> truth,
                                 const std::vector<bool>& is_training,
                                 const svm::OvoOptions& options = {});

}  // namespace crharvest::regions
