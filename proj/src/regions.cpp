#include "crharvest/regions.hpp"

#include <cmath>
#include <numbers>

#include "crharvest/sensing.hpp"

namespace crharvest::regions {

const char* to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::HR: return "HR";
    case RegionLabel::IR: return "IR";
    case RegionLabel::CR: return "CR";
  }
  return "?";
}

RegionLabel label_ground_truth(double avg_rx_power_w, bool detection_feasible,
                               double sensitivity_w, bool pu_active) {
  if (!pu_active) {
    throw DomainError("label_ground_truth: regions are defined under an active PU");
  }
  if (harvest_indicator(avg_rx_power_w, sensitivity_w, pu_active)) {
    return RegionLabel::HR;
  }
  if (!detection_feasible) {
    return RegionLabel::CR;
  }
  return RegionLabel::IR;
}

double received_power(const Position& su, const BandGeometry& band,
                      const ChannelParams& channel) {
  return band.pu_power_w * channel_gain(distance(su, band.pu), band.frequency_hz, channel);
}

RegionLabel classify_point(const Position& su, const BandGeometry& band,
                           const ChannelParams& channel, const SensingConfig& config,
                           double noise_w) {
  const double rx = received_power(su, band, channel);
  const double gamma = snr(band.pu_power_w,
                           channel_gain(distance(su, band.pu), band.frequency_hz, channel),
                           noise_w);
  const bool detection_feasible =
      gamma > 0.0 && sensing::closed_form_min_samples(gamma, config.false_alarm_cap,
                                                      config.detection_floor) <=
                         config.max_samples();
  return label_ground_truth(rx, detection_feasible, config.harvest_sensitivity_w, true);
}

double hr_boundary_radius(double frequency_hz, double pu_power_w,
                          const ChannelParams& channel, double sensitivity_w) {
  if (!(frequency_hz > 0.0) || !(sensitivity_w > 0.0)) {
    throw DomainError("hr_boundary_radius: frequency and sensitivity must be positive");
  }
  const double wavelength = channel.speed_of_light / frequency_hz;
  return wavelength / (4.0 * std::numbers::pi) *
         std::sqrt(pu_power_w * channel.tx_gain * channel.rx_gain / sensitivity_w);
}

double classification_error(std::span<const RegionLabel> predicted,
                            std::span<const RegionLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw DomainError("classification_error: index sets differ");
  }
  if (predicted.empty()) return 0.0;
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != truth[i]) ++mismatched;
  }
  return static_cast<double>(mismatched) / static_cast<double>(predicted.size());
}

BandClassification classify_band(std::span<const Position> sus,
                                 std::span<const RegionLabel> truth,
                                 const std::vector<bool>& is_training,
                                 const svm::OvoOptions& options) {
  if (sus.size() != truth.size() || sus.size() != is_training.size()) {
    throw DomainError("classify_band: input spans disagree on SU count");
  }
  std::vector<int> training_rows;
  for (std::size_t m = 0; m < sus.size(); ++m) {
    if (is_training[m]) training_rows.push_back(static_cast<int>(m));
  }
  if (training_rows.empty()) {
    throw DomainError("classify_band: the training set is empty");
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(training_rows.size()), 2);
  std::vector<int> labels(training_rows.size());
  for (std::size_t r = 0; r < training_rows.size(); ++r) {
    const Position& position = sus[static_cast<std::size_t>(training_rows[r])];
    X(static_cast<Eigen::Index>(r), 0) = position.x_m;
    X(static_cast<Eigen::Index>(r), 1) = position.y_m;
    labels[r] = static_cast<int>(truth[static_cast<std::size_t>(training_rows[r])]);
  }
  const std::vector<int> classes = {static_cast<int>(RegionLabel::HR),
                                    static_cast<int>(RegionLabel::IR),
                                    static_cast<int>(RegionLabel::CR)};

  BandClassification result;
  result.model = svm::train_ovo(X, labels, classes, options);
  result.labels.resize(sus.size());
  result.is_support.assign(sus.size(), false);
  for (std::size_t r = 0; r < training_rows.size(); ++r) {
    result.is_support[static_cast<std::size_t>(training_rows[r])] =
        result.model.support_rows[r];
  }
  for (std::size_t m = 0; m < sus.size(); ++m) {
    if (is_training[m]) {
      result.labels[m] = truth[m];  // training SUs sensed their region
    } else {
      Eigen::VectorXd x(2);
      x << sus[m].x_m, sus[m].y_m;
      result.labels[m] = static_cast<RegionLabel>(result.model.predict(x));
    }
  }
  return result;
}

}  // namespace crharvest::regions
