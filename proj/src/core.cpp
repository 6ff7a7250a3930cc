#include "crharvest/core.hpp"

#include <cmath>
#include <numbers>

namespace crharvest {

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

double channel_gain(double distance_m, double frequency_hz, const ChannelParams& params) {
  if (!(distance_m > 0.0)) {
    throw DomainError("channel_gain: distance must be positive");
  }
  if (!(frequency_hz > 0.0)) {
    throw DomainError("channel_gain: frequency must be positive");
  }
  const double wavelength_factor =
      params.speed_of_light / (4.0 * std::numbers::pi * distance_m * frequency_hz);
  return params.tx_gain * params.rx_gain * wavelength_factor * wavelength_factor;
}

double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

namespace {

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("q_inverse: probability must lie in (0, 1)");
  }
  // Bisection on the monotone decreasing Q, then Newton polish.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = standard_normal_pdf(x);
    if (pdf < 1e-300) break;
    x += (q_function(x) - p) / pdf;
  }
  return x;
}

double false_alarm_prob(double threshold, double samples, double min_samples) {
  if (!(threshold >= 0.0)) {
    throw DomainError("false_alarm_prob: threshold must be nonnegative");
  }
  if (!(samples >= min_samples)) {
    throw ApproximationError(
        "false_alarm_prob: sample count below the Gaussian-approximation floor");
  }
  return q_function((threshold - 1.0) * std::sqrt(samples));
}

double detection_prob(double threshold, double samples, double snr, double min_samples) {
  if (!(snr >= 0.0)) {
    throw DomainError("detection_prob: snr must be nonnegative");
  }
  if (!(samples >= min_samples)) {
    throw ApproximationError(
        "detection_prob: sample count below the Gaussian-approximation floor");
  }
  return q_function((threshold - snr - 1.0) * std::sqrt(samples) / (snr + 1.0));
}

double snr(double pu_power_w, double gain, double noise_w) {
  return pu_power_w * gain / noise_w;
}

bool harvest_indicator(double avg_rx_power_w, double sensitivity_w, bool pu_active) {
  return pu_active && avg_rx_power_w >= sensitivity_w;
}

double sensing_energy(std::span<const double> samples_per_band, double sample_time_s,
                      double sensing_power_w) {
  double total = 0.0;
  for (double samples : samples_per_band) {
    if (samples < 0.0) {
      throw DomainError("sensing_energy: negative sample count");
    }
    total += samples * sample_time_s * sensing_power_w;
  }
  return total;
}

double harvested_energy(std::span<const BandHarvest> bands, double slot_length_s,
                        double sample_time_s) {
  double total = 0.0;
  for (const BandHarvest& band : bands) {
    const double sensing_time = band.samples * sample_time_s;
    // relative slack absorbs rounding when theta T_s lands exactly on T
    if (sensing_time > slot_length_s * (1.0 + 1e-9)) {
      throw ScheduleError("harvested_energy: sensing time exceeds the slot length");
    }
    if (band.indicator) {
      total += band.efficiency * std::max(slot_length_s - sensing_time, 0.0) *
               band.pu_power_w * band.gain;
    }
  }
  return total;
}

double battery_update(double battery_prev_j, double harvest_j, double sensing_spend_j) {
  return std::max(battery_prev_j + harvest_j - sensing_spend_j, 0.0);
}

}  // namespace crharvest
