#pragma once

#include <cstdint>
#include <span>

#include "crharvest/errors.hpp"

namespace crharvest {

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
  bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

/// One licensed frequency band, owned by exactly one primary user.
struct Band {
  double frequency_hz = 0.0;       // f^b
  double pu_power_w = 1.0;         // P^b_t
  double rf_dc_efficiency = 0.45;  // eta^b, rectifier dependent
  bool pu_active = true;
  bool operator==(const Band&) const = default;
};

struct ChannelParams {
  double tx_gain = 1.0;             // G_t, linear
  double rx_gain = 1.0;             // G_r, linear
  double speed_of_light = 3.0e8;    // m/s
  double noise_variance_w = 1e-10;  // absolute noise floor used to form SNR
  bool operator==(const ChannelParams&) const = default;
};

/// A network node: a PU owning one band, or an SU (band_index < 0).
struct Node {
  Position position;
  int band_index = -1;  // owned band for PUs, -1 for SUs
  bool is_pu() const { return band_index >= 0; }
  bool operator==(const Node&) const = default;
};

/// Per-slot energy bookkeeping of one SU.
struct EnergyLedger {
  double battery_j = 0.0;          // B_{m,t}
  double sensing_spend_j = 0.0;    // S_{m,t}
  double harvest_j = 0.0;          // H_{m,t}
  double initial_battery_j = 0.0;  // B_0
  bool operator==(const EnergyLedger&) const = default;
};

/// Static sensing parameters shared by the whole network.
struct SensingConfig {
  double sample_time_s = 1e-6;       // T_s
  double slot_length_s = 1.0;        // T
  double sensing_power_w = 1e-3;     // P_s
  double false_alarm_cap = 0.1;      // F-bar, must be < 0.5
  double detection_floor = 0.9;      // D-bar, must be > 0.5
  double min_samples = 100.0;        // theta-bar
  double harvest_sensitivity_w = 1e-5;  // P_th
  int slot_count = 20;               // Gamma
  double battery_threshold_j = 1e-3;  // B_th: reserved parameter, not applied

  double max_samples() const { return slot_length_s / sample_time_s; }
  bool operator==(const SensingConfig&) const = default;
};

/// Free-space channel gain h = G_t G_r (c / (4 pi d f))^2.
/// Strictly decreasing in both distance and frequency.
double channel_gain(double distance_m, double frequency_hz, const ChannelParams& params);

/// Upper tail of the standard normal distribution.
double q_function(double x);

/// Inverse of q_function on (0, 1). q_inverse(0.5) == 0.
double q_inverse(double p);

/// Probability of deciding "PU present" when the band is idle:
/// F = Q[(eps - 1) sqrt(theta)], under normalized noise variance.
double false_alarm_prob(double threshold, double samples, double min_samples = 1.0);

/// Probability of deciding "PU present" when the band is busy:
/// D = Q[(eps - snr - 1) sqrt(theta) / (snr + 1)].
double detection_prob(double threshold, double samples, double snr, double min_samples = 1.0);

/// Linear SNR gamma = P h / sigma^2.
double snr(double pu_power_w, double gain, double noise_w);

/// Harvesting sensitivity indicator: 1 iff the PU is transmitting and the
/// average received power reaches the rectifier sensitivity (inclusive).
bool harvest_indicator(double avg_rx_power_w, double sensitivity_w, bool pu_active);

/// Total sensing spend S = sum_b theta^b T_s P_s.
double sensing_energy(std::span<const double> samples_per_band, double sample_time_s,
                      double sensing_power_w);

/// Per-band quantities entering the harvested-energy sum.
struct BandHarvest {
  bool indicator = false;     // delta^b
  double efficiency = 0.0;    // eta^b
  double samples = 0.0;       // theta^b spent sensing this band
  double pu_power_w = 0.0;    // P^b
  double gain = 0.0;          // h^b
};

/// Total harvested energy H = sum_b delta eta (T - theta T_s) P h.
double harvested_energy(std::span<const BandHarvest> bands, double slot_length_s,
                        double sample_time_s);

/// End-of-slot battery B = max(B_prev + H - S, 0).
double battery_update(double battery_prev_j, double harvest_j, double sensing_spend_j);

}  // namespace crharvest
