#pragma once

// Test-only oracles, kept independent of the library implementation: the
// detection statistics are evaluated directly from their defining formulas
// and the minimum sample count is found by exhaustive grid search.

#include <cmath>
#include <numbers>
#include <optional>

namespace oracle {

inline double q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double false_alarm(double eps, double samples) {
  return q((eps - 1.0) * std::sqrt(samples));
}

inline double detection(double eps, double samples, double snr) {
  return q((eps - snr - 1.0) * std::sqrt(samples) / (snr + 1.0));
}

/// Smallest integer sample count in [theta_min, theta_max] for which some
/// threshold exists: per count, the false-alarm boundary is located by
/// bisection on the directly evaluated statistic (F decreases in eps), and
/// both targets are re-checked at the found threshold. Since the detection
/// probability also decreases in eps, that threshold is feasible whenever
/// any is.
inline std::optional<long long> exact_min_samples(double snr, double fa_cap, double det_floor,
                                                  long long theta_min, long long theta_max) {
  for (long long theta = theta_min; theta <= theta_max; ++theta) {
    const double samples = static_cast<double>(theta);
    double lo = 1.0, hi = snr + 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (false_alarm(mid, samples) <= fa_cap) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    if (false_alarm(hi, samples) <= fa_cap && detection(hi, samples, snr) >= det_floor) {
      return theta;
    }
  }
  return std::nullopt;
}

/// Same search restricted to thresholds on a fixed absolute grid
/// (1 + k * eps_step). Near the window collapse the grid can overshoot the
/// true minimum by many samples once the window is narrower than the step,
/// so this variant is only meaningful for moderate and large SNR.
inline std::optional<long long> grid_min_samples(double snr, double fa_cap, double det_floor,
                                                 long long theta_min, long long theta_max,
                                                 double eps_step = 1e-4) {
  for (long long theta = theta_min; theta <= theta_max; ++theta) {
    const double samples = static_cast<double>(theta);
    // Smallest grid threshold meeting the false-alarm cap (F decreases in eps).
    long long lo = 0;
    long long hi = static_cast<long long>(std::ceil((snr + 2.0) / eps_step));
    while (lo < hi) {
      const long long mid = lo + (hi - lo) / 2;
      if (false_alarm(1.0 + eps_step * static_cast<double>(mid), samples) <= fa_cap) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const double eps = 1.0 + eps_step * static_cast<double>(lo);
    if (false_alarm(eps, samples) <= fa_cap && detection(eps, samples, snr) >= det_floor) {
      return theta;
    }
  }
  return std::nullopt;
}

}  // namespace oracle
