#pragma once

// Synthetic pseudorange and Doppler observables and free-space link budgets.

#include <cmath>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/orbit.hpp"
#include "inac/rng.hpp"

namespace inac {

struct PseudorangeObs {
  int sat_id = 0;
  double pseudorange_m = 0.0;
  double sigma_m = 0.0;
  UtcTime epoch;
};

struct DopplerObs {
  int sat_id = 0;
  double doppler_hz = 0.0;
  double carrier_hz = constants::kL1CarrierHz;
  double sigma_hz = 0.0;
};

struct LinkBudget {
  double fspl_db = 0.0;
  double received_snr_db = 0.0;
  double distance_m = 0.0;
  double frequency_hz = 0.0;
};

/// Geometric range plus receiver clock bias (metres) plus N(0, sigma^2).
inline PseudorangeObs synth_pseudorange(int sat_id, const Vec3& sat_pos, const Vec3& user_truth,
                                        double clock_bias_m, double sigma_m, Rng& rng,
                                        UtcTime epoch = {}) {
  if (sigma_m < 0.0) throw Error(Errc::kInvalidArgument, "negative pseudorange sigma");
  double rho = (sat_pos - user_truth).norm() + clock_bias_m;
  if (sigma_m > 0.0) rho += sigma_m * rng.normal();
  return {sat_id, rho, sigma_m, epoch};
}

/// Range-rate Doppler -(v_rel . u)/c * f_c for a user at rest in the state's
/// frame, u pointing user -> satellite, plus an optional receiver frequency
/// offset and N(0, sigma^2) noise.
inline DopplerObs synth_doppler(int sat_id, const StateVector& sat_state, const Vec3& user_pos,
                                double carrier_hz, double sigma_hz, Rng& rng,
                                double receiver_offset_hz = 0.0) {
  if (!(carrier_hz > 0.0)) throw Error(Errc::kNonPositiveInput, "carrier frequency must be positive");
  if (sigma_hz < 0.0) throw Error(Errc::kInvalidArgument, "negative Doppler sigma");
  const Vec3 los = sat_state.position - user_pos;
  const double range = los.norm();
  if (range < 1.0) throw Error(Errc::kCoincidentPoints, "satellite and user closer than 1 m");
  double shift = -sat_state.velocity.dot(los / range) / constants::kSpeedOfLight * carrier_hz +
                 receiver_offset_hz;
  if (sigma_hz > 0.0) shift += sigma_hz * rng.normal();
  return {sat_id, shift, carrier_hz, sigma_hz};
}

/// Free-space path loss 20 log10(4 pi d f / c) in dB.
inline double fspl_db(double distance_m, double frequency_hz) {
  if (!(distance_m > 0.0) || !(frequency_hz > 0.0)) {
    throw Error(Errc::kNonPositiveInput, "distance and frequency must be positive");
  }
  return 20.0 * std::log10(4.0 * constants::kPi * distance_m * frequency_hz / constants::kSpeedOfLight);
}

inline double received_snr_db(double eirp_dbw, double rx_gain_db, double distance_m,
                              double frequency_hz, double noise_power_dbw) {
  return eirp_dbw + rx_gain_db - fspl_db(distance_m, frequency_hz) - noise_power_dbw;
}

inline LinkBudget link_budget(double eirp_dbw, double rx_gain_db, double distance_m,
                              double frequency_hz, double noise_power_dbw) {
  const double loss = fspl_db(distance_m, frequency_hz);
  return {loss, eirp_dbw + rx_gain_db - loss - noise_power_dbw, distance_m, frequency_hz};
}

inline double watts_to_dbw(double watts) {
  if (!(watts > 0.0)) throw Error(Errc::kNonPositiveInput, "power must be positive");
  return 10.0 * std::log10(watts);
}

/// Thermal noise power kTB in watts.
inline double thermal_noise_w(double bandwidth_hz, double temperature_k = 290.0) {
  return constants::kBoltzmann * temperature_k * bandwidth_hz;
}

}  // namespace inac
