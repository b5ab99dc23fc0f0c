#pragma once

// Superposition-coded navigation/communication downlink: power split, RIS
// cascaded channel, SIC rate pair and Monte Carlo ergodic rates.
//
// The reflected channel is |h_u^T Theta h_s|^2 with h_u the RIS->user vector,
// h_s the satellite->RIS vector and Theta = diag(a_n exp(j theta_n)).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "inac/error.hpp"
#include "inac/orbit.hpp"
#include "inac/parallel.hpp"
#include "inac/rng.hpp"

namespace inac {

using Complex = std::complex<double>;

/// Amplitude weights of the superposed signal; always normalized so that
/// omega_n^2 + omega_c^2 = 1.
class PowerSplit {
 public:
  PowerSplit(double omega_n, double omega_c) {
    if (!(omega_n >= 0.0) || !(omega_c >= 0.0) || !std::isfinite(omega_n) || !std::isfinite(omega_c)) {
      throw Error(Errc::kInvalidArgument, "allocation factors must be finite and non-negative");
    }
    const double norm = std::hypot(omega_n, omega_c);
    if (!(norm > 0.0)) throw Error(Errc::kInvalidArgument, "allocation factors cannot both be zero");
    omega_n_ = omega_n / norm;
    omega_c_ = omega_c / norm;
  }

  /// Split from the communication power share omega_c^2 in [0, 1].
  static PowerSplit from_comm_power(double omega_c_squared) {
    if (!(omega_c_squared >= 0.0 && omega_c_squared <= 1.0)) {
      throw Error(Errc::kInvalidArgument, "communication power share outside [0, 1]");
    }
    return PowerSplit(std::sqrt(1.0 - omega_c_squared), std::sqrt(omega_c_squared));
  }

  double omega_n() const { return omega_n_; }
  double omega_c() const { return omega_c_; }

 private:
  double omega_n_ = 1.0;
  double omega_c_ = 0.0;
};

/// NO: navigation is decoded interference-free and communication sees the
/// navigation layer as interference. CO: the mirror image.
enum class ServiceMode { kNavigationOriented, kCommunicationOriented };

/// s = omega_n s_n + omega_c s_c, elementwise.
inline std::vector<Complex> compose_inac_samples(const PowerSplit& split, std::span<const Complex> s_n,
                                                 std::span<const Complex> s_c) {
  if (s_n.size() != s_c.size()) throw Error(Errc::kLengthMismatch, "sample sequences differ in length");
  std::vector<Complex> out(s_n.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = split.omega_n() * s_n[i] + split.omega_c() * s_c[i];
  return out;
}

enum class RisMode { kPassive, kActive };

struct RisPanel {
  RisMode mode = RisMode::kPassive;
  std::vector<double> phases_rad;
  std::vector<double> amplitudes;
  Vec3 position = Vec3::Zero();

  static RisPanel passive(std::size_t n, const Vec3& position = Vec3::Zero()) {
    return {RisMode::kPassive, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), position};
  }
  static RisPanel active(std::size_t n, double amplitude, const Vec3& position = Vec3::Zero()) {
    return {RisMode::kActive, std::vector<double>(n, 0.0), std::vector<double>(n, amplitude), position};
  }

  std::size_t size() const { return phases_rad.size(); }

  void validate() const {
    if (phases_rad.empty()) throw Error(Errc::kInvalidArgument, "RIS needs at least one element");
    if (amplitudes.size() != phases_rad.size()) throw Error(Errc::kLengthMismatch, "one amplitude per RIS element");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!std::isfinite(phases_rad[i])) throw Error(Errc::kInvalidArgument, "RIS phase is not finite");
      if (!(amplitudes[i] >= 0.0)) throw Error(Errc::kInvalidArgument, "RIS amplitude is negative");
      if (mode == RisMode::kPassive && amplitudes[i] != 1.0) {
        throw Error(Errc::kInvalidArgument, "passive RIS elements must have unit amplitude");
      }
    }
  }
};

struct CascadedChannel {
  std::vector<Complex> h_u;  // RIS -> user
  std::vector<Complex> h_s;  // satellite -> RIS
  double composite_gain = 0.0;
};

/// |sum_n a_n exp(j theta_n) h_u,n h_s,n|^2
inline double cascaded_gain(std::span<const Complex> h_u, const RisPanel& panel, std::span<const Complex> h_s) {
  if (h_u.size() != h_s.size() || h_u.size() != panel.size()) {
    throw Error(Errc::kLengthMismatch, "channel vectors and RIS must have equal length");
  }
  // spelled out in reals: std::complex operator* takes the slow NaN-checking path
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < h_u.size(); ++n) {
    const double pr = h_u[n].real() * h_s[n].real() - h_u[n].imag() * h_s[n].imag();
    const double pi = h_u[n].real() * h_s[n].imag() + h_u[n].imag() * h_s[n].real();
    const double c = panel.amplitudes[n] * std::cos(panel.phases_rad[n]);
    const double s = panel.amplitudes[n] * std::sin(panel.phases_rad[n]);
    re += c * pr - s * pi;
    im += c * pi + s * pr;
  }
  return re * re + im * im;
}

inline CascadedChannel make_cascaded_channel(std::vector<Complex> h_u, const RisPanel& panel,
                                             std::vector<Complex> h_s) {
  const double gain = cascaded_gain(h_u, panel, h_s);
  return {std::move(h_u), std::move(h_s), gain};
}

/// Co-phasing: theta_n = -arg(h_u,n h_s,n), zero for vanishing products.
inline RisPanel align_phases(std::span<const Complex> h_u, std::span<const Complex> h_s, RisPanel panel) {
  if (h_u.size() != h_s.size() || h_u.size() != panel.size()) {
    throw Error(Errc::kLengthMismatch, "channel vectors and RIS must have equal length");
  }
  for (std::size_t n = 0; n < h_u.size(); ++n) {
    const Complex product = h_u[n] * h_s[n];
    panel.phases_rad[n] = product == Complex(0.0, 0.0) ? 0.0 : -std::arg(product);
  }
  return panel;
}

/// B log2(1 + gain w_own^2 / (delta gain w_other^2 + sigma^2)).
inline double sic_rate(double gain, double own_weight, double other_weight, int delta, double bandwidth_hz,
                       double noise_power_w) {
  if (!(noise_power_w > 0.0)) throw Error(Errc::kNonPositiveNoise, "noise power must be positive");
  if (!(bandwidth_hz > 0.0)) throw Error(Errc::kNonPositiveInput, "bandwidth must be positive");
  if (!(gain >= 0.0)) throw Error(Errc::kInvalidArgument, "channel gain must be non-negative");
  const double signal = gain * own_weight * own_weight;
  const double interference = delta * gain * other_weight * other_weight;
  return bandwidth_hz * std::log2(1.0 + signal / (interference + noise_power_w));
}

struct RatePair {
  double c_nav = 0.0;  // bit/s
  double c_com = 0.0;  // bit/s
};

inline RatePair capacity_pair(double gain, const PowerSplit& split, ServiceMode mode, double bandwidth_hz,
                              double noise_power_w) {
  const int nav_delta = mode == ServiceMode::kNavigationOriented ? 0 : 1;
  const int com_delta = 1 - nav_delta;
  return {sic_rate(gain, split.omega_n(), split.omega_c(), nav_delta, bandwidth_hz, noise_power_w),
          sic_rate(gain, split.omega_c(), split.omega_n(), com_delta, bandwidth_hz, noise_power_w)};
}

enum class PhaseControl {
  kAligned,  // co-phased per channel draw (perfect CSI)
  kRandom,   // uniformly random phases per draw
};

/// Satellite->RIS leg: deterministic line of sight of amplitude sat_leg_amplitude
/// on every element. RIS->user leg: Rician with factor K and mean power
/// user_leg_amplitude^2; K = +inf removes the scattered part.
struct FadingModel {
  std::size_t n_elements = 1;
  double sat_leg_amplitude = 1.0;
  double user_leg_amplitude = 1.0;
  double rician_k = 10.0;
  double ris_amplitude = 1.0;
  PhaseControl phase_control = PhaseControl::kAligned;
};

struct ErgodicRates {
  double c_nav = 0.0;
  double c_com = 0.0;
  double c_nav_half_width = 0.0;  // 1.96 sample std / sqrt(trials)
  double c_com_half_width = 0.0;
  std::size_t trials = 0;
};

/// Composite gain of one channel draw.
inline double draw_composite_gain(const FadingModel& model, Rng& rng) {
  const std::size_t n = model.n_elements;
  std::vector<Complex> h_u(n), h_s(n, Complex(model.sat_leg_amplitude, 0.0));
  const bool deterministic = std::isinf(model.rician_k);
  const double los = deterministic ? 1.0 : std::sqrt(model.rician_k / (model.rician_k + 1.0));
  const double nlos = deterministic ? 0.0 : std::sqrt(1.0 / (model.rician_k + 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    Complex h = los;
    if (!deterministic) h += nlos * rng.complex_normal();
    h_u[i] = model.user_leg_amplitude * h;
  }
  RisPanel panel = model.ris_amplitude == 1.0 ? RisPanel::passive(n) : RisPanel::active(n, model.ris_amplitude);
  if (model.phase_control == PhaseControl::kAligned) {
    panel = align_phases(h_u, h_s, std::move(panel));
  } else {
    for (double& phase : panel.phases_rad) phase = constants::kTwoPi * rng.uniform();
  }
  return cascaded_gain(h_u, panel, h_s);
}

/// Monte Carlo mean of capacity_pair over channel draws. Trial i draws from its
/// own stream seeded by trial_seed(seed, i); the reduction runs in trial order.
inline ErgodicRates ergodic_rates(const FadingModel& model, const PowerSplit& split, ServiceMode mode,
                                  double bandwidth_hz, double noise_power_w, std::size_t trials,
                                  std::uint64_t seed) {
  if (trials < 1) throw Error(Errc::kInvalidArgument, "at least one trial required");
  if (model.n_elements < 1) throw Error(Errc::kInvalidArgument, "RIS needs at least one element");
  std::vector<RatePair> per_trial(trials);
  parallel_for(trials, [&](std::size_t i) {
    Rng rng(trial_seed(seed, i));
    per_trial[i] = capacity_pair(draw_composite_gain(model, rng), split, mode, bandwidth_hz, noise_power_w);
  });
  // Welford accumulation in trial order: deterministic, and exact when every
  // trial yields the same value.
  ErgodicRates out;
  out.trials = trials;
  double m2_n = 0.0, m2_c = 0.0;
  for (std::size_t i = 0; i < trials; ++i) {
    const double k = static_cast<double>(i + 1);
    const double dn = per_trial[i].c_nav - out.c_nav;
    const double dc = per_trial[i].c_com - out.c_com;
    out.c_nav += dn / k;
    out.c_com += dc / k;
    m2_n += dn * (per_trial[i].c_nav - out.c_nav);
    m2_c += dc * (per_trial[i].c_com - out.c_com);
  }
  if (trials > 1) {
    const double count = static_cast<double>(trials);
    out.c_nav_half_width = 1.96 * std::sqrt(m2_n / (count - 1.0)) / std::sqrt(count);
    out.c_com_half_width = 1.96 * std::sqrt(m2_c / (count - 1.0)) / std::sqrt(count);
  }
  return out;
}

}  // namespace inac
