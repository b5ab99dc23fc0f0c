#pragma once

// Extended line-of-sight ranging through reconfigurable surfaces: path
// geometry, synchronization-error observables, anchor-based positioning and
// the distance sweeps for the satellite-RIS and indoor studies.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/geometry.hpp"
#include "inac/inac_link.hpp"
#include "inac/observation.hpp"
#include "inac/parallel.hpp"
#include "inac/pnt.hpp"
#include "inac/rng.hpp"

namespace inac {

struct ElosObservation {
  int anchor_id = 0;
  /// Measured path: known feed leg (satellite -> RIS, zero for indoor anchors)
  /// plus RIS -> user, plus synchronization and ranging errors.
  double total_path_m = 0.0;
  double sigma_m = 0.0;
  /// Synchronization contribution that was applied (diagnostic).
  double sync_bias_m = 0.0;
  /// Known portion of the path that precedes the RIS.
  double feed_path_m = 0.0;
};

enum class SyncErrorModel {
  kGaussian,      // independent N(0, (c tau)^2) per observation
  kConstantBias,  // the same c tau on every observation
};

struct IndoorScenario {
  std::vector<Vec3> ris_anchors;  // local frame, m
  Vec3 user_truth = Vec3::Zero();
  double sync_error_s = 10e-9;
  double range_sigma_m = 0.0;
};

inline constexpr double kCoincidenceThresholdM = 1e-6;

/// |sat - ris| + |ris - user|
inline double elos_path_length(const Vec3& sat, const Vec3& ris, const Vec3& user) {
  const double feed = (sat - ris).norm();
  const double reflect = (ris - user).norm();
  if (feed < kCoincidenceThresholdM || reflect < kCoincidenceThresholdM ||
      (sat - user).norm() < kCoincidenceThresholdM) {
    throw Error(Errc::kCoincidentPoints, "ELoS path needs three distinct points");
  }
  return feed + reflect;
}

/// One observation per RIS. `feed_paths_m` is either empty (indoor anchors) or
/// holds the known satellite -> RIS length of each RIS.
inline std::vector<ElosObservation> synth_elos_obs(std::span<const Vec3> ris_positions, const Vec3& user,
                                                   std::span<const double> feed_paths_m, double sync_error_s,
                                                   double sigma_m, SyncErrorModel model, Rng& rng) {
  if (sigma_m < 0.0 || sync_error_s < 0.0) throw Error(Errc::kInvalidArgument, "negative error magnitude");
  if (!feed_paths_m.empty() && feed_paths_m.size() != ris_positions.size()) {
    throw Error(Errc::kLengthMismatch, "one feed length per RIS");
  }
  const double sync_std_m = constants::kSpeedOfLight * sync_error_s;
  std::vector<ElosObservation> out;
  out.reserve(ris_positions.size());
  for (std::size_t i = 0; i < ris_positions.size(); ++i) {
    const double reflect = (ris_positions[i] - user).norm();
    if (reflect < kCoincidenceThresholdM) throw Error(Errc::kCoincidentPoints, "user coincides with a RIS");
    ElosObservation o;
    o.anchor_id = static_cast<int>(i);
    o.feed_path_m = feed_paths_m.empty() ? 0.0 : feed_paths_m[i];
    o.sigma_m = sigma_m;
    if (sync_std_m > 0.0) {
      o.sync_bias_m = model == SyncErrorModel::kGaussian ? sync_std_m * rng.normal() : sync_std_m;
    }
    o.total_path_m = o.feed_path_m + reflect + o.sync_bias_m;
    if (sigma_m > 0.0) o.total_path_m += sigma_m * rng.normal();
    out.push_back(o);
  }
  return out;
}

/// Satellite-fed variant: feed legs are |sat - ris_i|.
inline std::vector<ElosObservation> synth_elos_obs(const Vec3& sat, std::span<const Vec3> ris_positions,
                                                   const Vec3& user, double sync_error_s, double sigma_m,
                                                   SyncErrorModel model, Rng& rng) {
  std::vector<double> feeds;
  feeds.reserve(ris_positions.size());
  for (const Vec3& r : ris_positions) feeds.push_back(elos_path_length(sat, r, user) - (r - user).norm());
  return synth_elos_obs(ris_positions, user, feeds, sync_error_s, sigma_m, model, rng);
}

struct IndoorSolveOptions {
  LsOptions ls;
  /// Estimate a common range bias; by default only when at least 5 observations exist.
  std::optional<bool> estimate_bias;
  /// Initial position; the anchor centroid when unset.
  std::optional<Vec3> initial;
  /// Known user height (z). When set the solve is horizontal only (2D mode).
  std::optional<double> fixed_height;
};

/// Gauss-Newton positioning with each RIS as a ranging anchor at a known position.
/// 3D mode needs 4 anchors, 2D mode (known height) needs 3; a common bias
/// costs one more.
/// DOPs are reported in the anchors' frame (x, y, z read as east, north, up).
inline PvtSolution solve_indoor(std::span<const ElosObservation> obs, std::span<const Vec3> anchors,
                                const IndoorSolveOptions& options = {}) {
  if (obs.size() != anchors.size()) throw Error(Errc::kLengthMismatch, "one anchor per observation");
  const bool planar = options.fixed_height.has_value();
  const std::size_t min_anchors = planar ? 3 : 4;
  if (obs.size() < min_anchors) {
    throw Error(Errc::kInsufficientAnchors, planar ? "2D positioning needs at least 3 anchors"
                                                   : "3D positioning needs at least 4 anchors");
  }
  const bool with_bias = options.estimate_bias.value_or(obs.size() >= min_anchors + 1);
  if (with_bias && obs.size() < min_anchors + 1) {
    throw Error(Errc::kInsufficientAnchors, "bias estimation needs one anchor more than the position solve");
  }

  std::vector<double> ranges, sigmas;
  for (const auto& o : obs) {
    ranges.push_back(o.total_path_m - o.feed_path_m);
    sigmas.push_back(o.sigma_m);
  }
  Vec3 start = Vec3::Zero();
  if (options.initial) {
    start = *options.initial;
  } else {
    for (const Vec3& a : anchors) start += a;
    start /= static_cast<double>(anchors.size());
  }
  if (planar) start.z() = *options.fixed_height;
  Eigen::Vector4d init;
  init << start, 0.0;
  const detail::EstimatedComponents estimated{true, true, !planar, with_bias};
  const detail::RangeFit fit = detail::fit_ranges(anchors, ranges, sigmas, init, estimated, options.ls);

  PvtSolution s;
  s.position_ecef = fit.state.head<3>();
  s.clock_bias_m = fit.state(3);
  s.iterations = fit.iterations;
  s.converged = fit.converged;
  s.residual_rms = fit.residual_rms;
  s.covariance = fit.covariance;
  s.dops = dop_from_los(fit.los, estimated);
  return s;
}

// ---------------------------------------------------------------------------
// Satellite-RIS distance sweep

struct LinkParams {
  double carrier_hz = constants::kKuCarrierHz;
  double bandwidth_hz = 250e6;
  double noise_power_w = 1e-12;
  double eirp_dbw = 30.0;
  double rx_gain_db = 30.0;
};

/// Geometry template in a local east/north/up frame at the user. The satellite
/// is seen over `epochs` successive epochs at distance D from the RIS. Epoch
/// azimuths are spread evenly over an arc and elevations alternate above and
/// below the centre; both spreads grow as max * (1 - exp(-D / spread_scale_m)),
/// so farther passes are observed with more angular diversity.
struct RisSweepTemplate {
  Vec3 user = Vec3::Zero();
  Vec3 ris = Vec3(20.0, 0.0, 10.0);
  std::size_t epochs = 8;
  double center_azimuth_deg = 180.0;
  double center_elevation_deg = 45.0;
  double max_azimuth_spread_deg = 120.0;
  double max_elevation_spread_deg = 50.0;
  double spread_scale_m = 500e3;
  double range_sigma_m = 2.0;
  double clock_bias_m = 0.0;
  std::size_t ris_elements = 64;
  double rician_k = 10.0;
};

inline std::vector<Vec3> sweep_satellite_positions(const RisSweepTemplate& t, double distance_m) {
  if (!(distance_m > 0.0)) throw Error(Errc::kNonPositiveInput, "satellite-RIS distance must be positive");
  if (t.epochs < 4) throw Error(Errc::kInsufficientSats, "template needs at least 4 epochs");
  const double growth = 1.0 - std::exp(-distance_m / t.spread_scale_m);
  const double az_spread = t.max_azimuth_spread_deg * growth;
  const double el_spread = t.max_elevation_spread_deg * growth;
  std::vector<Vec3> out;
  out.reserve(t.epochs);
  for (std::size_t k = 0; k < t.epochs; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(t.epochs - 1) - 0.5;
    const double az = t.center_azimuth_deg + frac * az_spread;
    const double el = t.center_elevation_deg + (k % 2 == 0 ? 0.5 : -0.5) * el_spread;
    out.push_back(t.ris + distance_m * enu_unit_vector(az, el));
  }
  return out;
}

struct RisSweepPoint {
  double distance_m = 0.0;
  double pdop = 0.0;
  double rms_error_m = 0.0;
  double mean_ergodic_rate = 0.0;  // communication rate, bit/s
  double mean_nav_rate = 0.0;      // bit/s
  std::size_t failures = 0;
};

inline RisSweepPoint run_sat_ris_distance_point(const RisSweepTemplate& t, double distance_m,
                                                const PowerSplit& split, ServiceMode mode,
                                                const LinkParams& link, std::size_t trials,
                                                std::uint64_t seed) {
  if (trials < 1) throw Error(Errc::kInvalidArgument, "at least one trial required");
  const std::vector<Vec3> sats = sweep_satellite_positions(t, distance_m);
  RisSweepPoint point;
  point.distance_m = distance_m;

  std::vector<Vec3> los;
  for (const Vec3& s : sats) los.push_back((s - t.user).normalized());
  point.pdop = dop_from_los(los).pdop;

  std::vector<double> sq_error(trials, 0.0);
  std::vector<char> failed(trials, 0);
  parallel_for(trials, [&](std::size_t i) {
    Rng rng(trial_seed(seed, i));
    std::vector<PseudorangeObs> obs;
    for (std::size_t k = 0; k < sats.size(); ++k) {
      obs.push_back(synth_pseudorange(static_cast<int>(k), sats[k], t.user, t.clock_bias_m, t.range_sigma_m, rng));
    }
    try {
      std::vector<double> ranges, sigmas;
      for (const auto& o : obs) {
        ranges.push_back(o.pseudorange_m);
        sigmas.push_back(o.sigma_m);
      }
      Eigen::Vector4d init;
      init << t.ris, 0.0;
      const auto fit = detail::fit_ranges(sats, ranges, sigmas, init, detail::kPositionAndBias, LsOptions{});
      if (!fit.converged) {
        failed[i] = 1;
        return;
      }
      sq_error[i] = (fit.state.head<3>() - t.user).squaredNorm();
    } catch (const Error&) {
      failed[i] = 1;
    }
  });
  double sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    if (failed[i]) {
      ++point.failures;
    } else {
      sum += sq_error[i];
      ++ok;
    }
  }
  point.rms_error_m = ok > 0 ? std::sqrt(sum / static_cast<double>(ok)) : std::numeric_limits<double>::quiet_NaN();

  // Rate along the extended path of the centre epoch, free-space loss only.
  const Vec3 centre = t.ris + distance_m * enu_unit_vector(t.center_azimuth_deg, t.center_elevation_deg);
  const double path = elos_path_length(centre, t.ris, t.user);
  const double path_gain_db = link.eirp_dbw + link.rx_gain_db - fspl_db(path, link.carrier_hz);
  FadingModel model;
  model.n_elements = t.ris_elements;
  model.sat_leg_amplitude = std::pow(10.0, path_gain_db / 20.0);
  model.rician_k = t.rician_k;
  const ErgodicRates rates = ergodic_rates(model, split, mode, link.bandwidth_hz, link.noise_power_w, trials, seed);
  point.mean_ergodic_rate = rates.c_com;
  point.mean_nav_rate = rates.c_nav;
  return point;
}

/// Per distance: PDoP of the template geometry, Monte Carlo positioning RMS and
/// mean ergodic rate over the extended path. Every distance reuses the same
/// trial streams, so differences between points are not sampling noise.
inline std::vector<RisSweepPoint> run_sat_ris_distance_sweep(const RisSweepTemplate& t,
                                                             std::span<const double> distances_m,
                                                             const PowerSplit& split, ServiceMode mode,
                                                             const LinkParams& link, std::size_t trials,
                                                             std::uint64_t seed) {
  for (std::size_t i = 1; i < distances_m.size(); ++i) {
    if (!(distances_m[i] > distances_m[i - 1])) throw Error(Errc::kInvalidArgument, "distances must be ascending");
  }
  std::vector<RisSweepPoint> out;
  for (double d : distances_m) out.push_back(run_sat_ris_distance_point(t, d, split, mode, link, trials, seed));
  return out;
}

// ---------------------------------------------------------------------------
// Indoor sweep

/// Room template: RIS anchors fixed on and near the x = 0 wall; the user stands
/// at (offset, user_y, user_z) and the sweep moves the offset away from the wall.
struct IndoorTemplate {
  std::vector<Vec3> anchors = {Vec3(0.0, -4.0, 3.0), Vec3(0.0, 4.0, 3.0), Vec3(0.0, 0.0, 0.2),
                               Vec3(3.0, 0.0, 3.0)};
  double user_y = 0.0;
  double user_z = 1.2;
  double sync_error_s = 10e-9;
  double range_sigma_m = 0.0;
  SyncErrorModel sync_model = SyncErrorModel::kGaussian;
  Vec3 initial_guess = Vec3(5.0, 0.0, 1.5);
};

struct IndoorSweepPoint {
  double offset_m = 0.0;
  double mean_ris_user_distance_m = 0.0;
  double pdop = 0.0;
  double rms_error_m = 0.0;
  std::size_t failures = 0;
};

inline IndoorSweepPoint run_indoor_point(const IndoorTemplate& t, double offset_m, std::size_t trials,
                                         std::uint64_t seed) {
  if (trials < 1) throw Error(Errc::kInvalidArgument, "at least one trial required");
  const Vec3 user(offset_m, t.user_y, t.user_z);
  IndoorSweepPoint p;
  p.offset_m = offset_m;
  std::vector<Vec3> los;
  for (const Vec3& a : t.anchors) {
    p.mean_ris_user_distance_m += (a - user).norm();
    los.push_back((a - user).normalized());
  }
  p.mean_ris_user_distance_m /= static_cast<double>(t.anchors.size());
  p.pdop = dop_from_los(los).pdop;

  IndoorSolveOptions options;
  options.initial = t.initial_guess;
  std::vector<double> sq_error(trials, 0.0);
  std::vector<char> failed(trials, 0);
  parallel_for(trials, [&](std::size_t i) {
    Rng rng(trial_seed(seed, i));
    try {
      const auto obs = synth_elos_obs(t.anchors, user, {}, t.sync_error_s, t.range_sigma_m, t.sync_model, rng);
      const PvtSolution s = solve_indoor(obs, t.anchors, options);
      if (!s.converged) {
        failed[i] = 1;
        return;
      }
      sq_error[i] = (s.position_ecef - user).squaredNorm();
    } catch (const Error&) {
      failed[i] = 1;
    }
  });
  double sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    if (failed[i]) {
      ++p.failures;
    } else {
      sum += sq_error[i];
      ++ok;
    }
  }
  p.rms_error_m = ok > 0 ? std::sqrt(sum / static_cast<double>(ok)) : std::numeric_limits<double>::quiet_NaN();
  return p;
}

inline std::vector<IndoorSweepPoint> run_indoor_distance_sweep(const IndoorTemplate& t,
                                                               std::span<const double> offsets_m,
                                                               std::size_t trials, std::uint64_t seed) {
  std::vector<IndoorSweepPoint> out;
  for (double d : offsets_m) out.push_back(run_indoor_point(t, d, trials, seed));
  return out;
}

}  // namespace inac
