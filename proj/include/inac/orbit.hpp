#pragma once

// Two-body propagation of TLE mean elements and ECI/ECEF/geodetic conversions.

#include <Eigen/Dense>
#include <cmath>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/time.hpp"
#include "inac/tle.hpp"

namespace inac {

using Vec3 = Eigen::Vector3d;

enum class Frame { kEci, kEcef };

struct StateVector {
  UtcTime epoch;
  Frame frame = Frame::kEci;
  Vec3 position = Vec3::Zero();  // m
  Vec3 velocity = Vec3::Zero();  // m/s
};

struct GeodeticPosition {
  double latitude_deg = 0.0;   // [-90, 90]
  double longitude_deg = 0.0;  // [-180, 180)
  double height_m = 0.0;       // above the WGS-84 ellipsoid
};

struct PropagationOptions {
  /// Adds secular J2 drift of RAAN and argument of perigee.
  bool secular_j2 = false;
  /// Propagation is refused beyond this distance from the element epoch.
  double max_epoch_offset_s = 7.0 * constants::kSecondsPerDay;
};

/// Eccentric anomaly E with E - e sin E = M, Newton iteration from Danby's
/// starting value. The result lies within pi of M.
inline double solve_kepler(double mean_anomaly, double eccentricity) {
  if (!(eccentricity >= 0.0 && eccentricity < 1.0)) {
    throw Error(Errc::kInvalidArgument, "eccentricity outside [0, 1)");
  }
  const double reduced = std::remainder(mean_anomaly, constants::kTwoPi);  // [-pi, pi]
  const double shift = mean_anomaly - reduced;
  if (eccentricity == 0.0 || reduced == 0.0) return mean_anomaly;

  double e_anom = reduced + 0.85 * eccentricity * (reduced > 0.0 ? 1.0 : -1.0);
  for (int iter = 0; iter < 50; ++iter) {
    const double f = e_anom - eccentricity * std::sin(e_anom) - reduced;
    const double step = f / (1.0 - eccentricity * std::cos(e_anom));
    e_anom -= step;
    if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(e_anom))) {
      return e_anom + shift;
    }
  }
  const double residual = e_anom - eccentricity * std::sin(e_anom) - reduced;
  if (std::fabs(residual) < 1e-12) return e_anom + shift;
  throw Error(Errc::kNonConvergence, "Kepler iteration did not converge");
}

/// Perifocal-to-ECI rotation R3(-raan) R1(-incl) R3(-argp).
inline Eigen::Matrix3d perifocal_to_eci(double raan, double incl, double argp) {
  return (Eigen::AngleAxisd(raan, Vec3::UnitZ()) * Eigen::AngleAxisd(incl, Vec3::UnitX()) *
          Eigen::AngleAxisd(argp, Vec3::UnitZ()))
      .toRotationMatrix();
}

/// Drag-free two-body propagation of mean elements to time `t` (ECI, true-of-date
/// axes are not distinguished from the TLE's TEME frame).
inline StateVector propagate(const TwoLineElements& elements, UtcTime t,
                             const PropagationOptions& options = {}) {
  const double dt = t - elements.epoch_utc;
  if (std::fabs(dt) > options.max_epoch_offset_s) {
    throw Error(Errc::kEpochTooFar, "requested time is " + std::to_string(dt / 86'400.0) +
                                        " days from the element epoch of " + elements.name);
  }
  using constants::kDegToRad;
  const double n = elements.mean_motion_rad_s();
  const double a = elements.semi_major_axis_m();
  const double e = elements.eccentricity;
  const double incl = elements.inclination_deg * kDegToRad;
  double raan = elements.raan_deg * kDegToRad;
  double argp = elements.arg_perigee_deg * kDegToRad;

  if (options.secular_j2) {
    const double p = a * (1.0 - e * e);
    const double k = 1.5 * n * constants::kJ2 * std::pow(constants::kWgs84A / p, 2);
    const double cos_i = std::cos(incl);
    raan += -k * cos_i * dt;
    argp += 0.5 * k * (5.0 * cos_i * cos_i - 1.0) * dt;
  }

  const double mean_anomaly = elements.mean_anomaly_deg * kDegToRad + n * dt;
  const double ecc_anom = solve_kepler(mean_anomaly, e);
  const double cos_e = std::cos(ecc_anom);
  const double sin_e = std::sin(ecc_anom);
  const double b = a * std::sqrt(1.0 - e * e);
  const double e_dot = n / (1.0 - e * cos_e);

  const Vec3 r_pf(a * (cos_e - e), b * sin_e, 0.0);
  const Vec3 v_pf(-a * sin_e * e_dot, b * cos_e * e_dot, 0.0);
  const Eigen::Matrix3d rot = perifocal_to_eci(raan, incl, argp);
  return {t, Frame::kEci, rot * r_pf, rot * v_pf};
}

/// Greenwich mean sidereal time, IAU 1982 polynomial (radians in [0, 2pi)).
inline double gmst_rad(UtcTime t) {
  const double tc = t.julian_centuries();
  const double seconds = 67'310.54841 + (876'600.0 * 3600.0 + 8'640'184.812866) * tc +
                         0.093104 * tc * tc - 6.2e-6 * tc * tc * tc;
  double angle = std::fmod(seconds, constants::kSecondsPerDay) * (constants::kTwoPi / constants::kSecondsPerDay);
  if (angle < 0.0) angle += constants::kTwoPi;
  return angle;
}

inline StateVector eci_to_ecef(const StateVector& state, UtcTime t) {
  if (state.frame != Frame::kEci) throw Error(Errc::kFrameMismatch, "eci_to_ecef expects an ECI state");
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(-gmst_rad(t), Vec3::UnitZ()).toRotationMatrix();
  const Vec3 r = rot * state.position;
  const Vec3 omega(0.0, 0.0, constants::kEarthRotationRate);
  const Vec3 v = rot * state.velocity - omega.cross(r);
  return {state.epoch, Frame::kEcef, r, v};
}

inline StateVector ecef_to_eci(const StateVector& state, UtcTime t) {
  if (state.frame != Frame::kEcef) throw Error(Errc::kFrameMismatch, "ecef_to_eci expects an ECEF state");
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(gmst_rad(t), Vec3::UnitZ()).toRotationMatrix();
  const Vec3 omega(0.0, 0.0, constants::kEarthRotationRate);
  const Vec3 v = rot * (state.velocity + omega.cross(state.position));
  return {state.epoch, Frame::kEci, rot * state.position, v};
}

inline Vec3 geodetic_to_ecef(const GeodeticPosition& g) {
  using namespace constants;
  const double lat = g.latitude_deg * kDegToRad;
  const double lon = g.longitude_deg * kDegToRad;
  const double sin_lat = std::sin(lat);
  const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
  return {(n + g.height_m) * std::cos(lat) * std::cos(lon),
          (n + g.height_m) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - kWgs84E2) + g.height_m) * sin_lat};
}

/// Inverse WGS-84 mapping by Bowring's iteration on the reduced latitude.
inline GeodeticPosition ecef_to_geodetic(const Vec3& r) {
  using namespace constants;
  if (r.norm() < 1.0) throw Error(Errc::kDegenerateInput, "point within 1 m of the Earth centre");
  const double p = std::hypot(r.x(), r.y());
  const double ep2 = kWgs84E2 / (1.0 - kWgs84E2);

  double lat;
  if (p < 1e-9) {
    lat = r.z() > 0.0 ? kPi / 2.0 : -kPi / 2.0;
  } else {
    double beta = std::atan2(r.z(), (1.0 - kWgs84F) * p);
    lat = 0.0;
    for (int iter = 0; iter < 16; ++iter) {
      const double sb = std::sin(beta);
      const double cb = std::cos(beta);
      const double next = std::atan2(r.z() + ep2 * kWgs84B * sb * sb * sb,
                                     p - kWgs84E2 * kWgs84A * cb * cb * cb);
      const bool done = std::fabs(next - lat) < 1e-13;
      lat = next;
      if (done) break;
      beta = std::atan2((1.0 - kWgs84F) * std::sin(lat), std::cos(lat));
    }
  }
  const double sin_lat = std::sin(lat);
  const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sin_lat * sin_lat);
  const double h = p * std::cos(lat) + (r.z() + kWgs84E2 * n * sin_lat) * sin_lat - n;

  double lon = std::atan2(r.y(), r.x()) * kRadToDeg;
  if (lon >= 180.0) lon -= 360.0;
  return {lat * kRadToDeg, lon, h};
}

}  // namespace inac
