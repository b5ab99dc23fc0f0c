#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <limits>
#include <span>
#include <vector>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/orbit.hpp"

namespace inac {

struct TopocentricView {
  int sat_id = 0;
  double azimuth_deg = 0.0;    // [0, 360), clockwise from north
  double elevation_deg = 0.0;  // [-90, 90]
  double slant_range_m = 0.0;
  double range_rate_mps = 0.0;  // positive when receding
};

struct DopFamily {
  double gdop = 0.0;
  double pdop = 0.0;
  double hdop = 0.0;
  double vdop = 0.0;
  double tdop = 0.0;
};

/// Rows are the local east, north and up unit vectors expressed in ECEF.
inline Eigen::Matrix3d ecef_to_enu_rotation(double latitude_deg, double longitude_deg) {
  const double lat = latitude_deg * constants::kDegToRad;
  const double lon = longitude_deg * constants::kDegToRad;
  const double sl = std::sin(lat), cl = std::cos(lat), so = std::sin(lon), co = std::cos(lon);
  Eigen::Matrix3d r;
  r << -so, co, 0.0,
       -sl * co, -sl * so, cl,
       cl * co, cl * so, sl;
  return r;
}

inline TopocentricView topocentric(const Vec3& user_ecef, const Vec3& sat_ecef, const Vec3& sat_vel,
                                   int sat_id = 0, const Vec3& user_vel = Vec3::Zero()) {
  const Vec3 los = sat_ecef - user_ecef;
  const double range = los.norm();
  if (range < 1.0) throw Error(Errc::kCoincidentPoints, "satellite and user closer than 1 m");
  const GeodeticPosition g = ecef_to_geodetic(user_ecef);
  const Vec3 enu = ecef_to_enu_rotation(g.latitude_deg, g.longitude_deg) * los;

  TopocentricView view;
  view.sat_id = sat_id;
  view.slant_range_m = range;
  view.elevation_deg = std::asin(std::clamp(enu.z() / range, -1.0, 1.0)) * constants::kRadToDeg;
  double az = std::atan2(enu.x(), enu.y()) * constants::kRadToDeg;
  if (az < 0.0) az += 360.0;
  if (az >= 360.0) az -= 360.0;
  view.azimuth_deg = az;
  view.range_rate_mps = (sat_vel - user_vel).dot(los / range);
  return view;
}

/// Views at or above the mask, order preserved. The mask is clamped to [0, 90].
inline std::vector<TopocentricView> visible_sats(std::span<const TopocentricView> views, double mask_deg) {
  const double mask = std::clamp(mask_deg, 0.0, 90.0);
  std::vector<TopocentricView> out;
  std::copy_if(views.begin(), views.end(), std::back_inserter(out),
               [mask](const TopocentricView& v) { return v.elevation_deg >= mask; });
  return out;
}

/// Unit line-of-sight vector (east, north, up) from azimuth/elevation.
inline Vec3 enu_unit_vector(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * constants::kDegToRad;
  const double el = elevation_deg * constants::kDegToRad;
  return {std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
}

/// Condition number (largest / smallest eigenvalue) of a symmetric PSD matrix;
/// infinite when the smallest eigenvalue is not positive.
template <class Derived>
double symmetric_condition_number(const Eigen::MatrixBase<Derived>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.derived().eval().template cast<double>(),
                                                        Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline constexpr double kSingularConditionNumber = 1e12;

/// DOP family from unit line-of-sight vectors in a local east/north/up frame.
/// Geometry rows are [-e, -n, -u, 1].
inline DopFamily dop_from_los(std::span<const Vec3> los_enu) {
  if (los_enu.size() < 4) throw Error(Errc::kInsufficientSats, "DOP needs at least 4 satellites");
  Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
  for (const Vec3& u : los_enu) {
    Eigen::Vector4d row(-u.x(), -u.y(), -u.z(), 1.0);
    normal.noalias() += row * row.transpose();
  }
  if (symmetric_condition_number(normal) > kSingularConditionNumber) {
    throw Error(Errc::kSingularGeometry, "geometry matrix is rank deficient");
  }
  const Eigen::Matrix4d q = normal.inverse();
  DopFamily d;
  d.hdop = std::sqrt(q(0, 0) + q(1, 1));
  d.vdop = std::sqrt(q(2, 2));
  d.tdop = std::sqrt(q(3, 3));
  d.pdop = std::sqrt(q(0, 0) + q(1, 1) + q(2, 2));
  d.gdop = std::sqrt(q.trace());
  return d;
}

/// DOPs when only some of (east, north, up, clock) are solved for, e.g. a
/// known height or no clock term. Components held fixed report 0.
inline DopFamily dop_from_los(std::span<const Vec3> los_enu, const std::array<bool, 4>& estimated) {
  std::vector<int> cols;
  for (int k = 0; k < 4; ++k) {
    if (estimated[static_cast<std::size_t>(k)]) cols.push_back(k);
  }
  const auto n = static_cast<Eigen::Index>(cols.size());
  if (n == 0 || los_enu.size() < cols.size()) {
    throw Error(Errc::kInsufficientSats, "DOP needs at least one line of sight per unknown");
  }
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  for (const Vec3& u : los_enu) {
    const Eigen::Vector4d full(-u.x(), -u.y(), -u.z(), 1.0);
    Eigen::VectorXd row(n);
    for (Eigen::Index j = 0; j < n; ++j) row(j) = full(cols[static_cast<std::size_t>(j)]);
    normal.noalias() += row * row.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0) || eig.eigenvalues().maxCoeff() / lo > kSingularConditionNumber) {
    throw Error(Errc::kSingularGeometry, "geometry matrix is rank deficient");
  }
  const Eigen::MatrixXd q_sub = normal.inverse();
  Eigen::Vector4d var = Eigen::Vector4d::Zero();
  for (Eigen::Index j = 0; j < n; ++j) var(cols[static_cast<std::size_t>(j)]) = q_sub(j, j);
  DopFamily d;
  d.hdop = std::sqrt(var(0) + var(1));
  d.vdop = std::sqrt(var(2));
  d.tdop = std::sqrt(var(3));
  d.pdop = std::sqrt(var(0) + var(1) + var(2));
  d.gdop = std::sqrt(var.sum());
  return d;
}

inline DopFamily dop(std::span<const TopocentricView> views) {
  std::vector<Vec3> los;
  los.reserve(views.size());
  for (const auto& v : views) los.push_back(enu_unit_vector(v.azimuth_deg, v.elevation_deg));
  return dop_from_los(los);
}

}  // namespace inac
