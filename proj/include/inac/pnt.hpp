#pragma once

// Position/velocity/time estimation: Gauss-Newton least squares on pseudoranges,
// Doppler least squares for a static receiver, and a constant-velocity EKF.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "inac/error.hpp"
#include "inac/geometry.hpp"
#include "inac/observation.hpp"
#include "inac/orbit.hpp"

namespace inac {

struct PvtSolution {
  Vec3 position_ecef = Vec3::Zero();
  double clock_bias_m = 0.0;
  std::optional<Vec3> velocity_ecef;
  /// Receiver frequency offset, set by the Doppler solver.
  std::optional<double> freq_offset_hz;
  DopFamily dops;
  int iterations = 0;
  double residual_rms = 0.0;
  bool converged = false;
  /// Position (3) and clock term (1). Pseudorange solvers: m^2. Doppler solver:
  /// the clock term is the frequency offset in Hz^2.
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
};

enum class Weighting {
  kUniform,          // every observation weighted equally
  kInverseVariance,  // W = diag(1 / sigma_i^2)
};

struct LsOptions {
  double tolerance_m = 1e-4;
  int max_iterations = 20;
  Weighting weighting = Weighting::kUniform;
};

namespace detail {

struct RangeFit {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();  // position, bias
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  std::vector<Vec3> los;  // unit vectors position -> anchor at the solution
  int iterations = 0;
  bool converged = false;
  double residual_rms = 0.0;
};

inline std::vector<double> observation_weights(std::span<const double> sigmas, Weighting weighting) {
  std::vector<double> w(sigmas.size(), 1.0);
  if (weighting == Weighting::kInverseVariance) {
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      if (!(sigmas[i] > 0.0)) throw Error(Errc::kInvalidArgument, "inverse-variance weighting needs sigma > 0");
      w[i] = 1.0 / (sigmas[i] * sigmas[i]);
    }
  }
  return w;
}

/// Covariance of the estimate: (G^T W G)^-1 for inverse-variance weights, and
/// mean(sigma^2) (G^T G)^-1 for uniform weights. The two agree when all sigmas are equal.
inline Eigen::MatrixXd estimate_covariance(const Eigen::MatrixXd& g, std::span<const double> sigmas,
                                           Weighting weighting) {
  const Eigen::Index n = g.rows();
  if (weighting == Weighting::kInverseVariance) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = 1.0 / (sigmas[i] * sigmas[i]);
    return (g.transpose() * w.asDiagonal() * g).inverse();
  }
  double mean_var = 0.0;
  for (double s : sigmas) mean_var += s * s;
  mean_var /= static_cast<double>(sigmas.size());
  return mean_var * (g.transpose() * g).inverse();
}

inline void check_conditioning(const Eigen::MatrixXd& g) {
  if (symmetric_condition_number(g.transpose() * g) > kSingularConditionNumber) {
    throw Error(Errc::kSingularGeometry, "normal matrix condition number exceeds 1e12");
  }
}

/// Which of (x, y, z, bias) a range fit estimates; the others stay at their
/// initial values.
using EstimatedComponents = std::array<bool, 4>;
inline constexpr EstimatedComponents kPositionAndBias{true, true, true, true};
inline constexpr EstimatedComponents kPositionOnly{true, true, true, false};

/// Gauss-Newton fit of position (and optionally a common range bias) to ranges
/// from known anchors: range_i = |anchor_i - x| + bias. A step that increases
/// the weighted cost is halved until it does not, which damps the first
/// iterations from a distant initial guess.
inline RangeFit fit_ranges(std::span<const Vec3> anchors, std::span<const double> ranges,
                           std::span<const double> sigmas, const Eigen::Vector4d& initial,
                           const EstimatedComponents& estimated, const LsOptions& options) {
  const auto n = static_cast<Eigen::Index>(anchors.size());
  std::vector<int> columns;
  for (int k = 0; k < 4; ++k) {
    if (estimated[k]) columns.push_back(k);
  }
  const auto p = static_cast<Eigen::Index>(columns.size());
  const std::vector<double> w = observation_weights(sigmas, options.weighting);

  Eigen::Vector4d x = initial;
  if (!estimated[3]) x(3) = 0.0;
  Eigen::MatrixXd g(n, p);
  Eigen::VectorXd resid(n);
  std::vector<Vec3> los(anchors.size());

  const auto linearize = [&](const Eigen::Vector4d& at, bool fill_design) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 d = anchors[i] - at.head<3>();
      const double r = d.norm();
      const Vec3 u = r > 0.0 ? Vec3(d / r) : Vec3::Zero();
      resid(i) = ranges[i] - (r + at(3));
      cost += w[i] * resid(i) * resid(i);
      if (fill_design) {
        los[i] = u;
        const Eigen::Vector4d full(-u.x(), -u.y(), -u.z(), 1.0);
        for (Eigen::Index j = 0; j < p; ++j) g(i, j) = full(columns[j]);
      }
    }
    return cost;
  };

  RangeFit fit;
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const double cost = linearize(x, true);
    check_conditioning(g);
    const Eigen::MatrixXd normal = g.transpose() * wv.asDiagonal() * g;
    const Eigen::VectorXd rhs = g.transpose() * wv.asDiagonal() * resid;
    // Full Newton matrix adds the range curvature -w e (I - u u^T) / r; with
    // residuals comparable to the ranges plain Gauss-Newton only creeps.
    Eigen::MatrixXd newton = normal;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = (anchors[i] - x.head<3>()).norm();
      if (!(r > 0.0)) continue;
      const Eigen::Matrix3d curv = (Eigen::Matrix3d::Identity() - los[i] * los[i].transpose()) / r;
      for (Eigen::Index a = 0; a < p; ++a) {
        if (columns[a] > 2) continue;
        for (Eigen::Index b = 0; b < p; ++b) {
          if (columns[b] > 2) continue;
          newton(a, b) -= w[i] * resid(i) * curv(columns[a], columns[b]);
        }
      }
    }
    const Eigen::LLT<Eigen::MatrixXd> newton_llt(newton);
    const Eigen::VectorXd dx =
        newton_llt.info() == Eigen::Success ? Eigen::VectorXd(newton_llt.solve(rhs)) : Eigen::VectorXd(normal.ldlt().solve(rhs));
    Eigen::Vector4d step = Eigen::Vector4d::Zero();
    for (Eigen::Index j = 0; j < p; ++j) step(columns[j]) = dx(j);
    for (int halvings = 0; halvings < 30; ++halvings) {
      if (linearize(x + step, false) <= cost) break;
      step *= 0.5;
    }
    x += step;
    fit.iterations = iter;
    if (dx.norm() < options.tolerance_m) {
      fit.converged = true;
      break;
    }
  }

  linearize(x, true);
  fit.state = x;
  fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  fit.los = los;
  check_conditioning(g);
  const Eigen::MatrixXd cov = estimate_covariance(g, sigmas, options.weighting);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) fit.covariance(columns[a], columns[b]) = cov(a, b);
  return fit;
}

inline DopFamily dop_at_ecef(const Vec3& position, std::span<const Vec3> los_ecef) {
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  if (position.norm() >= 1.0) {
    const GeodeticPosition g = ecef_to_geodetic(position);
    rot = ecef_to_enu_rotation(g.latitude_deg, g.longitude_deg);
  }
  std::vector<Vec3> enu;
  enu.reserve(los_ecef.size());
  for (const Vec3& u : los_ecef) enu.push_back(rot * u);
  return dop_from_los(enu);
}

}  // namespace detail

/// Weighted Gauss-Newton pseudorange solution for position and clock bias.
/// A run that exhausts max_iterations is returned with converged = false.
inline PvtSolution solve_ls(std::span<const PseudorangeObs> obs, std::span<const Vec3> sat_positions,
                            const Vec3& initial_position = Vec3::Zero(), double initial_bias_m = 0.0,
                            const LsOptions& options = {}) {
  if (obs.size() != sat_positions.size()) throw Error(Errc::kLengthMismatch, "one satellite position per observation");
  if (obs.size() < 4) throw Error(Errc::kInsufficientSats, "pseudorange solution needs at least 4 satellites");
  std::vector<double> ranges, sigmas;
  ranges.reserve(obs.size());
  sigmas.reserve(obs.size());
  for (const auto& o : obs) {
    ranges.push_back(o.pseudorange_m);
    sigmas.push_back(o.sigma_m);
  }
  Eigen::Vector4d init;
  init << initial_position, initial_bias_m;
  const detail::RangeFit fit = detail::fit_ranges(sat_positions, ranges, sigmas, init, detail::kPositionAndBias, options);

  PvtSolution s;
  s.position_ecef = fit.state.head<3>();
  s.clock_bias_m = fit.state(3);
  s.iterations = fit.iterations;
  s.converged = fit.converged;
  s.residual_rms = fit.residual_rms;
  s.covariance = fit.covariance;
  s.dops = detail::dop_at_ecef(s.position_ecef, fit.los);
  return s;
}

struct DopplerLsOptions {
  double tolerance_m = 1e-4;
  int max_iterations = 20;
  Weighting weighting = Weighting::kUniform;
  /// When set, the receiver frequency offset is taken as known instead of estimated.
  std::optional<double> known_freq_offset_hz;
};

/// Static-receiver Doppler positioning: Gauss-Newton on
/// f_i = -(f_c / c) v_i . u_i(x) + b over position x and frequency offset b.
/// Satellite states must be ECEF.
inline PvtSolution solve_doppler_ls(std::span<const DopplerObs> obs, std::span<const StateVector> sat_states,
                                    const Vec3& initial_position, const DopplerLsOptions& options = {}) {
  if (obs.size() != sat_states.size()) throw Error(Errc::kLengthMismatch, "one satellite state per observation");
  const bool estimate_offset = !options.known_freq_offset_hz.has_value();
  const Eigen::Index p = estimate_offset ? 4 : 3;
  if (obs.size() < 4) throw Error(Errc::kInsufficientSats, "Doppler solution needs at least 4 observations");
  for (const auto& s : sat_states) {
    if (s.frame != Frame::kEcef) throw Error(Errc::kFrameMismatch, "Doppler solver expects ECEF satellite states");
  }
  const auto n = static_cast<Eigen::Index>(obs.size());
  std::vector<double> sigmas;
  for (const auto& o : obs) sigmas.push_back(o.sigma_hz);
  const std::vector<double> w = detail::observation_weights(sigmas, options.weighting);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);

  Vec3 x = initial_position;
  double offset = options.known_freq_offset_hz.value_or(0.0);
  Eigen::MatrixXd g(n, p);
  Eigen::VectorXd resid(n);
  std::vector<Vec3> los(obs.size());

  const auto linearize = [&](const Vec3& at, double b, bool fill_design) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 d = sat_states[i].position - at;
      const double r = d.norm();
      if (r < 1.0) throw Error(Errc::kCoincidentPoints, "receiver estimate reached a satellite position");
      const Vec3 u = d / r;
      const Vec3& v = sat_states[i].velocity;
      const double scale = obs[i].carrier_hz / constants::kSpeedOfLight;
      resid(i) = obs[i].doppler_hz - (-scale * v.dot(u) + b);
      cost += w[i] * resid(i) * resid(i);
      if (fill_design) {
        los[i] = u;
        g.row(i).head<3>() = (scale / r) * (v - v.dot(u) * u).transpose();
        if (estimate_offset) g(i, 3) = 1.0;
      }
    }
    return cost;
  };
  const auto check_scaled = [&] {
    Eigen::MatrixXd scaled = g;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double norm = scaled.col(j).norm();
      if (norm > 0.0) scaled.col(j) /= norm;
    }
    detail::check_conditioning(scaled);
  };

  PvtSolution s;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const double cost = linearize(x, offset, true);
    check_scaled();
    const Eigen::VectorXd dx =
        (g.transpose() * wv.asDiagonal() * g).ldlt().solve(g.transpose() * wv.asDiagonal() * resid);
    Vec3 step = dx.head<3>();
    double offset_step = estimate_offset ? dx(3) : 0.0;
    for (int halvings = 0; halvings < 30 && step.norm() > 1.0; ++halvings) {
      if (linearize(x + step, offset + offset_step, false) <= cost) break;
      step *= 0.5;
      offset_step *= 0.5;
    }
    x += step;
    offset += offset_step;
    s.iterations = iter;
    if (dx.head<3>().norm() < options.tolerance_m) {
      s.converged = true;
      break;
    }
  }
  linearize(x, offset, true);
  check_scaled();
  s.position_ecef = x;
  s.freq_offset_hz = offset;
  s.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  s.covariance.topLeftCorner(p, p) = detail::estimate_covariance(g, sigmas, options.weighting);
  s.dops = detail::dop_at_ecef(x, los);
  return s;
}

// ---------------------------------------------------------------------------
// Constant-velocity EKF. State: position (3), velocity (3), clock bias (m),
// clock drift (m/s).

using EkfVector = Eigen::Matrix<double, 8, 1>;
using EkfMatrix = Eigen::Matrix<double, 8, 8>;

struct EkfConfig {
  double q_pos = 0.0;      // m^2/s, white position noise
  double q_vel = 0.1;      // m^2/s^3, white acceleration PSD per axis
  double clock_sf = 9e-3;  // m^2/s, white frequency noise (h0/2 c^2, TCXO h0 = 2e-19)
  double clock_sg = 3.55e-2;  // m^2/s^3, random-walk frequency noise (2 pi^2 h-2 c^2, h-2 = 2e-20)
  double gate = 25.0;      // reject when innovation^2 / S exceeds this
  double min_measurement_var = 1e-8;  // m^2, floor for sigma^2 = 0 observations
};

struct EkfState {
  UtcTime epoch;
  EkfVector x = EkfVector::Zero();
  EkfMatrix covariance = EkfMatrix::Identity();

  static EkfState from_solution(const PvtSolution& s, UtcTime epoch, double velocity_sigma_mps,
                                double drift_sigma_mps) {
    EkfState st;
    st.epoch = epoch;
    st.x.segment<3>(0) = s.position_ecef;
    st.x.segment<3>(3) = s.velocity_ecef.value_or(Vec3::Zero());
    st.x(6) = s.clock_bias_m;
    st.covariance.setZero();
    const int map[4] = {0, 1, 2, 6};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) st.covariance(map[i], map[j]) = s.covariance(i, j);
    st.covariance.block<3, 3>(3, 3) = Eigen::Matrix3d::Identity() * velocity_sigma_mps * velocity_sigma_mps;
    st.covariance(7, 7) = drift_sigma_mps * drift_sigma_mps;
    return st;
  }

  PvtSolution to_solution() const {
    PvtSolution s;
    s.position_ecef = x.segment<3>(0);
    s.velocity_ecef = Vec3(x.segment<3>(3));
    s.clock_bias_m = x(6);
    s.converged = true;
    const int map[4] = {0, 1, 2, 6};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) s.covariance(i, j) = covariance(map[i], map[j]);
    return s;
  }
};

struct EkfStepResult {
  EkfState state;
  PvtSolution solution;
  std::vector<int> accepted;  // sat ids
  std::vector<int> rejected;  // sat ids failing the innovation gate
};

inline EkfMatrix ekf_transition(double dt) {
  EkfMatrix f = EkfMatrix::Identity();
  f.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity() * dt;
  f(6, 7) = dt;
  return f;
}

inline EkfMatrix ekf_process_noise(const EkfConfig& c, double dt) {
  EkfMatrix q = EkfMatrix::Zero();
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  for (int k = 0; k < 3; ++k) {
    q(k, k) = c.q_pos * dt + c.q_vel * dt3 / 3.0;
    q(k, k + 3) = q(k + 3, k) = c.q_vel * dt2 / 2.0;
    q(k + 3, k + 3) = c.q_vel * dt;
  }
  q(6, 6) = c.clock_sf * dt + c.clock_sg * dt3 / 3.0;
  q(6, 7) = q(7, 6) = c.clock_sg * dt2 / 2.0;
  q(7, 7) = c.clock_sg * dt;
  return q;
}

/// One predict/update cycle. Pseudoranges are applied sequentially with a
/// Joseph-form covariance update; a measurement whose normalized innovation
/// squared exceeds the gate is rejected and leaves the state untouched.
inline EkfStepResult ekf_step(const EkfState& prior, const EkfConfig& config, UtcTime t,
                              std::span<const PseudorangeObs> obs, std::span<const Vec3> sat_positions) {
  if (obs.size() != sat_positions.size()) throw Error(Errc::kLengthMismatch, "one satellite position per observation");
  const double dt = t - prior.epoch;
  if (!(dt > 0.0)) throw Error(Errc::kInvalidArgument, "EKF step needs a positive time increment");

  const EkfMatrix f = ekf_transition(dt);
  EkfStepResult out;
  EkfState& st = out.state;
  st.epoch = t;
  st.x = f * prior.x;
  st.covariance = f * prior.covariance * f.transpose() + ekf_process_noise(config, dt);

  std::vector<Vec3> accepted_los;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const Vec3 d = sat_positions[i] - st.x.segment<3>(0);
    const double r = d.norm();
    const Vec3 u = d / r;
    Eigen::Matrix<double, 1, 8> h = Eigen::Matrix<double, 1, 8>::Zero();
    h.segment<3>(0) = -u.transpose();
    h(6) = 1.0;
    const double var = std::max(obs[i].sigma_m * obs[i].sigma_m, config.min_measurement_var);
    const double innovation = obs[i].pseudorange_m - (r + st.x(6));
    const double s = (h * st.covariance * h.transpose())(0, 0) + var;
    if (innovation * innovation / s > config.gate) {
      out.rejected.push_back(obs[i].sat_id);
      continue;
    }
    const EkfVector k = st.covariance * h.transpose() / s;
    st.x += k * innovation;
    const EkfMatrix ikh = EkfMatrix::Identity() - k * h;
    st.covariance = ikh * st.covariance * ikh.transpose() + k * var * k.transpose();
    st.covariance = 0.5 * (st.covariance + st.covariance.transpose()).eval();
    out.accepted.push_back(obs[i].sat_id);
    accepted_los.push_back(u);
  }

  out.solution = st.to_solution();
  if (accepted_los.size() >= 4) {
    try {
      out.solution.dops = detail::dop_at_ecef(out.solution.position_ecef, accepted_los);
    } catch (const Error&) {
      // degenerate accepted set: DOPs left at zero
    }
  }
  return out;
}

}  // namespace inac
