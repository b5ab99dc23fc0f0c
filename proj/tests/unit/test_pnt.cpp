#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"

using namespace inac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Vec3 kUser = geodetic_to_ecef({39.9524, 116.3417, 50.0});

std::vector<PseudorangeObs> ranges_from(const std::vector<Vec3>& sats, const Vec3& truth, double bias,
                                        double sigma, Rng& rng) {
  std::vector<PseudorangeObs> obs;
  for (std::size_t i = 0; i < sats.size(); ++i) {
    obs.push_back(synth_pseudorange(static_cast<int>(i), sats[i], truth, bias, sigma, rng));
  }
  return obs;
}

// Satellites of the eight-satellite sky moving at 7.5 km/s in varied
// directions roughly tangent to their orbit sphere.
std::vector<StateVector> moving_sats(const Vec3& user) {
  const std::vector<Vec3> pos = test::eight_sat_geometry(user);
  std::vector<StateVector> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const Vec3 radial = pos[i].normalized();
    const Vec3 east = Vec3::UnitZ().cross(radial).normalized();
    const Vec3 north = radial.cross(east);
    const double heading = 0.7 * static_cast<double>(i) + 0.3;
    out.push_back({{}, Frame::kEcef, pos[i], 7500.0 * (std::cos(heading) * east + std::sin(heading) * north)});
  }
  return out;
}

}  // namespace

TEST_CASE("Pseudorange least squares, exact data", "[pnt]") {
  std::vector<Vec3> sats = test::eight_sat_geometry(kUser);
  sats.resize(6);
  Rng rng(1);
  const auto obs = ranges_from(sats, kUser, 150.0, 0.0, rng);

  const PvtSolution s = solve_ls(obs, sats);
  CHECK(s.converged);
  CHECK(s.iterations <= 20);
  CHECK((s.position_ecef - kUser).norm() < 1e-6);
  CHECK_THAT(s.clock_bias_m, WithinAbs(150.0, 1e-6));
  CHECK(s.residual_rms < 1e-6);
  CHECK(s.dops.pdop > 0.0);

  SECTION("permutation invariance") {
    std::vector<std::size_t> order(obs.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::swap(order[1], order[4]);
    std::vector<PseudorangeObs> o2;
    std::vector<Vec3> s2;
    for (std::size_t k : order) {
      o2.push_back(obs[k]);
      s2.push_back(sats[k]);
    }
    const PvtSolution p = solve_ls(o2, s2);
    CHECK((p.position_ecef - s.position_ecef).norm() < 1e-6);
    CHECK_THAT(p.dops.pdop, WithinRel(s.dops.pdop, 1e-9));
  }

  SECTION("iteration cap reports non-convergence with the last state") {
    const PvtSolution capped = solve_ls(obs, sats, Vec3::Zero(), 0.0, {.max_iterations = 1});
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 1);
    CHECK(std::isfinite(capped.position_ecef.norm()));
  }
}

TEST_CASE("Pseudorange least squares, errors", "[pnt]") {
  std::vector<Vec3> sats = test::eight_sat_geometry(kUser);
  Rng rng(2);
  auto obs = ranges_from(sats, kUser, 0.0, 0.0, rng);

  const std::vector<PseudorangeObs> three(obs.begin(), obs.begin() + 3);
  const std::vector<Vec3> three_sats(sats.begin(), sats.begin() + 3);
  CHECK(test::error_code_of([&] { (void)solve_ls(three, three_sats); }) == Errc::kInsufficientSats);
  CHECK(test::error_code_of([&] { (void)solve_ls(obs, three_sats); }) == Errc::kLengthMismatch);

  // five satellites stacked along one line of sight
  std::vector<Vec3> stacked;
  for (int k = 1; k <= 5; ++k) stacked.push_back(kUser + kUser.normalized() * (5e5 + 1e5 * k));
  const auto stacked_obs = ranges_from(stacked, kUser, 0.0, 0.0, rng);
  CHECK(test::error_code_of([&] { (void)solve_ls(stacked_obs, stacked, kUser + Vec3(10, 10, 10)); }) ==
        Errc::kSingularGeometry);

  obs[0].sigma_m = 0.0;
  CHECK(test::error_code_of([&] {
          (void)solve_ls(obs, sats, Vec3::Zero(), 0.0, {.weighting = Weighting::kInverseVariance});
        }) == Errc::kInvalidArgument);
}

TEST_CASE("Pseudorange least squares, statistics", "[pnt]") {
  const std::vector<Vec3> sats = test::eight_sat_geometry(kUser);

  SECTION("Monte Carlo error tracks pdop times sigma") {
    const int trials = 1000;
    double sq = 0.0;
    double pdop = 0.0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(trial_seed(99, static_cast<std::uint64_t>(t)));
      const PvtSolution s = solve_ls(ranges_from(sats, kUser, 30.0, 2.0, rng), sats);
      REQUIRE(s.converged);
      sq += (s.position_ecef - kUser).squaredNorm();
      pdop = s.dops.pdop;
    }
    const double rms = std::sqrt(sq / trials);
    INFO("rms " << rms << " pdop " << pdop);
    CHECK_THAT(rms, WithinRel(2.0 * pdop, 0.2));
  }

  SECTION("equal weights: weighted and unweighted agree, covariance is sigma^2 (G^T G)^-1") {
    Rng rng(5);
    const auto obs = ranges_from(sats, kUser, 10.0, 2.0, rng);
    const PvtSolution u = solve_ls(obs, sats);
    const PvtSolution w = solve_ls(obs, sats, Vec3::Zero(), 0.0, {.weighting = Weighting::kInverseVariance});
    CHECK((u.position_ecef - w.position_ecef).norm() <= 1e-9 * u.position_ecef.norm());
    CHECK_THAT(u.clock_bias_m, WithinRel(w.clock_bias_m, 1e-9));

    Eigen::MatrixXd g(sats.size(), 4);
    for (std::size_t i = 0; i < sats.size(); ++i) {
      const Vec3 e = (sats[i] - u.position_ecef).normalized();
      g.row(static_cast<Eigen::Index>(i)) << -e.x(), -e.y(), -e.z(), 1.0;
    }
    const Eigen::Matrix4d expected = 4.0 * (g.transpose() * g).inverse();
    CHECK((u.covariance - expected).norm() / expected.norm() < 1e-9);
    CHECK((w.covariance - expected).norm() / expected.norm() < 1e-9);
    CHECK((u.covariance - u.covariance.transpose()).norm() < 1e-12 * expected.norm());
  }
}

TEST_CASE("Doppler least squares", "[pnt]") {
  const std::vector<StateVector> sats = moving_sats(kUser);
  const double f = constants::kL1CarrierHz;
  const Vec3 start = kUser + Vec3(20e3, -20e3, 10e3);

  SECTION("exact data recovers the position and offset") {
    Rng rng(3);
    std::vector<DopplerObs> obs;
    for (std::size_t i = 0; i < sats.size(); ++i) {
      obs.push_back(synth_doppler(static_cast<int>(i), sats[i], kUser, f, 0.0, rng, 500.0));
    }
    const PvtSolution s = solve_doppler_ls(obs, sats, start);
    CHECK(s.converged);
    CHECK((s.position_ecef - kUser).norm() < 1.0);
    REQUIRE(s.freq_offset_hz.has_value());
    CHECK_THAT(*s.freq_offset_hz, WithinAbs(500.0, 1e-3));

    const PvtSolution known = solve_doppler_ls(obs, sats, start, {.known_freq_offset_hz = 500.0});
    CHECK((known.position_ecef - kUser).norm() < 1.0);
    CHECK(*known.freq_offset_hz == 500.0);
  }

  SECTION("identical velocities with coplanar lines of sight are singular") {
    std::vector<StateVector> flat;
    Rng rng(4);
    std::vector<DopplerObs> obs;
    const Vec3 up = kUser.normalized();
    const Vec3 east = Vec3::UnitZ().cross(up).normalized();
    for (int k = 0; k < 5; ++k) {
      const double a = 0.3 * k - 0.6;
      const Vec3 pos = kUser + 8e5 * (std::cos(a) * up + std::sin(a) * east);
      flat.push_back({{}, Frame::kEcef, pos, Vec3(1000.0, 2000.0, 3000.0)});
      obs.push_back(synth_doppler(k, flat.back(), kUser, f, 0.0, rng));
    }
    CHECK(test::error_code_of([&] { (void)solve_doppler_ls(obs, flat, kUser + Vec3(100, 100, 100)); }) ==
          Errc::kSingularGeometry);
  }

  SECTION("input checks") {
    Rng rng(6);
    std::vector<DopplerObs> obs;
    for (std::size_t i = 0; i < 3; ++i) obs.push_back(synth_doppler(0, sats[i], kUser, f, 0.0, rng));
    const std::vector<StateVector> three(sats.begin(), sats.begin() + 3);
    CHECK(test::error_code_of([&] { (void)solve_doppler_ls(obs, three, start); }) == Errc::kInsufficientSats);
    std::vector<StateVector> eci = sats;
    for (auto& s : eci) s.frame = Frame::kEci;
    obs.clear();
    for (std::size_t i = 0; i < sats.size(); ++i) obs.push_back(synth_doppler(0, sats[i], kUser, f, 0.0, rng));
    CHECK(test::error_code_of([&] { (void)solve_doppler_ls(obs, eci, start); }) == Errc::kFrameMismatch);
  }
}

TEST_CASE("EKF, noiseless static receiver", "[ekf]") {
  const std::vector<Vec3> sats = test::eight_sat_geometry(kUser);
  EkfConfig cfg;
  cfg.q_vel = 0.0;
  cfg.clock_sf = 0.0;
  cfg.clock_sg = 0.0;
  cfg.gate = 1e12;

  EkfState st;
  st.epoch = UtcTime::from_j2000_seconds(0.0);
  st.x.segment<3>(0) = kUser + Vec3(40.0, -30.0, 25.0);
  st.x(6) = 80.0;
  st.covariance = EkfMatrix::Identity() * 1e4;

  Rng rng(7);
  double previous_trace = st.covariance.trace();
  for (int k = 1; k <= 30; ++k) {
    const auto obs = ranges_from(sats, kUser, 100.0, 0.0, rng);
    const EkfStepResult r = ekf_step(st, cfg, st.epoch + 1.0, obs, sats);
    CHECK(r.rejected.empty());
    CHECK(r.state.covariance.trace() <= previous_trace + 1e-9);
    previous_trace = r.state.covariance.trace();
    st = r.state;
  }
  CHECK((st.x.segment<3>(0) - kUser).norm() < 1e-3);
  CHECK_THAT(st.x(6), WithinAbs(100.0, 1e-3));
}

TEST_CASE("EKF against epoch-wise least squares", "[ekf]") {
  const std::vector<Vec3> sats = test::eight_sat_geometry(kUser);
  const EkfConfig cfg;
  double ls_sq = 0.0, ekf_sq = 0.0;
  int counted = 0;
  double worst_eig = 0.0;

  for (int run = 0; run < 20; ++run) {
    Rng rng(trial_seed(2024, static_cast<std::uint64_t>(run)));
    UtcTime t = UtcTime::from_j2000_seconds(0.0);
    EkfState st = EkfState::from_solution(solve_ls(ranges_from(sats, kUser, 50.0, 2.0, rng), sats), t, 1.0, 1.0);
    for (int k = 1; k < 100; ++k) {
      t = t + 1.0;
      const auto obs = ranges_from(sats, kUser, 50.0, 2.0, rng);
      const PvtSolution ls = solve_ls(obs, sats);
      const EkfStepResult r = ekf_step(st, cfg, t, obs, sats);
      st = r.state;
      const Eigen::SelfAdjointEigenSolver<EkfMatrix> eig(st.covariance);
      worst_eig = std::min(worst_eig, eig.eigenvalues().minCoeff());
      CHECK((st.covariance - st.covariance.transpose()).norm() == 0.0);
      if (k >= 50) {
        ls_sq += (ls.position_ecef - kUser).squaredNorm();
        ekf_sq += (r.solution.position_ecef - kUser).squaredNorm();
        ++counted;
      }
    }
  }
  const double ls_rms = std::sqrt(ls_sq / counted);
  const double ekf_rms = std::sqrt(ekf_sq / counted);
  INFO("ls " << ls_rms << " ekf " << ekf_rms);
  CHECK(ekf_rms <= ls_rms);
  CHECK(worst_eig > -1e-9);
}

TEST_CASE("EKF innovation gate", "[ekf]") {
  const std::vector<Vec3> sats = test::eight_sat_geometry(kUser);
  EkfConfig cfg;
  cfg.gate = 25.0;
  Rng rng(8);
  const PvtSolution init = solve_ls(ranges_from(sats, kUser, 0.0, 2.0, rng), sats);
  const EkfState st = EkfState::from_solution(init, UtcTime::from_j2000_seconds(0.0), 0.5, 0.5);

  auto obs = ranges_from(sats, kUser, 0.0, 2.0, rng);
  auto clean = obs;
  clean.erase(clean.begin() + 2);
  std::vector<Vec3> clean_sats = sats;
  clean_sats.erase(clean_sats.begin() + 2);
  obs[2].pseudorange_m += 1000.0;

  const EkfStepResult bad = ekf_step(st, cfg, st.epoch + 1.0, obs, sats);
  REQUIRE(bad.rejected == std::vector<int>{2});
  CHECK(bad.accepted.size() == 7);
  const EkfStepResult ref = ekf_step(st, cfg, st.epoch + 1.0, clean, clean_sats);
  CHECK((bad.state.x - ref.state.x).norm() < 1e-9);

  CHECK(test::error_code_of([&] { (void)ekf_step(st, cfg, st.epoch, obs, sats); }) == Errc::kInvalidArgument);
  CHECK(test::error_code_of([&] { (void)ekf_step(st, cfg, st.epoch + 1.0, obs, clean_sats); }) ==
        Errc::kLengthMismatch);
}
