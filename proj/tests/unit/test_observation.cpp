#include <catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace inac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Vec3 kUser = geodetic_to_ecef({39.9524, 116.3417, 50.0});
const Vec3 kSat = kUser + Vec3(3e5, -2e5, 5e5);

}  // namespace

TEST_CASE("Pseudorange synthesis", "[observation]") {
  const double range = (kSat - kUser).norm();
  Rng rng(1);

  SECTION("noise-free") {
    CHECK(synth_pseudorange(3, kSat, kUser, 0.0, 0.0, rng).pseudorange_m == range);
    const PseudorangeObs o = synth_pseudorange(3, kSat, kUser, 300.0, 0.0, rng);
    CHECK(o.pseudorange_m == range + 300.0);
    CHECK(o.sat_id == 3);
    CHECK(o.sigma_m == 0.0);
  }

  SECTION("Monte Carlo moments at 2 m") {
    const int n = 100'000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = synth_pseudorange(0, kSat, kUser, 300.0, 2.0, rng).pseudorange_m - range - 300.0;
      sum += r;
      sum2 += r * r;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::fabs(mean) < 0.02);
    CHECK_THAT(sd, WithinRel(2.0, 0.02));
  }

  SECTION("normality at a million samples") {
    const int n = 1'000'000;
    std::vector<double> x(n);
    double mean = 0.0;
    for (auto& v : x) {
      v = synth_pseudorange(0, kSat, kUser, 0.0, 2.0, rng).pseudorange_m - range;
      mean += v;
    }
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    CHECK(std::fabs(m3 / std::pow(m2, 1.5)) < 0.05);
    CHECK(std::fabs(m4 / (m2 * m2) - 3.0) < 0.1);
  }

  SECTION("seed determinism") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
      CHECK(synth_pseudorange(0, kSat, kUser, 1.0, 2.0, a).pseudorange_m ==
            synth_pseudorange(0, kSat, kUser, 1.0, 2.0, b).pseudorange_m);
    }
  }

  SECTION("negative sigma") {
    CHECK(test::error_code_of([&] { (void)synth_pseudorange(0, kSat, kUser, 0.0, -1.0, rng); }) ==
          Errc::kInvalidArgument);
  }
}

TEST_CASE("Doppler synthesis", "[observation]") {
  Rng rng(2);
  const double f = constants::kL1CarrierHz;
  const Vec3 u = (kSat - kUser).normalized();

  SECTION("static satellite") {
    CHECK(synth_doppler(0, {{}, Frame::kEcef, kSat, Vec3::Zero()}, kUser, f, 0.0, rng).doppler_hz == 0.0);
  }

  SECTION("radial approach at 7.5 km/s is about +39.4 kHz") {
    const DopplerObs o = synth_doppler(0, {{}, Frame::kEcef, kSat, -7500.0 * u}, kUser, f, 0.0, rng);
    CHECK_THAT(o.doppler_hz, WithinRel(7500.0 / 299'792'458.0 * f, 1e-12));
    CHECK_THAT(o.doppler_hz, WithinAbs(39.4e3, 50.0));
    CHECK(o.carrier_hz == f);
  }

  SECTION("perpendicular motion") {
    const Vec3 perp = u.cross(Vec3::UnitZ()).normalized() * 7500.0;
    CHECK_THAT(synth_doppler(0, {{}, Frame::kEcef, kSat, perp}, kUser, f, 0.0, rng).doppler_hz,
               WithinAbs(0.0, 1e-9));
  }

  SECTION("antisymmetric in velocity") {
    const Vec3 v(1200.0, -6800.0, 2500.0);
    const double plus = synth_doppler(0, {{}, Frame::kEcef, kSat, v}, kUser, f, 0.0, rng).doppler_hz;
    const double minus = synth_doppler(0, {{}, Frame::kEcef, kSat, -v}, kUser, f, 0.0, rng).doppler_hz;
    CHECK(plus == -minus);
  }

  SECTION("receiver offset adds directly") {
    const StateVector s{{}, Frame::kEcef, kSat, Vec3(100, 200, 300)};
    CHECK_THAT(synth_doppler(0, s, kUser, f, 0.0, rng, 500.0).doppler_hz -
                   synth_doppler(0, s, kUser, f, 0.0, rng).doppler_hz,
               WithinAbs(500.0, 1e-9));
  }

  SECTION("bad inputs") {
    const StateVector s{{}, Frame::kEcef, kSat, Vec3::Zero()};
    CHECK(test::error_code_of([&] { (void)synth_doppler(0, s, kUser, 0.0, 0.0, rng); }) == Errc::kNonPositiveInput);
    CHECK(test::error_code_of([&] { (void)synth_doppler(0, s, kUser, f, -1.0, rng); }) == Errc::kInvalidArgument);
  }
}

TEST_CASE("Free-space path loss and SNR", "[observation]") {
  const double f = constants::kKuCarrierHz;

  CHECK_THAT(fspl_db(550e3, f), WithinAbs(test::fspl_oracle(550e3, f), 1e-9));
  CHECK_THAT(fspl_db(5500e3, f) - fspl_db(550e3, f), WithinAbs(20.0, 1e-9));
  CHECK_THAT(fspl_db(20'200e3, f) - fspl_db(550e3, f), WithinAbs(31.3, 0.05));
  CHECK_THAT(fspl_db(299'792'458.0 / (4.0 * constants::kPi * f), f), WithinAbs(0.0, 1e-9));

  double previous = -1e9;
  for (double d = 1e3; d < 4e7; d *= 1.7) {
    const double l = fspl_db(d, f);
    CHECK(l > previous);
    CHECK(fspl_db(d, 2.0 * f) > l);
    previous = l;
  }

  CHECK(test::error_code_of([&] { (void)fspl_db(0.0, f); }) == Errc::kNonPositiveInput);
  CHECK(test::error_code_of([&] { (void)fspl_db(1.0, -f); }) == Errc::kNonPositiveInput);

  CHECK_THAT(received_snr_db(0, 0, 550e3, f, 0), WithinAbs(-fspl_db(550e3, f), 1e-12));
  CHECK_THAT(received_snr_db(33, 0, 550e3, f, -120) - received_snr_db(30, 0, 550e3, f, -120),
             WithinAbs(3.0, 1e-12));

  // EIRP picked between the LEO and MEO losses: the sign flips with distance
  const double eirp = 0.5 * (fspl_db(550e3, f) + fspl_db(20'200e3, f));
  CHECK(received_snr_db(eirp, 0, 550e3, f, 0) > 0.0);
  CHECK(received_snr_db(eirp, 0, 20'200e3, f, 0) < 0.0);

  const LinkBudget b = link_budget(30, 10, 550e3, f, -100);
  CHECK(b.fspl_db == fspl_db(550e3, f));
  CHECK(b.received_snr_db == received_snr_db(30, 10, 550e3, f, -100));

  CHECK_THAT(watts_to_dbw(thermal_noise_w(1.0)), WithinAbs(-203.98, 0.01));
}
