#pragma once

// Synthetic Walker-delta constellations written as TLE records, for runs that
// have no real catalog at hand.

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/time.hpp"
#include "inac/tle.hpp"

namespace inac {

struct WalkerPattern {
  int planes = 72;
  int sats_per_plane = 22;
  int phasing = 1;  // Walker F
  double inclination_deg = 53.0;
  double altitude_m = 550e3;
  double eccentricity = 1e-4;
  int epoch_year = 2025;
  double epoch_day = 85.0 + 8.0 / 24.0;  // 2025-03-26T08:00Z
  int first_catalog_number = 90'001;
  std::string name_prefix = "WALKER";
};

inline std::vector<TwoLineElements> walker_constellation(const WalkerPattern& w) {
  if (w.planes < 1 || w.sats_per_plane < 1) throw Error(Errc::kInvalidArgument, "empty Walker pattern");
  const double a = constants::kWgs84A + w.altitude_m;
  const double n_rad_s = std::sqrt(constants::kEarthMu / (a * a * a));
  const double rev_per_day = n_rad_s * constants::kSecondsPerDay / constants::kTwoPi;
  const int total = w.planes * w.sats_per_plane;
  std::vector<TwoLineElements> out;
  out.reserve(static_cast<std::size_t>(total));
  for (int p = 0; p < w.planes; ++p) {
    for (int s = 0; s < w.sats_per_plane; ++s) {
      TwoLineElements t;
      char name[48];
      std::snprintf(name, sizeof name, "%s-P%02d-S%02d", w.name_prefix.c_str(), p + 1, s + 1);
      t.name = name;
      t.catalog_number = w.first_catalog_number + p * w.sats_per_plane + s;
      t.intl_designator = "25999A";
      t.epoch_year = w.epoch_year;
      t.epoch_day = w.epoch_day;
      t.epoch_utc = UtcTime::from_year_day(w.epoch_year, w.epoch_day);
      t.element_set_number = 999;
      t.inclination_deg = w.inclination_deg;
      t.raan_deg = std::fmod(360.0 * p / w.planes, 360.0);
      t.eccentricity = w.eccentricity;
      const double m = 360.0 * s / w.sats_per_plane + 360.0 * w.phasing * p / total;
      t.mean_anomaly_deg = std::fmod(m, 360.0);
      t.mean_motion_rev_per_day = rev_per_day;
      t.revolution_number = 1;
      out.push_back(t);
    }
  }
  return out;
}

/// Several shells in one catalog; catalog numbers run on from the first shell's.
inline std::vector<TwoLineElements> walker_catalog(std::span<const WalkerPattern> shells) {
  std::vector<TwoLineElements> out;
  int next = shells.empty() ? 0 : shells.front().first_catalog_number;
  for (WalkerPattern w : shells) {
    w.first_catalog_number = next;
    const auto records = walker_constellation(w);
    next += static_cast<int>(records.size());
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

/// Five shells shaped like the publicly filed first-generation Starlink
/// layout (4408 satellites). Plane and slot counts only; no real ephemerides.
inline std::vector<WalkerPattern> starlink_like_shells() {
  const auto shell = [](int planes, int per_plane, double incl, double alt_km, const char* prefix) {
    WalkerPattern w;
    w.planes = planes;
    w.sats_per_plane = per_plane;
    w.inclination_deg = incl;
    w.altitude_m = alt_km * 1e3;
    w.name_prefix = prefix;
    return w;
  };
  return {shell(72, 22, 53.0, 550.0, "SHELL1"), shell(72, 22, 53.2, 540.0, "SHELL2"),
          shell(36, 20, 70.0, 570.0, "SHELL3"), shell(6, 58, 97.6, 560.0, "SHELL4"),
          shell(4, 43, 97.6, 560.0, "SHELL5")};
}

/// Three-line (name + two element lines) text of a record list.
inline std::string to_tle_text(const std::vector<TwoLineElements>& records) {
  std::string text;
  for (const auto& r : records) {
    const auto [l1, l2] = format_tle(r);
    text += r.name + "\n" + l1 + "\n" + l2 + "\n";
  }
  return text;
}

}  // namespace inac
