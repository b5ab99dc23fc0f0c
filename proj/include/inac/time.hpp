#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "inac/constants.hpp"
#include "inac/error.hpp"

namespace inac {

/// UTC instant, stored as seconds since 2000-01-01T12:00:00 UTC. UT1 is taken
/// equal to UTC and no leap seconds are applied anywhere in the library.
class UtcTime {
 public:
  constexpr UtcTime() = default;

  static constexpr UtcTime from_j2000_seconds(double s) { return UtcTime(s); }

  static UtcTime from_calendar(int year, unsigned month, unsigned day, int hour = 0,
                               int minute = 0, double second = 0.0) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                             std::chrono::day{day}};
    if (!ymd.ok()) throw Error(Errc::kInvalidArgument, "invalid calendar date");
    const auto days = sys_days{ymd}.time_since_epoch().count() - kUnixDaysAtJ2000Midnight;
    return UtcTime(static_cast<double>(days) * constants::kSecondsPerDay - 43'200.0 +
                   hour * 3600.0 + minute * 60.0 + second);
  }

  /// TLE-style epoch: four-digit year plus fractional day of year (1.0 = Jan 1 00:00).
  static UtcTime from_year_day(int year, double day_of_year) {
    return from_calendar(year, 1, 1) + (day_of_year - 1.0) * constants::kSecondsPerDay;
  }

  /// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z" (the trailing Z is optional).
  static UtcTime parse_iso8601(std::string_view text) {
    const std::string s(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double sec = 0.0;
    char tail = '\0';
    const int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%lf%c", &y, &mo, &d, &h, &mi, &sec, &tail);
    if (n < 6 || (n == 7 && tail != 'Z') || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0.0 ||
        sec >= 61.0 || mo < 1 || d < 1) {
      throw Error(Errc::kInvalidArgument, "not an ISO-8601 UTC timestamp: '" + s + "'");
    }
    return from_calendar(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, sec);
  }

  /// ISO-8601 rendering at millisecond resolution.
  std::string to_iso8601() const {
    using namespace std::chrono;
    const double since_midnight_j2000 = seconds_ + 43'200.0;
    long long ms = std::llround(since_midnight_j2000 * 1000.0);
    long long day = ms >= 0 ? ms / 86'400'000 : -((-ms + 86'399'999) / 86'400'000);
    long long ms_of_day = ms - day * 86'400'000;
    const year_month_day ymd{sys_days{days{day + kUnixDaysAtJ2000Midnight}}};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), ms_of_day / 3'600'000,
                  ms_of_day / 60'000 % 60, ms_of_day / 1000 % 60, ms_of_day % 1000);
    return buf;
  }

  constexpr double j2000_seconds() const { return seconds_; }
  constexpr double julian_date() const { return 2'451'545.0 + seconds_ / constants::kSecondsPerDay; }
  /// Julian centuries since J2000.0 (UT1 = UTC).
  constexpr double julian_centuries() const { return seconds_ / (36'525.0 * constants::kSecondsPerDay); }

  constexpr UtcTime operator+(double dt) const { return UtcTime(seconds_ + dt); }
  constexpr UtcTime operator-(double dt) const { return UtcTime(seconds_ - dt); }
  constexpr double operator-(UtcTime other) const { return seconds_ - other.seconds_; }
  constexpr auto operator<=>(const UtcTime&) const = default;

 private:
  constexpr explicit UtcTime(double s) : seconds_(s) {}

  // 2000-01-01 counted in days since 1970-01-01.
  static constexpr long long kUnixDaysAtJ2000Midnight = 10'957;

  double seconds_ = 0.0;
};

}  // namespace inac
