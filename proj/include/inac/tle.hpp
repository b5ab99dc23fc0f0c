#pragma once

// NORAD two-line element ingestion: checksum, field parsing, validation and
// re-formatting. Column numbers in comments are the 1-based positions of the
// standard layout.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/time.hpp"

namespace inac {

struct TwoLineElements {
  std::string name;
  int catalog_number = 0;
  char classification = 'U';
  std::string intl_designator;
  int epoch_year = 2000;  // four-digit
  double epoch_day = 1.0;
  UtcTime epoch_utc;
  double mean_motion_dot = 0.0;   // rev/day^2, as printed (first derivative / 2)
  double mean_motion_ddot = 0.0;  // rev/day^3, as printed (second derivative / 6)
  double bstar = 0.0;             // 1/earth radii; parsed, never used for propagation
  int ephemeris_type = 0;
  int element_set_number = 0;
  double inclination_deg = 0.0;
  double raan_deg = 0.0;
  double eccentricity = 0.0;
  double arg_perigee_deg = 0.0;
  double mean_anomaly_deg = 0.0;
  double mean_motion_rev_per_day = 0.0;
  int revolution_number = 0;

  double mean_motion_rad_s() const {
    return mean_motion_rev_per_day * constants::kTwoPi / constants::kSecondsPerDay;
  }
  double semi_major_axis_m() const {
    const double n = mean_motion_rad_s();
    return std::cbrt(constants::kEarthMu / (n * n));
  }
  double period_s() const { return constants::kTwoPi / mean_motion_rad_s(); }

  bool operator==(const TwoLineElements&) const = default;
};

/// Mod-10 checksum over the first 68 characters: digits count their value,
/// '-' counts 1, everything else counts 0.
constexpr int tle_checksum(std::string_view line) {
  int sum = 0;
  const std::size_t n = line.size() < 68 ? line.size() : 68;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = line[i];
    if (c >= '0' && c <= '9') sum += c - '0';
    else if (c == '-') sum += 1;
  }
  return sum % 10;
}

struct TleIssue {
  int line = 0;
  Errc code = Errc::kMalformedLine;
  std::string message;
};

struct TleCatalog {
  std::vector<TwoLineElements> records;
  std::vector<TleIssue> issues;
};

namespace detail {

inline std::string_view tle_field(std::string_view line, int first_col, int last_col) {
  return line.substr(static_cast<std::size_t>(first_col - 1),
                     static_cast<std::size_t>(last_col - first_col + 1));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_tle_double(std::string_view raw, int line, const char* what) {
  std::string_view s = trim(raw);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(value)) {
    throw LineError(Errc::kFieldParse, line, std::string(what) + " is not numeric: '" + std::string(raw) + "'");
  }
  return value;
}

inline int parse_tle_int(std::string_view raw, int line, const char* what, bool blank_is_zero = false) {
  const std::string_view s = trim(raw);
  if (s.empty() && blank_is_zero) return 0;
  int value = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw LineError(Errc::kFieldParse, line, std::string(what) + " is not an integer: '" + std::string(raw) + "'");
  }
  return value;
}

// Alpha-5 catalog numbers: a leading letter A..Z (I and O skipped) encodes 10..33.
inline int parse_catalog_number(std::string_view raw, int line) {
  const std::string_view s = trim(raw);
  if (!s.empty() && s.front() >= 'A' && s.front() <= 'Z') {
    const char c = s.front();
    if (c == 'I' || c == 'O') throw LineError(Errc::kFieldParse, line, "invalid Alpha-5 catalog prefix");
    const int lead = 10 + (c - 'A') - (c > 'I' ? 1 : 0) - (c > 'O' ? 1 : 0);
    return lead * 10'000 + parse_tle_int(s.substr(1), line, "catalog number");
  }
  const int n = parse_tle_int(s, line, "catalog number");
  if (n < 0) throw LineError(Errc::kFieldParse, line, "negative catalog number");
  return n;
}

inline std::string format_catalog_number(int n) {
  if (n < 0 || n >= 340'000) throw Error(Errc::kInvalidArgument, "catalog number not representable");
  char buf[8];
  if (n < 100'000) {
    std::snprintf(buf, sizeof buf, "%05d", n);
  } else {
    int lead = n / 10'000 - 10;  // 0-based letter index without I/O
    char c = static_cast<char>('A' + lead);
    if (c >= 'I') ++c;
    if (c >= 'O') ++c;
    std::snprintf(buf, sizeof buf, "%c%04d", c, n % 10'000);
  }
  return buf;
}

// Implied-decimal exponent field "SMMMMMSE": value = S0.MMMMM * 10^(SE).
inline double parse_implied_exp(std::string_view raw, int line, const char* what) {
  if (trim(raw).empty()) return 0.0;
  if (raw.size() != 8) throw LineError(Errc::kFieldParse, line, std::string(what) + " has wrong width");
  const char sign = raw[0];
  if (sign != ' ' && sign != '+' && sign != '-') {
    throw LineError(Errc::kFieldParse, line, std::string(what) + " has invalid sign");
  }
  std::string mantissa_digits(raw.substr(1, 5));
  for (char& c : mantissa_digits) {
    if (c == ' ') c = '0';
    if (c < '0' || c > '9') throw LineError(Errc::kFieldParse, line, std::string(what) + " mantissa is not numeric");
  }
  const char exp_sign = raw[6];
  const char exp_digit = raw[7];
  if ((exp_sign != '-' && exp_sign != '+' && exp_sign != ' ') || exp_digit < '0' || exp_digit > '9') {
    throw LineError(Errc::kFieldParse, line, std::string(what) + " exponent is not numeric");
  }
  const int mantissa = std::stoi(mantissa_digits);
  const int exponent = (exp_sign == '-' ? -1 : 1) * (exp_digit - '0');
  const double value = mantissa * std::pow(10.0, exponent - 5);
  return sign == '-' ? -value : value;
}

inline std::string format_implied_exp(double v) {
  if (v == 0.0) return " 00000+0";
  const double mag = std::fabs(v);
  int exponent = static_cast<int>(std::floor(std::log10(mag))) + 1;
  long mantissa = std::lround(mag / std::pow(10.0, exponent) * 1e5);
  if (mantissa >= 100'000) {
    mantissa = std::lround(static_cast<double>(mantissa) / 10.0);
    ++exponent;
  }
  if (exponent < -9 || exponent > 9) throw Error(Errc::kInvalidArgument, "exponent field out of range");
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%05ld%c%d", v < 0 ? '-' : ' ', mantissa, exponent < 0 ? '-' : '+',
                std::abs(exponent));
  return buf;
}

// Angles printed in [0, 360]; 360 itself folds onto 0.
inline double normalized_angle(double deg, int line, const char* what) {
  if (deg < 0.0 || deg > 360.0) {
    throw LineError(Errc::kElementOutOfRange, line, std::string(what) + " outside [0, 360]");
  }
  return deg == 360.0 ? 0.0 : deg;
}

inline void check_data_line(std::string_view text, char number, int line) {
  if (text.size() != 69) {
    throw LineError(Errc::kMalformedLine, line,
                    "expected 69 characters, got " + std::to_string(text.size()));
  }
  if (text[0] != number || text[1] != ' ') {
    throw LineError(Errc::kMalformedLine, line, std::string("expected line number ") + number);
  }
  const char printed = text[68];
  if (printed < '0' || printed > '9') {
    throw LineError(Errc::kChecksumMismatch, line, "checksum column is not a digit");
  }
  const int computed = tle_checksum(text);
  if (printed - '0' != computed) {
    throw LineError(Errc::kChecksumMismatch, line,
                    "printed " + std::string(1, printed) + ", computed " + std::to_string(computed));
  }
}

}  // namespace detail

/// Parses one record. `name` may be empty, in which case "SAT-<catalog>" is used.
/// `line1_no` is the 1-based line number of line 1 (line 2 is assumed to follow).
inline TwoLineElements parse_tle_record(std::string_view name, std::string_view line1,
                                        std::string_view line2, int line1_no = 1,
                                        int line2_no = 2) {
  using namespace detail;
  line1 = trim(line1);
  line2 = trim(line2);
  check_data_line(line1, '1', line1_no);
  check_data_line(line2, '2', line2_no);

  TwoLineElements t;
  t.catalog_number = parse_catalog_number(tle_field(line1, 3, 7), line1_no);
  const int cat2 = parse_catalog_number(tle_field(line2, 3, 7), line2_no);
  if (cat2 != t.catalog_number) {
    throw LineError(Errc::kMalformedLine, line2_no, "catalog number differs from line 1");
  }
  t.classification = line1[7];
  t.intl_designator = std::string(trim(tle_field(line1, 10, 17)));
  const int yy = parse_tle_int(tle_field(line1, 19, 20), line1_no, "epoch year");
  t.epoch_year = yy < 57 ? 2000 + yy : 1900 + yy;
  t.epoch_day = parse_tle_double(tle_field(line1, 21, 32), line1_no, "epoch day");
  if (yy < 0 || t.epoch_day < 1.0 || t.epoch_day >= 367.0) {
    throw LineError(Errc::kElementOutOfRange, line1_no, "epoch outside the calendar");
  }
  t.epoch_utc = UtcTime::from_year_day(t.epoch_year, t.epoch_day);
  t.mean_motion_dot = parse_tle_double(tle_field(line1, 34, 43), line1_no, "mean motion derivative");
  t.mean_motion_ddot = parse_implied_exp(tle_field(line1, 45, 52), line1_no, "mean motion second derivative");
  t.bstar = parse_implied_exp(tle_field(line1, 54, 61), line1_no, "bstar");
  t.ephemeris_type = parse_tle_int(tle_field(line1, 63, 63), line1_no, "ephemeris type", true);
  t.element_set_number = parse_tle_int(tle_field(line1, 65, 68), line1_no, "element set number", true);

  t.inclination_deg = parse_tle_double(tle_field(line2, 9, 16), line2_no, "inclination");
  t.raan_deg = parse_tle_double(tle_field(line2, 18, 25), line2_no, "raan");
  const std::string_view ecc = tle_field(line2, 27, 33);
  for (char c : ecc) {
    if (c < '0' || c > '9') throw LineError(Errc::kFieldParse, line2_no, "eccentricity is not numeric");
  }
  t.eccentricity = parse_tle_int(ecc, line2_no, "eccentricity") * 1e-7;
  t.arg_perigee_deg = parse_tle_double(tle_field(line2, 35, 42), line2_no, "argument of perigee");
  t.mean_anomaly_deg = parse_tle_double(tle_field(line2, 44, 51), line2_no, "mean anomaly");
  t.mean_motion_rev_per_day = parse_tle_double(tle_field(line2, 53, 63), line2_no, "mean motion");
  t.revolution_number = parse_tle_int(tle_field(line2, 64, 68), line2_no, "revolution number", true);

  if (t.inclination_deg < 0.0 || t.inclination_deg > 180.0) {
    throw LineError(Errc::kElementOutOfRange, line2_no, "inclination outside [0, 180]");
  }
  t.raan_deg = normalized_angle(t.raan_deg, line2_no, "raan");
  t.arg_perigee_deg = normalized_angle(t.arg_perigee_deg, line2_no, "argument of perigee");
  t.mean_anomaly_deg = normalized_angle(t.mean_anomaly_deg, line2_no, "mean anomaly");
  if (!(t.eccentricity >= 0.0 && t.eccentricity < 1.0)) {
    throw LineError(Errc::kElementOutOfRange, line2_no, "eccentricity outside [0, 1)");
  }
  if (!(t.mean_motion_rev_per_day > 0.0)) {
    throw LineError(Errc::kElementOutOfRange, line2_no, "mean motion must be positive");
  }
  if (t.semi_major_axis_m() <= constants::kWgs84A) {
    throw LineError(Errc::kElementOutOfRange, line2_no, "semi-major axis inside the Earth");
  }

  const std::string_view n = trim(name);
  t.name = n.empty() ? "SAT-" + std::to_string(t.catalog_number) : std::string(n);
  return t;
}

namespace detail {

struct NumberedLine {
  int number;
  std::string_view text;
};

inline std::vector<NumberedLine> nonblank_lines(std::string_view text) {
  std::vector<NumberedLine> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::size_t end = eol == std::string_view::npos ? text.size() : eol;
    ++number;
    const std::string_view line = trim(text.substr(pos, end - pos));
    if (!line.empty()) out.push_back({number, line});
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

inline bool looks_like_data_line(std::string_view s, char number) {
  return s.size() >= 2 && s[0] == number && s[1] == ' ';
}

// Parses the record starting at lines[i]; returns the index after it.
inline std::size_t parse_one(const std::vector<NumberedLine>& lines, std::size_t i,
                             std::vector<TwoLineElements>& out) {
  std::string_view name;
  if (looks_like_data_line(lines[i].text, '2')) {
    throw LineError(Errc::kMalformedLine, lines[i].number, "line 2 without a preceding line 1");
  }
  if (!looks_like_data_line(lines[i].text, '1')) {
    name = lines[i].text;
    if (name.size() >= 2 && name[0] == '0' && name[1] == ' ') name.remove_prefix(2);  // 3LE style
    ++i;
    if (i >= lines.size() || !looks_like_data_line(lines[i].text, '1')) {
      throw LineError(Errc::kMalformedLine, i < lines.size() ? lines[i].number : lines[i - 1].number,
                      "expected line 1 after name line");
    }
  }
  if (i + 1 >= lines.size() || !looks_like_data_line(lines[i + 1].text, '2')) {
    throw LineError(Errc::kMalformedLine, i + 1 < lines.size() ? lines[i + 1].number : lines[i].number,
                    "expected line 2 after line 1");
  }
  out.push_back(parse_tle_record(name, lines[i].text, lines[i + 1].text, lines[i].number,
                                 lines[i + 1].number));
  return i + 2;
}

}  // namespace detail

/// Strict catalog parse: every record must be valid; the first failure is thrown
/// as a LineError carrying the offending line number.
inline std::vector<TwoLineElements> parse_tle_file(std::string_view text) {
  const auto lines = detail::nonblank_lines(text);
  std::vector<TwoLineElements> out;
  std::size_t i = 0;
  while (i < lines.size()) i = detail::parse_one(lines, i, out);
  return out;
}

/// Lenient catalog parse: invalid records are skipped and reported, valid ones kept in order.
inline TleCatalog parse_tle_catalog(std::string_view text) {
  const auto lines = detail::nonblank_lines(text);
  TleCatalog catalog;
  std::size_t i = 0;
  while (i < lines.size()) {
    try {
      i = detail::parse_one(lines, i, catalog.records);
    } catch (const LineError& e) {
      catalog.issues.push_back({e.line(), e.code(), e.what()});
      // resume at the first line after the failure that can start a record
      std::size_t next = i + 1;
      while (next < lines.size() && lines[next].number <= e.line()) ++next;
      while (next < lines.size() && detail::looks_like_data_line(lines[next].text, '2')) ++next;
      i = next;
    }
  }
  return catalog;
}

/// Formats a record back into its two 69-character lines (checksums recomputed).
inline std::pair<std::string, std::string> format_tle(const TwoLineElements& t) {
  using detail::format_implied_exp;
  if (std::fabs(t.mean_motion_dot) >= 1.0) throw Error(Errc::kInvalidArgument, "mean motion derivative too large");
  char ndot[16];
  std::snprintf(ndot, sizeof ndot, "%.8f", std::fabs(t.mean_motion_dot));
  std::string ndot_field = std::string(t.mean_motion_dot < 0 ? "-" : " ") + (ndot + 1);

  char buf[128];
  std::snprintf(buf, sizeof buf, "1 %s%c %-8.8s %02d%012.8f %s %s %s %1d %4d",
                detail::format_catalog_number(t.catalog_number).c_str(), t.classification,
                t.intl_designator.c_str(), t.epoch_year % 100, t.epoch_day, ndot_field.c_str(),
                format_implied_exp(t.mean_motion_ddot).c_str(), format_implied_exp(t.bstar).c_str(),
                t.ephemeris_type % 10, t.element_set_number % 10'000);
  std::string line1 = buf;
  line1 += static_cast<char>('0' + tle_checksum(line1));

  std::snprintf(buf, sizeof buf, "2 %s %8.4f %8.4f %07ld %8.4f %8.4f %11.8f%5d",
                detail::format_catalog_number(t.catalog_number).c_str(), t.inclination_deg,
                t.raan_deg, std::lround(t.eccentricity * 1e7), t.arg_perigee_deg,
                t.mean_anomaly_deg, t.mean_motion_rev_per_day, t.revolution_number % 100'000);
  std::string line2 = buf;
  line2 += static_cast<char>('0' + tle_checksum(line2));
  if (line1.size() != 69 || line2.size() != 69) {
    throw Error(Errc::kInvalidArgument, "element values overflow the fixed-width layout");
  }
  return {line1, line2};
}

}  // namespace inac
