#pragma once

// Configuration-driven sweeps, CSV output and gnuplot scripts.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "inac/constants.hpp"
#include "inac/error.hpp"
#include "inac/geometry.hpp"
#include "inac/inac_link.hpp"
#include "inac/observation.hpp"
#include "inac/orbit.hpp"
#include "inac/parallel.hpp"
#include "inac/pnt.hpp"
#include "inac/ris_elos.hpp"
#include "inac/rng.hpp"
#include "inac/time.hpp"
#include "inac/tle.hpp"

#ifndef INAC_VERSION
#define INAC_VERSION "0.0.0"
#endif

namespace inac {

inline constexpr const char* kToolName = "inac-sim";
inline constexpr const char* kToolVersion = INAC_VERSION;

enum class ScenarioKind { kElevationMaskSweep, kPowerSplitSweep, kRisDistanceSweep, kIndoorDistanceSweep };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep: return "elevation_mask_sweep";
    case ScenarioKind::kPowerSplitSweep: return "power_split_sweep";
    case ScenarioKind::kRisDistanceSweep: return "ris_distance_sweep";
    case ScenarioKind::kIndoorDistanceSweep: return "indoor_distance_sweep";
  }
  return "unknown";
}

inline std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
  for (auto k : {ScenarioKind::kElevationMaskSweep, ScenarioKind::kPowerSplitSweep, ScenarioKind::kRisDistanceSweep,
                 ScenarioKind::kIndoorDistanceSweep}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Unit tag the sweep values of each kind must carry.
inline const char* sweep_unit(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep: return "deg";
    case ScenarioKind::kPowerSplitSweep: return "omega_c_sq";
    case ScenarioKind::kRisDistanceSweep: return "m";
    case ScenarioKind::kIndoorDistanceSweep: return "m";
  }
  return "";
}

/// Metric columns per kind, in output order.
inline std::vector<std::string> metric_names(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep: return {"visible_count", "pdop", "rms_error_m", "mean_snr_db", "failures"};
    case ScenarioKind::kPowerSplitSweep: return {"c_nav", "c_com", "c_nav_half_width", "c_com_half_width"};
    case ScenarioKind::kRisDistanceSweep: return {"pdop", "rms_error_m", "c_com", "c_nav", "failures"};
    case ScenarioKind::kIndoorDistanceSweep:
      return {"mean_ris_user_distance_m", "pdop", "rms_error_m", "failures"};
  }
  return {};
}

inline const char* to_string(ServiceMode m) {
  return m == ServiceMode::kNavigationOriented ? "navigation_oriented" : "communication_oriented";
}

inline const char* to_string(SyncErrorModel m) {
  return m == SyncErrorModel::kGaussian ? "gaussian" : "constant_bias";
}

struct NoiseConfig {
  double pseudorange_sigma_m = 2.0;
  double doppler_sigma_hz = 1.0;
  double range_sigma_m = 0.0;
};

struct LinkConfig {
  double bandwidth_hz = 0.0;
  double noise_power_w = 0.0;
  double carrier_hz = 0.0;
  double fading_k = 10.0;
  double eirp_dbw = 30.0;
  double rx_gain_db = 0.0;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kElevationMaskSweep;
  /// As written in the config; resolved_tle_path is relative to the config file.
  std::string tle_path;
  std::filesystem::path resolved_tle_path;
  GeodeticPosition user_geodetic;
  UtcTime epoch_utc;
  std::vector<double> sweep_values;
  std::string sweep_unit;
  NoiseConfig noise;
  LinkConfig link;
  std::uint64_t rng_seed = 1;
  std::size_t trials = 1;
  std::filesystem::path output_path;
  ServiceMode service_mode = ServiceMode::kNavigationOriented;
  std::size_t ris_elements = 64;
  double sat_distance_m = 550e3;
  double sync_error_s = 10e-9;
  SyncErrorModel sync_model = SyncErrorModel::kGaussian;
  bool secular_j2 = false;
};

/// Approximate Beijing Jiaotong University campus. Operator supplied, not survey data.
inline constexpr GeodeticPosition kDefaultUser{39.9524, 116.3417, 50.0};

inline std::vector<double> linspace(double first, double last, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? first : first + (last - first) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

inline std::vector<double> default_sweep_values(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep: return linspace(5.0, 70.0, 14);
    case ScenarioKind::kPowerSplitSweep: return linspace(0.0, 1.0, 21);
    case ScenarioKind::kRisDistanceSweep: return linspace(200e3, 2200e3, 21);
    case ScenarioKind::kIndoorDistanceSweep: return linspace(1.0, 9.0, 21);
  }
  return {};
}

inline std::size_t default_trials(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep: return 100;
    case ScenarioKind::kPowerSplitSweep: return 2000;
    case ScenarioKind::kRisDistanceSweep: return 500;
    case ScenarioKind::kIndoorDistanceSweep: return 1000;
  }
  return 1;
}

inline LinkConfig default_link(ScenarioKind k) {
  LinkConfig l;
  if (k == ScenarioKind::kElevationMaskSweep) {
    l.carrier_hz = constants::kL1CarrierHz;
    l.bandwidth_hz = 2.046e6;
    l.noise_power_w = thermal_noise_w(l.bandwidth_hz);
    l.eirp_dbw = 30.0;
    l.rx_gain_db = 0.0;
  } else {
    l.carrier_hz = constants::kKuCarrierHz;
    l.bandwidth_hz = 250e6;
    l.noise_power_w = 1e-12;
    l.eirp_dbw = 30.0;
    l.rx_gain_db = 30.0;
  }
  return l;
}

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& what) { throw Error(Errc::kSchemaError, what); }
[[noreturn]] inline void semantic_error(const std::string& what) { throw Error(Errc::kSemanticError, what); }

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) schema_error(where.empty() ? "config must be an object" : "'" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) schema_error("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline std::string key_path(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

inline std::optional<double> get_number(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number()) schema_error("'" + key_path(where, key) + "' must be a number");
  return v.get<double>();
}

inline std::optional<std::int64_t> get_integer(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      semantic_error("'" + key_path(where, key) + "' out of range");
    return static_cast<std::int64_t>(u);
  }
  if (!v.is_number_integer()) schema_error("'" + key_path(where, key) + "' must be an integer");
  return v.get<std::int64_t>();
}

inline std::optional<std::string> get_string(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_string()) schema_error("'" + key_path(where, key) + "' must be a string");
  return v.get<std::string>();
}

inline std::optional<bool> get_bool(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_boolean()) schema_error("'" + key_path(where, key) + "' must be a boolean");
  return v.get<bool>();
}

inline const json* get_object(const json& obj, const char* key, std::initializer_list<const char*> allowed) {
  if (!obj.contains(key)) return nullptr;
  check_keys(obj.at(key), key, allowed);
  return &obj.at(key);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kMissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::kIoError, "error reading '" + path.string() + "'");
  return ss.str();
}

}  // namespace detail

/// Lowercase hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::kIoError, "SHA-256 computation failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    out += buf;
  }
  return out;
}

/// Validates a parsed config document and fills every default. Relative file
/// paths are resolved against base_dir.
inline ScenarioConfig validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
  using detail::semantic_error;
  detail::check_keys(doc, "",
                     {"scenario_kind", "tle_path", "user_geodetic", "epoch_utc", "sweep_values", "noise", "link",
                      "rng_seed", "trials", "output_path", "inac", "indoor", "propagation"});
  ScenarioConfig c;

  const auto kind_text = detail::get_string(doc, "", "scenario_kind");
  if (!kind_text) detail::schema_error("missing required key 'scenario_kind'");
  const auto kind = scenario_kind_from_string(*kind_text);
  if (!kind) semantic_error("unknown scenario_kind '" + *kind_text + "'");
  c.kind = *kind;
  const bool needs_catalog = c.kind == ScenarioKind::kElevationMaskSweep;

  // Catalog and epoch.
  std::optional<std::string> tle = detail::get_string(doc, "", "tle_path");
  if (needs_catalog && !tle) semantic_error("elevation_mask_sweep requires 'tle_path'");
  std::optional<TleCatalog> catalog;
  if (tle) {
    c.tle_path = *tle;
    c.resolved_tle_path = std::filesystem::path(*tle);
    if (c.resolved_tle_path.is_relative() && !base_dir.empty()) c.resolved_tle_path = base_dir / c.resolved_tle_path;
    if (!std::filesystem::is_regular_file(c.resolved_tle_path)) {
      throw Error(Errc::kMissingFile, "TLE file not found: '" + c.resolved_tle_path.string() + "'");
    }
    if (needs_catalog) {
      catalog = parse_tle_catalog(detail::read_file(c.resolved_tle_path));
      if (catalog->records.empty()) semantic_error("TLE file holds no valid records: '" + *tle + "'");
    }
  }
  if (const auto epoch = detail::get_string(doc, "", "epoch_utc")) {
    try {
      c.epoch_utc = UtcTime::parse_iso8601(*epoch);
    } catch (const Error& e) {
      semantic_error(std::string("'epoch_utc': ") + e.what());
    }
  } else if (catalog) {
    c.epoch_utc = std::max_element(catalog->records.begin(), catalog->records.end(), [](const auto& a, const auto& b) {
                    return a.epoch_utc < b.epoch_utc;
                  })->epoch_utc;
  }

  c.user_geodetic = kDefaultUser;
  if (const auto* u = detail::get_object(doc, "user_geodetic", {"latitude_deg", "longitude_deg", "height_m"})) {
    if (auto v = detail::get_number(*u, "user_geodetic", "latitude_deg")) c.user_geodetic.latitude_deg = *v;
    if (auto v = detail::get_number(*u, "user_geodetic", "longitude_deg")) c.user_geodetic.longitude_deg = *v;
    if (auto v = detail::get_number(*u, "user_geodetic", "height_m")) c.user_geodetic.height_m = *v;
  }
  if (std::abs(c.user_geodetic.latitude_deg) > 90.0) semantic_error("user latitude outside [-90, 90]");
  if (std::abs(c.user_geodetic.longitude_deg) > 180.0) semantic_error("user longitude outside [-180, 180]");

  // Sweep.
  c.sweep_unit = sweep_unit(c.kind);
  c.sweep_values = default_sweep_values(c.kind);
  if (const auto* s = detail::get_object(doc, "sweep_values", {"unit", "values"})) {
    if (auto unit = detail::get_string(*s, "sweep_values", "unit")) {
      if (*unit != c.sweep_unit) {
        semantic_error("sweep unit '" + *unit + "' does not match '" + c.sweep_unit + "' for " + to_string(c.kind));
      }
    }
    if (s->contains("values")) {
      const auto& arr = s->at("values");
      if (!arr.is_array()) detail::schema_error("'sweep_values.values' must be an array");
      c.sweep_values.clear();
      for (const auto& v : arr) {
        if (!v.is_number()) detail::schema_error("'sweep_values.values' must hold numbers");
        c.sweep_values.push_back(v.get<double>());
      }
    }
  }
  if (c.sweep_values.empty()) semantic_error("sweep_values must not be empty");
  if (c.sweep_values.size() > 1) {
    const bool up = c.sweep_values[1] > c.sweep_values[0];
    for (std::size_t i = 1; i < c.sweep_values.size(); ++i) {
      const bool step_up = c.sweep_values[i] > c.sweep_values[i - 1];
      const bool step_down = c.sweep_values[i] < c.sweep_values[i - 1];
      if (!(up ? step_up : step_down)) semantic_error("sweep_values must be strictly monotone");
    }
  }
  for (double v : c.sweep_values) {
    switch (c.kind) {
      case ScenarioKind::kElevationMaskSweep:
        if (v < 0.0 || v > 90.0) semantic_error("elevation mask outside [0, 90] deg");
        break;
      case ScenarioKind::kPowerSplitSweep:
        if (v < 0.0 || v > 1.0) semantic_error("communication power share outside [0, 1]");
        break;
      case ScenarioKind::kRisDistanceSweep:
        if (!(v > 0.0)) semantic_error("satellite-RIS distance must be positive");
        break;
      case ScenarioKind::kIndoorDistanceSweep:
        if (!(v > 0.0)) semantic_error("indoor wall offset must be positive");
        break;
    }
  }

  if (const auto* n = detail::get_object(doc, "noise", {"pseudorange_sigma_m", "doppler_sigma_hz", "range_sigma_m"})) {
    if (auto v = detail::get_number(*n, "noise", "pseudorange_sigma_m")) c.noise.pseudorange_sigma_m = *v;
    if (auto v = detail::get_number(*n, "noise", "doppler_sigma_hz")) c.noise.doppler_sigma_hz = *v;
    if (auto v = detail::get_number(*n, "noise", "range_sigma_m")) c.noise.range_sigma_m = *v;
  }
  if (c.noise.pseudorange_sigma_m < 0.0 || c.noise.doppler_sigma_hz < 0.0 || c.noise.range_sigma_m < 0.0) {
    semantic_error("noise standard deviations must be non-negative");
  }

  c.link = default_link(c.kind);
  if (const auto* l = detail::get_object(
          doc, "link", {"bandwidth_hz", "noise_power_w", "carrier_hz", "fading_k", "eirp_dbw", "rx_gain_db"})) {
    if (auto v = detail::get_number(*l, "link", "bandwidth_hz")) c.link.bandwidth_hz = *v;
    if (auto v = detail::get_number(*l, "link", "noise_power_w")) c.link.noise_power_w = *v;
    if (auto v = detail::get_number(*l, "link", "carrier_hz")) c.link.carrier_hz = *v;
    if (auto v = detail::get_number(*l, "link", "fading_k")) c.link.fading_k = *v;
    if (auto v = detail::get_number(*l, "link", "eirp_dbw")) c.link.eirp_dbw = *v;
    if (auto v = detail::get_number(*l, "link", "rx_gain_db")) c.link.rx_gain_db = *v;
  }
  if (!(c.link.bandwidth_hz > 0.0)) semantic_error("link.bandwidth_hz must be positive");
  if (!(c.link.noise_power_w > 0.0)) semantic_error("link.noise_power_w must be positive");
  if (!(c.link.carrier_hz > 0.0)) semantic_error("link.carrier_hz must be positive");
  if (c.link.fading_k < 0.0) semantic_error("link.fading_k must be non-negative");

  if (auto v = detail::get_integer(doc, "", "rng_seed")) {
    if (*v < 0) semantic_error("rng_seed must be non-negative");
    c.rng_seed = static_cast<std::uint64_t>(*v);
  }
  c.trials = default_trials(c.kind);
  if (auto v = detail::get_integer(doc, "", "trials")) {
    if (*v < 1) semantic_error("trials must be at least 1");
    c.trials = static_cast<std::size_t>(*v);
  }
  c.output_path = std::string(to_string(c.kind)) + ".csv";
  if (auto v = detail::get_string(doc, "", "output_path")) {
    if (v->empty()) semantic_error("output_path must not be empty");
    c.output_path = *v;
  }

  c.service_mode = c.kind == ScenarioKind::kRisDistanceSweep ? ServiceMode::kCommunicationOriented
                                                             : ServiceMode::kNavigationOriented;
  if (const auto* i = detail::get_object(doc, "inac", {"service_mode", "ris_elements", "sat_distance_m"})) {
    if (auto v = detail::get_string(*i, "inac", "service_mode")) {
      if (*v == "navigation_oriented") c.service_mode = ServiceMode::kNavigationOriented;
      else if (*v == "communication_oriented") c.service_mode = ServiceMode::kCommunicationOriented;
      else semantic_error("inac.service_mode must be navigation_oriented or communication_oriented");
    }
    if (auto v = detail::get_integer(*i, "inac", "ris_elements")) {
      if (*v < 1) semantic_error("inac.ris_elements must be at least 1");
      c.ris_elements = static_cast<std::size_t>(*v);
    }
    if (auto v = detail::get_number(*i, "inac", "sat_distance_m")) c.sat_distance_m = *v;
  }
  if (!(c.sat_distance_m > 0.0)) semantic_error("inac.sat_distance_m must be positive");

  if (const auto* i = detail::get_object(doc, "indoor", {"sync_error_s", "sync_model"})) {
    if (auto v = detail::get_number(*i, "indoor", "sync_error_s")) c.sync_error_s = *v;
    if (auto v = detail::get_string(*i, "indoor", "sync_model")) {
      if (*v == "gaussian") c.sync_model = SyncErrorModel::kGaussian;
      else if (*v == "constant_bias") c.sync_model = SyncErrorModel::kConstantBias;
      else semantic_error("indoor.sync_model must be gaussian or constant_bias");
    }
  }
  if (c.sync_error_s < 0.0) semantic_error("indoor.sync_error_s must be non-negative");

  if (const auto* p = detail::get_object(doc, "propagation", {"secular_j2"})) {
    if (auto v = detail::get_bool(*p, "propagation", "secular_j2")) c.secular_j2 = *v;
  }
  return c;
}

/// Parses and validates a config file. Malformed documents raise SchemaError.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::kSchemaError, std::string("config is not valid JSON: ") + e.what());
  }
  return validate_config(doc, path.parent_path());
}

/// The fully defaulted config as a document. The output path is left out: it
/// says where results go, not what they are.
inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["scenario_kind"] = to_string(c.kind);
  if (!c.tle_path.empty()) j["tle_path"] = c.tle_path;
  j["user_geodetic"] = {{"latitude_deg", c.user_geodetic.latitude_deg},
                        {"longitude_deg", c.user_geodetic.longitude_deg},
                        {"height_m", c.user_geodetic.height_m}};
  if (c.kind == ScenarioKind::kElevationMaskSweep) j["epoch_utc"] = c.epoch_utc.to_iso8601();
  j["sweep_values"] = {{"unit", c.sweep_unit}, {"values", c.sweep_values}};
  j["noise"] = {{"pseudorange_sigma_m", c.noise.pseudorange_sigma_m},
                {"doppler_sigma_hz", c.noise.doppler_sigma_hz},
                {"range_sigma_m", c.noise.range_sigma_m}};
  j["link"] = {{"bandwidth_hz", c.link.bandwidth_hz}, {"noise_power_w", c.link.noise_power_w},
               {"carrier_hz", c.link.carrier_hz},     {"fading_k", c.link.fading_k},
               {"eirp_dbw", c.link.eirp_dbw},         {"rx_gain_db", c.link.rx_gain_db}};
  j["rng_seed"] = c.rng_seed;
  j["trials"] = c.trials;
  j["inac"] = {{"service_mode", to_string(c.service_mode)},
               {"ris_elements", c.ris_elements},
               {"sat_distance_m", c.sat_distance_m}};
  j["indoor"] = {{"sync_error_s", c.sync_error_s}, {"sync_model", to_string(c.sync_model)}};
  j["propagation"] = {{"secular_j2", c.secular_j2}};
  return j;
}

// ---------------------------------------------------------------------------
// Results

struct SweepResultRow {
  double sweep_value = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  double metric(std::string_view name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return v;
    }
    throw Error(Errc::kInvalidArgument, "no metric named '" + std::string(name) + "'");
  }
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ScenarioResult {
  ScenarioKind kind = ScenarioKind::kElevationMaskSweep;
  std::vector<std::string> metric_names;
  std::vector<SweepResultRow> rows;
  Metadata metadata;
};

struct RunOptions {
  /// Leaves out the wall-clock timestamp so identical inputs give identical files.
  bool reproducible = false;
};

inline constexpr double kFailureSentinel = std::numeric_limits<double>::quiet_NaN();

namespace detail {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

[[noreturn]] inline void rethrow_annotated(const Error& e, double sweep_value) {
  throw Error(e.code(), "sweep value " + format_number(sweep_value) + ": " + e.what());
}

inline double rms_or_sentinel(const std::vector<double>& sq_error, const std::vector<char>& failed) {
  double sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < sq_error.size(); ++i) {
    if (!failed[i]) {
      sum += sq_error[i];
      ++ok;
    }
  }
  return ok > 0 ? std::sqrt(sum / static_cast<double>(ok)) : kFailureSentinel;
}

struct SatelliteSnapshot {
  std::vector<StateVector> ecef;
  std::vector<int> ids;
  std::size_t skipped = 0;
};

inline SatelliteSnapshot propagate_catalog(const std::vector<TwoLineElements>& records, UtcTime epoch,
                                           const PropagationOptions& opts) {
  SatelliteSnapshot snap;
  for (const auto& r : records) {
    try {
      snap.ecef.push_back(eci_to_ecef(propagate(r, epoch, opts), epoch));
      snap.ids.push_back(r.catalog_number);
    } catch (const Error& e) {
      if (e.code() != Errc::kEpochTooFar && e.code() != Errc::kNonConvergence) throw;
      ++snap.skipped;
    }
  }
  return snap;
}

inline void run_elevation(const ScenarioConfig& c, ScenarioResult& out) {
  const std::string text = read_file(c.resolved_tle_path);
  const TleCatalog catalog = parse_tle_catalog(text);
  PropagationOptions popts;
  popts.secular_j2 = c.secular_j2;
  const SatelliteSnapshot snap = propagate_catalog(catalog.records, c.epoch_utc, popts);
  const Vec3 user = geodetic_to_ecef(c.user_geodetic);
  const double noise_dbw = watts_to_dbw(c.link.noise_power_w);

  std::vector<TopocentricView> views;
  views.reserve(snap.ecef.size());
  for (std::size_t k = 0; k < snap.ecef.size(); ++k) {
    views.push_back(topocentric(user, snap.ecef[k].position, snap.ecef[k].velocity, static_cast<int>(k)));
  }

  out.metadata.emplace_back("catalog_sha256", sha256_hex(text));
  out.metadata.emplace_back("catalog_records", std::to_string(catalog.records.size()));
  out.metadata.emplace_back("catalog_rejected_records", std::to_string(catalog.issues.size()));
  out.metadata.emplace_back("catalog_skipped_epoch", std::to_string(snap.skipped));
  out.metadata.emplace_back("receiver_clock_bias_m", "0");
  out.metadata.emplace_back("solver", "unweighted Gauss-Newton, Earth-centre start, tolerance 1e-4 m, 20 iterations");

  for (double mask : c.sweep_values) {
    SweepResultRow row;
    row.sweep_value = mask;
    row.trials = c.trials;
    row.seed = c.rng_seed;
    try {
      const std::vector<TopocentricView> vis = visible_sats(views, mask);
      double pdop = kFailureSentinel;
      double snr = kFailureSentinel;
      double rms = kFailureSentinel;
      std::size_t failures = c.trials;
      if (!vis.empty()) {
        snr = 0.0;
        for (const auto& v : vis) {
          snr += received_snr_db(c.link.eirp_dbw, c.link.rx_gain_db, v.slant_range_m, c.link.carrier_hz, noise_dbw);
        }
        snr /= static_cast<double>(vis.size());
      }
      if (vis.size() >= 4) {
        try {
          pdop = dop(vis).pdop;
        } catch (const Error& e) {
          if (e.code() != Errc::kSingularGeometry) throw;
        }
        std::vector<Vec3> sats;
        for (const auto& v : vis) sats.push_back(snap.ecef[static_cast<std::size_t>(v.sat_id)].position);
        std::vector<double> sq_error(c.trials, 0.0);
        std::vector<char> failed(c.trials, 0);
        parallel_for(c.trials, [&](std::size_t i) {
          Rng rng(trial_seed(c.rng_seed, i));
          std::vector<PseudorangeObs> obs;
          obs.reserve(sats.size());
          for (std::size_t k = 0; k < sats.size(); ++k) {
            obs.push_back(synth_pseudorange(vis[k].sat_id, sats[k], user, 0.0, c.noise.pseudorange_sigma_m, rng,
                                            c.epoch_utc));
          }
          try {
            const PvtSolution s = solve_ls(obs, sats);
            if (!s.converged) {
              failed[i] = 1;
              return;
            }
            sq_error[i] = (s.position_ecef - user).squaredNorm();
          } catch (const Error&) {
            failed[i] = 1;
          }
        });
        failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), char{1}));
        rms = rms_or_sentinel(sq_error, failed);
      }
      row.metrics = {{"visible_count", static_cast<double>(vis.size())},
                     {"pdop", pdop},
                     {"rms_error_m", rms},
                     {"mean_snr_db", snr},
                     {"failures", static_cast<double>(failures)}};
    } catch (const Error& e) {
      rethrow_annotated(e, mask);
    }
    out.rows.push_back(std::move(row));
  }
}

inline double fspl_amplitude(const LinkConfig& link, double distance_m) {
  return std::pow(10.0, (link.eirp_dbw + link.rx_gain_db - fspl_db(distance_m, link.carrier_hz)) / 20.0);
}

inline void run_power_split(const ScenarioConfig& c, ScenarioResult& out) {
  FadingModel model;
  model.n_elements = c.ris_elements;
  model.sat_leg_amplitude = fspl_amplitude(c.link, c.sat_distance_m);
  model.rician_k = c.link.fading_k;
  out.metadata.emplace_back("channel",
                            "satellite-RIS line of sight with free-space loss over sat_distance_m; RIS-user Rician "
                            "with fading_k and unit mean power; passive RIS with aligned phases");
  for (double share : c.sweep_values) {
    SweepResultRow row;
    row.sweep_value = share;
    row.trials = c.trials;
    row.seed = c.rng_seed;
    try {
      const ErgodicRates r = ergodic_rates(model, PowerSplit::from_comm_power(share), c.service_mode,
                                           c.link.bandwidth_hz, c.link.noise_power_w, c.trials, c.rng_seed);
      row.metrics = {{"c_nav", r.c_nav},
                     {"c_com", r.c_com},
                     {"c_nav_half_width", r.c_nav_half_width},
                     {"c_com_half_width", r.c_com_half_width}};
    } catch (const Error& e) {
      rethrow_annotated(e, share);
    }
    out.rows.push_back(std::move(row));
  }
}

inline nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline RisSweepTemplate ris_template(const ScenarioConfig& c) {
  RisSweepTemplate t;
  t.range_sigma_m = c.noise.pseudorange_sigma_m;
  t.ris_elements = c.ris_elements;
  t.rician_k = c.link.fading_k;
  return t;
}

inline void run_ris(const ScenarioConfig& c, ScenarioResult& out) {
  const RisSweepTemplate t = ris_template(c);
  const nlohmann::json tj = {{"user_enu_m", vec_json(t.user)},
                             {"ris_enu_m", vec_json(t.ris)},
                             {"epochs", t.epochs},
                             {"center_azimuth_deg", t.center_azimuth_deg},
                             {"center_elevation_deg", t.center_elevation_deg},
                             {"max_azimuth_spread_deg", t.max_azimuth_spread_deg},
                             {"max_elevation_spread_deg", t.max_elevation_spread_deg},
                             {"spread_scale_m", t.spread_scale_m},
                             {"range_sigma_m", t.range_sigma_m},
                             {"clock_bias_m", t.clock_bias_m}};
  out.metadata.emplace_back("template", tj.dump());
  LinkParams link;
  link.carrier_hz = c.link.carrier_hz;
  link.bandwidth_hz = c.link.bandwidth_hz;
  link.noise_power_w = c.link.noise_power_w;
  link.eirp_dbw = c.link.eirp_dbw;
  link.rx_gain_db = c.link.rx_gain_db;
  const PowerSplit split = PowerSplit::from_comm_power(0.5);
  out.metadata.emplace_back("omega_c_sq", "0.5");
  for (double d : c.sweep_values) {
    SweepResultRow row;
    row.sweep_value = d;
    row.trials = c.trials;
    row.seed = c.rng_seed;
    try {
      const RisSweepPoint p = run_sat_ris_distance_point(t, d, split, c.service_mode, link, c.trials, c.rng_seed);
      row.metrics = {{"pdop", p.pdop},
                     {"rms_error_m", p.rms_error_m},
                     {"c_com", p.mean_ergodic_rate},
                     {"c_nav", p.mean_nav_rate},
                     {"failures", static_cast<double>(p.failures)}};
    } catch (const Error& e) {
      rethrow_annotated(e, d);
    }
    out.rows.push_back(std::move(row));
  }
}

inline IndoorTemplate indoor_template(const ScenarioConfig& c) {
  IndoorTemplate t;
  t.sync_error_s = c.sync_error_s;
  t.range_sigma_m = c.noise.range_sigma_m;
  t.sync_model = c.sync_model;
  return t;
}

inline void run_indoor(const ScenarioConfig& c, ScenarioResult& out) {
  const IndoorTemplate t = indoor_template(c);
  nlohmann::json anchors = nlohmann::json::array();
  for (const Vec3& a : t.anchors) anchors.push_back(vec_json(a));
  const nlohmann::json tj = {{"room_m", {10.0, 10.0, 3.0}},
                             {"anchors_m", anchors},
                             {"user_y_m", t.user_y},
                             {"user_z_m", t.user_z},
                             {"initial_guess_m", vec_json(t.initial_guess)},
                             {"estimate_bias", false}};
  out.metadata.emplace_back("template", tj.dump());
  for (double offset : c.sweep_values) {
    SweepResultRow row;
    row.sweep_value = offset;
    row.trials = c.trials;
    row.seed = c.rng_seed;
    try {
      const IndoorSweepPoint p = run_indoor_point(t, offset, c.trials, c.rng_seed);
      row.metrics = {{"mean_ris_user_distance_m", p.mean_ris_user_distance_m},
                     {"pdop", p.pdop},
                     {"rms_error_m", p.rms_error_m},
                     {"failures", static_cast<double>(p.failures)}};
    } catch (const Error& e) {
      rethrow_annotated(e, offset);
    }
    out.rows.push_back(std::move(row));
  }
}

inline std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const double unix_s = std::chrono::duration<double>(now.time_since_epoch()).count();
  return (UtcTime::from_calendar(1970, 1, 1) + unix_s).to_iso8601();
}

}  // namespace detail

/// Runs every sweep cell of a validated config. Failed trials are counted per
/// row; a failing cell never aborts the sweep. Output depends only on the
/// config (and the clock, unless options.reproducible).
inline ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {}) {
  ScenarioResult out;
  out.kind = config.kind;
  out.metric_names = metric_names(config.kind);
  out.metadata.emplace_back("tool", kToolName);
  out.metadata.emplace_back("version", kToolVersion);
  out.metadata.emplace_back("scenario_kind", to_string(config.kind));
  out.metadata.emplace_back("seed", std::to_string(config.rng_seed));
  out.metadata.emplace_back("trials", std::to_string(config.trials));
  out.metadata.emplace_back("sweep_unit", config.sweep_unit);
  out.metadata.emplace_back("config", config_to_json(config).dump());
  out.metadata.emplace_back("failure_sentinel", "NaN");
  switch (config.kind) {
    case ScenarioKind::kElevationMaskSweep: detail::run_elevation(config, out); break;
    case ScenarioKind::kPowerSplitSweep: detail::run_power_split(config, out); break;
    case ScenarioKind::kRisDistanceSweep: detail::run_ris(config, out); break;
    case ScenarioKind::kIndoorDistanceSweep: detail::run_indoor(config, out); break;
  }
  if (!options.reproducible) out.metadata.emplace_back("generated_utc", detail::utc_now_iso8601());
  return out;
}

// ---------------------------------------------------------------------------
// CSV

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

/// CSV text with CRLF line ends: '#' metadata lines, a header of sweep_value
/// plus the metric names, then one line per row at 9 significant digits.
inline std::string format_csv(std::span<const SweepResultRow> rows, const Metadata& metadata,
                              std::span<const std::string> names) {
  std::string out;
  for (const auto& [k, v] : metadata) {
    std::string value = v;
    std::replace(value.begin(), value.end(), '\n', ' ');
    std::replace(value.begin(), value.end(), '\r', ' ');
    out += "# " + k + ": " + value + "\r\n";
  }
  out += "sweep_value";
  for (const auto& n : names) out += "," + csv_field(n);
  out += "\r\n";
  for (const auto& row : rows) {
    if (row.metrics.size() != names.size()) {
      throw Error(Errc::kLengthMismatch, "row metric count does not match the header");
    }
    out += detail::format_number(row.sweep_value);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (row.metrics[i].first != names[i]) throw Error(Errc::kHeaderMismatch, "row metric order differs from header");
      out += "," + detail::format_number(row.metrics[i].second);
    }
    out += "\r\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::kIoError, "cannot open '" + path.string() + "' for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.flush();
  if (!f) throw Error(Errc::kIoError, "error writing '" + path.string() + "'");
}

inline void emit_csv(std::span<const SweepResultRow> rows, const Metadata& metadata, std::span<const std::string> names,
                     const std::filesystem::path& path) {
  write_text_file(path, format_csv(rows, metadata, names));
}

inline void emit_csv(const ScenarioResult& result, const std::filesystem::path& path) {
  emit_csv(result.rows, result.metadata, result.metric_names, path);
}

// ---------------------------------------------------------------------------
// Plot scripts

namespace detail {

inline std::vector<std::string> read_csv_header(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(Errc::kMissingFile, "cannot open '" + csv.string() + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    return cols;
  }
  throw Error(Errc::kHeaderMismatch, "'" + csv.string() + "' has no header line");
}

struct Axis {
  std::string column;
  std::string title;
};

struct PlotLayout {
  std::string x_column;
  std::string x_label;
  std::string y1_label;
  std::string y2_label;
  std::vector<Axis> y1;
  std::vector<Axis> y2;
  bool y1_log = false;
};

inline PlotLayout plot_layout(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kElevationMaskSweep:
      return {"sweep_value", "Elevation mask (deg)", "RMS position error (m)", "Mean SNR (dB)",
              {{"rms_error_m", "RMS error"}}, {{"mean_snr_db", "Mean SNR"}}, false};
    case ScenarioKind::kPowerSplitSweep:
      return {"sweep_value", "Communication power share {/Symbol w}_C^2", "Navigation rate (bit/s)",
              "Communication rate (bit/s)", {{"c_nav", "c_{nav}"}}, {{"c_com", "c_{com}"}}, false};
    case ScenarioKind::kRisDistanceSweep:
      return {"sweep_value", "Satellite-RIS distance (m)", "PDOP / RMS error (m)", "Ergodic rate (bit/s)",
              {{"pdop", "PDOP"}, {"rms_error_m", "RMS error"}}, {{"c_com", "Ergodic rate"}}, true};
    case ScenarioKind::kIndoorDistanceSweep:
      return {"mean_ris_user_distance_m", "Mean RIS-user distance (m)", "RMS position error (m)", "PDOP",
              {{"rms_error_m", "RMS error"}}, {{"pdop", "PDOP"}}, false};
  }
  return {};
}

inline std::string gnuplot_quote(std::string_view s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "''";
    else out += ch;
  }
  return out + "'";
}

}  // namespace detail

/// Dual-axis gnuplot script for a CSV written by emit_csv. The script renders
/// an SVG next to the CSV. Throws HeaderMismatch when the CSV header is not the
/// one this kind produces.
inline std::string make_plot_script(const std::filesystem::path& csv_path, ScenarioKind kind) {
  const std::vector<std::string> header = detail::read_csv_header(csv_path);
  std::vector<std::string> expected{"sweep_value"};
  for (const auto& n : metric_names(kind)) expected.push_back(n);
  if (header != expected) {
    std::string got;
    for (const auto& h : header) got += (got.empty() ? "" : ",") + h;
    throw Error(Errc::kHeaderMismatch, "CSV header '" + got + "' does not match " + to_string(kind));
  }
  const auto column = [&](const std::string& name) {
    return std::to_string(std::find(header.begin(), header.end(), name) - header.begin() + 1);
  };
  const detail::PlotLayout layout = detail::plot_layout(kind);
  std::filesystem::path svg = csv_path;
  svg.replace_extension(".svg");

  std::ostringstream s;
  s << "# " << kToolName << " " << to_string(kind) << "\n";
  s << "set terminal svg size 900,560 enhanced\n";
  s << "set output " << detail::gnuplot_quote(svg.string()) << "\n";
  s << "set datafile separator comma\n";
  s << "set datafile commentschars '#'\n";
  s << "set datafile missing 'NaN'\n";
  s << "set key top center\n";
  s << "set grid\n";
  s << "set xlabel " << detail::gnuplot_quote(layout.x_label) << "\n";
  s << "set ylabel " << detail::gnuplot_quote(layout.y1_label) << "\n";
  s << "set y2label " << detail::gnuplot_quote(layout.y2_label) << "\n";
  s << "set ytics nomirror\n";
  s << "set y2tics\n";
  if (layout.y1_log) s << "set logscale y\n";
  s << "data = " << detail::gnuplot_quote(csv_path.string()) << "\n";
  s << "plot";
  bool first = true;
  const auto emit = [&](const detail::Axis& a, const char* axes, const char* style) {
    s << (first ? " " : ", \\\n     ") << "data every ::1 using " << column(layout.x_column) << ":"
      << column(a.column) << " axes " << axes << " with " << style << " title "
      << detail::gnuplot_quote(a.title);
    first = false;
  };
  for (const auto& a : layout.y1) emit(a, "x1y1", "linespoints");
  for (const auto& a : layout.y2) emit(a, "x1y2", "linespoints dashtype 2");
  s << "\n";
  return s.str();
}

inline void emit_plot_script(const std::filesystem::path& csv_path, ScenarioKind kind,
                             const std::filesystem::path& script_path) {
  write_text_file(script_path, make_plot_script(csv_path, kind));
}

// ---------------------------------------------------------------------------
// Catalog summary

struct CatalogSummary {
  std::size_t records = 0;
  std::vector<TleIssue> issues;
  std::optional<UtcTime> earliest_epoch;
  std::optional<UtcTime> latest_epoch;
  double min_inclination_deg = 0.0;
  double max_inclination_deg = 0.0;
  double min_mean_altitude_km = 0.0;
  double max_mean_altitude_km = 0.0;
  std::map<int, std::size_t> inclination_histogram;  // whole degrees -> count
  std::string sha256;
};

inline CatalogSummary summarize_catalog(std::string_view text) {
  const TleCatalog cat = parse_tle_catalog(text);
  CatalogSummary s;
  s.records = cat.records.size();
  s.issues = cat.issues;
  s.sha256 = sha256_hex(text);
  bool first = true;
  for (const auto& r : cat.records) {
    const double alt_km = (r.semi_major_axis_m() - constants::kWgs84A) / 1000.0;
    if (first) {
      s.earliest_epoch = s.latest_epoch = r.epoch_utc;
      s.min_inclination_deg = s.max_inclination_deg = r.inclination_deg;
      s.min_mean_altitude_km = s.max_mean_altitude_km = alt_km;
      first = false;
    } else {
      s.earliest_epoch = std::min(*s.earliest_epoch, r.epoch_utc);
      s.latest_epoch = std::max(*s.latest_epoch, r.epoch_utc);
      s.min_inclination_deg = std::min(s.min_inclination_deg, r.inclination_deg);
      s.max_inclination_deg = std::max(s.max_inclination_deg, r.inclination_deg);
      s.min_mean_altitude_km = std::min(s.min_mean_altitude_km, alt_km);
      s.max_mean_altitude_km = std::max(s.max_mean_altitude_km, alt_km);
    }
    ++s.inclination_histogram[static_cast<int>(std::floor(r.inclination_deg))];
  }
  return s;
}

}  // namespace inac
