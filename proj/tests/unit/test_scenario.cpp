#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace inac;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using json = nlohmann::json;

namespace {

json elevation_doc() {
  return {{"scenario_kind", "elevation_mask_sweep"},
          {"tle_path", test::data_path("starlink_like_shells.tle").string()}};
}

std::string message_of(const json& doc) {
  try {
    (void)validate_config(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("inac_unit_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> crlf_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find("\r\n", start);
    REQUIRE(end != std::string::npos);
    lines.push_back(text.substr(start, end - start));
    start = end + 2;
  }
  return lines;
}

}  // namespace

TEST_CASE("Config defaults", "[scenario]") {
  const ScenarioConfig c = validate_config(elevation_doc());
  CHECK(c.kind == ScenarioKind::kElevationMaskSweep);
  CHECK(c.noise.pseudorange_sigma_m == 2.0);
  REQUIRE(c.sweep_values.size() == 14);
  for (std::size_t i = 0; i < 14; ++i) CHECK_THAT(c.sweep_values[i], WithinAbs(5.0 + 5.0 * i, 1e-12));
  CHECK(c.sweep_unit == "deg");
  CHECK(c.trials == 100);
  CHECK(c.rng_seed == 1);
  CHECK(c.user_geodetic.latitude_deg == kDefaultUser.latitude_deg);
  CHECK(c.output_path == "elevation_mask_sweep.csv");
  CHECK(c.link.carrier_hz == constants::kL1CarrierHz);
  // epoch falls back to the newest record of the catalog
  // the TLE day fraction carries 8 decimals, so compare to well under a millisecond
  CHECK(std::fabs(c.epoch_utc - UtcTime::from_year_day(2025, 85.0 + 8.0 / 24.0)) < 1e-3);

  const ScenarioConfig p = validate_config({{"scenario_kind", "power_split_sweep"}});
  CHECK(p.sweep_values.size() == 21);
  CHECK(p.sweep_values.front() == 0.0);
  CHECK(p.sweep_values.back() == 1.0);
  CHECK(p.service_mode == ServiceMode::kNavigationOriented);
  CHECK(validate_config({{"scenario_kind", "ris_distance_sweep"}}).service_mode ==
        ServiceMode::kCommunicationOriented);
  CHECK(validate_config({{"scenario_kind", "indoor_distance_sweep"}}).sync_error_s == 10e-9);
}

TEST_CASE("Config echo round trip", "[scenario]") {
  for (const char* kind : {"power_split_sweep", "ris_distance_sweep", "indoor_distance_sweep"}) {
    const ScenarioConfig c = validate_config({{"scenario_kind", kind}, {"trials", 7}});
    const json echoed = config_to_json(c);
    CHECK(config_to_json(validate_config(echoed)) == echoed);
  }
  const ScenarioConfig e = validate_config(elevation_doc());
  CHECK(config_to_json(validate_config(config_to_json(e))) == config_to_json(e));
  CHECK_FALSE(config_to_json(e).contains("output_path"));
}

TEST_CASE("Config errors", "[scenario]") {
  SECTION("trials = 0") {
    json d = elevation_doc();
    d["trials"] = 0;
    CHECK(test::error_code_of([&] { (void)validate_config(d); }) == Errc::kSemanticError);
  }
  SECTION("unknown keys are named") {
    json d = elevation_doc();
    d["trails"] = 10;
    CHECK(test::error_code_of([&] { (void)validate_config(d); }) == Errc::kSchemaError);
    CHECK_THAT(message_of(d), ContainsSubstring("'trails'"));
    json n = elevation_doc();
    n["noise"] = {{"sigma", 1.0}};
    CHECK_THAT(message_of(n), ContainsSubstring("'noise.sigma'"));
  }
  SECTION("wrong types") {
    json d = elevation_doc();
    d["trials"] = "many";
    CHECK(test::error_code_of([&] { (void)validate_config(d); }) == Errc::kSchemaError);
    json s = elevation_doc();
    s["rng_seed"] = 1.5;
    CHECK(test::error_code_of([&] { (void)validate_config(s); }) == Errc::kSchemaError);
    CHECK(test::error_code_of([&] { (void)validate_config(json::array()); }) == Errc::kSchemaError);
  }
  SECTION("semantic violations") {
    const auto code = [](json d) { return test::error_code_of([&] { (void)validate_config(d); }); };
    json d = elevation_doc();
    d["sweep_values"] = {{"values", {5, 10, 10}}};
    CHECK(code(d) == Errc::kSemanticError);
    d["sweep_values"] = {{"values", json::array()}};
    CHECK(code(d) == Errc::kSemanticError);
    d["sweep_values"] = {{"unit", "m"}, {"values", {5}}};
    CHECK(code(d) == Errc::kSemanticError);
    d["sweep_values"] = {{"values", {95}}};
    CHECK(code(d) == Errc::kSemanticError);
    CHECK(code({{"scenario_kind", "fig6"}}) == Errc::kSemanticError);
    CHECK(code({{"scenario_kind", "elevation_mask_sweep"}}) == Errc::kSemanticError);
    CHECK(code({{"scenario_kind", "power_split_sweep"}, {"link", {{"noise_power_w", 0.0}}}}) ==
          Errc::kSemanticError);
    CHECK(code({{"scenario_kind", "indoor_distance_sweep"}, {"indoor", {{"sync_model", "laplace"}}}}) ==
          Errc::kSemanticError);
    // descending sweeps are allowed
    CHECK_NOTHROW(validate_config({{"scenario_kind", "power_split_sweep"}, {"sweep_values", {{"values", {1, 0.5, 0}}}}}));
  }
  SECTION("missing files") {
    json d = elevation_doc();
    d["tle_path"] = "no/such/catalog.tle";
    CHECK(test::error_code_of([&] { (void)validate_config(d); }) == Errc::kMissingFile);
    CHECK(test::error_code_of([] { (void)load_config("no/such/config.json"); }) == Errc::kMissingFile);
  }
  SECTION("malformed JSON") {
    const auto dir = scratch_dir();
    std::ofstream(dir / "bad.json") << "{\"scenario_kind\": ";
    CHECK(test::error_code_of([&] { (void)load_config(dir / "bad.json"); }) == Errc::kSchemaError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("Shipped configs validate", "[scenario]") {
  for (const char* name : {"elevation_mask_sweep.json", "power_split_sweep.json", "ris_distance_sweep.json",
                           "indoor_distance_sweep.json"}) {
    INFO(name);
    CHECK_NOTHROW(load_config(test::config_path(name)));
  }
  const ScenarioConfig e = load_config(test::config_path("elevation_mask_sweep.json"));
  CHECK(std::filesystem::is_regular_file(e.resolved_tle_path));
}

TEST_CASE("Elevation sweep rows", "[scenario]") {
  json d = elevation_doc();
  d["epoch_utc"] = "2025-03-26T08:00:00Z";
  d["sweep_values"] = {{"values", {10, 40, 89.9}}};
  d["trials"] = 20;
  d["noise"] = {{"pseudorange_sigma_m", 0.0}};
  const ScenarioResult r = run_scenario(validate_config(d), {.reproducible = true});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.metric_names == metric_names(ScenarioKind::kElevationMaskSweep));

  for (const auto& row : r.rows) {
    INFO("mask " << row.sweep_value);
    if (row.metric("visible_count") >= 4) {
      CHECK(row.metric("rms_error_m") < 1e-6);
      CHECK(row.metric("failures") == 0.0);
    }
  }
  const SweepResultRow& top = r.rows.back();
  CHECK(top.metric("visible_count") == 0.0);
  CHECK(std::isnan(top.metric("rms_error_m")));
  CHECK(std::isnan(top.metric("pdop")));
  CHECK(top.metric("failures") == 20.0);
  CHECK(r.rows[0].metric("visible_count") >= r.rows[1].metric("visible_count"));

  bool has_hash = false;
  for (const auto& [k, v] : r.metadata) {
    if (k == "catalog_sha256") has_hash = v.size() == 64;
    CHECK(k != "generated_utc");
  }
  CHECK(has_hash);
}

TEST_CASE("Runs are repeatable", "[scenario]") {
  for (const char* kind : {"power_split_sweep", "ris_distance_sweep", "indoor_distance_sweep"}) {
    INFO(kind);
    const ScenarioConfig c = validate_config({{"scenario_kind", kind}, {"trials", 25}, {"rng_seed", 77}});
    const ScenarioResult a = run_scenario(c, {.reproducible = true});
    const ScenarioResult b = run_scenario(c, {.reproducible = true});
    CHECK(format_csv(a.rows, a.metadata, a.metric_names) == format_csv(b.rows, b.metadata, b.metric_names));

    const ScenarioResult stamped = run_scenario(c);
    CHECK(stamped.metadata.back().first == "generated_utc");

    bool echoed = false;
    for (const auto& [k, v] : a.metadata) {
      if (k == "config") echoed = json::parse(v) == config_to_json(c);
    }
    CHECK(echoed);
  }
}

TEST_CASE("Power split sweep shape", "[scenario]") {
  const ScenarioConfig c = validate_config({{"scenario_kind", "power_split_sweep"}, {"trials", 300}});
  const ScenarioResult r = run_scenario(c, {.reproducible = true});
  REQUIRE(r.rows.size() == 21);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].metric("c_com") >= r.rows[i - 1].metric("c_com"));
    CHECK(r.rows[i].metric("c_nav") <= r.rows[i - 1].metric("c_nav"));
  }
  CHECK(r.rows.front().metric("c_com") == 0.0);
  CHECK(r.rows.back().metric("c_nav") == 0.0);
}

TEST_CASE("CSV layout", "[csv]") {
  const Metadata meta{{"tool", "inac-sim"}, {"note", "two\nlines"}};
  const std::vector<std::string> names{"a", "b"};

  SECTION("header only") {
    const std::string text = format_csv({}, meta, names);
    const auto lines = crlf_lines(text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "# tool: inac-sim");
    CHECK(lines[1] == "# note: two lines");
    CHECK(lines[2] == "sweep_value,a,b");
  }

  SECTION("one row, two metrics") {
    const std::vector<SweepResultRow> rows{{0.1, {{"a", 1.0 / 3.0}, {"b", -0.0}}, 5, 1}};
    const auto lines = crlf_lines(format_csv(rows, meta, names));
    REQUIRE(lines.size() == 4);
    CHECK(lines[3] == "0.1,0.333333333,0");
    CHECK(std::count(lines[3].begin(), lines[3].end(), ',') == 2);
  }

  SECTION("number rendering") {
    const std::vector<SweepResultRow> rows{
        {1e-12, {{"a", kFailureSentinel}, {"b", 123456789012.0}}, 1, 1},
        {2.0, {{"a", 6.02214076e23}, {"b", -1.5}}, 1, 1}};
    const auto lines = crlf_lines(format_csv(rows, {}, names));
    CHECK(lines[1] == "1e-12,NaN,1.23456789e+11");
    CHECK(lines[2] == "2,6.02214076e+23,-1.5");
  }

  SECTION("RFC 4180 quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    const std::vector<std::string> odd{"x,y"};
    const std::vector<SweepResultRow> rows{{1.0, {{"x,y", 2.0}}, 1, 1}};
    CHECK(crlf_lines(format_csv(rows, {}, odd))[0] == "sweep_value,\"x,y\"");
  }

  SECTION("rows must match the header") {
    const std::vector<SweepResultRow> short_row{{1.0, {{"a", 1.0}}, 1, 1}};
    CHECK(test::error_code_of([&] { (void)format_csv(short_row, {}, names); }) == Errc::kLengthMismatch);
    const std::vector<SweepResultRow> swapped{{1.0, {{"b", 1.0}, {"a", 2.0}}, 1, 1}};
    CHECK(test::error_code_of([&] { (void)format_csv(swapped, {}, names); }) == Errc::kHeaderMismatch);
  }

  SECTION("file output") {
    const auto dir = scratch_dir();
    const std::vector<SweepResultRow> rows{{1.0, {{"a", 1.0}, {"b", 2.0}}, 1, 1}};
    emit_csv(rows, meta, names, dir / "out.csv");
    CHECK(slurp(dir / "out.csv") == format_csv(rows, meta, names));
    CHECK(test::error_code_of([&] { emit_csv(rows, meta, names, dir / "missing" / "out.csv"); }) == Errc::kIoError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("Plot scripts", "[plot]") {
  const auto dir = scratch_dir();

  SECTION("elevation sweep: error and SNR on two axes") {
    const ScenarioResult r = run_scenario(
        validate_config({{"scenario_kind", "elevation_mask_sweep"},
                         {"tle_path", test::data_path("starlink_like_shells.tle").string()},
                         {"sweep_values", {{"values", {10, 30}}}},
                         {"trials", 5}}),
        {.reproducible = true});
    emit_csv(r, dir / "elev.csv");
    emit_plot_script(dir / "elev.csv", ScenarioKind::kElevationMaskSweep, dir / "elev.gp");
    const std::string s = slurp(dir / "elev.gp");
    CHECK_THAT(s, ContainsSubstring("set terminal svg"));
    CHECK_THAT(s, ContainsSubstring("set datafile separator comma"));
    CHECK_THAT(s, ContainsSubstring("set y2tics"));
    CHECK_THAT(s, ContainsSubstring("(m)"));
    CHECK_THAT(s, ContainsSubstring("(dB)"));
    CHECK_THAT(s, ContainsSubstring("using 1:4 axes x1y1"));  // rms_error_m
    CHECK_THAT(s, ContainsSubstring("using 1:5 axes x1y2"));  // mean_snr_db
    CHECK_THAT(s, ContainsSubstring("elev.svg"));
  }

  SECTION("power split: both rates against the share") {
    const ScenarioResult r =
        run_scenario(validate_config({{"scenario_kind", "power_split_sweep"}, {"trials", 5}}), {.reproducible = true});
    emit_csv(r, dir / "split.csv");
    const std::string s = make_plot_script(dir / "split.csv", ScenarioKind::kPowerSplitSweep);
    CHECK_THAT(s, ContainsSubstring("using 1:2 axes x1y1"));  // c_nav
    CHECK_THAT(s, ContainsSubstring("using 1:3 axes x1y2"));  // c_com
    CHECK_THAT(s, ContainsSubstring("{/Symbol w}_C"));

    CHECK(test::error_code_of([&] { (void)make_plot_script(dir / "split.csv", ScenarioKind::kIndoorDistanceSweep); }) ==
          Errc::kHeaderMismatch);
  }

  SECTION("indoor uses the mean distance as abscissa") {
    const ScenarioResult r = run_scenario(
        validate_config({{"scenario_kind", "indoor_distance_sweep"}, {"trials", 5}}), {.reproducible = true});
    emit_csv(r, dir / "indoor.csv");
    CHECK_THAT(make_plot_script(dir / "indoor.csv", ScenarioKind::kIndoorDistanceSweep),
               ContainsSubstring("using 2:4 axes x1y1"));
  }

  SECTION("missing or headerless CSV") {
    CHECK(test::error_code_of([&] { (void)make_plot_script(dir / "nope.csv", ScenarioKind::kRisDistanceSweep); }) ==
          Errc::kMissingFile);
    std::ofstream(dir / "comments.csv") << "# only comments\r\n";
    CHECK(test::error_code_of([&] { (void)make_plot_script(dir / "comments.csv", ScenarioKind::kRisDistanceSweep); }) ==
          Errc::kHeaderMismatch);
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("Catalog summary", "[scenario]") {
  const std::string text = slurp(test::data_path("starlink_like_shells.tle"));
  const CatalogSummary s = summarize_catalog(text);
  CHECK(s.records == 4408);
  CHECK(s.issues.empty());
  CHECK(s.sha256 == sha256_hex(text));
  CHECK(s.min_inclination_deg == 53.0);
  CHECK_THAT(s.max_inclination_deg, WithinAbs(97.6, 1e-9));
  std::size_t total = 0;
  for (const auto& [deg, n] : s.inclination_histogram) total += n;
  CHECK(total == 4408);

  // NIST test vector
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
