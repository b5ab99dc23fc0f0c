// inac-sim: run, validate and inspect INAC simulation scenarios.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "inac/inac.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(inac::Errc code) {
  switch (code) {
    case inac::Errc::kSchemaError:
    case inac::Errc::kSemanticError:
    case inac::Errc::kMissingFile:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int report(const inac::Error& e) {
  std::cerr << "inac-sim: " << inac::to_string(e.code()) << ": " << e.what() << "\n";
  return exit_code_for(e.code());
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  std::optional<std::string> out;
  bool reproducible = false;
  bool emit_plot = false;
};

int cmd_run(const RunArgs& args) {
  inac::ScenarioConfig cfg;
  try {
    cfg = inac::load_config(args.config);
    if (args.seed) cfg.rng_seed = *args.seed;
    if (args.trials) {
      if (*args.trials < 1) throw inac::Error(inac::Errc::kSemanticError, "--trials must be at least 1");
      cfg.trials = static_cast<std::size_t>(*args.trials);
    }
    if (args.out) cfg.output_path = *args.out;
  } catch (const inac::Error& e) {
    return report(e);
  }

  try {
    const inac::ScenarioResult result = inac::run_scenario(cfg, {.reproducible = args.reproducible});
    inac::emit_csv(result, cfg.output_path);
    std::cerr << "wrote " << cfg.output_path.string() << " (" << result.rows.size() << " rows)\n";
    if (args.emit_plot) {
      std::filesystem::path script = cfg.output_path;
      script.replace_extension(".gp");
      inac::emit_plot_script(cfg.output_path, cfg.kind, script);
      std::cerr << "wrote " << script.string() << "\n";
    }
  } catch (const inac::Error& e) {
    const int code = report(e);
    return code == kExitConfig ? kExitConfig : kExitRuntime;
  }
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  try {
    const inac::ScenarioConfig cfg = inac::load_config(path);
    std::cout << inac::config_to_json(cfg).dump(2) << "\n";
    std::cout << "output_path: " << cfg.output_path.string() << "\n";
  } catch (const inac::Error& e) {
    return report(e);
  }
  return kExitOk;
}

int cmd_tle_info(const std::string& path) {
  try {
    const std::string text = inac::detail::read_file(path);
    const inac::CatalogSummary s = inac::summarize_catalog(text);
    std::cout << "file: " << path << "\n";
    std::cout << "sha256: " << s.sha256 << "\n";
    std::cout << "records: " << s.records << "\n";
    std::cout << "rejected: " << s.issues.size() << "\n";
    for (const auto& issue : s.issues) {
      std::cout << "  line " << issue.line << ": " << inac::to_string(issue.code) << ": " << issue.message << "\n";
    }
    if (s.records == 0) {
      std::cerr << "inac-sim: no valid records in " << path << "\n";
      return kExitRuntime;
    }
    std::printf("epoch range: %s .. %s\n", s.earliest_epoch->to_iso8601().c_str(),
                s.latest_epoch->to_iso8601().c_str());
    std::printf("inclination: %.4f .. %.4f deg\n", s.min_inclination_deg, s.max_inclination_deg);
    std::printf("mean altitude: %.1f .. %.1f km\n", s.min_mean_altitude_km, s.max_mean_altitude_km);
    std::cout << "inclination histogram (deg: count):\n";
    for (const auto& [deg, count] : s.inclination_histogram) std::printf("  %3d: %zu\n", deg, count);
  } catch (const inac::Error& e) {
    return report(e);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INAC simulation toolkit", "inac-sim"};
  app.set_version_flag("--version", std::string(inac::kToolVersion));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its CSV");
  run_cmd->add_option("--config", run.config, "Scenario config (JSON)")->required();
  run_cmd->add_option("--seed", run.seed, "Override rng_seed");
  run_cmd->add_option("--trials", run.trials, "Override trials");
  run_cmd->add_option("--out", run.out, "Override output_path");
  run_cmd->add_flag("--reproducible", run.reproducible, "Omit the timestamp so reruns are byte-identical");
  run_cmd->add_flag("--emit-plot", run.emit_plot, "Also write a gnuplot script next to the CSV");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Validate a config and print it with defaults filled");
  validate_cmd->add_option("--config", validate_path, "Scenario config (JSON)")->required();

  std::string tle_path;
  auto* tle_cmd = app.add_subcommand("tle-info", "Summarize a TLE catalog");
  tle_cmd->add_option("path", tle_path, "TLE file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*tle_cmd) return cmd_tle_info(tle_path);
  } catch (const std::exception& e) {
    std::cerr << "inac-sim: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
