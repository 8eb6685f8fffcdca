// warpcurv: runs verification scenarios and prints reports.
//
//   warpcurv verify <scenario> [--format text|csv|json] [--tolerance X] [--grid N]
//   warpcurv family <generator> --params k=v ... [--constants c ...] [--format ...]
//
// Exit status: 0 all checks pass, 1 a check failed, 2 configuration or spec
// error, 3 numerical instability.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "warpcurv/error.hpp"
#include "warpcurv/report.hpp"

namespace {

using namespace warpcurv;

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("warpcurv");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  // Same syntax as SPDLOG_LEVEL, e.g. WARPCURV_LOG=debug.
  if (const char* env = std::getenv("WARPCURV_LOG")) spdlog::cfg::helpers::load_levels(env);
}

// "p=1:0" -> ("p", {1, 0}). Throws ConfigParseError.
std::pair<std::string, std::vector<double>> parse_param(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigParseError(0, 0, "--params expects name=value, got '" + arg + "'");
  }
  std::vector<double> values;
  std::size_t start = eq + 1;
  while (true) {
    const auto colon = arg.find(':', start);
    const std::string piece = arg.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(piece, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (piece.empty() || used != piece.size()) {
      throw ConfigParseError(0, start + 1, "bad number '" + piece + "' in --params " + arg);
    }
    values.push_back(v);
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return {arg.substr(0, eq), values};
}

int run(ScenarioConfig config, const std::optional<std::string>& format,
        const std::optional<double>& tolerance, const std::optional<int>& grid) {
  if (format) override_format(config, parse_format(*format));
  if (tolerance) override_tolerance(config, *tolerance);
  if (grid) override_grid_points(config, *grid);
  spdlog::info("task {} with {} fiber(s)", to_string(config.task), config.fibers.size());
  const RunReport report = run_scenario(config);
  spdlog::debug("finished in {:.3f} s", report.wall_clock_seconds);
  std::cout << emit_report(report, config.format);
  std::cout.flush();
  return exit_status(report);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Curvature checks for connections on multiply warped products"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::optional<std::string> format;
  std::optional<double> tolerance;
  std::optional<int> grid;

  std::string scenario_path;
  auto* verify = app.add_subcommand("verify", "Run a scenario file");
  verify->add_option("scenario", scenario_path, "Scenario file")->required();
  verify->add_option("--format", format, "text, csv or json");
  verify->add_option("--tolerance", tolerance, "Tolerance for every check");
  verify->add_option("--grid", grid, "Number of grid points");

  std::string generator;
  std::vector<std::string> params;
  std::vector<double> constants;
  double lower = 0.0;
  double upper = 1.0;
  bool generate_only = false;
  auto* family = app.add_subcommand("family", "Generate and verify a solution family");
  family->add_option("generator", generator,
                     "grw-einstein, grw-scalar, kasner-einstein or kasner-scalar")
      ->required();
  family->add_option("--params", params, "name=value, lists separated by ':'")->required();
  family->add_option("--constants", constants, "Free constants of the family");
  family->add_option("--lower", lower, "Interval start");
  family->add_option("--upper", upper, "Interval end");
  family->add_flag("--no-ode", generate_only, "Skip the RK4 cross-check");
  family->add_option("--format", format, "text, csv or json");
  family->add_option("--tolerance", tolerance, "Tolerance for every check");
  family->add_option("--grid", grid, "Number of grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      spdlog::info("loading {}", scenario_path);
      return run(load_scenario(scenario_path), format, tolerance, grid);
    }
    ScenarioConfig c;
    c.task = generate_only ? Task::FamilyGenerate : Task::FamilyVerify;
    c.generator = generator;
    c.echo.emplace_back("task", to_string(c.task));
    c.echo.emplace_back("generator", generator);
    for (const auto& p : params) {
      c.params.push_back(parse_param(p));
      c.echo.emplace_back("param." + c.params.back().first, p.substr(p.find('=') + 1));
    }
    if (!constants.empty()) {
      c.constants = constants;
      std::string s;
      for (double v : constants) s += (s.empty() ? "" : ", ") + std::to_string(v);
      c.echo.emplace_back("constants", s);
    }
    if (!(lower < upper)) throw ConfigParseError(0, 0, "--lower must be below --upper");
    c.grid_lower = lower;
    c.grid_upper = upper;
    c.grid_points = 33;
    c.echo.emplace_back("grid.lower", std::to_string(lower));
    c.echo.emplace_back("grid.upper", std::to_string(upper));
    c.echo.emplace_back("grid.points", "33");
    return run(std::move(c), format, tolerance, grid);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
