#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "warpcurv/connection.hpp"
#include "warpcurv/einstein.hpp"
#include "warpcurv/error.hpp"
#include "warpcurv/expr.hpp"
#include "warpcurv/manifold.hpp"

namespace warpcurv {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Task {
  OracleVerify,
  EinsteinCheck,
  ScalarCheck,
  FamilyGenerate,
  FamilyVerify,
  NonexistenceScan,
};

std::string to_string(Task t);

enum class OutputFormat { Text, Csv, Json };

// Throws UnsupportedFormat.
OutputFormat parse_format(std::string_view name);
std::string to_string(OutputFormat f);

struct FiberConfig {
  FiberGeometry geometry = FiberGeometry::FlatTorus;
  int dim = 1;  // only read for the torus
  double radius = 1.0;
  std::string warping;
  ScalarExpr warping_expr;
};

struct ScenarioConfig {
  std::string name;
  Task task = Task::OracleVerify;

  BaseKind base = BaseKind::Interval;
  std::vector<double> base_signature;  // empty: -1 for the interval, (-1, 1) for flat
  std::vector<std::string> base_coords;
  std::optional<double> base_lower;
  std::optional<double> base_upper;
  bool twisted = false;
  std::vector<FiberConfig> fibers;

  // "none", "base" or "fiber<N>" with N 1-based.
  std::string p_location = "none";
  std::vector<std::string> p_components;
  std::vector<ScalarExpr> p_exprs;
  ConnectionKind connection = ConnectionKind::SemiSymmetricNonMetric;

  double lambda = 0.0;
  std::optional<double> scalar;

  double grid_lower = 0.0;
  double grid_upper = 1.0;
  int grid_points = kDefaultGridPoints;
  // Overrides every check's own tolerance when set.
  std::optional<double> tolerance;
  OutputFormat format = OutputFormat::Text;

  // family-* tasks: generator id; nonexistence-scan: scan id.
  std::string generator;
  std::string scan;
  std::vector<std::pair<std::string, std::vector<double>>> params;
  std::vector<double> constants;

  // key = value pairs as read, in file order, for the report header.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Parses the line-oriented scenario format. Throws ConfigParseError with the
// line and column of the offending token, including expression errors.
ScenarioConfig parse_scenario(std::string_view text);
// Throws ConfigParseError (line 0) when the file cannot be read.
ScenarioConfig load_scenario(const std::string& path);

// Command-line overrides; the echo records them.
void override_tolerance(ScenarioConfig& c, double tolerance);
void override_grid_points(ScenarioConfig& c, int points);
void override_format(ScenarioConfig& c, OutputFormat f);

ProductManifoldSpec build_manifold(const ScenarioConfig& c);
TorsionVectorFieldSpec build_torsion_field(const ScenarioConfig& c, const ProductManifoldSpec& spec);

struct RunReport {
  std::string tool_version{kToolVersion};
  std::string scenario;
  std::string task;
  std::vector<std::pair<std::string, std::string>> echo;
  std::vector<ResidualReport> checks;
  std::vector<std::string> notes;
  double wall_clock_seconds = 0.0;

  bool pass() const;
  bool operator==(const RunReport&) const = default;
};

// Executes the task. Domain errors propagate as Error.
RunReport run_scenario(const ScenarioConfig& c);

// Text and csv omit the wall clock so identical configs give identical bytes.
// Throws UnsupportedFormat for a format other than the three known ones.
std::string emit_report(const RunReport& r, OutputFormat f);
std::string emit_report(const RunReport& r, std::string_view format);

// Inverse of the json emitter. Throws ConfigParseError on malformed input.
RunReport parse_report_json(std::string_view text);

// Process exit status for a finished run and for an error.
int exit_status(const RunReport& r);
int exit_status(ErrorCode code);

}  // namespace warpcurv
