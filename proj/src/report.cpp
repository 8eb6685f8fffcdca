#include "warpcurv/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "warpcurv/chart.hpp"
#include "warpcurv/error.hpp"
#include "warpcurv/families.hpp"
#include "warpcurv/structured.hpp"

namespace warpcurv {

namespace {

using Echo = std::vector<std::pair<std::string, std::string>>;

constexpr std::string_view kWhitespace = " \t\r";

// A slice of a line with its 1-based starting column.
struct Token {
  std::string text;
  std::size_t column = 1;
};

Token trimmed(std::string_view s, std::size_t column) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {"", column + s.size()};
  const auto last = s.find_last_not_of(kWhitespace);
  return {std::string(s.substr(first, last - first + 1)), column + first};
}

std::vector<Token> split(const Token& t, char sep) {
  std::vector<Token> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = t.text.find(sep, start);
    const auto piece = std::string_view(t.text).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start);
    out.push_back(trimmed(piece, t.column + start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

class LineParser {
 public:
  explicit LineParser(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(std::size_t column, const std::string& msg) const {
    throw ConfigParseError(line_, column, msg);
  }

  double number(const Token& t) const {
    if (t.text.empty()) fail(t.column, "expected a number");
    double v = 0.0;
    const char* end = t.text.data() + t.text.size();
    const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      fail(t.column, "expected a number, got '" + t.text + "'");
    }
    return v;
  }

  int integer(const Token& t) const {
    int v = 0;
    const char* end = t.text.data() + t.text.size();
    const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
    if (t.text.empty() || ec != std::errc() || ptr != end) {
      fail(t.column, "expected an integer, got '" + t.text + "'");
    }
    return v;
  }

  std::vector<double> numbers(const Token& t) const {
    std::vector<double> out;
    for (const auto& piece : split(t, ',')) out.push_back(number(piece));
    return out;
  }

  ScalarExpr expression(const Token& t) const {
    if (t.text.empty()) fail(t.column, "expected an expression");
    try {
      return parse_expr(t.text);
    } catch (const ParseError& e) {
      fail(t.column + e.column() - 1, e.message());
    } catch (const Error& e) {
      fail(t.column, e.what());
    }
  }

  bool boolean(const Token& t) const {
    if (t.text == "true") return true;
    if (t.text == "false") return false;
    fail(t.column, "expected true or false, got '" + t.text + "'");
  }

 private:
  std::size_t line_;
};

Task parse_task(const LineParser& lp, const Token& t) {
  static const std::pair<std::string_view, Task> kTasks[] = {
      {"oracle-verify", Task::OracleVerify},     {"einstein-check", Task::EinsteinCheck},
      {"scalar-check", Task::ScalarCheck},       {"family-generate", Task::FamilyGenerate},
      {"family-verify", Task::FamilyVerify},     {"nonexistence-scan", Task::NonexistenceScan},
  };
  for (const auto& [name, task] : kTasks) {
    if (t.text == name) return task;
  }
  lp.fail(t.column, "unknown task '" + t.text + "'");
}

FiberGeometry parse_geometry(const LineParser& lp, const Token& t) {
  for (auto g : {FiberGeometry::FlatTorus, FiberGeometry::Circle, FiberGeometry::Sphere,
                 FiberGeometry::Hyperbolic}) {
    if (t.text == to_string(g)) return g;
  }
  lp.fail(t.column, "unknown fiber geometry '" + t.text + "'");
}

ConnectionKind parse_connection(const LineParser& lp, const Token& t) {
  for (auto k : {ConnectionKind::LeviCivita, ConnectionKind::SemiSymmetricNonMetric,
                 ConnectionKind::SymmetrizedAffine}) {
    if (t.text == to_string(k)) return k;
  }
  lp.fail(t.column, "unknown connection '" + t.text + "'");
}

bool valid_key(std::string_view k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
           ch == '.' || ch == '_' || ch == '-';
  });
}

bool needs_manifold(Task t) {
  return t == Task::OracleVerify || t == Task::EinsteinCheck || t == Task::ScalarCheck;
}

int fiber_block_dim(const FiberConfig& f) {
  switch (f.geometry) {
    case FiberGeometry::FlatTorus: return f.dim;
    case FiberGeometry::Circle: return 1;
    default: return 2;
  }
}

// Index of the fiber named by "fiber<N>", or -1 for the base.
int p_fiber_index(const std::string& location) {
  if (location == "base") return -1;
  return std::stoi(location.substr(5)) - 1;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::OracleVerify: return "oracle-verify";
    case Task::EinsteinCheck: return "einstein-check";
    case Task::ScalarCheck: return "scalar-check";
    case Task::FamilyGenerate: return "family-generate";
    case Task::FamilyVerify: return "family-verify";
    case Task::NonexistenceScan: return "nonexistence-scan";
  }
  return "unknown";
}

OutputFormat parse_format(std::string_view name) {
  if (name == "text") return OutputFormat::Text;
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw Error(ErrorCode::UnsupportedFormat, "unknown report format '" + std::string(name) + "'");
}

std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Text: return "text";
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
  }
  return "unknown";
}

// ---- scenario parsing -------------------------------------------------------

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig c;
  std::set<std::string> seen;        // top-level keys
  std::set<std::string> fiber_seen;  // keys of the current fiber block
  std::size_t line_no = 0;
  std::size_t task_line = 0;
  std::size_t p_line = 0;
  Token p_components_token;
  std::size_t p_components_line = 0;

  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    // The empty segment after a final newline is not a line.
    if (raw.empty() && end == text.size() && start > 0) break;
    start = end + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (raw.find_first_not_of(kWhitespace) == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const LineParser lp(line_no);
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) {
      lp.fail(trimmed(raw, 1).column, "expected 'key = value'");
    }
    const Token key = trimmed(raw.substr(0, eq), 1);
    const Token value = trimmed(raw.substr(eq + 1), eq + 2);
    if (!valid_key(key.text)) lp.fail(key.column, "invalid key '" + key.text + "'");
    if (value.text.empty()) lp.fail(value.column, "missing value for '" + key.text + "'");

    const bool fiber_key = key.text.rfind("fiber.", 0) == 0;
    if (fiber_key) {
      if (c.fibers.empty()) lp.fail(key.column, "'" + key.text + "' before any 'fiber ='");
      if (!fiber_seen.insert(key.text).second) {
        lp.fail(key.column, "duplicate key '" + key.text + "' in this fiber block");
      }
    } else if (key.text != "fiber" && !seen.insert(key.text).second) {
      lp.fail(key.column, "duplicate key '" + key.text + "'");
    }
    c.echo.emplace_back(key.text, value.text);

    const std::string& k = key.text;
    if (k == "name") {
      c.name = value.text;
    } else if (k == "task") {
      c.task = parse_task(lp, value);
      task_line = line_no;
    } else if (k == "base") {
      if (value.text == "interval") c.base = BaseKind::Interval;
      else if (value.text == "flat") c.base = BaseKind::Flat;
      else lp.fail(value.column, "base must be 'interval' or 'flat'");
    } else if (k == "base.signature") {
      for (const auto& piece : split(value, ',')) {
        const double s = lp.number(piece);
        if (s != 1.0 && s != -1.0) lp.fail(piece.column, "signature entries must be 1 or -1");
        c.base_signature.push_back(s);
      }
    } else if (k == "base.coords") {
      for (const auto& piece : split(value, ',')) {
        if (piece.text.empty()) lp.fail(piece.column, "empty coordinate name");
        c.base_coords.push_back(piece.text);
      }
    } else if (k == "base.lower") {
      c.base_lower = lp.number(value);
    } else if (k == "base.upper") {
      c.base_upper = lp.number(value);
    } else if (k == "twisted") {
      c.twisted = lp.boolean(value);
    } else if (k == "fiber") {
      FiberConfig f;
      f.geometry = parse_geometry(lp, value);
      c.fibers.push_back(std::move(f));
      fiber_seen.clear();
    } else if (k == "fiber.dim") {
      const int d = lp.integer(value);
      if (d < 1) lp.fail(value.column, "fiber dimension must be positive");
      if (c.fibers.back().geometry != FiberGeometry::FlatTorus && d != fiber_block_dim(c.fibers.back())) {
        lp.fail(value.column, "dimension " + std::to_string(d) + " does not fit a " +
                                  to_string(c.fibers.back().geometry) + " fiber");
      }
      c.fibers.back().dim = d;
    } else if (k == "fiber.radius") {
      const double r = lp.number(value);
      if (!(r > 0.0)) lp.fail(value.column, "radius must be positive");
      c.fibers.back().radius = r;
    } else if (k == "fiber.warping") {
      c.fibers.back().warping = value.text;
      c.fibers.back().warping_expr = lp.expression(value);
    } else if (k == "p.location") {
      const auto& v = value.text;
      const bool fiber = v.rfind("fiber", 0) == 0 && v.size() > 5 &&
                         std::all_of(v.begin() + 5, v.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
      if (v != "none" && v != "base" && !fiber) {
        lp.fail(value.column, "p.location must be none, base or fiber<N>");
      }
      c.p_location = v;
      p_line = line_no;
    } else if (k == "p.components") {
      for (const auto& piece : split(value, ';')) {
        c.p_components.push_back(piece.text);
        c.p_exprs.push_back(lp.expression(piece));
      }
      p_components_token = value;
      p_components_line = line_no;
    } else if (k == "connection") {
      c.connection = parse_connection(lp, value);
    } else if (k == "lambda") {
      c.lambda = lp.number(value);
    } else if (k == "scalar") {
      c.scalar = lp.number(value);
    } else if (k == "grid.lower") {
      c.grid_lower = lp.number(value);
    } else if (k == "grid.upper") {
      c.grid_upper = lp.number(value);
    } else if (k == "grid.points") {
      c.grid_points = lp.integer(value);
      if (c.grid_points < 1) lp.fail(value.column, "grid.points must be at least 1");
    } else if (k == "tolerance") {
      const double t = lp.number(value);
      if (!(t > 0.0)) lp.fail(value.column, "tolerance must be positive");
      c.tolerance = t;
    } else if (k == "format") {
      try {
        c.format = parse_format(value.text);
      } catch (const Error&) {
        lp.fail(value.column, "format must be text, csv or json");
      }
    } else if (k == "generator") {
      c.generator = value.text;
    } else if (k == "scan") {
      c.scan = value.text;
    } else if (k.rfind("param.", 0) == 0 && k.size() > 6) {
      c.params.emplace_back(k.substr(6), lp.numbers(value));
    } else if (k == "constants") {
      c.constants = lp.numbers(value);
    } else {
      lp.fail(key.column, "unknown key '" + k + "'");
    }
    if (end == text.size()) break;
  }

  // Missing keys are reported on the line after the last one.
  const LineParser tail(line_no + 1);
  if (task_line == 0) tail.fail(1, "missing required key 'task'");
  if (!(c.grid_lower < c.grid_upper)) tail.fail(1, "grid.lower must be below grid.upper");
  if (needs_manifold(c.task)) {
    if (c.fibers.empty()) tail.fail(1, to_string(c.task) + " needs at least one 'fiber ='");
    for (std::size_t i = 0; i < c.fibers.size(); ++i) {
      if (c.fibers[i].warping.empty()) {
        tail.fail(1, "fiber " + std::to_string(i + 1) + " has no fiber.warping");
      }
    }
    if (c.p_location != "none") {
      const int r = p_fiber_index(c.p_location);
      int block_dim = 0;
      if (r < 0) {
        block_dim = !c.base_signature.empty() ? static_cast<int>(c.base_signature.size())
                    : c.base == BaseKind::Interval ? 1 : 2;
      } else if (r >= static_cast<int>(c.fibers.size())) {
        LineParser(p_line).fail(1, "p.location names a missing fiber");
      } else {
        block_dim = fiber_block_dim(c.fibers[static_cast<std::size_t>(r)]);
      }
      if (p_components_line == 0) tail.fail(1, "p.location needs p.components");
      if (static_cast<int>(c.p_exprs.size()) != block_dim) {
        LineParser(p_components_line)
            .fail(p_components_token.column, "expected " + std::to_string(block_dim) +
                                                  " components for " + c.p_location);
      }
    } else if (p_components_line != 0) {
      LineParser(p_components_line).fail(p_components_token.column, "p.components given with p.location = none");
    }
  }
  if ((c.task == Task::FamilyGenerate || c.task == Task::FamilyVerify) && c.generator.empty()) {
    tail.fail(1, to_string(c.task) + " needs 'generator ='");
  }
  if (c.task == Task::NonexistenceScan && c.scan.empty()) {
    tail.fail(1, "nonexistence-scan needs 'scan ='");
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError(0, 0, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

void set_echo(ScenarioConfig& c, const std::string& key, const std::string& value) {
  for (auto& [k, v] : c.echo) {
    if (k == key) {
      v = value;
      return;
    }
  }
  c.echo.emplace_back(key, value);
}

}  // namespace

void override_tolerance(ScenarioConfig& c, double tolerance) {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw ConfigParseError(0, 0, "--tolerance must be positive");
  }
  c.tolerance = tolerance;
  set_echo(c, "tolerance", format_number(tolerance));
}

void override_grid_points(ScenarioConfig& c, int points) {
  if (points < 1) throw ConfigParseError(0, 0, "--grid must be at least 1");
  c.grid_points = points;
  set_echo(c, "grid.points", std::to_string(points));
}

void override_format(ScenarioConfig& c, OutputFormat f) {
  c.format = f;
  set_echo(c, "format", to_string(f));
}

// ---- manifold construction -------------------------------------------------

ProductManifoldSpec build_manifold(const ScenarioConfig& c) {
  BaseSpec base;
  if (c.base == BaseKind::Interval) {
    if (!c.base_signature.empty() && c.base_signature != std::vector<double>{-1.0}) {
      throw Error(ErrorCode::InvalidSpec, "the interval base carries -dt^2");
    }
    if (c.base_coords.size() > 1) throw Error(ErrorCode::InvalidSpec, "the interval base has one coordinate");
    base = BaseSpec::interval(c.base_lower.value_or(-std::numeric_limits<double>::infinity()),
                              c.base_upper.value_or(std::numeric_limits<double>::infinity()),
                              c.base_coords.empty() ? "t" : c.base_coords.front());
  } else {
    base = BaseSpec::flat(c.base_signature.empty() ? std::vector<double>{-1.0, 1.0} : c.base_signature,
                          c.base_coords);
  }
  std::vector<FiberSpec> fibers;
  std::vector<ScalarExpr> warpings;
  for (const auto& f : c.fibers) {
    switch (f.geometry) {
      case FiberGeometry::FlatTorus: fibers.push_back(FiberSpec::torus(f.dim, f.radius)); break;
      case FiberGeometry::Circle: fibers.push_back(FiberSpec::circle(f.radius)); break;
      case FiberGeometry::Sphere: fibers.push_back(FiberSpec::sphere(f.radius)); break;
      case FiberGeometry::Hyperbolic: fibers.push_back(FiberSpec::hyperbolic(f.radius)); break;
    }
    warpings.push_back(f.warping_expr);
  }
  return ProductManifoldSpec(std::move(base), std::move(fibers), std::move(warpings), c.twisted);
}

TorsionVectorFieldSpec build_torsion_field(const ScenarioConfig& c, const ProductManifoldSpec& spec) {
  TorsionVectorFieldSpec P;
  if (c.p_location == "none") return P;
  const int r = p_fiber_index(c.p_location);
  P = r < 0 ? TorsionVectorFieldSpec::on_base(c.p_exprs)
            : TorsionVectorFieldSpec::on_fiber(r, c.p_exprs);
  validate_torsion_field(spec, P);
  return P;
}

// ---- tasks -------------------------------------------------------------------

namespace {

struct TaskOutput {
  std::vector<ResidualReport> checks;
  std::vector<std::string> notes;
};

std::vector<double> task_grid(const ScenarioConfig& c) {
  return chebyshev_grid(c.grid_lower, c.grid_upper, c.grid_points);
}

// Chart point for grid value t: the interval base sits at t, a flat base at
// (t, t + 0.1, ...).
PointCoords grid_point(const ProductManifoldSpec& spec, double t) {
  std::vector<double> base(static_cast<std::size_t>(spec.base_dim()));
  for (std::size_t a = 0; a < base.size(); ++a) base[a] = t + 0.1 * static_cast<double>(a);
  return spec.point_over(base);
}

BlockVector unit_vector(const ProductManifoldSpec& spec, int coord) {
  const Block b = spec.block_of(coord);
  BlockVector v{b, Eigen::VectorXd::Zero(spec.block_dim(b))};
  v.components(coord - spec.offset(b)) = 1.0;
  return v;
}

TaskOutput oracle_verify(const ScenarioConfig& c) {
  const auto spec = build_manifold(c);
  const auto P = build_torsion_field(c, spec);
  const auto grid = task_grid(c);
  const int n = spec.dim();
  std::vector<double> curv, ric, scal;
  std::vector<PointCoords> points;
  for (double t : grid) {
    const PointCoords p = grid_point(spec, t);
    points.push_back(p);
    const auto oracle = curvature_via_relation(c.connection, spec, P, p);
    const auto cache = build_structured_cache(spec, P, p);
    double worst_r = 0.0, worst_ric = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto ei = unit_vector(spec, i);
      for (int j = 0; j < n; ++j) {
        const auto ej = unit_vector(spec, j);
        for (int k = 0; k < n; ++k) {
          const auto sv = structured_curvature(cache, c.connection, ei, ej, unit_vector(spec, k));
          const Eigen::VectorXd ov = apply_riemann(oracle.riemann, Eigen::VectorXd::Unit(n, i),
                                                   Eigen::VectorXd::Unit(n, j),
                                                   Eigen::VectorXd::Unit(n, k));
          worst_r = std::max(worst_r, (sv.value - ov).cwiseAbs().maxCoeff());
        }
        const double d = structured_ricci(cache, c.connection, ei, ej).value - oracle.ricci(i, j);
        worst_ric = std::max(worst_ric, std::abs(d));
      }
    }
    curv.push_back(worst_r);
    ric.push_back(worst_ric);
    scal.push_back(structured_scalar(cache, c.connection).value - oracle.scalar);
  }
  TaskOutput out;
  out.checks.push_back(make_report("structured-curvature", grid, curv, kOracleTolerance));
  out.checks.push_back(make_report("structured-ricci", grid, ric, kOracleTolerance));
  out.checks.push_back(make_report("structured-scalar", grid, scal, kOracleTolerance));
  const auto mixed = mixed_ricci_flat_check(spec, P, c.connection, points);
  if (mixed.fibers_examined > 0) {
    out.notes.push_back(std::string("mixed Ricci ") + (mixed.mixed_ricci_flat ? "vanishes" : "does not vanish") +
                        (mixed.note.empty() ? "" : ": " + mixed.note));
  }
  return out;
}

bool is_unit_time_field(const TorsionVectorFieldSpec& P) {
  return P.location.is_base() && P.components.size() == 1 && P.components[0].is_constant() &&
         P.components[0].constant_value() == 1.0;
}

TaskOutput einstein_check(const ScenarioConfig& c) {
  if (c.connection != ConnectionKind::SemiSymmetricNonMetric) {
    throw Error(ErrorCode::InvalidSpec, "einstein-check evaluates the semi-symmetric connection");
  }
  const auto spec = build_manifold(c);
  const auto P = build_torsion_field(c, spec);
  const auto grid = task_grid(c);
  const bool on_base = !P.is_zero() && P.location.is_base();
  if (on_base && !is_unit_time_field(P)) {
    throw Error(ErrorCode::UnsupportedP, "einstein-check with P on the base needs P = d/dt");
  }
  const auto result = on_base ? grw_einstein_residuals(spec, c.lambda, grid)
                              : pseudo_einstein_residuals(spec, P, c.lambda, grid);
  TaskOutput out;
  out.checks = result.residuals;

  // Same condition read off the chart Ricci tensor. The symmetrized part is
  // compared when P is not on the base.
  std::vector<double> oracle;
  for (double t : grid) {
    const PointCoords p = spec.point_over(t);
    const auto curv = curvature_via_relation(c.connection, spec, P, p);
    Eigen::MatrixXd ric = curv.ricci;
    if (!on_base) ric = 0.5 * (ric + ric.transpose()).eval();
    oracle.push_back((ric - c.lambda * assemble_metric(spec, p)).cwiseAbs().maxCoeff());
  }
  out.checks.push_back(make_report("oracle-einstein", grid, oracle, kOracleTolerance));
  out.notes.push_back(on_base ? "condition: Ric = lambda g" : "condition: symmetrized Ric = lambda g");
  return out;
}

TaskOutput scalar_check(const ScenarioConfig& c) {
  if (c.connection != ConnectionKind::SemiSymmetricNonMetric) {
    throw Error(ErrorCode::InvalidSpec, "scalar-check evaluates the semi-symmetric connection");
  }
  const auto spec = build_manifold(c);
  const auto P = build_torsion_field(c, spec);
  const auto grid = task_grid(c);
  TaskOutput out;
  out.checks.push_back(multiwarped_scalar(spec, P, grid));
  if (c.scalar) {
    std::vector<double> dev;
    for (double t : grid) {
      dev.push_back(multiwarped_scalar_value(spec, P, spec.point_over(t)) - *c.scalar);
    }
    out.checks.push_back(make_report("scalar-value", grid, dev, kOracleTolerance));
  }
  const auto sep = constant_scalar_separation_check(spec, P, grid);
  char buf[64];
  std::snprintf(buf, sizeof buf, "scalar spread %.3e", sep.spread);
  out.notes.emplace_back(buf);
  if (!sep.note.empty()) out.notes.push_back(sep.note);
  if (sep.scalar_constant) {
    out.notes.push_back(std::string("fibers with required constant scalar curvature: ") +
                        (sep.fibers_constant ? "constant" : "not constant"));
  }
  return out;
}

// ---- families and scans ------------------------------------------------------

const std::vector<double>& param_values(const ScenarioConfig& c, const std::string& name) {
  for (const auto& [k, v] : c.params) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::InvalidSpec, "missing parameter '" + name + "'");
}

double param_scalar(const ScenarioConfig& c, const std::string& name) {
  const auto& v = param_values(c, name);
  if (v.size() != 1) throw Error(ErrorCode::InvalidSpec, "parameter '" + name + "' takes one value");
  return v.front();
}

int to_int(double v, const std::string& name) {
  if (v != std::round(v) || std::abs(v) > 1e6) {
    throw Error(ErrorCode::InvalidSpec, "parameter '" + name + "' must be an integer");
  }
  return static_cast<int>(v);
}

int param_int(const ScenarioConfig& c, const std::string& name) {
  return to_int(param_scalar(c, name), name);
}

std::vector<int> param_ints(const ScenarioConfig& c, const std::string& name) {
  std::vector<int> out;
  for (double v : param_values(c, name)) out.push_back(to_int(v, name));
  return out;
}

void reject_unknown_params(const ScenarioConfig& c, std::initializer_list<std::string_view> known) {
  for (const auto& [k, v] : c.params) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw Error(ErrorCode::InvalidSpec, "unknown parameter '" + k + "' for '" +
                                              (c.generator.empty() ? c.scan : c.generator) + "'");
    }
  }
}

std::vector<SolutionFamily> generate_families(const ScenarioConfig& c) {
  const auto& g = c.generator;
  if (g == "grw-einstein") {
    reject_unknown_params(c, {"l", "lambda", "lambda_F"});
    return grw_einstein_family(param_int(c, "l"), param_scalar(c, "lambda"),
                               param_scalar(c, "lambda_F"));
  }
  if (g == "grw-scalar") {
    reject_unknown_params(c, {"l", "scalar", "fiber_scalar"});
    return grw_scalar_family(param_int(c, "l"), param_scalar(c, "scalar"),
                             param_scalar(c, "fiber_scalar"));
  }
  if (g == "kasner-einstein") {
    reject_unknown_params(c, {"p", "dims", "lambda", "fiber_lambdas"});
    const auto dims = param_ints(c, "dims");
    return kasner_einstein_families(kasner_type(dims), param_values(c, "p"), dims,
                                    param_scalar(c, "lambda"), param_values(c, "fiber_lambdas"));
  }
  if (g == "kasner-scalar") {
    reject_unknown_params(c, {"p", "dims", "scalar", "fiber_scalars"});
    const auto dims = param_ints(c, "dims");
    return kasner_scalar_families(kasner_type(dims), param_values(c, "p"), dims,
                                  param_scalar(c, "scalar"), param_values(c, "fiber_scalars"));
  }
  throw Error(ErrorCode::InvalidSpec, "unknown generator '" + g + "'");
}

std::string join_numbers(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v[i]);
  }
  return s;
}

TaskOutput family_task(const ScenarioConfig& c, bool verify) {
  const auto families = generate_families(c);
  const auto grid = task_grid(c);
  TaskOutput out;
  if (families.empty()) out.notes.push_back("no family for these parameters");
  for (const auto& f : families) {
    const std::string label = f.generator + "/" + f.case_label;
    const std::vector<double>& cs =
        c.constants.size() == f.free_constants.size() ? c.constants : f.default_constants;
    auto prefixed = [&](ResidualReport r) {
      r.id = label + "/" + r.id;
      out.checks.push_back(std::move(r));
    };
    if (f.kind == FamilyKind::NumericOnly) {
      for (auto& r : numeric_family_residuals(f, cs, c.grid_lower, c.grid_upper, 1000)) {
        prefixed(std::move(r));
      }
      out.notes.push_back(label + ": numeric " + f.unknown + " from constants (" +
                          join_numbers(cs) + ")");
    } else {
      for (auto& r : family_residuals(f, cs, grid)) prefixed(std::move(r));
      if (verify) prefixed(ode_cross_check(f, cs, c.grid_lower, c.grid_upper));
      out.notes.push_back(label + ": " + f.unknown + " = " +
                          family_unknown(f, cs, c.grid_lower, c.grid_upper).str());
    }
    for (const auto& constraint : f.constraints) out.notes.push_back(label + ": " + constraint);
  }
  return out;
}

TaskOutput scan_task(const ScenarioConfig& c) {
  ScanReport s;
  if (c.scan == "grw-einstein-oscillating") {
    reject_unknown_params(c, {"l", "lambda", "lambda_F"});
    s = grw_einstein_scan(param_int(c, "l"), param_scalar(c, "lambda"), param_scalar(c, "lambda_F"));
  } else if (c.scan == "kasner-type2-oscillating") {
    reject_unknown_params(c, {"p", "lambda", "lambda_2"});
    s = kasner_type2_oscillating_scan(param_values(c, "p"), param_scalar(c, "lambda"),
                                      param_scalar(c, "lambda_2"));
  } else if (c.scan == "kasner-type3-linear") {
    reject_unknown_params(c, {"p", "lambda"});
    s = kasner_type3_linear_scan(param_values(c, "p"), param_scalar(c, "lambda"));
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown scan '" + c.scan + "'");
  }
  TaskOutput out;
  ResidualReport r;
  r.id = s.id;
  r.max_residual = s.min_residual;
  r.tolerance = s.bound;
  r.pass = s.pass;
  out.checks.push_back(r);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%s: minimum residual over %d points of a %dx%d grid on [-%g, %g]^2 at (%.3f, %.3f); "
                "passes when it stays at or above the bound",
                s.id.c_str(), s.points_scanned, s.side, s.side, s.range, s.range, s.argmin_c1,
                s.argmin_c2);
  out.notes.emplace_back(buf);
  return out;
}

}  // namespace

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const ResidualReport& r) { return r.pass; });
}

RunReport run_scenario(const ScenarioConfig& c) {
  const auto started = std::chrono::steady_clock::now();
  TaskOutput out;
  switch (c.task) {
    case Task::OracleVerify: out = oracle_verify(c); break;
    case Task::EinsteinCheck: out = einstein_check(c); break;
    case Task::ScalarCheck: out = scalar_check(c); break;
    case Task::FamilyGenerate: out = family_task(c, false); break;
    case Task::FamilyVerify: out = family_task(c, true); break;
    case Task::NonexistenceScan: out = scan_task(c); break;
  }
  // Scans keep their own bound: their verdict is "stays above".
  if (c.tolerance && c.task != Task::NonexistenceScan) {
    for (auto& r : out.checks) {
      r.tolerance = *c.tolerance;
      r.pass = !r.grid.empty() && r.max_residual < r.tolerance;
    }
  }
  RunReport r;
  r.scenario = c.name;
  r.task = to_string(c.task);
  r.echo = c.echo;
  r.checks = std::move(out.checks);
  r.notes = std::move(out.notes);
  r.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

// ---- emitters ----------------------------------------------------------------

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

const char* verdict(bool pass) { return pass ? "pass" : "fail"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string pad(const std::string& s, std::size_t width) {
  return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
}

std::string emit_text(const RunReport& r) {
  std::ostringstream os;
  os << "warpcurv " << r.tool_version << "\n";
  os << "scenario: " << (r.scenario.empty() ? "-" : r.scenario) << "\n";
  os << "task: " << r.task << "\n";
  if (!r.echo.empty()) {
    std::size_t kw = 0;
    for (const auto& [k, v] : r.echo) kw = std::max(kw, k.size());
    os << "\nconfig\n";
    for (const auto& [k, v] : r.echo) os << "  " << pad(k, kw) << " = " << v << "\n";
  }
  const std::string h[] = {"check", "max residual", "tolerance", "verdict"};
  std::size_t w[] = {h[0].size(), h[1].size(), h[2].size()};
  for (const auto& c : r.checks) {
    w[0] = std::max(w[0], c.id.size());
    w[1] = std::max(w[1], sci(c.max_residual).size());
    w[2] = std::max(w[2], sci(c.tolerance).size());
  }
  os << "\nchecks\n";
  os << "  " << pad(h[0], w[0]) << "  " << pad(h[1], w[1]) << "  " << pad(h[2], w[2]) << "  " << h[3]
     << "\n";
  for (const auto& c : r.checks) {
    os << "  " << pad(c.id, w[0]) << "  " << pad(sci(c.max_residual), w[1]) << "  "
       << pad(sci(c.tolerance), w[2]) << "  " << verdict(c.pass) << "\n";
  }
  if (!r.notes.empty()) {
    os << "\nnotes\n";
    for (const auto& n : r.notes) os << "  " << n << "\n";
  }
  const auto passed = std::count_if(r.checks.begin(), r.checks.end(),
                                    [](const ResidualReport& c) { return c.pass; });
  os << "\nresult: " << verdict(r.pass()) << " (" << passed << "/" << r.checks.size()
     << " checks passed)\n";
  return os.str();
}

std::string emit_csv(const RunReport& r) {
  std::string s = "check,grid_max_residual,tolerance,verdict\n";
  char buf[64];
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, ",%.6e,%.6e,", c.max_residual, c.tolerance);
    s += csv_field(c.id) + buf + verdict(c.pass) + "\n";
  }
  return s;
}

using nlohmann::json;

// JSON has no infinities; they travel as strings.
json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorCode::ConfigParseError, "bad number '" + s + "'");
}

std::string emit_json(const RunReport& r) {
  json j;
  j["tool_version"] = r.tool_version;
  j["scenario"] = r.scenario;
  j["task"] = r.task;
  j["echo"] = json::array();
  for (const auto& [k, v] : r.echo) j["echo"].push_back({k, v});
  j["checks"] = json::array();
  for (const auto& c : r.checks) {
    json grid = json::array();
    for (double t : c.grid) grid.push_back(number_to_json(t));
    j["checks"].push_back({{"id", c.id},
                           {"grid", grid},
                           {"max_residual", number_to_json(c.max_residual)},
                           {"tolerance", number_to_json(c.tolerance)},
                           {"verdict", verdict(c.pass)}});
  }
  j["notes"] = r.notes;
  j["pass"] = r.pass();
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j.dump(2) + "\n";
}

}  // namespace

std::string emit_report(const RunReport& r, OutputFormat f) {
  switch (f) {
    case OutputFormat::Text: return emit_text(r);
    case OutputFormat::Csv: return emit_csv(r);
    case OutputFormat::Json: return emit_json(r);
  }
  throw Error(ErrorCode::UnsupportedFormat, "unknown report format");
}

std::string emit_report(const RunReport& r, std::string_view format) {
  return emit_report(r, parse_format(format));
}

RunReport parse_report_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(1, e.byte, e.what());
  }
  try {
    RunReport r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.task = j.at("task").get<std::string>();
    for (const auto& e : j.at("echo")) {
      r.echo.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    for (const auto& c : j.at("checks")) {
      ResidualReport rr;
      rr.id = c.at("id").get<std::string>();
      for (const auto& t : c.at("grid")) rr.grid.push_back(number_from_json(t));
      rr.max_residual = number_from_json(c.at("max_residual"));
      rr.tolerance = number_from_json(c.at("tolerance"));
      const auto v = c.at("verdict").get<std::string>();
      if (v != "pass" && v != "fail") throw Error(ErrorCode::ConfigParseError, "bad verdict '" + v + "'");
      rr.pass = v == "pass";
      r.checks.push_back(std::move(rr));
    }
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigParseError(0, 0, std::string("malformed report: ") + e.what());
  }
}

int exit_status(const RunReport& r) { return r.pass() ? 0 : 1; }

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NumericalInstability:
    case ErrorCode::StepTooCoarse: return 3;
    default: return 2;
  }
}

}  // namespace warpcurv
