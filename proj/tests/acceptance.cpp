// Acceptance report: one line per criterion. With an argument N only
// criterion N runs; the exit status is nonzero if any selected line fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "support.hpp"
#include "warpcurv/chart.hpp"
#include "warpcurv/connection.hpp"
#include "warpcurv/einstein.hpp"
#include "warpcurv/error.hpp"
#include "warpcurv/families.hpp"
#include "warpcurv/structured.hpp"

using namespace warpcurv;
using testsupport::num;
using testsupport::var;

namespace {

constexpr auto kBar = ConnectionKind::SemiSymmetricNonMetric;
constexpr auto kTilde = ConnectionKind::SymmetrizedAffine;

struct Line {
  std::string label;
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TorsionVectorFieldSpec dt() { return TorsionVectorFieldSpec::on_base({num(1)}); }

// ---- 1 ----------------------------------------------------------------------

std::vector<Line> oracle_suite() {
  const auto start = Clock::now();
  const auto cases = testsupport::oracle_cases();
  double worst = 0.0;
  std::set<std::string> clauses;
  std::string worst_case;
  for (const auto& c : cases) {
    for (auto kind : {ConnectionKind::LeviCivita, kBar, kTilde}) {
      const auto d = testsupport::compare_with_oracle(c, kind);
      const double m = std::max({d.derivative, d.curvature, d.ricci, d.scalar});
      if (m > worst) {
        worst = m;
        worst_case = c.name + " / " + to_string(kind);
      }
      clauses.insert(d.clauses.begin(), d.clauses.end());
    }
  }
  const double secs = seconds_since(start);
  return {{"structured formulas match the chart pipeline", worst < 1e-6 && secs < 30.0,
           fmt::format("{} specs x 5 points x 3 connections, {} distinct clauses, max deviation {:.2e} ({}), "
                       "{:.2f} s",
                       cases.size(), clauses.size(), worst, worst_case, secs)}};
}

// ---- 2 ----------------------------------------------------------------------

double max_einstein_deviation(const ProductManifoldSpec& spec, double lambda) {
  double m = 0.0;
  for (double t : chebyshev_grid(0.0, 1.0)) {
    const PointCoords p = spec.point_over(t);
    const auto ric = curvature_via_relation(kBar, spec, dt(), p).ricci;
    m = std::max(m, testsupport::max_abs(ric - lambda * assemble_metric(spec, p)));
  }
  return m;
}

std::vector<Line> grw_end_to_end() {
  const auto start = Clock::now();
  const auto t = var("t");
  const double a = max_einstein_deviation(
      ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::torus(2)}, {exp(t)}), 0.0);
  const double b = max_einstein_deviation(
      ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::sphere()}, {num(1 / std::sqrt(2.0))}), 2.0);
  const double h = max_einstein_deviation(
      ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::hyperbolic()}, {num(1 / std::sqrt(2.0))}), 2.0);
  const double secs = seconds_since(start);
  return {
      {"e^t over T^2, max |Ric|", a < 1e-6 && secs < 5.0, fmt::format("{:.2e} on 17 points", a)},
      {"1/sqrt(2) over the unit S^2, max |Ric - 2g|", b < 1e-6 && secs < 5.0,
       fmt::format("{:.2e}; the unit sphere has lambda_F = -1 under the Ricci sign that gives "
                   "Ric(d_t, d_t) = -sum l (1 - b''/b), so no constant warping is Einstein with lambda = 2",
                   b)},
      {"supplementary: 1/sqrt(2) over the unit H^2 (lambda_F = 1), max |Ric - 2g|", h < 1e-6,
       fmt::format("{:.2e}, {:.2f} s for all three", h, secs)},
  };
}

// ---- 3 and 4 ----------------------------------------------------------------

struct FamilySet {
  std::string label;
  std::vector<SolutionFamily> families;
};

std::vector<FamilySet> closed_form_families() {
  std::vector<FamilySet> out;
  auto add = [&](std::string label, std::vector<SolutionFamily> fs) { out.push_back({std::move(label), std::move(fs)}); };
  add("GRW Einstein, lambda = lambda_F = 0", grw_einstein_family(2, 0, 0));
  add("GRW Einstein, lambda = l", grw_einstein_family(2, 2, 1));
  add("GRW scalar l = 3, below threshold", grw_scalar_family(3, 1, 2));
  add("GRW scalar l = 3, threshold", grw_scalar_family(3, 75.0 / 16, 0));
  add("GRW scalar l = 3, above threshold", grw_scalar_family(3, 6, 1));
  add("GRW scalar l = 3, S = 3", grw_scalar_family(3, 3, 9));
  add("GRW scalar l = 2, below threshold", grw_scalar_family(2, 1, 0));
  add("GRW scalar l = 2, threshold", grw_scalar_family(2, 8.0 / 3, 0));
  add("GRW scalar l = 2, above threshold", grw_scalar_family(2, 4, 0));
  const int l2[] = {1, 2};
  const int l3[] = {1, 1, 1};
  const double z2[] = {0, 0};
  const double z3[] = {0, 0, 0};
  const double pz[] = {1, -0.5};
  const double p10[] = {1, 0};
  const double lam[] = {0, -9};
  add("Kasner II Einstein, zeta = 0", kasner_einstein_families(KasnerType::II, pz, l2, 0, z2));
  add("Kasner II Einstein, lambda = -6", kasner_einstein_families(KasnerType::II, p10, l2, -6, lam));
  add("Kasner III scalar, p = 0", kasner_scalar_families(KasnerType::III, z3, l3, 3, z3));
  const double s = std::sqrt(1.5);
  const double pe[] = {s, -s, 0};
  add("Kasner III scalar, zeta = 0", kasner_scalar_families(KasnerType::III, pe, l3, 0, z3));
  const double p123[] = {1, 2, 3};
  const double thr = kasner_scalar_threshold(6, 14);
  add("Kasner III scalar, below threshold", kasner_scalar_families(KasnerType::III, p123, l3, 3.5, z3));
  add("Kasner III scalar, threshold", kasner_scalar_families(KasnerType::III, p123, l3, thr, z3));
  add("Kasner III scalar, above threshold", kasner_scalar_families(KasnerType::III, p123, l3, 5, z3));
  const double p112[] = {1, 1, -2};
  add("Kasner III Einstein, zeta = 0", kasner_einstein_families(KasnerType::III, p112, l3, 0, z3));
  return out;
}

// Admissible constants: first in [0.1, 2], the rest in [-2, 2], redrawn until
// the unknown stays positive on [0, 1].
std::vector<double> draw_constants(const SolutionFamily& f, std::mt19937& rng) {
  std::uniform_real_distribution<double> first(0.1, 2.0), rest(-2.0, 2.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> c;
    for (std::size_t i = 0; i < f.free_constants.size(); ++i) c.push_back(i == 0 ? first(rng) : rest(rng));
    if (admissible(f, c, 0.0, 1.0)) return c;
  }
  throw Error(ErrorCode::InvalidSpec, "no admissible constants for " + f.case_label);
}

std::vector<Line> family_lines(bool rk4) {
  const auto grid = chebyshev_grid(0.0, 1.0, 33);
  std::mt19937 rng(20240607u);
  std::vector<Line> out;
  for (const auto& set : closed_form_families()) {
    double worst = 0.0;
    int count = 0;
    bool ok = !set.families.empty();
    for (const auto& f : set.families) {
      if (f.kind != FamilyKind::ClosedForm) {
        ok = false;
        continue;
      }
      for (int draw = 0; draw < 3; ++draw) {
        const auto c = draw_constants(f, rng);
        if (rk4) {
          try {
            worst = std::max(worst, ode_cross_check(f, c, 0.0, 1.0, 1000).max_residual);
          } catch (const Error&) {
            ok = false;
            worst = std::max(worst, 1e-4);
          }
        } else {
          for (const auto& r : family_residuals(f, c, grid)) worst = std::max(worst, r.max_residual);
        }
        ++count;
      }
    }
    const double bound = rk4 ? 1e-6 : 1e-10;
    out.push_back({set.label, ok && worst < bound,
                   fmt::format("{} families, {} draws, max {} {:.2e}", set.families.size(), count,
                               rk4 ? "RK4 deviation" : "residual", worst)});
  }
  return out;
}

// ---- 5 ----------------------------------------------------------------------

std::vector<Line> scans() {
  auto line = [](std::string label, const ScanReport& r, bool counted) {
    return Line{std::move(label), r.pass,
                fmt::format("{}{} points, min residual {:.4f} at ({:.1f}, {:.1f}), bound {}",
                            counted ? "" : "supplementary: ", r.points_scanned, r.min_residual, r.argmin_c1,
                            r.argmin_c2, r.bound)};
  };
  const double p2[] = {1, 0};
  const double p3[] = {1, 2, 3};
  return {
      line("GRW Einstein, l = 2, lambda = 5, lambda_F = 1", grw_einstein_scan(2, 5.0, 1.0), true),
      line("Kasner II oscillating, p = (1, 0), lambda = 5, lambda_2 = -9",
           kasner_type2_oscillating_scan(p2, 5.0, -9.0), true),
      line("Kasner III linear, p = (1, 2, 3), lambda = 5", kasner_type3_linear_scan(p3, 5.0), false),
  };
}

// ---- 6 ----------------------------------------------------------------------

std::vector<Line> symmetrized_identity() {
  const auto t = var("t");
  const auto u = var("u");
  const auto v = var("v");
  using P = TorsionVectorFieldSpec;
  struct Spec {
    ProductManifoldSpec spec;
    TorsionVectorFieldSpec P;
  };
  // P on the base with a closed dual form pi.
  const std::vector<Spec> base_specs{
      {ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::torus(2)}, {exp(t)}), P::on_base({num(1)})},
      {ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::circle(), FiberSpec::torus(2)}, {exp(t), t * t + num(1)}),
       P::on_base({t * t})},
      {ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::sphere(), FiberSpec::hyperbolic()},
                           {num(2) + sin(t), num(1) + t * t / num(3)}),
       P::on_base({num(1) + t * t})},
      {ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::torus(2)}, {exp(t) * (num(1) + var("x") * var("x"))},
                           true),
       P::on_base({cos(t)})},
      {ProductManifoldSpec(BaseSpec::flat({-1, 1}, {"u", "v"}), {FiberSpec::sphere(1.3)}, {exp(u) + v * v}),
       P::on_base({u, v * v})},
  };
  double worst = 0.0;
  for (const auto& s : base_specs) {
    for (double tv : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      std::vector<double> base(static_cast<std::size_t>(s.spec.base_dim()), tv);
      const PointCoords p = s.spec.point_over(base, 1);
      worst = std::max(worst, testsupport::max_abs(structured_ricci_matrix(s.spec, s.P, kTilde, p) -
                                                   structured_ricci_matrix(s.spec, s.P, kBar, p)));
    }
  }
  double fiber_worst = 0.0;
  int fiber_specs = 0;
  for (const auto& c : testsupport::oracle_cases()) {
    if (c.P.is_zero() || c.P.location.is_base()) continue;
    ++fiber_specs;
    for (const auto& p : c.points) {
      const auto oracle = curvature_from_coefficients(c.spec, connection_field(kTilde, c.spec, c.P), p).ricci;
      fiber_worst = std::max(fiber_worst, testsupport::max_abs(structured_ricci_matrix(c.spec, c.P, kTilde, p) - oracle));
    }
  }
  return {
      {"P on the base: symmetrized and semi-symmetric Ricci agree", worst < 1e-9,
       fmt::format("{} specs x 5 points, max entry difference {:.2e}", base_specs.size(), worst)},
      {"P on a fiber: corrected Ricci matches the chart pipeline", fiber_worst < 1e-6,
       fmt::format("{} specs x 5 points, max deviation {:.2e}", fiber_specs, fiber_worst)},
  };
}

// ---- 7 ----------------------------------------------------------------------

std::vector<Line> mixed_ricci() {
  int examined = 0;
  bool all = true;
  double worst = 0.0;
  for (const auto& c : testsupport::oracle_cases()) {
    if (c.spec.twisted()) continue;
    if (!c.P.is_zero() && !c.P.location.is_base()) continue;
    const auto r = mixed_ricci_flat_check(c.spec, c.P, kBar, c.points);
    if (r.fibers_examined == 0) continue;
    ++examined;
    all = all && r.mixed_ricci_flat;
    worst = std::max(worst, r.max_mixed);
  }

  const auto t = var("t");
  const auto x = var("x");
  auto points_for = [](const ProductManifoldSpec& s) {
    std::vector<PointCoords> out;
    for (double tv : {0.2, 0.5, 0.8}) {
      PointCoords p = s.point_over(tv);
      p(1) = 0.7;  // x != 0
      out.push_back(p);
    }
    return out;
  };
  const ProductManifoldSpec separable(BaseSpec::interval(), {FiberSpec::torus(2)},
                                      {exp(t) * (num(1) + x * x)}, true);
  const auto a = mixed_ricci_flat_check(separable, dt(), kBar, points_for(separable));
  const ProductManifoldSpec coupled(BaseSpec::interval(), {FiberSpec::torus(2)}, {exp(t * x)}, true);
  const auto b = mixed_ricci_flat_check(coupled, dt(), kBar, points_for(coupled));
  return {
      {"untwisted specs with a fiber of dimension > 1 (P on the base or P = 0) pass", all && examined > 0,
       fmt::format("{} specs, max mixed component {:.2e}", examined, worst)},
      {"twisted b = e^t (1 + x^2) fails at x = 0.7", !a.mixed_ricci_flat,
       fmt::format("max mixed component {:.2e}; X(b)/b = 1 does not depend on the fiber point, so the mixed "
                   "terms vanish for any separable b = h(t) k(x)",
                   a.max_mixed)},
      {"supplementary: twisted b = e^(t x) fails at x = 0.7", !b.mixed_ricci_flat,
       fmt::format("max mixed component {:.2e}", b.max_mixed)},
  };
}

// ---- 8 ----------------------------------------------------------------------

std::vector<Line> unit_warping_scalar() {
  double worst_formula = 0.0, worst_identity = 0.0, worst_oracle = 0.0;
  int n = 0;
  for (const auto& fiber :
       {FiberSpec::torus(3), FiberSpec::torus(2), FiberSpec::sphere(), FiberSpec::sphere(2.0), FiberSpec::hyperbolic()}) {
    const ProductManifoldSpec spec(BaseSpec::interval(), {fiber}, {num(1)});
    const int l = fiber.dim;
    const double expected = fiber.scalar_curvature + l;
    // Identity of the constant scalar curvature GRW families at f = 1.
    const auto fam = grw_scalar_family(l, expected, fiber.scalar_curvature)[0];
    for (const auto& r : fam.residuals) {
      if (r.id == "scalar") worst_identity = std::max(worst_identity, std::abs(r.eval(0.5, {1, 0, 0}, {1, 0, 0})));
    }
    for (double tv : {0.1, 0.5, 0.9}) {
      const PointCoords p = spec.point_over(tv);
      worst_formula = std::max(worst_formula, std::abs(multiwarped_scalar_value(spec, dt(), p) - expected));
      worst_formula = std::max(worst_formula, std::abs(structured_scalar(spec, dt(), kBar, p).value - expected));
      const double oracle = curvature_from_coefficients(spec, connection_field(kBar, spec, dt()), p).scalar;
      worst_oracle = std::max(worst_oracle, std::abs(oracle - expected));
    }
    ++n;
  }
  return {{"f = 1 gives S = S^F + l", worst_identity == 0.0 && worst_formula < 1e-8 && worst_oracle < 1e-8,
           fmt::format("{} fibers; identity residual {:.1e}, block formulas {:.2e}, chart pipeline {:.2e}", n,
                       worst_identity, worst_formula, worst_oracle)}};
}

// ---- 9 ----------------------------------------------------------------------

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  pclose(pipe);
  return out;
}

std::vector<Line> determinism() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(WARPCURV_SCENARIO_DIR)) {
    if (e.path().extension() == ".scn") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  int identical = 0;
  std::string differing;
  for (const auto& f : files) {
    bool same = true;
    for (const char* format : {"text", "csv"}) {
      const std::string cmd =
          fmt::format("'{}' verify '{}' --format {} 2>/dev/null", WARPCURV_CLI, f.string(), format);
      const std::string a = capture(cmd);
      const std::string b = capture(cmd);
      same = same && !a.empty() && a == b;
    }
    if (same) {
      ++identical;
    } else {
      differing += " " + f.filename().string();
    }
  }
  return {{"scenario corpus gives byte-identical text and csv reports",
           files.size() >= 8 && identical == static_cast<int>(files.size()),
           fmt::format("{}/{} scenarios identical{}", identical, files.size(),
                       differing.empty() ? "" : "; differ:" + differing)}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<std::vector<Line>()>>> criteria{
      {"oracle equivalence", oracle_suite},
      {"GRW Einstein end to end", grw_end_to_end},
      {"closed-form residuals", [] { return family_lines(false); }},
      {"RK4 cross-check", [] { return family_lines(true); }},
      {"nonexistence scans", scans},
      {"symmetrized connection identity", symmetrized_identity},
      {"mixed Ricci predicate", mixed_ricci},
      {"unit warping scalar curvature", unit_warping_scalar},
      {"CLI determinism", determinism},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria.size());
    return 2;
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    std::vector<Line> lines;
    try {
      lines = criteria[i].second();
    } catch (const std::exception& e) {
      lines = {{"error", false, e.what()}};
    }
    bool pass = true;
    for (const auto& l : lines) {
      if (l.label.rfind("supplementary", 0) != 0 && l.detail.rfind("supplementary", 0) != 0) pass = pass && l.pass;
    }
    all = all && pass;
    fmt::print("criterion {}: {} | {}\n", i + 1, pass ? "PASS" : "FAIL", criteria[i].first);
    for (const auto& l : lines) fmt::print("    [{}] {}: {}\n", l.pass ? "pass" : "FAIL", l.label, l.detail);
  }
  return all ? 0 : 1;
}
