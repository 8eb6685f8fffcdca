#include "warpcurv/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "warpcurv/error.hpp"

namespace warpcurv {

namespace {

using E = ScalarExpr;

const E& time_var() {
  static const E t = E::variable("t");
  return t;
}

E exp_rate(double r) {
  if (r == 0.0) return E::constant(1.0);
  return exp(E::constant(r) * time_var());
}

bool near(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

Derivs time_derivs(const E& bound, double t) {
  const Jet j = bound.eval_jet({&t, 1});
  return {j.v, j.g(0), j.h(0, 0)};
}

// Derivatives of y^k.
Derivs power_derivs(const Derivs& y, double k) {
  if (k == 1.0) return y;
  const double yk = std::pow(y.v, k);
  const double r = y.d1 / y.v;
  return {yk, k * yk * r, k * yk * (y.d2 / y.v) + k * (k - 1.0) * yk * r * r};
}

// Solutions of y'' - a y' + c y = d.
struct LinearSolution {
  std::string label;
  std::function<E(std::span<const double>)> expr;
};

LinearSolution solve_linear(double a, double c, double d) {
  const double shift = c == 0.0 ? 0.0 : d / c;
  auto with_shift = [shift](E e) { return shift == 0.0 ? e : e + E::constant(shift); };
  if (std::abs(c) <= 1e-14 && d != 0.0) {
    const double drift = -d / a;
    return {"linear-drift", [a, drift](std::span<const double> k) {
              return E::constant(k[0]) + k[1] * exp_rate(a) + E::constant(drift) * time_var();
            }};
  }
  const double disc = a * a - 4.0 * c;
  if (std::abs(disc) <= 1e-12 * std::max(1.0, a * a)) {
    const double r = 0.5 * a;
    return {"double-root", [r, with_shift](std::span<const double> k) {
              return with_shift((E::constant(k[0]) + k[1] * time_var()) * exp_rate(r));
            }};
  }
  if (disc > 0.0) {
    const double r1 = 0.5 * (a + std::sqrt(disc));
    const double r2 = 0.5 * (a - std::sqrt(disc));
    return {"distinct-roots", [r1, r2, with_shift](std::span<const double> k) {
              return with_shift(k[0] * exp_rate(r1) + k[1] * exp_rate(r2));
            }};
  }
  const double r = 0.5 * a;
  const double w = 0.5 * std::sqrt(-disc);
  return {"oscillating", [r, w, with_shift](std::span<const double> k) {
            const E arg = E::constant(w) * time_var();
            return with_shift(exp_rate(r) * (k[0] * cos(arg) + k[1] * sin(arg)));
          }};
}

SolutionFamily base_family(std::string generator, std::string label) {
  SolutionFamily f;
  f.generator = std::move(generator);
  f.case_label = std::move(label);
  return f;
}

void set_two_constants(SolutionFamily& f, double c1 = 1.0, double c2 = 1.0) {
  f.free_constants = {"c1", "c2"};
  f.default_constants = {c1, c2};
}

void require_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::string(what) + ": " + std::to_string(a) +
                                               " versus " + std::to_string(b));
  }
}

void check_type(KasnerType type, std::span<const int> l) {
  const KasnerType actual = kasner_type(l);
  if (actual != type || type == KasnerType::I) {
    throw Error(ErrorCode::UnsupportedType,
                "Kasner generators cover the (1, 2) and (1, 1, 1) fiber splits only");
  }
}

void add_kasner_parameters(SolutionFamily& f, std::span<const double> p, std::span<const int> l,
                           const KasnerInvariants& inv) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    f.parameters.emplace_back("p" + std::to_string(i + 1), p[i]);
  }
  for (std::size_t i = 0; i < l.size(); ++i) {
    f.parameters.emplace_back("l" + std::to_string(i + 1), l[i]);
  }
  f.parameters.emplace_back("zeta", inv.zeta);
  f.parameters.emplace_back("eta", inv.eta);
}

// Residual of the Kasner scalar curvature identity for profile phi.
FamilyResidual kasner_scalar_residual(std::vector<double> p, std::vector<int> l,
                                      std::vector<double> fiber_scalars, double scalar) {
  const KasnerInvariants inv = kasner_invariants(p, l);
  const double n1 = std::accumulate(l.begin(), l.end(), 0.0);
  return {"scalar", [=](double, const Derivs&, const Derivs& phi) {
            const double u = phi.d1 / phi.v;
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
              s += fiber_scalars[i] / std::pow(phi.v, 2.0 * p[i]);
            }
            s += -2.0 * inv.zeta * phi.d2 / phi.v -
                 (inv.eta + inv.zeta * inv.zeta - 2.0 * inv.zeta) * u * u + n1 * inv.zeta * u + n1;
            return s - scalar;
          }};
}

// Residual of the GRW scalar curvature identity for profile f.
FamilyResidual grw_scalar_residual(int l, double scalar, double fiber_scalar) {
  const double L = l;
  return {"scalar", [=](double, const Derivs&, const Derivs& f) {
            const double r = f.d1 / f.v;
            return fiber_scalar / (f.v * f.v) - 2.0 * L * f.d2 / f.v - L * (L - 1.0) * r * r + L +
                   L * L * r - scalar;
          }};
}

// Kasner Einstein residuals of the published system at one point.
std::vector<double> kasner_einstein_values(std::span<const double> p, std::span<const int> l,
                                           double lambda, std::span<const double> lambda_i,
                                           const Derivs& phi, KasnerForm form) {
  const KasnerInvariants inv = kasner_invariants(p, l);
  const double n1 = std::accumulate(l.begin(), l.end(), 0.0);
  const double u = phi.d1 / phi.v;
  const double acc = phi.d2 / phi.v;
  std::vector<double> out;
  out.push_back((inv.eta - inv.zeta) * u * u + inv.zeta * acc + lambda - n1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double drift = form == KasnerForm::Published ? inv.zeta : n1 * p[i];
    out.push_back(lambda_i[i] / std::pow(phi.v, 2.0 * p[i]) - p[i] * acc -
                  (inv.zeta - 1.0) * p[i] * u * u + drift * u - lambda);
  }
  return out;
}

std::vector<double> uniform(double lower, double upper, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lower + (upper - lower) * i / (n - 1);
  return v;
}

E bound_time(const E& e) { return e.bind({"t"}); }

}  // namespace

double SolutionFamily::parameter(const std::string& name) const {
  for (const auto& [k, v] : parameters) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::InvalidSpec, "family has no parameter '" + name + "'");
}

KasnerInvariants kasner_invariants(std::span<const double> p, std::span<const int> l) {
  require_lengths(p.size(), l.size(), "exponents and dimensions");
  KasnerInvariants k;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (l[i] < 1) throw Error(ErrorCode::InvalidDimension, "fiber dimensions must be positive");
    k.zeta += l[i] * p[i];
    k.eta += l[i] * p[i] * p[i];
  }
  return k;
}

KasnerType kasner_type(std::span<const int> l) {
  if (l.size() == 1 && l[0] == 3) return KasnerType::I;
  if (l.size() == 2 && l[0] == 1 && l[1] == 2) return KasnerType::II;
  if (l.size() == 3 && l[0] == 1 && l[1] == 1 && l[2] == 1) return KasnerType::III;
  throw Error(ErrorCode::UnsupportedType, "fiber dimensions match none of the Kasner types");
}

std::vector<ResidualReport> kasner_einstein_residuals(const KasnerSpec& k, double lambda,
                                                      std::span<const double> lambda_i,
                                                      const std::vector<double>& grid,
                                                      double tolerance, KasnerForm form) {
  require_lengths(lambda_i.size(), k.p.size(), "fiber Einstein constants and exponents");
  kasner_invariants(k.p, k.l);
  const E phi = bound_time(k.phi);
  std::vector<std::vector<double>> rows(k.p.size() + 1);
  for (double t : grid) {
    const Derivs d = time_derivs(phi, t);
    if (!(d.v > 0.0)) {
      throw Error(ErrorCode::NonPositiveWarping, "phi <= 0 at t = " + std::to_string(t));
    }
    const auto v = kasner_einstein_values(k.p, k.l, lambda, lambda_i, d, form);
    for (std::size_t i = 0; i < v.size(); ++i) rows[i].push_back(v[i]);
  }
  std::vector<ResidualReport> out;
  out.push_back(make_report("time", grid, rows[0], tolerance));
  for (std::size_t i = 0; i < k.p.size(); ++i) {
    out.push_back(make_report("fiber-" + std::to_string(i + 1), grid, rows[i + 1], tolerance));
  }
  return out;
}

std::vector<SolutionFamily> grw_einstein_family(int l, double lambda, double lambda_F) {
  if (l < 2) throw Error(ErrorCode::InvalidDimension, "Einstein GRW families need dim F >= 2");
  const double L = l;
  auto decorate = [&](SolutionFamily& f) {
    f.parameters = {{"l", L}, {"lambda", lambda}, {"lambda_F", lambda_F}};
    f.unknown = "f";
    f.profile = "f";
    f.ode = {"f", [=](double, double y, double) { return (1.0 - lambda / L) * y; }};
    f.residuals.push_back({"ode", [=](double, const Derivs& y, const Derivs&) {
                             return y.d2 - (1.0 - lambda / L) * y.v;
                           }});
    f.residuals.push_back({"fiber", [=](double, const Derivs& y, const Derivs&) {
                             return lambda_F + (1.0 - L) * y.d1 * y.d1 +
                                    (lambda / L - 1.0 - lambda) * y.v * y.v + L * y.v * y.d1;
                           }});
  };

  std::vector<SolutionFamily> out;
  if (near(lambda, 0.0) && near(lambda_F, 0.0)) {
    SolutionFamily f = base_family("grw-einstein", "exponential");
    decorate(f);
    f.free_constants = {"c1"};
    f.default_constants = {1.0};
    f.constraints = {"c1 > 0"};
    f.closed_form = [](std::span<const double> c) { return c[0] * exp_rate(1.0); };
    out.push_back(std::move(f));
  } else if (near(lambda, L) && lambda_F > 0.0) {
    SolutionFamily f = base_family("grw-einstein", "constant");
    decorate(f);
    f.constraints = {"lambda_F > 0"};
    const double value = std::sqrt(lambda_F / L);
    f.closed_form = [value](std::span<const double>) { return E::constant(value); };
    out.push_back(std::move(f));
  }
  return out;
}

double grw_scalar_threshold(int l) {
  const double L = l;
  return L * L * L / (4.0 * (L + 1.0)) + L;
}

double grw_scalar_discriminant(int l, double scalar) {
  const double L = l;
  return L * L / 4.0 + (L + 1.0) * (L - scalar) / L;
}

std::vector<SolutionFamily> grw_scalar_family(int l, double scalar, double fiber_scalar) {
  if (l < 1) throw Error(ErrorCode::InvalidDimension, "fiber dimension must be positive");
  const double L = l;
  SolutionFamily f = base_family("grw-scalar", "");
  f.parameters = {{"l", L}, {"scalar", scalar}, {"fiber_scalar", fiber_scalar}};
  f.profile = "f";
  f.residuals.push_back(grw_scalar_residual(l, scalar, fiber_scalar));
  f.constraints = {"unknown > 0 on the interval"};

  if (l == 3) {
    const double a = 1.5;
    const double c = scalar / 3.0 - 1.0;
    const double d = fiber_scalar / 3.0;
    LinearSolution sol = solve_linear(a, c, d);
    f.case_label = sol.label;
    f.unknown = "v";
    f.profile_exponent = 0.5;
    f.closed_form = sol.expr;
    set_two_constants(f);
    f.ode = {"v", [=](double, double y, double dy) { return a * dy - c * y + d; }};
    f.residuals.insert(f.residuals.begin(),
                       {"ode", [=](double, const Derivs& y, const Derivs&) {
                          return y.d2 - a * y.d1 + c * y.v - d;
                        }});
    return {f};
  }

  const double a = L / 2.0;
  const double c = (L + 1.0) * (scalar - L) / (4.0 * L);
  const double q = 1.0 - 4.0 / (L + 1.0);
  const double forcing = (L + 1.0) * fiber_scalar / (4.0 * L);
  f.unknown = "w";
  f.profile_exponent = 2.0 / (L + 1.0);
  f.ode = {"w", [=](double, double y, double dy) {
             return a * dy - c * y + (forcing == 0.0 ? 0.0 : forcing * std::pow(y, q));
           }};
  f.residuals.insert(f.residuals.begin(),
                     {"ode", [=](double, const Derivs& y, const Derivs&) {
                        return y.d2 - a * y.d1 + c * y.v -
                               (forcing == 0.0 ? 0.0 : forcing * std::pow(y.v, q));
                      }});
  if (fiber_scalar == 0.0) {
    LinearSolution sol = solve_linear(a, c, 0.0);
    f.case_label = sol.label;
    f.closed_form = sol.expr;
    set_two_constants(f);
    return {f};
  }
  f.kind = FamilyKind::NumericOnly;
  f.case_label = "numeric";
  f.free_constants = {"w0", "dw0"};
  f.default_constants = {1.0, 0.0};
  f.initial_state = [](std::span<const double> k) { return std::array<double, 2>{k[0], k[1]}; };
  return {f};
}

std::vector<SolutionFamily> kasner_einstein_families(KasnerType type, std::span<const double> p,
                                                     std::span<const int> l, double lambda,
                                                     std::span<const double> lambda_i) {
  check_type(type, l);
  require_lengths(p.size(), l.size(), "exponents and dimensions");
  require_lengths(lambda_i.size(), l.size(), "fiber Einstein constants and dimensions");
  const KasnerInvariants inv = kasner_invariants(p, l);

  // One-dimensional fibers are Ricci flat.
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == 1 && !near(lambda_i[i], 0.0)) return {};
  }
  const bool all_equal =
      std::all_of(p.begin(), p.end(), [&](double x) { return near(x, p[0]); });
  if (all_equal) return {};

  std::vector<double> pv(p.begin(), p.end());
  std::vector<int> lv(l.begin(), l.end());
  std::vector<double> lam(lambda_i.begin(), lambda_i.end());
  // Fiber equation with the largest exponent drives the integrator.
  const std::size_t lead = static_cast<std::size_t>(
      std::max_element(pv.begin(), pv.end(), [](double x, double y) { return std::abs(x) < std::abs(y); }) -
      pv.begin());

  auto make = [&](std::string label, double rate) {
    SolutionFamily f = base_family("kasner-einstein", std::move(label));
    add_kasner_parameters(f, p, l, inv);
    f.parameters.emplace_back("lambda", lambda);
    for (std::size_t i = 0; i < lam.size(); ++i) {
      f.parameters.emplace_back("lambda" + std::to_string(i + 1), lam[i]);
    }
    f.unknown = "phi";
    f.profile = "phi";
    f.free_constants = {"c0"};
    f.default_constants = {1.0};
    f.constraints = {"c0 > 0"};
    f.closed_form = [rate](std::span<const double> c) { return c[0] * exp_rate(rate); };
    const double pl = pv[lead];
    const double ll = lam[lead];
    f.ode = {"phi", [=](double, double y, double dy) {
               const double u = dy / y;
               const double acc = (ll / std::pow(y, 2.0 * pl) - (inv.zeta - 1.0) * pl * u * u +
                                   inv.zeta * u - lambda) /
                                  pl;
               return acc * y;
             }};
    const std::size_t m = pv.size();
    for (std::size_t i = 0; i <= m; ++i) {
      f.residuals.push_back({i == 0 ? "time" : "fiber-" + std::to_string(i),
                             [=](double, const Derivs& y, const Derivs&) {
                               return kasner_einstein_values(pv, lv, lambda, lam, y,
                                                             KasnerForm::Published)[i];
                             }});
    }
    return f;
  };

  std::vector<SolutionFamily> out;
  if (near(inv.zeta, 0.0) && inv.eta > 0.0 && near(lambda, 0.0) &&
      std::all_of(lam.begin(), lam.end(), [](double x) { return near(x, 0.0); })) {
    const double rate = std::sqrt(3.0 / inv.eta);
    out.push_back(make("exponential-plus", rate));
    out.push_back(make("exponential-minus", -rate));
  } else if (type == KasnerType::II && near(p[1], 0.0) && !near(p[0], 0.0) &&
             near(lambda, -6.0) && near(lam[1], -9.0)) {
    out.push_back(make("exponential", 3.0 / inv.zeta));
  }
  return out;
}

double kasner_scalar_threshold(double zeta, double eta) {
  return 9.0 * zeta * zeta / (4.0 * (eta + zeta * zeta)) + 3.0;
}

double kasner_scalar_discriminant(double zeta, double eta, double scalar) {
  return 9.0 / 4.0 - (scalar - 3.0) * (eta + zeta * zeta) / (zeta * zeta);
}

std::vector<SolutionFamily> kasner_scalar_families(KasnerType type, std::span<const double> p,
                                                   std::span<const int> l, double scalar,
                                                   std::span<const double> fiber_scalars) {
  check_type(type, l);
  require_lengths(p.size(), l.size(), "exponents and dimensions");
  require_lengths(fiber_scalars.size(), l.size(), "fiber scalar curvatures and dimensions");
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == 1 && fiber_scalars[i] != 0.0) {
      throw Error(ErrorCode::InvalidSpec, "a one-dimensional fiber has zero scalar curvature");
    }
  }
  const KasnerInvariants inv = kasner_invariants(p, l);
  const double s2 = type == KasnerType::II ? fiber_scalars[1] : 0.0;
  const double p2 = type == KasnerType::II ? p[1] : 0.0;
  std::vector<double> pv(p.begin(), p.end());
  std::vector<int> lv(l.begin(), l.end());
  std::vector<double> sv(fiber_scalars.begin(), fiber_scalars.end());

  auto start = [&](std::string label) {
    SolutionFamily f = base_family("kasner-scalar", std::move(label));
    add_kasner_parameters(f, p, l, inv);
    f.parameters.emplace_back("scalar", scalar);
    for (std::size_t i = 0; i < sv.size(); ++i) {
      f.parameters.emplace_back("fiber_scalar" + std::to_string(i + 1), sv[i]);
    }
    f.profile = "phi";
    f.residuals.push_back(kasner_scalar_residual(pv, lv, sv, scalar));
    return f;
  };

  // Profile-only ODE phi'' = phi (u^2 - p2 S2 phi^(-2 p2)/eta) obtained by
  // differentiating eta u^2 = S2 phi^(-2 p2) + 3 - S.
  auto zeta_zero_ode = [=]() {
    return GoverningOde{"phi", [=](double, double y, double dy) {
                          const double u = dy / y;
                          const double extra =
                              s2 == 0.0 ? 0.0 : p2 * s2 * std::pow(y, -2.0 * p2) / inv.eta;
                          return y * (u * u - extra);
                        }};
  };

  std::vector<SolutionFamily> out;
  if (near(inv.zeta, 0.0) && near(inv.eta, 0.0)) {
    if (!near(scalar, s2 + 3.0)) return out;
    SolutionFamily f = start("any-profile");
    f.unknown = "phi";
    f.free_constants = {"c0"};
    f.default_constants = {1.0};
    f.constraints = {"c0 > 0", "scalar = fiber scalar + 3"};
    f.closed_form = [](std::span<const double> c) { return E::constant(c[0]); };
    f.ode = zeta_zero_ode();
    out.push_back(std::move(f));
    return out;
  }

  if (near(inv.zeta, 0.0)) {
    if (s2 == 0.0) {
      const double r2 = (3.0 - scalar) / inv.eta;
      auto make = [&](std::string label, double rate) {
        SolutionFamily f = start(std::move(label));
        f.unknown = "phi";
        f.free_constants = {"c0"};
        f.default_constants = {1.0};
        f.constraints = {"c0 > 0"};
        f.closed_form = [rate](std::span<const double> c) { return c[0] * exp_rate(rate); };
        f.ode = zeta_zero_ode();
        return f;
      };
      if (near(r2, 0.0)) {
        out.push_back(make("constant", 0.0));
      } else if (r2 > 0.0) {
        out.push_back(make("exponential-plus", std::sqrt(r2)));
        out.push_back(make("exponential-minus", -std::sqrt(r2)));
      }
      return out;
    }
    for (double sign : {1.0, -1.0}) {
      SolutionFamily f = start(sign > 0 ? "numeric-plus" : "numeric-minus");
      f.kind = FamilyKind::NumericOnly;
      f.unknown = "phi";
      f.free_constants = {"phi0"};
      f.default_constants = {1.0};
      f.constraints = {"phi0 > 0", "S2 phi0^(-2 p2) + 3 - S >= 0"};
      const double eta = inv.eta;
      f.initial_state = [=](std::span<const double> c) {
        const double rad = (s2 * std::pow(c[0], -2.0 * p2) + 3.0 - scalar) / eta;
        if (rad < 0.0) throw Error(ErrorCode::InvalidSpec, "no real initial slope for phi0");
        return std::array<double, 2>{c[0], sign * c[0] * std::sqrt(rad)};
      };
      f.ode = zeta_zero_ode();
      out.push_back(std::move(f));
    }
    return out;
  }

  // zeta != 0: phi = psi^k turns the identity into
  // A psi'' - 1.5 A psi' + (S - 3) psi - S2 psi^q = 0.
  const double sum = inv.eta + inv.zeta * inv.zeta;
  const double A = 4.0 * inv.zeta * inv.zeta / sum;
  const double k = 2.0 * inv.zeta / sum;
  const double q = 1.0 - 4.0 * p2 * inv.zeta / sum;
  SolutionFamily f = start("");
  f.unknown = "psi";
  f.profile_exponent = k;
  f.constraints = {"psi > 0 on the interval"};
  f.ode = {"psi", [=](double, double y, double dy) {
             return 1.5 * dy - ((scalar - 3.0) * y - (s2 == 0.0 ? 0.0 : s2 * std::pow(y, q))) / A;
           }};
  f.residuals.insert(f.residuals.begin(),
                     {"ode", [=](double, const Derivs& y, const Derivs&) {
                        return y.d2 - 1.5 * y.d1 +
                               ((scalar - 3.0) * y.v - (s2 == 0.0 ? 0.0 : s2 * std::pow(y.v, q))) / A;
                      }});

  std::optional<LinearSolution> sol;
  if (s2 == 0.0) {
    sol = solve_linear(1.5, (scalar - 3.0) / A, 0.0);
  } else if (near(q, 1.0)) {
    sol = solve_linear(1.5, (scalar - 3.0 - s2) / A, 0.0);
  } else if (near(q, 0.0)) {
    sol = solve_linear(1.5, (scalar - 3.0) / A, s2 / A);
  }
  if (sol) {
    f.case_label = sol->label;
    f.closed_form = sol->expr;
    set_two_constants(f);
  } else {
    f.kind = FamilyKind::NumericOnly;
    f.case_label = "numeric";
    f.free_constants = {"psi0", "dpsi0"};
    f.default_constants = {1.0, 0.0};
    f.initial_state = [](std::span<const double> c) { return std::array<double, 2>{c[0], c[1]}; };
  }
  out.push_back(std::move(f));
  return out;
}

ScalarExpr family_unknown(const SolutionFamily& f, std::span<const double> c, double lower,
                          double upper) {
  if (f.kind != FamilyKind::ClosedForm || !f.closed_form) {
    throw Error(ErrorCode::InvalidSpec, "family '" + f.case_label + "' has no closed form");
  }
  if (c.size() != f.free_constants.size()) {
    throw Error(ErrorCode::InvalidSpec, "family '" + f.case_label + "' takes " +
                                            std::to_string(f.free_constants.size()) +
                                            " constants");
  }
  const E e = f.closed_form(c);
  const E b = bound_time(e);
  for (double t : uniform(lower, upper, 257)) {
    const double v = b.eval({&t, 1});
    if (!(v > 0.0)) {
      throw Error(ErrorCode::NonPositiveWarping,
                  f.unknown + " = " + std::to_string(v) + " at t = " + std::to_string(t));
    }
  }
  return e;
}

ScalarExpr family_profile(const SolutionFamily& f, std::span<const double> c, double lower,
                          double upper) {
  const E u = family_unknown(f, c, lower, upper);
  return f.profile_exponent == 1.0 ? u : pow(u, f.profile_exponent);
}

bool admissible(const SolutionFamily& f, std::span<const double> c, double lower, double upper) {
  try {
    family_unknown(f, c, lower, upper);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonPositiveWarping) return false;
    throw;
  }
}

std::vector<ResidualReport> family_residuals(const SolutionFamily& f, std::span<const double> c,
                                             const std::vector<double>& grid, double tolerance) {
  const double lo = *std::min_element(grid.begin(), grid.end());
  const double hi = *std::max_element(grid.begin(), grid.end());
  const E u = bound_time(family_unknown(f, c, lo, hi));
  std::vector<std::vector<double>> rows(f.residuals.size());
  for (double t : grid) {
    const Derivs y = time_derivs(u, t);
    const Derivs prof = power_derivs(y, f.profile_exponent);
    for (std::size_t i = 0; i < f.residuals.size(); ++i) {
      rows[i].push_back(f.residuals[i].eval(t, y, prof));
    }
  }
  std::vector<ResidualReport> out;
  for (std::size_t i = 0; i < f.residuals.size(); ++i) {
    out.push_back(make_report(f.residuals[i].id, grid, rows[i], tolerance));
  }
  return out;
}

Trajectory integrate_rk4(const GoverningOde& ode, double lower, double upper, double y0,
                         double dy0, int n_steps) {
  if (n_steps < 1) throw Error(ErrorCode::InvalidSpec, "integrator needs at least one step");
  const double h = (upper - lower) / n_steps;
  Trajectory tr;
  tr.t.reserve(static_cast<std::size_t>(n_steps) + 1);
  double t = lower, y = y0, v = dy0;
  tr.t.push_back(t);
  tr.y.push_back(y);
  tr.dy.push_back(v);
  for (int s = 0; s < n_steps; ++s) {
    const double k1y = v, k1v = ode.rhs(t, y, v);
    const double k2y = v + 0.5 * h * k1v, k2v = ode.rhs(t + 0.5 * h, y + 0.5 * h * k1y, k2y);
    const double k3y = v + 0.5 * h * k2v, k3v = ode.rhs(t + 0.5 * h, y + 0.5 * h * k2y, k3y);
    const double k4y = v + h * k3v, k4v = ode.rhs(t + h, y + h * k3y, k4y);
    y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t = lower + (s + 1) * h;
    tr.t.push_back(t);
    tr.y.push_back(y);
    tr.dy.push_back(v);
  }
  return tr;
}

std::vector<ResidualReport> numeric_family_residuals(const SolutionFamily& f,
                                                     std::span<const double> c, double lower,
                                                     double upper, int n_steps,
                                                     double tolerance) {
  if (c.size() != f.free_constants.size()) {
    throw Error(ErrorCode::InvalidSpec, "wrong number of constants");
  }
  std::array<double, 2> init{};
  if (f.kind == FamilyKind::NumericOnly) {
    init = f.initial_state(c);
  } else {
    const Derivs d = time_derivs(bound_time(family_unknown(f, c, lower, upper)), lower);
    init = {d.v, d.d1};
  }
  const Trajectory tr = integrate_rk4(f.ode, lower, upper, init[0], init[1], n_steps);
  std::vector<std::vector<double>> rows(f.residuals.size());
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    const Derivs y{tr.y[s], tr.dy[s], f.ode.rhs(tr.t[s], tr.y[s], tr.dy[s])};
    if (!(y.v > 0.0)) {
      throw Error(ErrorCode::NonPositiveWarping,
                  f.unknown + " reaches " + std::to_string(y.v) + " at t = " + std::to_string(tr.t[s]));
    }
    const Derivs prof = power_derivs(y, f.profile_exponent);
    for (std::size_t i = 0; i < f.residuals.size(); ++i) {
      rows[i].push_back(f.residuals[i].eval(tr.t[s], y, prof));
    }
  }
  std::vector<ResidualReport> out;
  for (std::size_t i = 0; i < f.residuals.size(); ++i) {
    out.push_back(make_report(f.residuals[i].id, tr.t, rows[i], tolerance));
  }
  return out;
}

ResidualReport ode_cross_check(const SolutionFamily& f, std::span<const double> c, double lower,
                               double upper, int n_steps) {
  const E u = bound_time(family_unknown(f, c, lower, upper));
  const Derivs d0 = time_derivs(u, lower);
  const Trajectory tr = integrate_rk4(f.ode, lower, upper, d0.v, d0.d1, n_steps);
  std::vector<double> dev;
  for (std::size_t s = 0; s < tr.t.size(); ++s) {
    const double exact = u.eval({&tr.t[s], 1});
    dev.push_back(tr.y[s] - exact);
  }
  ResidualReport r = make_report("rk4-" + f.unknown, tr.t, dev, 1e-6);
  if (r.max_residual > 1e-4) {
    throw Error(ErrorCode::StepTooCoarse, "RK4 deviates from the closed form by " +
                                              std::to_string(r.max_residual));
  }
  return r;
}

namespace {

template <typename Residual>
ScanReport run_scan(std::string id, Residual residual) {
  ScanReport rep;
  rep.id = std::move(id);
  rep.min_residual = std::numeric_limits<double>::infinity();
  const std::vector<double> cs = uniform(-kScanRange, kScanRange, kScanSide);
  for (double c1 : cs) {
    for (double c2 : cs) {
      if (c1 == 0.0 && c2 == 0.0) continue;
      const std::optional<double> r = residual(c1, c2);
      if (!r) continue;
      ++rep.points_scanned;
      if (*r < rep.min_residual) {
        rep.min_residual = *r;
        rep.argmin_c1 = c1;
        rep.argmin_c2 = c2;
      }
    }
  }
  rep.pass = rep.points_scanned > 0 && rep.min_residual >= rep.bound;
  return rep;
}

const std::vector<double>& scan_times() {
  static const std::vector<double> g = chebyshev_grid(0.0, 1.0, 33);
  return g;
}

}  // namespace

ScanReport grw_einstein_scan(int l, double lambda, double lambda_F) {
  if (l < 2) throw Error(ErrorCode::InvalidDimension, "Einstein GRW families need dim F >= 2");
  const double L = l;
  if (!(lambda > L)) throw Error(ErrorCode::CaseMismatch, "the oscillating case needs lambda > l");
  const double b = std::sqrt(lambda / L - 1.0);
  const double k = lambda / L - 1.0 - lambda;
  return run_scan("grw-einstein-oscillating", [&](double c1, double c2) -> std::optional<double> {
    double worst = 0.0;
    for (double t : scan_times()) {
      const double f = c1 * std::cos(b * t) + c2 * std::sin(b * t);
      const double fp = -c1 * b * std::sin(b * t) + c2 * b * std::cos(b * t);
      worst = std::max(worst, std::abs(lambda_F + (1.0 - L) * fp * fp + k * f * f + L * f * fp));
    }
    return worst;
  });
}

ScanReport kasner_type2_oscillating_scan(std::span<const double> p, double lambda,
                                         double lambda_2) {
  require_lengths(p.size(), 2, "Type II exponents");
  const double zeta = p[0] + 2.0 * p[1];
  const double eta = p[0] * p[0] + 2.0 * p[1] * p[1];
  if (near(zeta, 0.0) || !(lambda > 3.0) || near(p[0], p[1])) {
    throw Error(ErrorCode::CaseMismatch, "the oscillating case needs zeta != 0, p1 != p2, lambda > 3");
  }
  const double a = std::sqrt((lambda - 3.0) * eta / (zeta * zeta));
  const double K = p[0] * lambda_2 * eta / ((p[1] - p[0]) * zeta * zeta);
  const double q = 1.0 - 2.0 * p[1] * zeta / eta;
  const double lin = lambda * eta / (zeta * zeta);
  const bool integer_power = q == std::round(q);
  return run_scan("kasner-type2-oscillating", [&](double c1, double c2) -> std::optional<double> {
    double worst = 0.0;
    for (double t : scan_times()) {
      const double psi = c1 * std::cos(a * t) + c2 * std::sin(a * t);
      if (!integer_power && !(psi > 0.0)) return std::nullopt;
      const double dpsi = a * (-c1 * std::sin(a * t) + c2 * std::cos(a * t));
      worst = std::max(worst, std::abs(dpsi - K * std::pow(psi, q) - lin * psi));
    }
    return worst;
  });
}

ScanReport kasner_type3_linear_scan(std::span<const double> p, double lambda) {
  require_lengths(p.size(), 3, "Type III exponents");
  const std::vector<int> l{1, 1, 1};
  const KasnerInvariants inv = kasner_invariants(p, l);
  if (near(inv.zeta, 0.0)) throw Error(ErrorCode::CaseMismatch, "the linear case needs zeta != 0");
  const std::vector<double> zero(3, 0.0);
  const double k = 1.0 / inv.zeta;
  return run_scan("kasner-type3-linear", [&](double c1, double c2) -> std::optional<double> {
    if (!(c1 > 0.0) || !(c1 + c2 > 0.0)) return std::nullopt;
    double worst = 0.0;
    for (double t : scan_times()) {
      const Derivs psi{c1 + c2 * t, c2, 0.0};
      const Derivs phi = power_derivs(psi, k);
      for (double v : kasner_einstein_values(p, l, lambda, zero, phi, KasnerForm::Published)) {
        worst = std::max(worst, std::abs(v));
      }
    }
    return worst;
  });
}

}  // namespace warpcurv
