#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "warpcurv/einstein.hpp"
#include "warpcurv/expr.hpp"

namespace warpcurv {

// Value and first two t-derivatives of a function of one variable.
struct Derivs {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Second-order ODE y'' = rhs(t, y, y') for the unknown of a family.
struct GoverningOde {
  std::string unknown;
  std::function<double(double t, double y, double dy)> rhs;
};

struct FamilyResidual {
  std::string id;
  // Residual at t given the unknown and the warping profile (unknown^k).
  std::function<double(double t, const Derivs& unknown, const Derivs& profile)> eval;
};

enum class FamilyKind { ClosedForm, NumericOnly };

struct SolutionFamily {
  std::string generator;   // grw-einstein, grw-scalar, kasner-einstein, kasner-scalar
  std::string case_label;
  FamilyKind kind = FamilyKind::ClosedForm;
  // Ordered so reports are deterministic.
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<std::string> free_constants;
  std::vector<double> default_constants;
  std::vector<std::string> constraints;

  // The profile (f or phi) equals unknown^profile_exponent. The unknown must
  // stay positive on the interval.
  std::string unknown;
  std::string profile;
  double profile_exponent = 1.0;

  // Closed form of the unknown in t. Empty for NumericOnly families.
  std::function<ScalarExpr(std::span<const double> c)> closed_form;
  // NumericOnly: initial (y, y') at the interval start from the constants.
  std::function<std::array<double, 2>(std::span<const double> c)> initial_state;

  GoverningOde ode;
  std::vector<FamilyResidual> residuals;

  double parameter(const std::string& name) const;
};

// ---- Kasner data ----------------------------------------------------------

struct KasnerInvariants {
  double zeta = 0.0;  // sum l_i p_i
  double eta = 0.0;   // sum l_i p_i^2
};

// Throws LengthMismatch when the lengths differ and InvalidDimension for a
// nonpositive dimension.
KasnerInvariants kasner_invariants(std::span<const double> p, std::span<const int> l);

struct KasnerSpec {
  std::vector<double> p;
  std::vector<int> l;
  ScalarExpr phi;  // profile in t

  KasnerInvariants invariants() const { return kasner_invariants(p, l); }
};

enum class KasnerType { I, II, III };

// Type from the fiber dimensions: (3), (1, 2) or (1, 1, 1). Throws
// UnsupportedType for anything else.
KasnerType kasner_type(std::span<const int> l);

// Which fiber equation of the Kasner Einstein system to evaluate. Published
// carries zeta * phi'/phi in every fiber equation; Geometric carries
// (sum l) p_i phi'/phi, which is what the connection's Ricci tensor gives.
enum class KasnerForm { Published, Geometric };

// Residuals "time" and "fiber-<i>" of the Kasner Einstein system over the grid.
// Throws NonPositiveWarping if phi <= 0 on the grid, LengthMismatch if
// lambda_i does not match the fibers.
std::vector<ResidualReport> kasner_einstein_residuals(const KasnerSpec& k, double lambda,
                                                      std::span<const double> lambda_i,
                                                      const std::vector<double>& grid,
                                                      double tolerance = 1e-10,
                                                      KasnerForm form = KasnerForm::Published);

// ---- generators -----------------------------------------------------------

// Einstein GRW families I x_f F with P = d/dt. Throws InvalidDimension for l < 2.
std::vector<SolutionFamily> grw_einstein_family(int l, double lambda, double lambda_F);

// Constant scalar curvature GRW families. l = 3 (any S^F) and l != 3 with
// S^F = 0 have closed forms; l != 3 with S^F != 0 gives one NumericOnly family.
std::vector<SolutionFamily> grw_scalar_family(int l, double scalar, double fiber_scalar);

// Case threshold of grw_scalar_family: l^3/(4(l+1)) + l (75/16 for l = 3).
double grw_scalar_threshold(int l);
// Discriminant l^2/4 + (l+1)(l - S)/l of the characteristic equation.
double grw_scalar_discriminant(int l, double scalar);

std::vector<SolutionFamily> kasner_einstein_families(KasnerType type, std::span<const double> p,
                                                     std::span<const int> l, double lambda,
                                                     std::span<const double> lambda_i);

std::vector<SolutionFamily> kasner_scalar_families(KasnerType type, std::span<const double> p,
                                                   std::span<const int> l, double scalar,
                                                   std::span<const double> fiber_scalars);

// 9 zeta^2/(4(eta + zeta^2)) + 3 and 9/4 - (S - 3)(eta + zeta^2)/zeta^2.
double kasner_scalar_threshold(double zeta, double eta);
double kasner_scalar_discriminant(double zeta, double eta, double scalar);

// ---- instances ------------------------------------------------------------

// Unknown and profile expressions in t for concrete constants. Throws
// InvalidSpec for the wrong number of constants or a NumericOnly family, and
// NonPositiveWarping when the unknown is not positive on [lower, upper].
ScalarExpr family_unknown(const SolutionFamily& f, std::span<const double> c, double lower,
                          double upper);
ScalarExpr family_profile(const SolutionFamily& f, std::span<const double> c, double lower,
                          double upper);
bool admissible(const SolutionFamily& f, std::span<const double> c, double lower, double upper);

// Every residual of a closed-form family over the grid.
std::vector<ResidualReport> family_residuals(const SolutionFamily& f, std::span<const double> c,
                                             const std::vector<double>& grid,
                                             double tolerance = 1e-10);

struct Trajectory {
  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> dy;
};

// Classical fourth-order Runge-Kutta with n_steps uniform steps.
Trajectory integrate_rk4(const GoverningOde& ode, double lower, double upper, double y0,
                         double dy0, int n_steps);

// Residuals of a family along its RK4 trajectory (NumericOnly families), with
// y'' taken from the ODE.
std::vector<ResidualReport> numeric_family_residuals(const SolutionFamily& f,
                                                     std::span<const double> c, double lower,
                                                     double upper, int n_steps,
                                                     double tolerance = 1e-8);

// Integrates the governing ODE from the closed form's initial values and
// reports the max deviation (tolerance 1e-6). Throws StepTooCoarse when it
// exceeds 1e-4.
ResidualReport ode_cross_check(const SolutionFamily& f, std::span<const double> c, double lower,
                               double upper, int n_steps = 1000);

// ---- nonexistence scans ---------------------------------------------------

inline constexpr int kScanSide = 41;
inline constexpr double kScanRange = 2.0;
inline constexpr double kScanBound = 0.01;

struct ScanReport {
  std::string id;
  int side = kScanSide;
  double range = kScanRange;
  double bound = kScanBound;
  int points_scanned = 0;
  double min_residual = 0.0;
  double argmin_c1 = 0.0;
  double argmin_c2 = 0.0;
  bool pass = false;  // min_residual >= bound
};

// f = c1 cos(bt) + c2 sin(bt), b = sqrt(lambda/l - 1), against the fiber
// Einstein condition over t in [0, 1]. Needs lambda > l (CaseMismatch).
ScanReport grw_einstein_scan(int l, double lambda, double lambda_F);

// Type II with zeta != 0 and lambda > 3: psi = c1 cos(at) + c2 sin(at) against
// psi' = K psi^(1 - 2 p2 zeta/eta) + (lambda eta/zeta^2) psi,
// K = p1 lambda_2 eta/((p2 - p1) zeta^2). Throws CaseMismatch otherwise.
ScanReport kasner_type2_oscillating_scan(std::span<const double> p, double lambda,
                                         double lambda_2);

// Type III with zeta != 0: phi^zeta = c1 + c2 t against the published Kasner
// Einstein system; points where c1 + c2 t is not positive on [0, 1] are skipped.
ScanReport kasner_type3_linear_scan(std::span<const double> p, double lambda);

}  // namespace warpcurv
