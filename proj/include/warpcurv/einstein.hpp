#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/connection.hpp"
#include "warpcurv/manifold.hpp"

namespace warpcurv {

inline constexpr int kDefaultGridPoints = 17;
inline constexpr double kClosedFormTolerance = 1e-8;
inline constexpr double kOracleTolerance = 1e-6;

// n Chebyshev points of the first kind on (lower, upper), ascending. They stay
// strictly inside the interval; n = 1 gives the midpoint.
std::vector<double> chebyshev_grid(double lower, double upper, int n = kDefaultGridPoints);

struct ResidualReport {
  std::string id;
  std::vector<double> grid;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  bool operator==(const ResidualReport&) const = default;
};

// Fill max_residual/pass from the sampled residual values.
ResidualReport make_report(std::string id, std::vector<double> grid,
                           const std::vector<double>& residuals, double tolerance);

struct EinsteinCheckResult {
  double lambda = 0.0;
  double tolerance = 0.0;
  std::vector<ResidualReport> residuals;
  bool pass = false;
};

// Einstein conditions of the semi-symmetric connection for P = d/dt on a
// multiply warped product over an interval with -dt^2:
//   "time":      sum_i l_i (1 - b_i''/b_i) - lambda
//   "fiber-<i>": lambda_i - b_i b_i'' - (l_i - 1) b_i'^2
//                - b_i b_i' sum_{j != i} l_j b_j'/b_j + (n - 1) b_i b_i' - lambda b_i^2
// with lambda_i the fiber's Einstein constant and n - 1 = sum l_j.
// Throws FiberNotEinstein when a fiber carries no Einstein constant and
// InvalidSpec when the base is not an interval or the spec is twisted.
EinsteinCheckResult grw_einstein_residuals(const ProductManifoldSpec& spec, double lambda,
                                           const std::vector<double>& grid,
                                           double tolerance = kClosedFormTolerance);

// Pseudo-Einstein conditions (symmetrized Ricci = lambda g) of the
// semi-symmetric connection with P tangent to fiber r:
//   "time":      -sum_i l_i b_i''/b_i - lambda
//   "fiber-<r>": on every pair of g_F-orthonormal frame vectors V, W of fiber r
//                Ric^F(V,W) - g_F(V,W)[b b'' + (l-1) b'^2 + b b' sum_{j!=r} l_j b_j'/b_j
//                + lambda b^2] - (n-1)[pi(V)pi(W) - (g(W, nabla_V P) + g(V, nabla_W P))/2]
//   "fiber-<i>": lambda_i - b_i b_i'' - (l_i - 1) b_i'^2 - b_i b_i' sum_{j!=i} ... - lambda b_i^2
// The fiber-r condition is sampled at fiber_points (coordinates of fiber r),
// or at the built-in sample points when empty. P = 0 treats every fiber as
// i != r. Throws DimensionTooSmall when dim M <= 2, UnsupportedP when P is on
// the base, FiberNotEinstein as above.
EinsteinCheckResult pseudo_einstein_residuals(const ProductManifoldSpec& spec,
                                              const TorsionVectorFieldSpec& P, double lambda,
                                              const std::vector<double>& grid,
                                              double tolerance = kClosedFormTolerance,
                                              const std::vector<Eigen::VectorXd>& fiber_points = {});

// Scalar curvature of the semi-symmetric connection from the warping data:
// for P = d/dt
//   -2 sum l b''/b + sum S^F/b^2 + sum l - sum l(l-1) b'^2/b^2
//   - sum_{i != j} l_i l_j b_i' b_j'/(b_i b_j) + (sum l)(sum l_j b_j'/b_j),
// for P on fiber r the same LC part plus (n - 1)(div_{F_r} P - g(P, P)), and
// for P = 0 the LC part alone. Throws UnsupportedP for any other P on the base.
double multiwarped_scalar_value(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                                const PointCoords& p);

// Deviation of multiwarped_scalar_value from the chart scalar curvature over
// the grid (fibers at sample point 0).
ResidualReport multiwarped_scalar(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                                  const std::vector<double>& grid,
                                  double tolerance = kOracleTolerance);

struct SeparationReport {
  bool scalar_constant = false;
  double spread = 0.0;         // max - min of the scalar curvature over the samples
  bool grid_too_small = false;
  bool fibers_constant = true;  // every fiber that must have constant S^F does
  bool p_hypotheses = false;    // g_F(P, P) and div_F P constant on fiber r
  bool pass = true;
  std::string note;
};

// If the scalar curvature is constant over the grid (spread < 1e-8), checks
// that the fibers required to have constant scalar curvature do; otherwise
// reports "S̄ not constant".
SeparationReport constant_scalar_separation_check(const ProductManifoldSpec& spec,
                                                  const TorsionVectorFieldSpec& P,
                                                  const std::vector<double>& grid);

}  // namespace warpcurv
