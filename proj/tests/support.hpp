#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/chart.hpp"
#include "warpcurv/connection.hpp"
#include "warpcurv/manifold.hpp"
#include "warpcurv/structured.hpp"

namespace testsupport {

using warpcurv::ScalarExpr;

inline ScalarExpr var(const std::string& name) { return ScalarExpr::variable(name); }
inline ScalarExpr num(double v) { return ScalarExpr::constant(v); }

// Coordinate vector d_coord as a block-tagged vector.
warpcurv::BlockVector unit(const warpcurv::ProductManifoldSpec& spec, int coord);

double max_abs(const Eigen::MatrixXd& m);

struct OracleCase {
  std::string name;
  warpcurv::ProductManifoldSpec spec;
  warpcurv::TorsionVectorFieldSpec P;
  std::vector<warpcurv::PointCoords> points;
};

// Specs covering P on the base, on a fiber and P = 0; one to three fibers;
// torus, circle, sphere and hyperbolic fibers; the Lorentzian interval and
// flat 2- and 3-dimensional bases; twisted products. Five points each.
std::vector<OracleCase> oracle_cases();

// Worst deviation of each structured evaluator from the chart pipeline.
struct OracleDeviation {
  double derivative = 0.0;
  double curvature = 0.0;
  double ricci = 0.0;
  double scalar = 0.0;
  std::vector<std::string> clauses;  // every clause label that was evaluated
};

OracleDeviation compare_with_oracle(const OracleCase& c, warpcurv::ConnectionKind kind);

}  // namespace testsupport
