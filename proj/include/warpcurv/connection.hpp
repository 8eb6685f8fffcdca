#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/chart.hpp"
#include "warpcurv/expr.hpp"
#include "warpcurv/manifold.hpp"

namespace warpcurv {

// The vector field P defining pi(X) = g(X, P). P lives in a single block and
// its components depend only on that block's coordinates.
struct TorsionVectorFieldSpec {
  Block location = Block::base();
  // One component per coordinate of the hosting block. Empty means P = 0.
  std::vector<ScalarExpr> components;

  static TorsionVectorFieldSpec zero() { return {}; }
  static TorsionVectorFieldSpec on_base(std::vector<ScalarExpr> c);
  static TorsionVectorFieldSpec on_fiber(int r, std::vector<ScalarExpr> c);
  // Components for every chart coordinate. Throws UnsupportedP when more than
  // one block carries a nonzero component.
  static TorsionVectorFieldSpec from_components(const ProductManifoldSpec& spec,
                                                const std::vector<ScalarExpr>& all);

  bool is_zero() const;
  TorsionVectorFieldSpec scaled(double c) const;
};

enum class ConnectionKind { LeviCivita, SemiSymmetricNonMetric, SymmetrizedAffine };

std::string to_string(ConnectionKind k);

// P, its first partials and pi = g(., P) at a point, in chart components.
struct TorsionFieldValue {
  Eigen::VectorXd vector;      // P^k
  Eigen::MatrixXd derivative;  // (i, k) -> d_i P^k
  Eigen::VectorXd form;        // pi_j = g_jm P^m
  Eigen::MatrixXd form_derivative;  // (i, j) -> d_i pi_j
};

// Throws UnsupportedP if P does not fit the spec.
void validate_torsion_field(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P);

TorsionFieldValue evaluate_torsion_field(const ProductManifoldSpec& spec,
                                         const TorsionVectorFieldSpec& P,
                                         const PointCoords& p);

ConnectionCoefficients modified_coefficients(ConnectionKind kind, const ProductManifoldSpec& spec,
                                             const TorsionVectorFieldSpec& P,
                                             const PointCoords& p);

CoefficientField connection_field(ConnectionKind kind, const ProductManifoldSpec& spec,
                                  const TorsionVectorFieldSpec& P);

// (k, i, j) -> T^k_ij = Gamma^k_ij - Gamma^k_ji.
Rank3 torsion_tensor(ConnectionKind kind, const ProductManifoldSpec& spec,
                     const TorsionVectorFieldSpec& P, const PointCoords& p);

// (i, j, k) -> (D_i g)(d_j, d_k).
Rank3 nonmetricity(ConnectionKind kind, const ProductManifoldSpec& spec,
                   const TorsionVectorFieldSpec& P, const PointCoords& p);

// Covariant derivative of P under Levi-Civita: (i, k) -> (nabla_i P)^k.
Eigen::MatrixXd levi_civita_derivative_of_field(const ProductManifoldSpec& spec,
                                                const TorsionFieldValue& P,
                                                const PointCoords& p);

// Curvature of the chosen connection from the Levi-Civita curvature plus the
// correction terms in P. With cross_check the result is compared with
// curvature_from_coefficients(connection_field(...)) and NumericalInstability
// is thrown if they differ by more than 1e-4.
CurvatureAtPoint curvature_via_relation(ConnectionKind kind, const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, const PointCoords& p,
                                        bool cross_check = true);

}  // namespace warpcurv
