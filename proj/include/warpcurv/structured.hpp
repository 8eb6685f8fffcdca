#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/connection.hpp"
#include "warpcurv/manifold.hpp"

namespace warpcurv {

// A tangent vector living in one block, with components in that block's
// coordinates.
struct BlockVector {
  Block block = Block::base();
  Eigen::VectorXd components;
};

// Warping data of one fiber at a point. Base derivatives are flat-chart
// partials; fiber derivatives are partials in the fiber's own coordinates.
struct WarpingData {
  double b = 1.0;
  Eigen::VectorXd grad_base;     // d_a b
  Eigen::MatrixXd hessian_base;  // H^b_B(d_a, d_b)
  Eigen::VectorXd grad_fiber;    // d_alpha b
  Eigen::MatrixXd hessian_fiber; // d_alpha d_beta b
  Eigen::MatrixXd mixed;         // (alpha, a) -> d_alpha d_a b
  double laplacian_base = 0.0;   // Delta_B b
  double grad_norm2_base = 0.0;  // |grad_B b|^2_B

  // Interval base only: b', b''.
  double dt = 0.0;
  double dtt = 0.0;

  // Fiber geometry at the point.
  Eigen::VectorXd fiber_metric;  // diagonal of g_F
  Rank3 fiber_christoffel;
  double fiber_curvature = 0.0;  // sectional curvature of g_F
};

struct StructuredGeometryCache {
  const ProductManifoldSpec* spec = nullptr;
  PointCoords point;
  std::vector<WarpingData> fibers;

  bool p_zero = true;
  Block p_location = Block::base();
  Eigen::VectorXd p_components;   // in the hosting block's coordinates
  Eigen::MatrixXd p_derivative;   // (hosting coord, component) -> d P
  Eigen::VectorXd pi;             // pi as a covector over all coordinates
  double pi_of_p = 0.0;           // pi(P) = g(P, P)
  double div_p = 0.0;             // Levi-Civita divergence of P on M
  double block_div_p = 0.0;       // div_B P or div_{F_r} P
};

StructuredGeometryCache build_structured_cache(const ProductManifoldSpec& spec,
                                               const TorsionVectorFieldSpec& P,
                                               const PointCoords& p);

// Embed a block vector into chart components; throws CaseMismatch when its
// tag does not fit the spec.
Eigen::VectorXd embed(const ProductManifoldSpec& spec, const BlockVector& v);

// Levi-Civita derivative of P along v, computed from the block formulas.
Eigen::VectorXd structured_nabla_p(const StructuredGeometryCache& c, const BlockVector& v);

struct StructuredValue {
  std::string clause;
  Eigen::VectorXd value;
};

struct StructuredScalarValue {
  std::string clause;
  double value = 0.0;
};

// Covariant derivative of constant-coefficient fields, D_X Y.
StructuredValue structured_covariant_derivative(const ProductManifoldSpec& spec,
                                                const TorsionVectorFieldSpec& P,
                                                ConnectionKind kind, const BlockVector& x,
                                                const BlockVector& y, const PointCoords& p);

// R(X, Y) Z.
StructuredValue structured_curvature(const ProductManifoldSpec& spec,
                                     const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                     const BlockVector& x, const BlockVector& y,
                                     const BlockVector& z, const PointCoords& p);

// Ric(X, Y).
StructuredScalarValue structured_ricci(const ProductManifoldSpec& spec,
                                       const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                       const BlockVector& x, const BlockVector& y,
                                       const PointCoords& p);

// Full Ricci matrix in chart components from structured_ricci.
Eigen::MatrixXd structured_ricci_matrix(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const PointCoords& p);

StructuredScalarValue structured_scalar(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const PointCoords& p);

// Versions that reuse a prebuilt cache.
StructuredValue structured_curvature(const StructuredGeometryCache& c, ConnectionKind kind,
                                     const BlockVector& x, const BlockVector& y,
                                     const BlockVector& z);
StructuredScalarValue structured_ricci(const StructuredGeometryCache& c, ConnectionKind kind,
                                       const BlockVector& x, const BlockVector& y);
StructuredScalarValue structured_scalar(const StructuredGeometryCache& c, ConnectionKind kind);

// Clause label for an argument pattern, for coverage reporting.
std::string curvature_clause(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                             ConnectionKind kind, Block x, Block y, Block z);

struct MixedRicciReport {
  bool mixed_ricci_flat = true;
  double max_mixed = 0.0;
  bool twisted = false;
  int fibers_examined = 0;
  std::string note;
};

// Whether Ric(X, V) and Ric(V, X) vanish (<= 1e-8) over the points, for base X
// and V in fibers of dimension > 1.
MixedRicciReport mixed_ricci_flat_check(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const std::vector<PointCoords>& points);

}  // namespace warpcurv
