#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/manifold.hpp"
#include "warpcurv/tensor.hpp"

namespace warpcurv {

// Orthonormal frame: column a of `vectors` is E_a in coordinate components,
// g(E_a, E_b) = signs[a] * delta_ab. Each E_a lies in blocks[a].
struct FrameField {
  Eigen::MatrixXd vectors;
  std::vector<double> signs;
  std::vector<Block> blocks;
};

struct CurvatureAtPoint {
  // R^l_{ijk} stored as (l, i, j, k): R(d_i, d_j) d_k = R^l_{ijk} d_l.
  Rank4 riemann;
  // Ric(d_j, d_k) = sum_a eps_a g(R(d_j, E_a) d_k, E_a). Not symmetric in
  // general.
  Eigen::MatrixXd ricci;
  double scalar = 0.0;
};

// Field of connection coefficients over the chart.
using CoefficientField = std::function<ConnectionCoefficients(const PointCoords&)>;

Eigen::MatrixXd assemble_metric(const ProductManifoldSpec& spec, const PointCoords& p);

// (k, i, j) -> d_k g_ij, exact.
Rank3 metric_derivatives(const ProductManifoldSpec& spec, const PointCoords& p);

ConnectionCoefficients levi_civita_coefficients(const ProductManifoldSpec& spec,
                                                const PointCoords& p);
CoefficientField levi_civita_field(const ProductManifoldSpec& spec);

FrameField orthonormal_frame(const ProductManifoldSpec& spec, const PointCoords& p);

// Curvature of an arbitrary coefficient field. Derivatives of the field are
// central differences (step 1e-5) with one Richardson step.
CurvatureAtPoint curvature_from_coefficients(const ProductManifoldSpec& spec,
                                             const CoefficientField& field,
                                             const PointCoords& p);

// Ricci matrix and scalar from a Riemann array, with the frame at p.
void contract_curvature(const ProductManifoldSpec& spec, const PointCoords& p,
                        CurvatureAtPoint& c);

// R(X, Y) Z for coordinate-component vectors.
Eigen::VectorXd apply_riemann(const Rank4& r, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& z);

// Step used for differentiating coefficient fields.
inline constexpr double kCoefficientStep = 1e-5;

}  // namespace warpcurv
