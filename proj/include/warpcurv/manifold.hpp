#pragma once

#include <compare>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpcurv/expr.hpp"
#include "warpcurv/tensor.hpp"

namespace warpcurv {

// Coordinates of a chart point: base coordinates first, then fiber blocks in
// declaration order.
using PointCoords = Eigen::VectorXd;

// Which factor of the product a coordinate or vector belongs to.
class Block {
 public:
  static Block base() { return Block(-1); }
  static Block fiber(int i) { return Block(i); }

  bool is_base() const { return index_ < 0; }
  int fiber_index() const { return index_; }

  auto operator<=>(const Block&) const = default;

 private:
  explicit Block(int index) : index_(index) {}
  int index_;
};

std::string to_string(Block b);

enum class BaseKind { Interval, Flat };

struct BaseSpec {
  BaseKind kind = BaseKind::Interval;
  std::vector<double> signature{-1.0};
  std::vector<std::string> coords{"t"};
  // Only used for the interval.
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  int dim() const { return static_cast<int>(signature.size()); }

  // I with metric -dt^2.
  static BaseSpec interval(
      double lower = -std::numeric_limits<double>::infinity(),
      double upper = std::numeric_limits<double>::infinity(),
      std::string coord = "t");
  // Flat chart with diagonal metric diag(signature); 1 <= dim <= 3.
  static BaseSpec flat(std::vector<double> signature,
                       std::vector<std::string> coords = {});
};

enum class FiberGeometry { FlatTorus, Circle, Sphere, Hyperbolic };

std::string to_string(FiberGeometry g);

// Built-in fiber (F, g_F). Einstein constant and scalar curvature follow the
// library's Ricci convention Ric(X,Y) = sum_a eps_a g(R(X,E_a)Y, E_a), under
// which a round sphere of radius r has lambda = -1/r^2.
struct FiberSpec {
  FiberGeometry geometry = FiberGeometry::FlatTorus;
  int dim = 1;
  double radius = 1.0;
  std::vector<std::string> coords;
  std::optional<double> einstein_constant;
  double scalar_curvature = 0.0;

  static FiberSpec torus(int dim, double radius = 1.0);
  static FiberSpec circle(double radius = 1.0);
  static FiberSpec sphere(double radius = 1.0);
  static FiberSpec hyperbolic(double radius = 1.0);

  // Sectional curvature of g_F in the standard sign (sphere positive).
  double sectional_curvature() const;

  // Diagonal of g_F as expressions in `names` (one name per coordinate).
  std::vector<ScalarExpr> metric_diagonal(
      const std::vector<std::string>& names) const;
  // Levi-Civita coefficients of g_F at fiber coordinates u, as (k, i, j).
  Rank3 christoffel(std::span<const double> u) const;
  // Same diagonal as metric_diagonal, evaluated numerically.
  Eigen::VectorXd metric_values(std::span<const double> u) const;

  bool in_chart(std::span<const double> u) const;
};

// Margin kept from the sphere chart poles.
inline constexpr double kSphereChartMargin = 0.2;

// Number of fixed fiber sample points offered by fiber_sample_coords.
inline constexpr int kFiberSamples = 3;

// A fixed point inside the fiber chart; sample in [0, kFiberSamples).
Eigen::VectorXd fiber_sample_coords(const FiberSpec& f, int sample = 0);

class ProductManifoldSpec {
 public:
  ProductManifoldSpec(BaseSpec base, std::vector<FiberSpec> fibers,
                      std::vector<ScalarExpr> warpings, bool twisted = false);

  const BaseSpec& base() const { return base_; }
  const std::vector<FiberSpec>& fibers() const { return fibers_; }
  const FiberSpec& fiber(int i) const { return fibers_[i]; }
  int fiber_count() const { return static_cast<int>(fibers_.size()); }
  bool twisted() const { return twisted_; }

  int base_dim() const { return base_.dim(); }
  int dim() const { return dim_; }

  int offset(Block b) const;
  int block_dim(Block b) const;
  Block block_of(int coord) const;

  const std::vector<std::string>& coordinate_names() const { return names_; }
  std::vector<std::string> block_coordinate_names(Block b) const;

  // Warping b_i bound to coordinate_names().
  const ScalarExpr& warping(int i) const { return warpings_[i]; }
  // Metric component g_ab bound to coordinate_names().
  const ScalarExpr& metric_expr(int a, int b) const {
    return metric_[static_cast<std::size_t>(a) * dim_ + b];
  }

  // Throws OutOfChart or NonPositiveWarping.
  void check_point(const PointCoords& p) const;

  // Chart point with the given base coordinates and every fiber at
  // fiber_sample_coords(.., sample).
  PointCoords point_over(std::span<const double> base, int sample = 0) const;
  PointCoords point_over(double t, int sample = 0) const { return point_over({&t, 1}, sample); }

  // Copy of the spec with fiber i's metric scaled by c^2 and b_i divided by c.
  ProductManifoldSpec rescaled_fiber(int i, double c) const;

 private:
  BaseSpec base_;
  std::vector<FiberSpec> fibers_;
  std::vector<ScalarExpr> warpings_;
  bool twisted_;
  int dim_ = 0;
  std::vector<int> offsets_;
  std::vector<std::string> names_;
  std::vector<ScalarExpr> metric_;
};

}  // namespace warpcurv
