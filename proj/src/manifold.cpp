#include "warpcurv/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "warpcurv/error.hpp"

namespace warpcurv {

std::string to_string(Block b) {
  return b.is_base() ? std::string("base")
                     : "fiber " + std::to_string(b.fiber_index() + 1);
}

std::string to_string(FiberGeometry g) {
  switch (g) {
    case FiberGeometry::FlatTorus: return "torus";
    case FiberGeometry::Circle: return "circle";
    case FiberGeometry::Sphere: return "sphere";
    case FiberGeometry::Hyperbolic: return "hyperbolic";
  }
  return "unknown";
}

BaseSpec BaseSpec::interval(double lower, double upper, std::string coord) {
  if (!(lower < upper)) {
    throw Error(ErrorCode::InvalidSpec, "empty base interval");
  }
  BaseSpec b;
  b.kind = BaseKind::Interval;
  b.signature = {-1.0};
  b.coords = {std::move(coord)};
  b.lower = lower;
  b.upper = upper;
  return b;
}

BaseSpec BaseSpec::flat(std::vector<double> signature,
                        std::vector<std::string> coords) {
  if (signature.empty() || signature.size() > 3) {
    throw Error(ErrorCode::InvalidSpec, "flat base must have dimension 1 to 3");
  }
  for (double s : signature) {
    if (s != 1.0 && s != -1.0) {
      throw Error(ErrorCode::InvalidSpec, "flat base signature entries must be +-1");
    }
  }
  if (coords.empty()) {
    static const char* kNames[] = {"u", "v", "w"};
    for (std::size_t i = 0; i < signature.size(); ++i) coords.emplace_back(kNames[i]);
  }
  if (coords.size() != signature.size()) {
    throw Error(ErrorCode::InvalidSpec, "flat base needs one name per coordinate");
  }
  BaseSpec b;
  b.kind = BaseKind::Flat;
  b.signature = std::move(signature);
  b.coords = std::move(coords);
  return b;
}

FiberSpec FiberSpec::torus(int dim, double radius) {
  if (dim < 1) throw Error(ErrorCode::InvalidSpec, "torus dimension must be >= 1");
  FiberSpec f;
  f.geometry = FiberGeometry::FlatTorus;
  f.dim = dim;
  f.radius = radius;
  if (dim <= 3) {
    static const char* kNames[] = {"x", "y", "z"};
    for (int i = 0; i < dim; ++i) f.coords.emplace_back(kNames[i]);
  } else {
    for (int i = 0; i < dim; ++i) f.coords.push_back("x" + std::to_string(i + 1));
  }
  f.einstein_constant = 0.0;
  f.scalar_curvature = 0.0;
  return f;
}

FiberSpec FiberSpec::circle(double radius) {
  FiberSpec f;
  f.geometry = FiberGeometry::Circle;
  f.dim = 1;
  f.radius = radius;
  f.coords = {"theta"};
  f.einstein_constant = 0.0;
  f.scalar_curvature = 0.0;
  return f;
}

FiberSpec FiberSpec::sphere(double radius) {
  FiberSpec f;
  f.geometry = FiberGeometry::Sphere;
  f.dim = 2;
  f.radius = radius;
  f.coords = {"theta", "phi"};
  const double k = 1.0 / (radius * radius);
  f.einstein_constant = -k;
  f.scalar_curvature = -2.0 * k;
  return f;
}

FiberSpec FiberSpec::hyperbolic(double radius) {
  FiberSpec f;
  f.geometry = FiberGeometry::Hyperbolic;
  f.dim = 2;
  f.radius = radius;
  f.coords = {"x", "y"};
  const double k = 1.0 / (radius * radius);
  f.einstein_constant = k;
  f.scalar_curvature = 2.0 * k;
  return f;
}

double FiberSpec::sectional_curvature() const {
  switch (geometry) {
    case FiberGeometry::Sphere: return 1.0 / (radius * radius);
    case FiberGeometry::Hyperbolic: return -1.0 / (radius * radius);
    default: return 0.0;
  }
}

std::vector<ScalarExpr> FiberSpec::metric_diagonal(
    const std::vector<std::string>& names) const {
  const ScalarExpr r2 = ScalarExpr::constant(radius * radius);
  std::vector<ScalarExpr> d(static_cast<std::size_t>(dim), r2);
  if (geometry == FiberGeometry::Sphere) {
    d[1] = r2 * pow(sin(ScalarExpr::variable(names[0])), 2.0);
  } else if (geometry == FiberGeometry::Hyperbolic) {
    d[1] = r2 * exp(2.0 * ScalarExpr::variable(names[0]));
  }
  return d;
}

Eigen::VectorXd FiberSpec::metric_values(std::span<const double> u) const {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(dim, radius * radius);
  if (geometry == FiberGeometry::Sphere) {
    d(1) *= std::sin(u[0]) * std::sin(u[0]);
  } else if (geometry == FiberGeometry::Hyperbolic) {
    d(1) *= std::exp(2.0 * u[0]);
  }
  return d;
}

Rank3 FiberSpec::christoffel(std::span<const double> u) const {
  Rank3 c(dim);
  if (geometry == FiberGeometry::Sphere) {
    c(0, 1, 1) = -std::sin(u[0]) * std::cos(u[0]);
    c(1, 0, 1) = c(1, 1, 0) = std::cos(u[0]) / std::sin(u[0]);
  } else if (geometry == FiberGeometry::Hyperbolic) {
    c(0, 1, 1) = -std::exp(2.0 * u[0]);
    c(1, 0, 1) = c(1, 1, 0) = 1.0;
  }
  return c;
}

bool FiberSpec::in_chart(std::span<const double> u) const {
  for (double v : u) {
    if (!std::isfinite(v)) return false;
  }
  if (geometry == FiberGeometry::Sphere) {
    return u[0] >= kSphereChartMargin &&
           u[0] <= std::numbers::pi - kSphereChartMargin;
  }
  return true;
}

ProductManifoldSpec::ProductManifoldSpec(BaseSpec base,
                                         std::vector<FiberSpec> fibers,
                                         std::vector<ScalarExpr> warpings,
                                         bool twisted)
    : base_(std::move(base)),
      fibers_(std::move(fibers)),
      warpings_(std::move(warpings)),
      twisted_(twisted) {
  if (fibers_.empty()) {
    throw Error(ErrorCode::InvalidSpec, "at least one fiber is required");
  }
  if (warpings_.size() != fibers_.size()) {
    throw Error(ErrorCode::InvalidSpec, "need exactly one warping per fiber");
  }

  names_ = base_.coords;
  std::set<std::string> taken(names_.begin(), names_.end());
  if (taken.size() != names_.size()) {
    throw Error(ErrorCode::InvalidSpec, "duplicate base coordinate names");
  }
  offsets_.push_back(base_.dim());
  int n = base_.dim();
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    FiberSpec& f = fibers_[i];
    if (f.dim < 1 || static_cast<int>(f.coords.size()) != f.dim) {
      throw Error(ErrorCode::InvalidSpec, "fiber coordinate names do not match its dimension");
    }
    if (!(f.radius > 0.0)) {
      throw Error(ErrorCode::InvalidSpec, "fiber radius must be positive");
    }
    const bool clash = std::any_of(f.coords.begin(), f.coords.end(),
                                   [&](const std::string& s) { return taken.count(s) > 0; });
    if (clash) {
      for (auto& s : f.coords) s += std::to_string(i + 1);
    }
    for (const auto& s : f.coords) {
      if (!taken.insert(s).second) {
        throw Error(ErrorCode::InvalidSpec, "coordinate name '" + s + "' is ambiguous");
      }
      names_.push_back(s);
    }
    n += f.dim;
    offsets_.push_back(n);
  }
  dim_ = n;

  // Dependency rules for warpings.
  const std::set<std::string> base_names(base_.coords.begin(), base_.coords.end());
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    const std::set<std::string> own(fibers_[i].coords.begin(), fibers_[i].coords.end());
    for (const auto& v : warpings_[i].variables()) {
      if (base_names.count(v)) continue;
      if (own.count(v)) {
        if (!twisted_) {
          throw Error(ErrorCode::InvalidSpec,
                      "warping " + std::to_string(i + 1) + " references fiber coordinate '" + v +
                          "' but the product is not twisted");
        }
        continue;
      }
      throw Error(ErrorCode::InvalidSpec, "warping " + std::to_string(i + 1) +
                                              " references '" + v +
                                              "', which is neither a base nor its own fiber coordinate");
    }
    warpings_[i] = warpings_[i].bind(names_);
  }

  metric_.assign(static_cast<std::size_t>(dim_) * dim_, ScalarExpr::constant(0.0));
  for (int a = 0; a < base_.dim(); ++a) {
    metric_[static_cast<std::size_t>(a) * dim_ + a] = ScalarExpr::constant(base_.signature[a]);
  }
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    const auto diag = fibers_[i].metric_diagonal(fibers_[i].coords);
    const int off = offsets_[i];
    const ScalarExpr b2 = pow(warpings_[i], 2.0);
    for (int a = 0; a < fibers_[i].dim; ++a) {
      metric_[static_cast<std::size_t>(off + a) * dim_ + off + a] = (b2 * diag[a]).bind(names_);
    }
  }
}

int ProductManifoldSpec::offset(Block b) const {
  return b.is_base() ? 0 : offsets_.at(static_cast<std::size_t>(b.fiber_index()));
}

int ProductManifoldSpec::block_dim(Block b) const {
  return b.is_base() ? base_.dim() : fibers_.at(static_cast<std::size_t>(b.fiber_index())).dim;
}

Block ProductManifoldSpec::block_of(int coord) const {
  if (coord < base_.dim()) return Block::base();
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    if (coord < offsets_[i + 1]) return Block::fiber(static_cast<int>(i));
  }
  throw Error(ErrorCode::InvalidSpec, "coordinate index out of range");
}

std::vector<std::string> ProductManifoldSpec::block_coordinate_names(Block b) const {
  const int off = offset(b);
  return {names_.begin() + off, names_.begin() + off + block_dim(b)};
}

void ProductManifoldSpec::check_point(const PointCoords& p) const {
  if (p.size() != dim_) {
    throw Error(ErrorCode::InvalidSpec, "point has " + std::to_string(p.size()) +
                                            " coordinates, chart has " + std::to_string(dim_));
  }
  for (int a = 0; a < dim_; ++a) {
    if (!std::isfinite(p(a))) throw Error(ErrorCode::OutOfChart, "non-finite coordinate");
  }
  if (base_.kind == BaseKind::Interval && (p(0) < base_.lower || p(0) > base_.upper)) {
    throw Error(ErrorCode::OutOfChart, "t = " + std::to_string(p(0)) + " outside the base interval");
  }
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    const std::span<const double> u(p.data() + offsets_[i], static_cast<std::size_t>(fibers_[i].dim));
    if (!fibers_[i].in_chart(u)) {
      throw Error(ErrorCode::OutOfChart, "point outside the chart of fiber " + std::to_string(i + 1));
    }
  }
  for (std::size_t i = 0; i < fibers_.size(); ++i) {
    const double b = warpings_[i].eval({p.data(), static_cast<std::size_t>(p.size())});
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(ErrorCode::NonPositiveWarping,
                  "warping " + std::to_string(i + 1) + " = " + std::to_string(b) + " at the point");
    }
  }
}

ProductManifoldSpec ProductManifoldSpec::rescaled_fiber(int i, double c) const {
  std::vector<FiberSpec> fibers = fibers_;
  fibers[static_cast<std::size_t>(i)].radius *= c;
  const double k = fibers[static_cast<std::size_t>(i)].sectional_curvature();
  auto& f = fibers[static_cast<std::size_t>(i)];
  if (f.geometry == FiberGeometry::Sphere || f.geometry == FiberGeometry::Hyperbolic) {
    f.einstein_constant = -k;
    f.scalar_curvature = -2.0 * k;
  }
  std::vector<ScalarExpr> w = warpings_;
  w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] * ScalarExpr::constant(1.0 / c);
  return ProductManifoldSpec(base_, std::move(fibers), std::move(w), twisted_);
}

Eigen::VectorXd fiber_sample_coords(const FiberSpec& f, int sample) {
  Eigen::VectorXd u(f.dim);
  const double s = static_cast<double>(sample % kFiberSamples);
  switch (f.geometry) {
    case FiberGeometry::Sphere:
      u << 1.1 + 0.3 * s, 0.4 + 0.5 * s;
      break;
    case FiberGeometry::Hyperbolic:
      u << 0.2 - 0.15 * s, 0.3 + 0.4 * s;
      break;
    default:
      for (int a = 0; a < f.dim; ++a) u(a) = 0.3 + 0.17 * a + 0.41 * s;
  }
  return u;
}

PointCoords ProductManifoldSpec::point_over(std::span<const double> base, int sample) const {
  if (static_cast<int>(base.size()) != base_dim()) {
    throw Error(ErrorCode::InvalidSpec, "base point has the wrong number of coordinates");
  }
  PointCoords p(dim_);
  for (int a = 0; a < base_dim(); ++a) p(a) = base[static_cast<std::size_t>(a)];
  for (int i = 0; i < fiber_count(); ++i) {
    p.segment(offset(Block::fiber(i)), fibers_[static_cast<std::size_t>(i)].dim) =
        fiber_sample_coords(fibers_[static_cast<std::size_t>(i)], sample);
  }
  return p;
}

}  // namespace warpcurv
