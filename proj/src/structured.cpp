#include "warpcurv/structured.hpp"

#include <cmath>

#include "warpcurv/chart.hpp"
#include "warpcurv/error.hpp"

namespace warpcurv {

namespace {

std::span<const double> as_span(const PointCoords& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

const ProductManifoldSpec& spec_of(const StructuredGeometryCache& c) { return *c.spec; }

Eigen::VectorXd base_signature(const ProductManifoldSpec& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.base().signature.data(), s.base_dim());
}

// Derivatives of sigma = ln b.
struct LogWarping {
  Eigen::VectorXd base;          // d_a sigma
  Eigen::VectorXd fiber;         // d_alpha sigma
  Eigen::MatrixXd mixed;         // d_alpha d_a sigma
  Eigen::MatrixXd fiber_hessian; // Hess_{g_F} sigma (covariant)
  double fiber_laplacian = 0.0;  // Delta_{g_F} sigma
  double fiber_grad_norm2 = 0.0; // |d sigma|^2_{g_F}
};

LogWarping log_warping(const WarpingData& w) {
  LogWarping s;
  s.base = w.grad_base / w.b;
  s.fiber = w.grad_fiber / w.b;
  s.mixed = w.mixed / w.b - (w.grad_fiber * w.grad_base.transpose()) / (w.b * w.b);
  const Eigen::MatrixXd partial2 =
      w.hessian_fiber / w.b - (w.grad_fiber * w.grad_fiber.transpose()) / (w.b * w.b);
  const int l = static_cast<int>(w.fiber_metric.size());
  s.fiber_hessian = partial2;
  for (int a = 0; a < l; ++a) {
    for (int b = 0; b < l; ++b) {
      for (int g = 0; g < l; ++g) s.fiber_hessian(a, b) -= w.fiber_christoffel(g, a, b) * s.fiber(g);
    }
  }
  for (int a = 0; a < l; ++a) {
    s.fiber_laplacian += s.fiber_hessian(a, a) / w.fiber_metric(a);
    s.fiber_grad_norm2 += s.fiber(a) * s.fiber(a) / w.fiber_metric(a);
  }
  return s;
}

double fiber_dot(const WarpingData& w, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return (u.array() * v.array() * w.fiber_metric.array()).sum();
}

// g(U, V) on M for two vectors of the same fiber.
double product_dot(const WarpingData& w, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return w.b * w.b * fiber_dot(w, u, v);
}

// Levi-Civita coefficient contraction Gamma^F(U, W).
Eigen::VectorXd fiber_gamma(const WarpingData& w, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v) {
  const int l = static_cast<int>(u.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(l);
  for (int k = 0; k < l; ++k) {
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) out(k) += w.fiber_christoffel(k, i, j) * u(i) * v(j);
    }
  }
  return out;
}

// Curvature of h = b^2 g_F on the fiber, at fixed base point.
Eigen::VectorXd conformal_fiber_curvature(const WarpingData& w, const LogWarping& s,
                                          const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                          const Eigen::VectorXd& z) {
  const Eigen::VectorXd& gf = w.fiber_metric;
  Eigen::VectorXd r = w.fiber_curvature * (fiber_dot(w, v, z) * u - fiber_dot(w, u, z) * v);
  Eigen::MatrixXd bt = s.fiber_hessian - s.fiber * s.fiber.transpose();
  bt.diagonal() += 0.5 * s.fiber_grad_norm2 * gf;
  const Eigen::VectorXd bu = (bt * u).array() / gf.array();
  const Eigen::VectorXd bv = (bt * v).array() / gf.array();
  r -= v.dot(bt * z) * u - u.dot(bt * z) * v + fiber_dot(w, v, z) * bu - fiber_dot(w, u, z) * bv;
  return r;
}

Eigen::VectorXd zeros(const ProductManifoldSpec& s) { return Eigen::VectorXd::Zero(s.dim()); }

void add_block(const ProductManifoldSpec& s, Eigen::VectorXd& full, Block b,
               const Eigen::VectorXd& comps) {
  full.segment(s.offset(b), s.block_dim(b)) += comps;
}

void check_vector(const ProductManifoldSpec& s, const BlockVector& v) {
  if (!v.block.is_base() && (v.block.fiber_index() < 0 || v.block.fiber_index() >= s.fiber_count())) {
    throw Error(ErrorCode::CaseMismatch, "vector tagged with a fiber that does not exist");
  }
  if (v.components.size() != s.block_dim(v.block)) {
    throw Error(ErrorCode::CaseMismatch, "vector tagged " + to_string(v.block) + " has " +
                                             std::to_string(v.components.size()) +
                                             " components, block has dimension " +
                                             std::to_string(s.block_dim(v.block)));
  }
}

// g on M between a block vector and a full vector.
double metric_with(const StructuredGeometryCache& c, const BlockVector& a,
                   const Eigen::VectorXd& full) {
  const ProductManifoldSpec& s = spec_of(c);
  const Eigen::VectorXd seg = full.segment(s.offset(a.block), s.block_dim(a.block));
  if (a.block.is_base()) {
    return (a.components.array() * seg.array() * base_signature(s).array()).sum();
  }
  return product_dot(c.fibers[static_cast<std::size_t>(a.block.fiber_index())], a.components, seg);
}

double pi_of(const StructuredGeometryCache& c, const BlockVector& v) {
  const ProductManifoldSpec& s = spec_of(c);
  return c.pi.segment(s.offset(v.block), s.block_dim(v.block)).dot(v.components);
}

std::string p_label(const ProductManifoldSpec& s, const TorsionVectorFieldSpec& P) {
  (void)s;
  if (P.is_zero()) return "P = 0";
  if (P.location.is_base()) return "P on base";
  return "P on fiber " + std::to_string(P.location.fiber_index() + 1);
}

std::string kind_label(ConnectionKind k) {
  switch (k) {
    case ConnectionKind::LeviCivita: return "levi-civita";
    case ConnectionKind::SemiSymmetricNonMetric: return "semi-symmetric";
    case ConnectionKind::SymmetrizedAffine: return "symmetrized";
  }
  return "";
}

std::string curvature_pattern(Block a, Block b, Block z) {
  const bool fa = !a.is_base(), fb = !b.is_base(), fz = !z.is_base();
  if (!fa && !fb && !fz) return "R(X,Y)Z";
  if (!fa && !fb && fz) return "R(X,Y)V";
  if (fa && !fb && !fz) return "R(V,X)Y";
  if (!fa && fb && !fz) return "R(X,V)Y";
  if (!fa && fb && fz) return b == z ? "R(X,V)W same fiber" : "R(X,V)W different fibers";
  if (fa && !fb && fz) return a == z ? "R(V,X)W same fiber" : "R(V,X)W different fibers";
  if (fa && fb && !fz) return a == b ? "R(V,W)X same fiber" : "R(V,W)X different fibers";
  if (a == b && b == z) return "R(U,V)W one fiber";
  if (a == b) return "R(U,V)W U,V share a fiber";
  if (a == z) return "R(U,V)W U,W share a fiber";
  if (b == z) return "R(U,V)W V,W share a fiber";
  return "R(U,V)W three fibers";
}

std::string ricci_pattern(Block a, Block b) {
  const bool fa = !a.is_base(), fb = !b.is_base();
  if (!fa && !fb) return "Ric(X,Y)";
  if (!fa && fb) return "Ric(X,V)";
  if (fa && !fb) return "Ric(V,X)";
  return a == b ? "Ric(V,W) same fiber" : "Ric(V,W) different fibers";
}

std::string derivative_pattern(Block a, Block b) {
  const bool fa = !a.is_base(), fb = !b.is_base();
  if (!fa && !fb) return "D_X Y";
  if (!fa && fb) return "D_X U";
  if (fa && !fb) return "D_U X";
  return a == b ? "D_U W same fiber" : "D_U W different fibers";
}

// Levi-Civita derivative of constant-coefficient block fields.
Eigen::VectorXd lc_derivative(const StructuredGeometryCache& c, const BlockVector& x,
                              const BlockVector& y) {
  const ProductManifoldSpec& s = spec_of(c);
  Eigen::VectorXd out = zeros(s);
  if (x.block.is_base() && y.block.is_base()) return out;
  if (x.block.is_base() || y.block.is_base()) {
    const BlockVector& base = x.block.is_base() ? x : y;
    const BlockVector& fib = x.block.is_base() ? y : x;
    const auto& w = c.fibers[static_cast<std::size_t>(fib.block.fiber_index())];
    add_block(s, out, fib.block, (base.components.dot(w.grad_base) / w.b) * fib.components);
    return out;
  }
  if (x.block != y.block) return out;
  const auto& w = c.fibers[static_cast<std::size_t>(x.block.fiber_index())];
  const LogWarping sg = log_warping(w);
  const Eigen::VectorXd& u = x.components;
  const Eigen::VectorXd& v = y.components;
  Eigen::VectorXd fib = fiber_gamma(w, u, v) + u.dot(sg.fiber) * v + v.dot(sg.fiber) * u -
                        fiber_dot(w, u, v) * Eigen::VectorXd(sg.fiber.array() / w.fiber_metric.array());
  add_block(s, out, x.block, fib);
  const Eigen::VectorXd grad_b_sigma = sg.base.array() * base_signature(s).array();
  add_block(s, out, Block::base(), -product_dot(w, u, v) * grad_b_sigma);
  return out;
}

// Levi-Civita curvature from the block formulas of a multiply twisted product
// over a flat base.
Eigen::VectorXd lc_curvature(const StructuredGeometryCache& c, const BlockVector& a,
                             const BlockVector& b, const BlockVector& z) {
  const ProductManifoldSpec& s = spec_of(c);
  const Eigen::VectorXd eta = base_signature(s);
  Eigen::VectorXd out = zeros(s);
  const bool fa = !a.block.is_base(), fb = !b.block.is_base(), fz = !z.block.is_base();
  auto w_of = [&](Block blk) -> const WarpingData& {
    return c.fibers[static_cast<std::size_t>(blk.fiber_index())];
  };

  if (!fa && !fb) return out;  // flat base, and R(X,Y)V = 0

  if (fa != fb && !fz) {
    // R(V,X)Y = -(H(X,Y)/b) V, R(X,V)Y = -R(V,X)Y
    const BlockVector& v = fa ? a : b;
    const BlockVector& x = fa ? b : a;
    const auto& w = w_of(v.block);
    const double h = x.components.dot(w.hessian_base * z.components) / w.b;
    add_block(s, out, v.block, (fa ? -h : h) * v.components);
    return out;
  }

  if (fa != fb && fz) {
    // R(X,V)W and R(V,X)W = -R(X,V)W
    const BlockVector& v = fa ? a : b;
    const BlockVector& x = fa ? b : a;
    if (v.block != z.block) return out;
    const auto& w = w_of(v.block);
    const LogWarping sg = log_warping(w);
    const double gvw = product_dot(w, v.components, z.components);
    const double sign = fa ? -1.0 : 1.0;
    const Eigen::VectorXd hx = w.hessian_base * x.components;
    add_block(s, out, Block::base(), sign * (-(gvw / w.b)) * Eigen::VectorXd(hx.array() * eta.array()));
    const Eigen::VectorXd dxs = sg.mixed * x.components;  // d_alpha (X sigma)
    const Eigen::VectorXd fib = z.components.dot(dxs) * v.components -
                                fiber_dot(w, v.components, z.components) *
                                    Eigen::VectorXd(dxs.array() / w.fiber_metric.array());
    add_block(s, out, v.block, sign * fib);
    return out;
  }

  if (fa && fb && !fz) {
    // R(V,W)X = (V X sigma) W - (W X sigma) V on one fiber
    if (a.block != b.block) return out;
    const LogWarping sg = log_warping(w_of(a.block));
    const Eigen::VectorXd dxs = sg.mixed * z.components;
    add_block(s, out, a.block, a.components.dot(dxs) * b.components - b.components.dot(dxs) * a.components);
    return out;
  }

  // Three fiber vectors.
  if (a.block == b.block && b.block == z.block) {
    const auto& w = w_of(a.block);
    const LogWarping sg = log_warping(w);
    const double gaz = product_dot(w, a.components, z.components);
    const double gbz = product_dot(w, b.components, z.components);
    const double grad2 = (sg.base.array() * sg.base.array() * eta.array()).sum();
    Eigen::VectorXd fib = conformal_fiber_curvature(w, sg, a.components, b.components, z.components) +
                          grad2 * (gaz * b.components - gbz * a.components);
    add_block(s, out, a.block, fib);
    const Eigen::VectorXd grad_bs = (sg.mixed.transpose() * b.components).array() * eta.array();
    const Eigen::VectorXd grad_as = (sg.mixed.transpose() * a.components).array() * eta.array();
    add_block(s, out, Block::base(), gaz * grad_bs - gbz * grad_as);
    return out;
  }
  auto cross = [&](Block i, Block k) {
    const auto& wi = w_of(i);
    const auto& wk = w_of(k);
    return (wi.grad_base.array() * wk.grad_base.array() * eta.array()).sum() / (wi.b * wk.b);
  };
  if (b.block == z.block && a.block != b.block) {
    // R(U,V)W = -g(V,W) <grad sigma_k, grad sigma_i> U
    const double gvw = product_dot(w_of(b.block), b.components, z.components);
    add_block(s, out, a.block, -gvw * cross(a.block, b.block) * a.components);
    return out;
  }
  if (a.block == z.block && a.block != b.block) {
    const double guw = product_dot(w_of(a.block), a.components, z.components);
    add_block(s, out, b.block, guw * cross(a.block, b.block) * b.components);
    return out;
  }
  return out;
}

double lc_ricci(const StructuredGeometryCache& c, const BlockVector& a, const BlockVector& b) {
  const ProductManifoldSpec& s = spec_of(c);
  const Eigen::VectorXd eta = base_signature(s);
  if (a.block.is_base() && b.block.is_base()) {
    double r = 0.0;
    for (int i = 0; i < s.fiber_count(); ++i) {
      const auto& w = c.fibers[static_cast<std::size_t>(i)];
      r += s.fiber(i).dim * a.components.dot(w.hessian_base * b.components) / w.b;
    }
    return r;
  }
  if (a.block.is_base() != b.block.is_base()) {
    const BlockVector& x = a.block.is_base() ? a : b;
    const BlockVector& v = a.block.is_base() ? b : a;
    const int i = v.block.fiber_index();
    const LogWarping sg = log_warping(c.fibers[static_cast<std::size_t>(i)]);
    return (s.fiber(i).dim - 1) * v.components.dot(sg.mixed * x.components);
  }
  if (a.block != b.block) return 0.0;
  const int i = a.block.fiber_index();
  const auto& w = c.fibers[static_cast<std::size_t>(i)];
  const LogWarping sg = log_warping(w);
  const int l = s.fiber(i).dim;
  const double gf = fiber_dot(w, a.components, b.components);
  const double lambda_f = s.fiber(i).einstein_constant.value_or(-w.fiber_curvature * (l - 1));
  double ric_h = lambda_f * gf +
                 (l - 2) * a.components.dot((sg.fiber_hessian - sg.fiber * sg.fiber.transpose()) * b.components) +
                 (sg.fiber_laplacian + (l - 2) * sg.fiber_grad_norm2) * gf;
  double bracket = w.laplacian_base / w.b + (l - 1) * w.grad_norm2_base / (w.b * w.b);
  for (int j = 0; j < s.fiber_count(); ++j) {
    if (j == i) continue;
    const auto& wj = c.fibers[static_cast<std::size_t>(j)];
    bracket += s.fiber(j).dim * (w.grad_base.array() * wj.grad_base.array() * eta.array()).sum() / (w.b * wj.b);
  }
  return ric_h + product_dot(w, a.components, b.components) * bracket;
}

double lc_scalar(const StructuredGeometryCache& c) {
  const ProductManifoldSpec& s = spec_of(c);
  const Eigen::VectorXd eta = base_signature(s);
  double r = 0.0;
  for (int i = 0; i < s.fiber_count(); ++i) {
    const auto& w = c.fibers[static_cast<std::size_t>(i)];
    const LogWarping sg = log_warping(w);
    const double l = s.fiber(i).dim;
    r += 2.0 * l * w.laplacian_base / w.b + l * (l - 1) * w.grad_norm2_base / (w.b * w.b);
    for (int j = 0; j < s.fiber_count(); ++j) {
      if (j == i) continue;
      const auto& wj = c.fibers[static_cast<std::size_t>(j)];
      r += l * s.fiber(j).dim * (w.grad_base.array() * wj.grad_base.array() * eta.array()).sum() / (w.b * wj.b);
    }
    r += (s.fiber(i).scalar_curvature + 2.0 * (l - 1) * sg.fiber_laplacian +
          (l - 1) * (l - 2) * sg.fiber_grad_norm2) /
         (w.b * w.b);
  }
  return r;
}

// d pi (A, B) = g(nabla_A P, B) - g(nabla_B P, A)
double d_pi(const StructuredGeometryCache& c, const BlockVector& a, const BlockVector& b) {
  if (c.p_zero) return 0.0;
  return metric_with(c, b, structured_nabla_p(c, a)) - metric_with(c, a, structured_nabla_p(c, b));
}

}  // namespace

Eigen::VectorXd embed(const ProductManifoldSpec& spec, const BlockVector& v) {
  check_vector(spec, v);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(spec.dim());
  out.segment(spec.offset(v.block), spec.block_dim(v.block)) = v.components;
  return out;
}

StructuredGeometryCache build_structured_cache(const ProductManifoldSpec& spec,
                                               const TorsionVectorFieldSpec& P,
                                               const PointCoords& p) {
  spec.check_point(p);
  validate_torsion_field(spec, P);
  StructuredGeometryCache c;
  c.spec = &spec;
  c.point = p;
  const int n = spec.base_dim();
  const Eigen::VectorXd eta = base_signature(spec);

  for (int i = 0; i < spec.fiber_count(); ++i) {
    const FiberSpec& f = spec.fiber(i);
    const int off = spec.offset(Block::fiber(i));
    const Jet j = spec.warping(i).eval_jet(as_span(p));
    WarpingData w;
    w.b = j.v;
    w.grad_base = j.g.head(n);
    w.hessian_base = j.h.topLeftCorner(n, n);
    w.grad_fiber = j.g.segment(off, f.dim);
    w.hessian_fiber = j.h.block(off, off, f.dim, f.dim);
    w.mixed = j.h.block(off, 0, f.dim, n);
    w.laplacian_base = (w.hessian_base.diagonal().array() * eta.array()).sum();
    w.grad_norm2_base = (w.grad_base.array() * w.grad_base.array() * eta.array()).sum();
    if (spec.base().kind == BaseKind::Interval) {
      w.dt = w.grad_base(0);
      w.dtt = w.hessian_base(0, 0);
    }
    const std::span<const double> u(p.data() + off, static_cast<std::size_t>(f.dim));
    w.fiber_metric = f.metric_values(u);
    w.fiber_christoffel = f.christoffel(u);
    w.fiber_curvature = f.sectional_curvature();
    c.fibers.push_back(std::move(w));
  }

  c.pi = Eigen::VectorXd::Zero(spec.dim());
  c.p_zero = P.is_zero();
  if (c.p_zero) return c;

  c.p_location = P.location;
  const Block hb = P.location;
  const int off = spec.offset(hb);
  const int d = spec.block_dim(hb);
  c.p_components = Eigen::VectorXd::Zero(d);
  c.p_derivative = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const Jet j = P.components[static_cast<std::size_t>(k)].bind(spec.coordinate_names()).eval_jet(as_span(p));
    c.p_components(k) = j.v;
    c.p_derivative.col(k) = j.g.segment(off, d);
  }

  if (hb.is_base()) {
    c.pi.head(n) = eta.array() * c.p_components.array();
    c.block_div_p = c.p_derivative.trace();
    c.div_p = c.block_div_p;
    for (int i = 0; i < spec.fiber_count(); ++i) {
      const auto& w = c.fibers[static_cast<std::size_t>(i)];
      c.div_p += spec.fiber(i).dim * c.p_components.dot(w.grad_base) / w.b;
    }
  } else {
    const int r = hb.fiber_index();
    const auto& w = c.fibers[static_cast<std::size_t>(r)];
    c.pi.segment(off, d) = w.b * w.b * (w.fiber_metric.array() * c.p_components.array()).matrix();
    double div = c.p_derivative.trace();
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) div += w.fiber_christoffel(a, a, b) * c.p_components(b);
    }
    c.block_div_p = div;
    c.div_p = div + d * c.p_components.dot(w.grad_fiber) / w.b;
  }
  c.pi_of_p = c.pi.segment(off, d).dot(c.p_components);
  return c;
}

Eigen::VectorXd structured_nabla_p(const StructuredGeometryCache& c, const BlockVector& v) {
  const ProductManifoldSpec& s = spec_of(c);
  check_vector(s, v);
  Eigen::VectorXd out = zeros(s);
  if (c.p_zero) return out;
  const Block hb = c.p_location;
  if (hb.is_base()) {
    if (v.block.is_base()) {
      add_block(s, out, hb, c.p_derivative.transpose() * v.components);
    } else {
      const auto& w = c.fibers[static_cast<std::size_t>(v.block.fiber_index())];
      add_block(s, out, v.block, (c.p_components.dot(w.grad_base) / w.b) * v.components);
    }
    return out;
  }
  const auto& w = c.fibers[static_cast<std::size_t>(hb.fiber_index())];
  if (v.block.is_base()) {
    add_block(s, out, hb, (v.components.dot(w.grad_base) / w.b) * c.p_components);
    return out;
  }
  if (v.block != hb) return out;
  BlockVector pv{hb, c.p_components};
  out = lc_derivative(c, v, pv);
  add_block(s, out, hb, c.p_derivative.transpose() * v.components);
  return out;
}

StructuredValue structured_covariant_derivative(const ProductManifoldSpec& spec,
                                                const TorsionVectorFieldSpec& P,
                                                ConnectionKind kind, const BlockVector& x,
                                                const BlockVector& y, const PointCoords& p) {
  check_vector(spec, x);
  check_vector(spec, y);
  const StructuredGeometryCache c = build_structured_cache(spec, P, p);
  StructuredValue r;
  r.clause = derivative_pattern(x.block, y.block) + " | " + p_label(spec, P) + " | " + kind_label(kind);
  r.value = lc_derivative(c, x, y);
  if (kind != ConnectionKind::LeviCivita && !c.p_zero) {
    r.value += pi_of(c, y) * embed(spec, x);
    if (kind == ConnectionKind::SymmetrizedAffine) r.value += pi_of(c, x) * embed(spec, y);
  }
  return r;
}

std::string curvature_clause(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                             ConnectionKind kind, Block x, Block y, Block z) {
  return curvature_pattern(x, y, z) + " | " + p_label(spec, P) + " | " + kind_label(kind);
}

StructuredValue structured_curvature(const StructuredGeometryCache& c, ConnectionKind kind,
                                     const BlockVector& x, const BlockVector& y,
                                     const BlockVector& z) {
  const ProductManifoldSpec& s = spec_of(c);
  check_vector(s, x);
  check_vector(s, y);
  check_vector(s, z);
  StructuredValue r;
  r.clause = curvature_pattern(x.block, y.block, z.block) + " | " +
             (c.p_zero ? std::string("P = 0")
                       : c.p_location.is_base() ? std::string("P on base")
                                                : "P on fiber " + std::to_string(c.p_location.fiber_index() + 1)) +
             " | " + kind_label(kind);
  r.value = lc_curvature(c, x, y, z);
  if (kind == ConnectionKind::LeviCivita || c.p_zero) return r;

  const Eigen::VectorXd ex = embed(s, x);
  const Eigen::VectorXd ey = embed(s, y);
  r.value += metric_with(c, z, structured_nabla_p(c, x)) * ey -
             metric_with(c, z, structured_nabla_p(c, y)) * ex +
             pi_of(c, z) * (pi_of(c, y) * ex - pi_of(c, x) * ey);
  if (kind == ConnectionKind::SymmetrizedAffine) r.value += d_pi(c, x, y) * embed(s, z);
  return r;
}

StructuredValue structured_curvature(const ProductManifoldSpec& spec,
                                     const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                     const BlockVector& x, const BlockVector& y,
                                     const BlockVector& z, const PointCoords& p) {
  const StructuredGeometryCache c = build_structured_cache(spec, P, p);
  return structured_curvature(c, kind, x, y, z);
}

StructuredScalarValue structured_ricci(const StructuredGeometryCache& c, ConnectionKind kind,
                                       const BlockVector& x, const BlockVector& y) {
  const ProductManifoldSpec& s = spec_of(c);
  check_vector(s, x);
  check_vector(s, y);
  StructuredScalarValue r;
  r.clause = ricci_pattern(x.block, y.block) + " | " +
             (c.p_zero ? std::string("P = 0")
                       : c.p_location.is_base() ? std::string("P on base")
                                                : "P on fiber " + std::to_string(c.p_location.fiber_index() + 1)) +
             " | " + kind_label(kind);
  r.value = lc_ricci(c, x, y);
  if (kind == ConnectionKind::LeviCivita || c.p_zero) return r;
  const double nbar1 = s.dim() - 1.0;
  r.value += nbar1 * (metric_with(c, y, structured_nabla_p(c, x)) - pi_of(c, x) * pi_of(c, y));
  if (kind == ConnectionKind::SymmetrizedAffine) r.value += d_pi(c, x, y);
  return r;
}

StructuredScalarValue structured_ricci(const ProductManifoldSpec& spec,
                                       const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                       const BlockVector& x, const BlockVector& y,
                                       const PointCoords& p) {
  const StructuredGeometryCache c = build_structured_cache(spec, P, p);
  return structured_ricci(c, kind, x, y);
}

Eigen::MatrixXd structured_ricci_matrix(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const PointCoords& p) {
  const StructuredGeometryCache c = build_structured_cache(spec, P, p);
  const int n = spec.dim();
  auto unit = [&](int a) {
    const Block b = spec.block_of(a);
    BlockVector v{b, Eigen::VectorXd::Zero(spec.block_dim(b))};
    v.components(a - spec.offset(b)) = 1.0;
    return v;
  };
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) m(a, b) = structured_ricci(c, kind, unit(a), unit(b)).value;
  }
  return m;
}

StructuredScalarValue structured_scalar(const StructuredGeometryCache& c, ConnectionKind kind) {
  const ProductManifoldSpec& s = spec_of(c);
  StructuredScalarValue r;
  r.value = lc_scalar(c);
  if (c.p_zero || kind == ConnectionKind::LeviCivita) {
    r.clause = "scalar | P = 0 or levi-civita";
    return r;
  }
  // The symmetrized connection adds d pi, whose trace vanishes.
  r.clause = c.p_location.is_base() ? "scalar | P on base" : "scalar | P on fiber";
  r.value += (s.dim() - 1.0) * (c.div_p - c.pi_of_p);
  return r;
}

StructuredScalarValue structured_scalar(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const PointCoords& p) {
  const StructuredGeometryCache c = build_structured_cache(spec, P, p);
  return structured_scalar(c, kind);
}

MixedRicciReport mixed_ricci_flat_check(const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, ConnectionKind kind,
                                        const std::vector<PointCoords>& points) {
  MixedRicciReport rep;
  rep.twisted = spec.twisted();
  std::vector<int> examined;
  for (int i = 0; i < spec.fiber_count(); ++i) {
    if (spec.fiber(i).dim > 1) examined.push_back(i);
  }
  rep.fibers_examined = static_cast<int>(examined.size());
  if (examined.empty()) {
    rep.note = "no fiber of dimension > 1";
    return rep;
  }
  const int n = spec.base_dim();
  for (const auto& p : points) {
    const StructuredGeometryCache c = build_structured_cache(spec, P, p);
    for (int a = 0; a < n; ++a) {
      BlockVector x{Block::base(), Eigen::VectorXd::Unit(n, a)};
      for (int i : examined) {
        const int l = spec.fiber(i).dim;
        for (int al = 0; al < l; ++al) {
          BlockVector v{Block::fiber(i), Eigen::VectorXd::Unit(l, al)};
          const double r1 = std::abs(structured_ricci(c, kind, x, v).value);
          const double r2 = std::abs(structured_ricci(c, kind, v, x).value);
          rep.max_mixed = std::max({rep.max_mixed, r1, r2});
        }
      }
    }
  }
  rep.mixed_ricci_flat = rep.max_mixed <= 1e-8;
  rep.note = std::string(rep.twisted ? "twisted" : "untwisted") +
             (rep.mixed_ricci_flat ? ", mixed Ricci components vanish"
                                   : ", mixed Ricci components do not vanish");
  return rep;
}

}  // namespace warpcurv
