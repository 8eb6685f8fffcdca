#include "support.hpp"

#include <algorithm>
#include <cmath>

namespace testsupport {

using namespace warpcurv;

BlockVector unit(const ProductManifoldSpec& spec, int coord) {
  const Block b = spec.block_of(coord);
  BlockVector v{b, Eigen::VectorXd::Zero(spec.block_dim(b))};
  v.components(coord - spec.offset(b)) = 1.0;
  return v;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

namespace {

std::vector<PointCoords> five_points(const ProductManifoldSpec& spec) {
  std::vector<PointCoords> pts;
  for (int i = 0; i < 5; ++i) {
    const double t = 0.1 + 0.2 * i;
    std::vector<double> base(static_cast<std::size_t>(spec.base_dim()));
    for (std::size_t a = 0; a < base.size(); ++a) base[a] = t - 0.15 * static_cast<double>(a);
    pts.push_back(spec.point_over(base, i % kFiberSamples));
  }
  return pts;
}

OracleCase make(std::string name, ProductManifoldSpec spec, TorsionVectorFieldSpec P) {
  auto pts = five_points(spec);
  return {std::move(name), std::move(spec), std::move(P), std::move(pts)};
}

}  // namespace

std::vector<OracleCase> oracle_cases() {
  const auto t = var("t");
  const auto u = var("u");
  const auto v = var("v");
  using P = TorsionVectorFieldSpec;
  std::vector<OracleCase> out;

  const ProductManifoldSpec grw(BaseSpec::interval(), {FiberSpec::torus(2)}, {exp(t)});
  out.push_back(make("exp torus, P = d/dt", grw, P::on_base({num(1)})));

  const ProductManifoldSpec circle_torus(BaseSpec::interval(),
                                         {FiberSpec::circle(), FiberSpec::torus(2)},
                                         {exp(t), t * t + num(1)});
  out.push_back(make("circle x torus, P on circle", circle_torus,
                     P::on_fiber(0, {num(2) + sin(var("theta"))})));
  out.push_back(make("circle x torus, P on torus", circle_torus,
                     P::on_fiber(1, {var("x") * var("y"), cos(var("x"))})));
  out.push_back(make("circle x torus, P = t^2 d/dt", circle_torus, P::on_base({t * t})));

  out.push_back(make("cosh sphere, P = 0",
                     ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::sphere()}, {(exp(t) + exp(-t)) / num(2)}),
                     P::zero()));

  out.push_back(make("hyperbolic, P on fiber",
                     ProductManifoldSpec(BaseSpec::interval(), {FiberSpec::hyperbolic(1.2)},
                                         {num(1) + t * t}),
                     P::on_fiber(0, {var("y"), cos(var("x"))})));

  const ProductManifoldSpec three(
      BaseSpec::interval(), {FiberSpec::circle(0.7), FiberSpec::sphere(), FiberSpec::hyperbolic()},
      {exp(num(0.5) * t), num(2) + sin(t), num(1) + t * t / num(3)});
  // The circle takes theta, so the sphere's coordinates become theta2, phi2.
  out.push_back(make("three fibers, P on sphere", three,
                     P::on_fiber(1, {sin(var("phi2")), var("theta2")})));
  out.push_back(make("three fibers, P = (1 + t^2) d/dt", three, P::on_base({num(1) + t * t})));

  const ProductManifoldSpec flat2(BaseSpec::flat({-1, 1}, {"u", "v"}),
                                  {FiberSpec::sphere(1.3), FiberSpec::hyperbolic(0.8)},
                                  {exp(u) + v * v, num(1) + num(0.2) * u * v});
  out.push_back(make("flat 2d base, P on base", flat2, P::on_base({v, u * u})));
  out.push_back(make("flat 2d base, P on sphere", flat2,
                     P::on_fiber(0, {sin(var("theta")), num(1)})));

  out.push_back(make("riemannian 2d base, 3-torus, P = 0",
                     ProductManifoldSpec(BaseSpec::flat({1, 1}, {"u", "v"}), {FiberSpec::torus(3)},
                                         {num(2) + sin(u) * cos(v)}),
                     P::zero()));

  out.push_back(make("flat 3d base, circle, P on base",
                     ProductManifoldSpec(BaseSpec::flat({-1, 1, 1}, {"u", "v", "w"}),
                                         {FiberSpec::circle()},
                                         {exp(u) + v * var("w") + num(1)}),
                     P::on_base({num(1), u, var("w") * v})));

  const ProductManifoldSpec twisted(
      BaseSpec::interval(), {FiberSpec::torus(2), FiberSpec::sphere()},
      {exp(t) * (num(1) + var("x") * var("x")),
       exp(num(0.5) * t) * (num(2) + cos(var("phi")) * sin(var("theta")))},
      true);
  out.push_back(make("twisted, P = (1 + t^2) d/dt", twisted, P::on_base({num(1) + t * t})));
  out.push_back(make("twisted, P on sphere", twisted,
                     P::on_fiber(1, {sin(var("phi")), var("theta")})));
  out.push_back(make("twisted, P on torus", twisted, P::on_fiber(0, {var("y"), var("x")})));
  return out;
}

OracleDeviation compare_with_oracle(const OracleCase& c, ConnectionKind kind) {
  OracleDeviation d;
  const auto& spec = c.spec;
  const int n = spec.dim();
  for (const auto& p : c.points) {
    // Brute-force path: differentiate the modified coefficients directly.
    const auto oracle = curvature_from_coefficients(spec, connection_field(kind, spec, c.P), p);
    const auto gamma = modified_coefficients(kind, spec, c.P, p);
    const auto cache = build_structured_cache(spec, c.P, p);
    for (int i = 0; i < n; ++i) {
      const auto ei = unit(spec, i);
      for (int j = 0; j < n; ++j) {
        const auto ej = unit(spec, j);
        const auto dv = structured_covariant_derivative(spec, c.P, kind, ei, ej, p);
        for (int k = 0; k < n; ++k) {
          d.derivative = std::max(d.derivative, std::abs(dv.value(k) - gamma(k, i, j)));
        }
        d.clauses.push_back(dv.clause);
        for (int k = 0; k < n; ++k) {
          const auto sv = structured_curvature(cache, kind, ei, ej, unit(spec, k));
          const Eigen::VectorXd ov =
              apply_riemann(oracle.riemann, Eigen::VectorXd::Unit(n, i),
                            Eigen::VectorXd::Unit(n, j), Eigen::VectorXd::Unit(n, k));
          d.curvature = std::max(d.curvature, max_abs(sv.value - ov));
          d.clauses.push_back(sv.clause);
        }
        const auto rv = structured_ricci(cache, kind, ei, ej);
        d.ricci = std::max(d.ricci, std::abs(rv.value - oracle.ricci(i, j)));
        d.clauses.push_back(rv.clause);
      }
    }
    const auto sv = structured_scalar(cache, kind);
    d.scalar = std::max(d.scalar, std::abs(sv.value - oracle.scalar));
    d.clauses.push_back(sv.clause);
  }
  std::sort(d.clauses.begin(), d.clauses.end());
  d.clauses.erase(std::unique(d.clauses.begin(), d.clauses.end()), d.clauses.end());
  return d;
}

}  // namespace testsupport
