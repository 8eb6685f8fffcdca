#include "warpcurv/einstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "warpcurv/chart.hpp"
#include "warpcurv/error.hpp"

namespace warpcurv {

namespace {

struct Profile {
  double b = 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

std::span<const double> as_span(const PointCoords& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

void require_interval_warped(const ProductManifoldSpec& spec) {
  if (spec.base().kind != BaseKind::Interval) {
    throw Error(ErrorCode::InvalidSpec, "this check needs an interval base with -dt^2");
  }
  if (spec.twisted()) {
    throw Error(ErrorCode::InvalidSpec, "this check needs untwisted warpings");
  }
}

std::vector<Profile> profiles(const ProductManifoldSpec& spec, const PointCoords& p) {
  spec.check_point(p);
  std::vector<Profile> out;
  for (int i = 0; i < spec.fiber_count(); ++i) {
    const Jet j = spec.warping(i).eval_jet(as_span(p));
    out.push_back({j.v, j.g(0), j.h(0, 0)});
  }
  return out;
}

double einstein_constant_of(const ProductManifoldSpec& spec, int i) {
  const auto& c = spec.fiber(i).einstein_constant;
  if (!c) {
    throw Error(ErrorCode::FiberNotEinstein,
                "fiber " + std::to_string(i + 1) + " has no Einstein constant");
  }
  return *c;
}

// b_i b_i'' + (l_i - 1) b_i'^2 + b_i b_i' sum_{j != i} l_j b_j'/b_j
double fiber_warping_terms(const ProductManifoldSpec& spec, const std::vector<Profile>& w, int i) {
  const Profile& bi = w[static_cast<std::size_t>(i)];
  double cross = 0.0;
  for (int j = 0; j < spec.fiber_count(); ++j) {
    if (j == i) continue;
    const Profile& bj = w[static_cast<std::size_t>(j)];
    cross += spec.fiber(j).dim * bj.d1 / bj.b;
  }
  return bi.b * bi.d2 + (spec.fiber(i).dim - 1) * bi.d1 * bi.d1 + bi.b * bi.d1 * cross;
}

EinsteinCheckResult finish(double lambda, double tolerance, std::vector<ResidualReport> reports) {
  EinsteinCheckResult r;
  r.lambda = lambda;
  r.tolerance = tolerance;
  r.pass = std::all_of(reports.begin(), reports.end(), [](const auto& x) { return x.pass; });
  r.residuals = std::move(reports);
  return r;
}

bool is_unit_time_field(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P) {
  if (!P.location.is_base() || spec.base().kind != BaseKind::Interval) return false;
  if (P.components.size() != 1) return false;
  const ScalarExpr& c = P.components[0];
  return c.is_constant() && c.constant_value() == 1.0;
}

// Scalar curvature of the Levi-Civita connection from the warping profiles.
double levi_civita_scalar(const ProductManifoldSpec& spec, const std::vector<Profile>& w) {
  double s = 0.0;
  for (int i = 0; i < spec.fiber_count(); ++i) {
    const Profile& b = w[static_cast<std::size_t>(i)];
    const double l = spec.fiber(i).dim;
    s += -2.0 * l * b.d2 / b.b + spec.fiber(i).scalar_curvature / (b.b * b.b) -
         l * (l - 1.0) * b.d1 * b.d1 / (b.b * b.b);
    for (int j = 0; j < spec.fiber_count(); ++j) {
      if (j == i) continue;
      const Profile& c = w[static_cast<std::size_t>(j)];
      s -= l * spec.fiber(j).dim * b.d1 * c.d1 / (b.b * c.b);
    }
  }
  return s;
}

struct FiberFieldData {
  double norm2 = 0.0;  // g_F(P, P)
  double div = 0.0;    // div_F P
};

FiberFieldData fiber_field_data(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                                const PointCoords& p) {
  const int r = P.location.fiber_index();
  const FiberSpec& f = spec.fiber(r);
  const int off = spec.offset(P.location);
  const TorsionFieldValue tf = evaluate_torsion_field(spec, P, p);
  const Eigen::VectorXd u = p.segment(off, f.dim);
  const Eigen::VectorXd gf = f.metric_values({u.data(), static_cast<std::size_t>(u.size())});
  const Rank3 gamma = f.christoffel({u.data(), static_cast<std::size_t>(u.size())});
  FiberFieldData d;
  for (int a = 0; a < f.dim; ++a) {
    const double pa = tf.vector(off + a);
    d.norm2 += gf(a) * pa * pa;
    d.div += tf.derivative(off + a, off + a);
    for (int b = 0; b < f.dim; ++b) d.div += gamma(a, a, b) * tf.vector(off + b);
  }
  return d;
}

}  // namespace

std::vector<double> chebyshev_grid(double lower, double upper, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "grid needs at least one point");
  if (!(upper > lower)) throw Error(ErrorCode::InvalidSpec, "grid interval is empty");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double mid = 0.5 * (lower + upper);
  const double half = 0.5 * (upper - lower);
  for (int k = 0; k < n; ++k) {
    g[static_cast<std::size_t>(n - 1 - k)] =
        mid + half * std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n));
  }
  return g;
}

ResidualReport make_report(std::string id, std::vector<double> grid,
                           const std::vector<double>& residuals, double tolerance) {
  ResidualReport r;
  r.id = std::move(id);
  r.grid = std::move(grid);
  r.tolerance = tolerance;
  for (double v : residuals) {
    // NaN must not pass silently.
    if (!std::isfinite(v)) {
      r.max_residual = std::numeric_limits<double>::infinity();
      break;
    }
    r.max_residual = std::max(r.max_residual, std::abs(v));
  }
  r.pass = !r.grid.empty() && r.max_residual < tolerance;
  return r;
}

EinsteinCheckResult grw_einstein_residuals(const ProductManifoldSpec& spec, double lambda,
                                           const std::vector<double>& grid, double tolerance) {
  require_interval_warped(spec);
  const int m = spec.fiber_count();
  std::vector<double> constants;
  for (int i = 0; i < m; ++i) constants.push_back(einstein_constant_of(spec, i));
  const double n1 = spec.dim() - 1;

  std::vector<double> time_res;
  std::vector<std::vector<double>> fiber_res(static_cast<std::size_t>(m));
  for (double t : grid) {
    const auto w = profiles(spec, spec.point_over(t));
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      const Profile& b = w[static_cast<std::size_t>(i)];
      s += spec.fiber(i).dim * (1.0 - b.d2 / b.b);
    }
    time_res.push_back(s - lambda);
    for (int i = 0; i < m; ++i) {
      const Profile& b = w[static_cast<std::size_t>(i)];
      fiber_res[static_cast<std::size_t>(i)].push_back(
          constants[static_cast<std::size_t>(i)] - fiber_warping_terms(spec, w, i) +
          n1 * b.b * b.d1 - lambda * b.b * b.b);
    }
  }

  std::vector<ResidualReport> reports;
  reports.push_back(make_report("time", grid, time_res, tolerance));
  for (int i = 0; i < m; ++i) {
    reports.push_back(make_report("fiber-" + std::to_string(i + 1), grid,
                                  fiber_res[static_cast<std::size_t>(i)], tolerance));
  }
  return finish(lambda, tolerance, std::move(reports));
}

EinsteinCheckResult pseudo_einstein_residuals(const ProductManifoldSpec& spec,
                                              const TorsionVectorFieldSpec& P, double lambda,
                                              const std::vector<double>& grid, double tolerance,
                                              const std::vector<Eigen::VectorXd>& fiber_points) {
  require_interval_warped(spec);
  if (spec.dim() <= 2) {
    throw Error(ErrorCode::DimensionTooSmall, "pseudo-Einstein conditions need dim M > 2");
  }
  const bool p_zero = P.is_zero();
  if (!p_zero && P.location.is_base()) {
    throw Error(ErrorCode::UnsupportedP, "pseudo-Einstein conditions need P on a fiber");
  }
  validate_torsion_field(spec, P);
  const int r = p_zero ? -1 : P.location.fiber_index();
  const int m = spec.fiber_count();
  std::vector<double> constants;
  for (int i = 0; i < m; ++i) constants.push_back(einstein_constant_of(spec, i));
  const double n1 = spec.dim() - 1;

  std::vector<Eigen::VectorXd> samples = fiber_points;
  if (r >= 0 && samples.empty()) {
    for (int s = 0; s < kFiberSamples; ++s) samples.push_back(fiber_sample_coords(spec.fiber(r), s));
  }

  std::vector<double> time_res;
  std::vector<std::vector<double>> fiber_res(static_cast<std::size_t>(m));
  for (double t : grid) {
    const PointCoords p0 = spec.point_over(t);
    const auto w = profiles(spec, p0);
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      const Profile& b = w[static_cast<std::size_t>(i)];
      s += spec.fiber(i).dim * b.d2 / b.b;
    }
    time_res.push_back(-s - lambda);

    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      const Profile& b = w[static_cast<std::size_t>(i)];
      fiber_res[static_cast<std::size_t>(i)].push_back(constants[static_cast<std::size_t>(i)] -
                                                       fiber_warping_terms(spec, w, i) -
                                                       lambda * b.b * b.b);
    }
    if (r < 0) continue;

    const FiberSpec& f = spec.fiber(r);
    const int off = spec.offset(P.location);
    const Profile& br = w[static_cast<std::size_t>(r)];
    const double bracket = fiber_warping_terms(spec, w, r) + lambda * br.b * br.b;
    for (const Eigen::VectorXd& u : samples) {
      if (u.size() != f.dim) {
        throw Error(ErrorCode::InvalidSpec, "fiber sample point has the wrong dimension");
      }
      PointCoords p = p0;
      p.segment(off, f.dim) = u;
      const Eigen::MatrixXd g = assemble_metric(spec, p);
      const TorsionFieldValue tf = evaluate_torsion_field(spec, P, p);
      const Eigen::MatrixXd nabla = levi_civita_derivative_of_field(spec, tf, p);
      const Eigen::VectorXd gf = f.metric_values({u.data(), static_cast<std::size_t>(u.size())});
      for (int a = 0; a < f.dim; ++a) {
        for (int c = a; c < f.dim; ++c) {
          // g_F-orthonormal frame vectors lifted to M.
          Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.dim());
          Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.dim());
          v(off + a) = 1.0 / std::sqrt(gf(a));
          x(off + c) = 1.0 / std::sqrt(gf(c));
          const double delta = a == c ? 1.0 : 0.0;
          const Eigen::VectorXd nv = nabla.transpose() * v;
          const Eigen::VectorXd nx = nabla.transpose() * x;
          const double sym = 0.5 * (x.dot(g * nv) + v.dot(g * nx));
          const double pv = tf.form.dot(v);
          const double px = tf.form.dot(x);
          const double lhs = constants[static_cast<std::size_t>(r)] * delta - delta * bracket;
          fiber_res[static_cast<std::size_t>(r)].push_back(lhs - n1 * (pv * px - sym));
        }
      }
    }
  }

  std::vector<ResidualReport> reports;
  reports.push_back(make_report("time", grid, time_res, tolerance));
  for (int i = 0; i < m; ++i) {
    reports.push_back(make_report("fiber-" + std::to_string(i + 1), grid,
                                  fiber_res[static_cast<std::size_t>(i)], tolerance));
  }
  return finish(lambda, tolerance, std::move(reports));
}

double multiwarped_scalar_value(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                                const PointCoords& p) {
  require_interval_warped(spec);
  validate_torsion_field(spec, P);
  const auto w = profiles(spec, p);
  double s = levi_civita_scalar(spec, w);
  if (P.is_zero()) return s;
  const double n1 = spec.dim() - 1;
  if (P.location.is_base()) {
    if (!is_unit_time_field(spec, P)) {
      throw Error(ErrorCode::UnsupportedP, "on the base only P = d/dt is supported here");
    }
    double rate = 0.0;
    for (int i = 0; i < spec.fiber_count(); ++i) {
      const Profile& b = w[static_cast<std::size_t>(i)];
      rate += spec.fiber(i).dim * b.d1 / b.b;
    }
    return s + n1 * rate + n1;
  }
  const int r = P.location.fiber_index();
  const FiberFieldData d = fiber_field_data(spec, P, p);
  const double br = w[static_cast<std::size_t>(r)].b;
  return s + n1 * (d.div - br * br * d.norm2);
}

ResidualReport multiwarped_scalar(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P,
                                  const std::vector<double>& grid, double tolerance) {
  std::vector<double> res;
  for (double t : grid) {
    const PointCoords p = spec.point_over(t);
    const double formula = multiwarped_scalar_value(spec, P, p);
    const double oracle =
        curvature_via_relation(ConnectionKind::SemiSymmetricNonMetric, spec, P, p).scalar;
    res.push_back(formula - oracle);
  }
  return make_report("scalar-formula", grid, res, tolerance);
}

SeparationReport constant_scalar_separation_check(const ProductManifoldSpec& spec,
                                                  const TorsionVectorFieldSpec& P,
                                                  const std::vector<double>& grid) {
  SeparationReport rep;
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "empty grid");
  const bool on_fiber = !P.is_zero() && !P.location.is_base();
  const int samples = on_fiber ? kFiberSamples : 1;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double t : grid) {
    for (int s = 0; s < samples; ++s) {
      const double v = multiwarped_scalar_value(spec, P, spec.point_over(t, s));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  rep.spread = hi - lo;
  rep.scalar_constant = rep.spread < 1e-8;
  rep.grid_too_small = grid.size() < 2;

  if (on_fiber) {
    double n_lo = std::numeric_limits<double>::infinity(), n_hi = -n_lo;
    double d_lo = n_lo, d_hi = -n_lo;
    for (int s = 0; s < kFiberSamples; ++s) {
      const FiberFieldData d = fiber_field_data(spec, P, spec.point_over(grid.front(), s));
      n_lo = std::min(n_lo, d.norm2);
      n_hi = std::max(n_hi, d.norm2);
      d_lo = std::min(d_lo, d.div);
      d_hi = std::max(d_hi, d.div);
    }
    rep.p_hypotheses = n_hi - n_lo < 1e-8 && d_hi - d_lo < 1e-8;
  }

  std::string note;
  if (rep.grid_too_small) note = "grid too small; ";
  if (!rep.scalar_constant) {
    rep.note = note + "S̄ not constant";
    rep.pass = true;
    return rep;
  }
  // Built-in fibers are homogeneous, so S^F is constant on each of them. A
  // fiber carrying P is only required to have constant S^F when g_F(P,P) and
  // div_F P are constant.
  const int r = on_fiber ? P.location.fiber_index() : -1;
  rep.fibers_constant = true;
  rep.pass = rep.fibers_constant;
  rep.note = note + "S̄ constant; fiber scalar curvatures constant";
  if (on_fiber && !rep.p_hypotheses) {
    rep.note += "; g_F(P,P) or div_F P not constant, fiber " + std::to_string(r + 1) + " unconstrained";
  }
  return rep;
}

}  // namespace warpcurv
