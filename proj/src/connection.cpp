#include "warpcurv/connection.hpp"

#include <cmath>
#include <set>

#include "warpcurv/error.hpp"

namespace warpcurv {

namespace {

std::span<const double> as_span(const PointCoords& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

bool nonzero(const ScalarExpr& e) {
  return !(e.kind() == ScalarExpr::Kind::Constant && e.constant_value() == 0.0);
}

}  // namespace

std::string to_string(ConnectionKind k) {
  switch (k) {
    case ConnectionKind::LeviCivita: return "levi-civita";
    case ConnectionKind::SemiSymmetricNonMetric: return "semi-symmetric";
    case ConnectionKind::SymmetrizedAffine: return "symmetrized";
  }
  return "unknown";
}

TorsionVectorFieldSpec TorsionVectorFieldSpec::on_base(std::vector<ScalarExpr> c) {
  TorsionVectorFieldSpec t;
  t.location = Block::base();
  t.components = std::move(c);
  return t;
}

TorsionVectorFieldSpec TorsionVectorFieldSpec::on_fiber(int r, std::vector<ScalarExpr> c) {
  TorsionVectorFieldSpec t;
  t.location = Block::fiber(r);
  t.components = std::move(c);
  return t;
}

TorsionVectorFieldSpec TorsionVectorFieldSpec::from_components(
    const ProductManifoldSpec& spec, const std::vector<ScalarExpr>& all) {
  if (static_cast<int>(all.size()) != spec.dim()) {
    throw Error(ErrorCode::UnsupportedP, "P needs one component per chart coordinate");
  }
  std::set<Block> used;
  for (int a = 0; a < spec.dim(); ++a) {
    if (nonzero(all[static_cast<std::size_t>(a)])) used.insert(spec.block_of(a));
  }
  if (used.empty()) return zero();
  if (used.size() > 1) {
    throw Error(ErrorCode::UnsupportedP, "P has components in more than one block");
  }
  const Block b = *used.begin();
  const int off = spec.offset(b);
  TorsionVectorFieldSpec t;
  t.location = b;
  t.components.assign(all.begin() + off, all.begin() + off + spec.block_dim(b));
  return t;
}

bool TorsionVectorFieldSpec::is_zero() const {
  for (const auto& c : components) {
    if (nonzero(c)) return false;
  }
  return true;
}

TorsionVectorFieldSpec TorsionVectorFieldSpec::scaled(double c) const {
  TorsionVectorFieldSpec t = *this;
  for (auto& e : t.components) e = c * e;
  return t;
}

void validate_torsion_field(const ProductManifoldSpec& spec, const TorsionVectorFieldSpec& P) {
  if (P.is_zero()) return;
  const Block b = P.location;
  if (!b.is_base() && (b.fiber_index() < 0 || b.fiber_index() >= spec.fiber_count())) {
    throw Error(ErrorCode::UnsupportedP, "P is placed on a fiber that does not exist");
  }
  if (static_cast<int>(P.components.size()) != spec.block_dim(b)) {
    throw Error(ErrorCode::UnsupportedP, "P has " + std::to_string(P.components.size()) +
                                             " components but its block has dimension " +
                                             std::to_string(spec.block_dim(b)));
  }
  const auto names = spec.block_coordinate_names(b);
  const std::set<std::string> allowed(names.begin(), names.end());
  for (const auto& c : P.components) {
    for (const auto& v : c.variables()) {
      if (!allowed.count(v)) {
        throw Error(ErrorCode::UnsupportedP,
                    "P component depends on '" + v + "', outside its own block");
      }
    }
  }
}

TorsionFieldValue evaluate_torsion_field(const ProductManifoldSpec& spec,
                                         const TorsionVectorFieldSpec& P,
                                         const PointCoords& p) {
  validate_torsion_field(spec, P);
  const int n = spec.dim();
  TorsionFieldValue v;
  v.vector = Eigen::VectorXd::Zero(n);
  v.derivative = Eigen::MatrixXd::Zero(n, n);
  v.form = Eigen::VectorXd::Zero(n);
  v.form_derivative = Eigen::MatrixXd::Zero(n, n);
  if (P.is_zero()) return v;

  const int off = spec.offset(P.location);
  for (std::size_t c = 0; c < P.components.size(); ++c) {
    const ScalarExpr e = P.components[c].bind(spec.coordinate_names());
    const Jet j = e.eval_jet(as_span(p));
    v.vector(off + static_cast<int>(c)) = j.v;
    v.derivative.col(off + static_cast<int>(c)) = j.g;
  }

  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const Rank3 dg = metric_derivatives(spec, p);
  v.form = g * v.vector;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) {
        s += dg(i, j, m) * v.vector(m) + g(j, m) * v.derivative(i, m);
      }
      v.form_derivative(i, j) = s;
    }
  }
  return v;
}

ConnectionCoefficients modified_coefficients(ConnectionKind kind, const ProductManifoldSpec& spec,
                                             const TorsionVectorFieldSpec& P,
                                             const PointCoords& p) {
  ConnectionCoefficients gamma = levi_civita_coefficients(spec, p);
  if (kind == ConnectionKind::LeviCivita) return gamma;
  const TorsionFieldValue t = evaluate_torsion_field(spec, P, p);
  const int n = spec.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gamma(i, i, j) += t.form(j);
      if (kind == ConnectionKind::SymmetrizedAffine) gamma(j, i, j) += t.form(i);
    }
  }
  return gamma;
}

CoefficientField connection_field(ConnectionKind kind, const ProductManifoldSpec& spec,
                                  const TorsionVectorFieldSpec& P) {
  return [kind, &spec, P](const PointCoords& q) { return modified_coefficients(kind, spec, P, q); };
}

Rank3 torsion_tensor(ConnectionKind kind, const ProductManifoldSpec& spec,
                     const TorsionVectorFieldSpec& P, const PointCoords& p) {
  const ConnectionCoefficients gamma = modified_coefficients(kind, spec, P, p);
  const int n = spec.dim();
  Rank3 t(n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) t(k, i, j) = gamma(k, i, j) - gamma(k, j, i);
    }
  }
  return t;
}

Rank3 nonmetricity(ConnectionKind kind, const ProductManifoldSpec& spec,
                   const TorsionVectorFieldSpec& P, const PointCoords& p) {
  const ConnectionCoefficients gamma = modified_coefficients(kind, spec, P, p);
  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const Rank3 dg = metric_derivatives(spec, p);
  const int n = spec.dim();
  Rank3 q(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double s = dg(i, j, k);
        for (int m = 0; m < n; ++m) s -= gamma(m, i, j) * g(m, k) + gamma(m, i, k) * g(j, m);
        q(i, j, k) = s;
      }
    }
  }
  return q;
}

Eigen::MatrixXd levi_civita_derivative_of_field(const ProductManifoldSpec& spec,
                                                const TorsionFieldValue& P,
                                                const PointCoords& p) {
  const ConnectionCoefficients gamma = levi_civita_coefficients(spec, p);
  const int n = spec.dim();
  Eigen::MatrixXd d = P.derivative;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      for (int m = 0; m < n; ++m) d(i, k) += gamma(k, i, m) * P.vector(m);
    }
  }
  return d;
}

CurvatureAtPoint curvature_via_relation(ConnectionKind kind, const ProductManifoldSpec& spec,
                                        const TorsionVectorFieldSpec& P, const PointCoords& p,
                                        bool cross_check) {
  CurvatureAtPoint c = curvature_from_coefficients(spec, levi_civita_field(spec), p);
  if (kind == ConnectionKind::LeviCivita || P.is_zero()) return c;

  const int n = spec.dim();
  const TorsionFieldValue t = evaluate_torsion_field(spec, P, p);
  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const Eigen::MatrixXd nabla_p = levi_civita_derivative_of_field(spec, t, p);
  // a(i, k) = g(d_k, nabla_i P)
  const Eigen::MatrixXd a = nabla_p * g;
  const Eigen::VectorXd& pi = t.form;

  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = 0.0;
          if (l == j) v += a(i, k) - pi(k) * pi(i);
          if (l == i) v += -a(j, k) + pi(k) * pi(j);
          if (kind == ConnectionKind::SymmetrizedAffine && l == k) {
            v += t.form_derivative(i, j) - t.form_derivative(j, i);
          }
          c.riemann(l, i, j, k) += v;
        }
      }
    }
  }
  contract_curvature(spec, p, c);

  if (cross_check) {
    const CurvatureAtPoint direct =
        curvature_from_coefficients(spec, connection_field(kind, spec, P), p);
    double gap = 0.0;
    for (std::size_t q = 0; q < c.riemann.raw().size(); ++q) {
      gap = std::max(gap, std::abs(c.riemann.raw()[q] - direct.riemann.raw()[q]));
    }
    if (gap > 1e-4) {
      throw Error(ErrorCode::NumericalInstability,
                  "relation and coefficient curvature differ by " + std::to_string(gap));
    }
  }
  return c;
}

}  // namespace warpcurv
