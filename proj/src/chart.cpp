#include "warpcurv/chart.hpp"

#include <cmath>

#include "warpcurv/error.hpp"

namespace warpcurv {

namespace {

std::span<const double> as_span(const PointCoords& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

bool is_zero_expr(const ScalarExpr& e) {
  return e.kind() == ScalarExpr::Kind::Constant && e.constant_value() == 0.0;
}

Eigen::MatrixXd inverse_metric(const Eigen::MatrixXd& g) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw Error(ErrorCode::SingularMetric, "metric is not invertible at the point");
  }
  return lu.inverse();
}

}  // namespace

Eigen::MatrixXd assemble_metric(const ProductManifoldSpec& spec, const PointCoords& p) {
  spec.check_point(p);
  const int n = spec.dim();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const ScalarExpr& e = spec.metric_expr(a, b);
      if (!is_zero_expr(e)) g(a, b) = e.eval(as_span(p));
    }
  }
  return g;
}

Rank3 metric_derivatives(const ProductManifoldSpec& spec, const PointCoords& p) {
  spec.check_point(p);
  const int n = spec.dim();
  Rank3 dg(n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const ScalarExpr& e = spec.metric_expr(a, b);
      if (is_zero_expr(e) || e.is_constant()) continue;
      const Jet j = e.eval_jet(as_span(p));
      for (int k = 0; k < n; ++k) {
        dg(k, a, b) = j.g(k);
        dg(k, b, a) = j.g(k);
      }
    }
  }
  return dg;
}

ConnectionCoefficients levi_civita_coefficients(const ProductManifoldSpec& spec,
                                                const PointCoords& p) {
  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const Eigen::MatrixXd ginv = inverse_metric(g);
  const Rank3 dg = metric_derivatives(spec, p);
  const int n = spec.dim();
  ConnectionCoefficients gamma(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          if (ginv(k, l) == 0.0) continue;
          s += ginv(k, l) * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
        }
        gamma(k, i, j) = 0.5 * s;
        gamma(k, j, i) = 0.5 * s;
      }
    }
  }
  return gamma;
}

CoefficientField levi_civita_field(const ProductManifoldSpec& spec) {
  return [&spec](const PointCoords& q) { return levi_civita_coefficients(spec, q); };
}

FrameField orthonormal_frame(const ProductManifoldSpec& spec, const PointCoords& p) {
  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const int n = spec.dim();
  FrameField f;
  f.vectors = Eigen::MatrixXd::Zero(n, n);
  f.signs.assign(static_cast<std::size_t>(n), 1.0);
  f.blocks.assign(static_cast<std::size_t>(n), Block::base());

  std::vector<Block> blocks{Block::base()};
  for (int i = 0; i < spec.fiber_count(); ++i) blocks.push_back(Block::fiber(i));

  for (const Block b : blocks) {
    const int off = spec.offset(b);
    const int d = spec.block_dim(b);
    const Eigen::MatrixXd sub = g.block(off, off, d, d);
    const double scale = sub.cwiseAbs().maxCoeff();
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    if ((sub - Eigen::MatrixXd(sub.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0) {
      vecs = Eigen::MatrixXd::Identity(d, d);
      vals = sub.diagonal();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
      vecs = es.eigenvectors();
      vals = es.eigenvalues();
    }
    for (int a = 0; a < d; ++a) {
      if (!(std::abs(vals(a)) > 1e-14 * scale) || scale == 0.0) {
        throw Error(ErrorCode::SingularMetric, "degenerate metric block in " + to_string(b));
      }
      f.vectors.block(off, off + a, d, 1) = vecs.col(a) / std::sqrt(std::abs(vals(a)));
      f.signs[static_cast<std::size_t>(off + a)] = vals(a) < 0 ? -1.0 : 1.0;
      f.blocks[static_cast<std::size_t>(off + a)] = b;
    }
  }
  return f;
}

Eigen::VectorXd apply_riemann(const Rank4& r, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
  const int n = r.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (x(i) == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (y(j) == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        if (z(k) == 0.0) continue;
        const double w = x(i) * y(j) * z(k);
        for (int l = 0; l < n; ++l) out(l) += r(l, i, j, k) * w;
      }
    }
  }
  return out;
}

void contract_curvature(const ProductManifoldSpec& spec, const PointCoords& p,
                        CurvatureAtPoint& c) {
  const int n = spec.dim();
  const Eigen::MatrixXd g = assemble_metric(spec, p);
  const FrameField frame = orthonormal_frame(spec, p);
  c.ricci = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd dj = Eigen::VectorXd::Unit(n, j);
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd dk = Eigen::VectorXd::Unit(n, k);
      double s = 0.0;
      for (int a = 0; a < n; ++a) {
        const Eigen::VectorXd ea = frame.vectors.col(a);
        s += frame.signs[static_cast<std::size_t>(a)] *
             apply_riemann(c.riemann, dj, ea, dk).dot(g * ea);
      }
      c.ricci(j, k) = s;
    }
  }
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    const Eigen::VectorXd ea = frame.vectors.col(a);
    s += frame.signs[static_cast<std::size_t>(a)] * ea.dot(c.ricci * ea);
  }
  c.scalar = s;
}

CurvatureAtPoint curvature_from_coefficients(const ProductManifoldSpec& spec,
                                             const CoefficientField& field,
                                             const PointCoords& p) {
  spec.check_point(p);
  const int n = spec.dim();
  const ConnectionCoefficients gamma = field(p);

  // dgamma[m](k, i, j) = d_m Gamma^k_ij
  std::vector<Rank3> dgamma;
  dgamma.reserve(static_cast<std::size_t>(n));
  const double h = kCoefficientStep;
  for (int m = 0; m < n; ++m) {
    auto central = [&](double step) {
      PointCoords plus = p;
      PointCoords minus = p;
      plus(m) += step;
      minus(m) -= step;
      const Rank3 fp = field(plus);
      const Rank3 fm = field(minus);
      Rank3 d(n);
      for (std::size_t q = 0; q < d.raw().size(); ++q) {
        d.raw()[q] = (fp.raw()[q] - fm.raw()[q]) / (2.0 * step);
      }
      return d;
    };
    const Rank3 coarse = central(h);
    const Rank3 fine = central(0.5 * h);
    Rank3 d(n);
    for (std::size_t q = 0; q < d.raw().size(); ++q) {
      const double gap = std::abs(fine.raw()[q] - coarse.raw()[q]);
      if (gap > 1e-4 * std::max(1.0, std::abs(fine.raw()[q]))) {
        throw Error(ErrorCode::NumericalInstability,
                    "coefficient derivative along coordinate " + std::to_string(m) +
                        " changes by " + std::to_string(gap) + " under step halving");
      }
      d.raw()[q] = (4.0 * fine.raw()[q] - coarse.raw()[q]) / 3.0;
    }
    dgamma.push_back(std::move(d));
  }

  CurvatureAtPoint c;
  c.riemann = Rank4(n);
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
          double v = dgamma[static_cast<std::size_t>(i)](l, j, k) -
                     dgamma[static_cast<std::size_t>(j)](l, i, k);
          for (int m = 0; m < n; ++m) {
            v += gamma(l, i, m) * gamma(m, j, k) - gamma(l, j, m) * gamma(m, i, k);
          }
          c.riemann(l, i, j, k) = v;
        }
      }
    }
  }
  contract_curvature(spec, p, c);
  return c;
}

}  // namespace warpcurv
