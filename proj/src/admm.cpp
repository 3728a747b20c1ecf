#include "quasr/admm.hpp"

#include "quasr/parallel.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace quasr {

VectorXd group_shrink(const VectorXd& x, double t) {
  if (t < 0.0) throw std::invalid_argument("group_shrink: negative threshold");
  const double nx = x.norm();
  if (nx <= t) return VectorXd::Zero(x.size());
  return (1.0 - t / nx) * x;
}

VectorXd ColumnFactor::apply(const VectorXd& v) const {
  if (thin) {
    // (gamma + rho I)^{-1} = (1/rho)(I - Q diag(lam/(lam+rho)) Q') when the
    // complement of range(Q) has eigenvalue zero.
    const VectorXd qtv = q.transpose() * v;
    const VectorXd scaled =
        (lam.array() / (lam.array() + rho)).matrix().cwiseProduct(qtv);
    return (v - q * scaled) / rho;
  }
  const VectorXd qtv = q.transpose() * v;
  return q * (qtv.array() / (lam.array() + rho)).matrix();
}

ColumnFactor build_column_factor(const ColumnStats& stats, double rho) {
  if (!(rho > 0.0))
    throw std::invalid_argument("build_column_factor: rho must be positive");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(stats.gamma);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("build_column_factor: eigensolver failed");
  ColumnFactor f;
  f.q = es.eigenvectors();
  f.lam = es.eigenvalues();
  f.rho = rho;
  f.thin = false;
  return f;
}

ColumnFactor build_column_factor(const MatrixXd& a_rows, long n, double rho) {
  if (!(rho > 0.0))
    throw std::invalid_argument("build_column_factor: rho must be positive");
  if (n < 1) throw std::invalid_argument("build_column_factor: n < 1");
  // gamma = (1/n) a_rows' a_rows: eigenvectors are the right singular
  // vectors, eigenvalues the squared singular values over n.
  Eigen::BDCSVD<MatrixXd> svd(a_rows, Eigen::ComputeThinV);
  ColumnFactor f;
  f.q = svd.matrixV();
  f.lam = svd.singularValues().array().square() / double(n);
  f.rho = rho;
  f.thin = true;
  return f;
}

ColumnSolve as_solve(ColumnFactor f) {
  auto held = std::make_shared<ColumnFactor>(std::move(f));
  ColumnSolve s;
  s.dim = held->dim();
  s.apply = [held](const VectorXd& v) { return held->apply(v); };
  return s;
}

ColumnSolve augment_factor(const ColumnSolve& base, const MatrixXd& b,
                           const MatrixXd& c, double rho) {
  const int p = base.dim;
  const int qdim = static_cast<int>(c.rows());
  if (b.rows() != p || b.cols() != qdim || c.cols() != qdim)
    throw std::invalid_argument("augment_factor: shape mismatch");
  if (!(rho > 0.0))
    throw std::invalid_argument("augment_factor: rho must be positive");

  struct Aug {
    ColumnSolve base;
    MatrixXd b;
    Eigen::LDLT<MatrixXd> schur;
    int p, q;
  };
  auto aug = std::make_shared<Aug>();
  aug->base = base;
  aug->b = b;
  aug->p = p;
  aug->q = qdim;

  // S = (c + rho I) - b' (A + rho I)^{-1} b
  MatrixXd ainv_b(p, qdim);
  for (int k = 0; k < qdim; ++k) ainv_b.col(k) = base.apply(b.col(k));
  MatrixXd s = c + rho * MatrixXd::Identity(qdim, qdim);
  s.noalias() -= b.transpose() * ainv_b;
  aug->schur.compute(s);
  if (aug->schur.info() != Eigen::Success)
    throw std::runtime_error("augment_factor: Schur factorization failed");
  const VectorXd dvec = aug->schur.vectorD();
  const double dmax = dvec.cwiseAbs().maxCoeff();
  if (!(dvec.cwiseAbs().minCoeff() > 1e-14 * std::max(1.0, dmax)))
    throw std::runtime_error("augment_factor: singular Schur complement");

  ColumnSolve out;
  out.dim = p + qdim;
  out.apply = [aug](const VectorXd& v) {
    const VectorXd v1 = v.head(aug->p);
    const VectorXd v2 = v.tail(aug->q);
    const VectorXd t = aug->base.apply(v1);
    const VectorXd u2 = aug->schur.solve(v2 - aug->b.transpose() * t);
    const VectorXd u1 = aug->base.apply(v1 - aug->b * u2);
    VectorXd u(aug->p + aug->q);
    u << u1, u2;
    return u;
  };
  return out;
}

namespace {

void check_stats(const std::vector<ColumnStats>& stats,
                 const ColumnLayout& layout) {
  const int d = layout.d;
  if (static_cast<int>(stats.size()) != d)
    throw std::invalid_argument("admm: stats count != d");
  const int p = layout.length();
  for (const auto& cs : stats)
    if (cs.gamma.rows() != p || cs.gamma.cols() != p || cs.kvec.size() != p)
      throw std::invalid_argument("admm: stats dimension mismatch");
}

}  // namespace

FitResult admm_fit(const std::vector<ColumnStats>& stats,
                   const BasisSpec& basis, const AdmmConfig& cfg,
                   const AdmmState* warm,
                   const std::vector<ColumnSolve>* factors,
                   AdmmState* state_out, AdmmInfo* info) {
  const int d = static_cast<int>(stats.size());
  if (d < 1) throw std::invalid_argument("admm_fit: no columns");
  const ColumnLayout layout(d, basis);
  check_stats(stats, layout);
  if (cfg.lambda < 0.0) throw std::invalid_argument("admm_fit: negative lambda");
  if (!(cfg.rho > 0.0)) throw std::invalid_argument("admm_fit: rho <= 0");
  const int p = layout.length();
  const int vd = layout.vertex_dim;
  const int ed = layout.edge_dim;

  std::vector<ColumnSolve> local_factors;
  if (!factors) {
    local_factors.resize(d);
    parallel_for(d, cfg.threads, [&](int i) {
      local_factors[i] = as_solve(build_column_factor(stats[i], cfg.rho));
    });
    factors = &local_factors;
  }
  if (static_cast<int>(factors->size()) != d)
    throw std::invalid_argument("admm_fit: factor count != d");
  for (const auto& f : *factors)
    if (f.dim != p) throw std::invalid_argument("admm_fit: factor dim mismatch");

  AdmmState st;
  if (warm) {
    if (static_cast<int>(warm->theta.size()) != d ||
        static_cast<int>(warm->y.size()) != d || warm->z.d() != d ||
        warm->z.vertex_dim() != vd || warm->z.edge_dim() != ed)
      throw std::invalid_argument("admm_fit: warm state shape mismatch");
    for (int i = 0; i < d; ++i)
      if (warm->theta[i].size() != p || warm->y[i].size() != p)
        throw std::invalid_argument("admm_fit: warm state length mismatch");
    st = *warm;
  } else {
    st.theta.assign(d, VectorXd::Zero(p));
    st.y.assign(d, VectorXd::Zero(p));
    st.z = ParamBlocks(d, vd, ed);
  }

  const double rho = cfg.rho;
  const double lam_vertex = cfg.penalize_vertex ? cfg.lambda : 0.0;
  double kscale = 0.0;
  for (const auto& cs : stats) kscale += cs.kvec.lpNorm<1>();
  const double zero_floor = 1e-12 * std::max(1.0, kscale);

  std::vector<VectorXd> z_cols(d);
  for (int i = 0; i < d; ++i) z_cols[i] = st.z.column(i);
  std::vector<VectorXd> prev(d);

  AdmmInfo diag;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    diag.iterations = t;
    for (int i = 0; i < d; ++i) prev[i] = st.theta[i];

    // (a) column solves
    parallel_for(d, cfg.threads, [&](int i) {
      const VectorXd rhs = -stats[i].kvec - st.y[i] + rho * z_cols[i];
      st.theta[i] = (*factors)[i].apply(rhs);
    });

    // (b) pooled shrinkage
    for (int i = 0; i < d; ++i) {
      const VectorXd c =
          st.theta[i].head(vd) + st.y[i].head(vd) / rho;
      st.z.vertex(i) = group_shrink(c, lam_vertex / rho);
    }
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) {
        const int oi = layout.edge_offset(i, j);
        const int oj = layout.edge_offset(j, i);
        const VectorXd c =
            0.5 * (st.theta[i].segment(oi, ed) + st.theta[j].segment(oj, ed) +
                   (st.y[i].segment(oi, ed) + st.y[j].segment(oj, ed)) / rho);
        VectorXd zb = group_shrink(c, cfg.lambda / rho);
        if (zb.isZero(0.0))
          st.z.erase_edge(i, j);
        else
          st.z.set_edge(i, j, std::move(zb));
      }
    }
    for (int i = 0; i < d; ++i) z_cols[i] = st.z.column(i);

    // (c) dual ascent
    double gap = 0.0;
    for (int i = 0; i < d; ++i) {
      const VectorXd r = st.theta[i] - z_cols[i];
      st.y[i] += rho * r;
      gap = std::max(gap, r.lpNorm<Eigen::Infinity>());
    }

    double num = 0.0, den = 0.0;
    for (int i = 0; i < d; ++i) {
      num += (st.theta[i] - prev[i]).lpNorm<1>();
      den += st.theta[i].lpNorm<1>();
    }
    double zmax = 0.0;
    for (int i = 0; i < d; ++i)
      zmax = std::max(zmax, z_cols[i].lpNorm<Eigen::Infinity>());

    diag.rel_change = den == 0.0 ? (num == 0.0 ? 0.0 : 1.0) : num / den;
    diag.consensus_gap = gap;

    const bool gap_ok = gap <= 10.0 * cfg.rel_tol * (1.0 + zmax);
    const bool rel_ok = den == 0.0 ? num == 0.0 : num / den < cfg.rel_tol;
    // The relative change stalls when the solution is exactly zero (theta
    // decays geometrically), so accept a vanished iterate once every z block
    // is an exact zero.
    const bool zero_ok = den <= zero_floor && st.z.l1_norm() == 0.0;
    if ((rel_ok && gap_ok) || zero_ok) {
      diag.converged = true;
      break;
    }
  }

  FitResult out;
  out.theta = st.z;
  out.theta.prune();
  out.iterations = diag.iterations;
  out.converged = diag.converged;
  out.kkt =
      general_kkt_residual(out.theta, stats, cfg.lambda, cfg.penalize_vertex);
  out.edges = edge_set_of(out.theta);
  if (state_out) *state_out = std::move(st);
  if (info) *info = diag;
  return out;
}

double general_kkt_residual(const ParamBlocks& theta,
                            const std::vector<ColumnStats>& stats,
                            double lambda, bool penalize_vertex) {
  const int d = theta.d();
  if (static_cast<int>(stats.size()) != d)
    throw std::invalid_argument("general_kkt_residual: dimension mismatch");
  const ColumnLayout layout = theta.layout();
  const int vd = layout.vertex_dim;
  const int ed = layout.edge_dim;

  std::vector<VectorXd> grad(d);
  for (int i = 0; i < d; ++i) {
    const VectorXd c = theta.column(i);
    if (c.size() != stats[i].gamma.rows())
      throw std::invalid_argument("general_kkt_residual: layout mismatch");
    grad[i] = stats[i].gamma * c + stats[i].kvec;
  }

  double worst = 0.0;
  auto group_res = [&](const VectorXd& g, const VectorXd& block, double w,
                       double lam) {
    const VectorXd gn = g / w;
    const double bn = block.norm();
    double r;
    if (bn == 0.0)
      r = std::max(gn.norm() - lam, 0.0);
    else
      r = (gn + (lam / bn) * block).norm();
    worst = std::max(worst, r);
  };

  for (int i = 0; i < d; ++i) {
    const double lam_v = penalize_vertex ? lambda : 0.0;
    group_res(grad[i].head(vd), theta.vertex(i), 1.0, lam_v);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const VectorXd g = grad[i].segment(layout.edge_offset(i, j), ed) +
                         grad[j].segment(layout.edge_offset(j, i), ed);
      const VectorXd* blk = theta.edge_if(i, j);
      group_res(g, blk ? *blk : VectorXd::Zero(ed), 2.0, lambda);
    }
  }
  return worst;
}

}  // namespace quasr
