#include "quasr/statistics.hpp"

#include "quasr/legendre.hpp"
#include "quasr/parallel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace quasr {

GaussianStats gaussian_stats(const Dataset& data) {
  const long n = data.n();
  if (n < 1) throw std::invalid_argument("gaussian_stats: empty dataset");
  const Eigen::RowVectorXd mean = data.values.colwise().mean();
  const MatrixXd centered = data.values.rowwise() - mean;
  GaussianStats out;
  out.sigma_hat = (centered.transpose() * centered) / double(n);
  out.n = n;
  return out;
}

std::vector<ColumnStats> gaussian_column_stats(const GaussianStats& stats) {
  const int d = static_cast<int>(stats.sigma_hat.rows());
  if (stats.sigma_hat.cols() != d)
    throw std::invalid_argument("gaussian_column_stats: sigma not square");
  std::vector<ColumnStats> out(d);
  for (int i = 0; i < d; ++i) {
    // Layout vertex first: position 0 <-> i, position 1 + rank <-> neighbor.
    std::vector<int> vertex_at(d);
    vertex_at[0] = i;
    for (int j = 0, pos = 1; j < d; ++j)
      if (j != i) vertex_at[pos++] = j;
    ColumnStats cs;
    cs.i = i;
    cs.n = stats.n;
    cs.gamma.resize(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        cs.gamma(a, b) = stats.sigma_hat(vertex_at[a], vertex_at[b]);
    cs.kvec = VectorXd::Zero(d);
    cs.kvec(0) = -1.0;
    out[i] = std::move(cs);
  }
  return out;
}

namespace {

// Per-coordinate basis evaluations for a block of samples: value/d1/d2 are
// (rows x (kmax+1)) per coordinate.
struct BlockEvals {
  std::vector<MatrixXd> value, d1, d2;
};

void eval_block(const MatrixXd& x, long row0, long rows, int kmax,
                BlockEvals& ev) {
  const int d = static_cast<int>(x.cols());
  for (int j = 0; j < d; ++j) {
    ev.value[j].resize(rows, kmax + 1);
    ev.d1[j].resize(rows, kmax + 1);
    ev.d2[j].resize(rows, kmax + 1);
    for (long r = 0; r < rows; ++r) {
      const LegendreEval e = eval_legendre(x(row0 + r, j), kmax);
      ev.value[j].row(r) = e.value.transpose();
      ev.d1[j].row(r) = e.d1.transpose();
      ev.d2[j].row(r) = e.d2.transpose();
    }
  }
}

}  // namespace

std::vector<ColumnStats> legendre_column_stats(const Dataset& data,
                                               const BasisSpec& basis,
                                               const StatsOptions& opts) {
  if (basis.kind != BasisSpec::Kind::LegendrePairwise)
    throw std::invalid_argument("legendre_column_stats: wrong basis kind");
  basis.validate();
  const long n = data.n();
  const int d = data.d();
  if (n < 1) throw std::invalid_argument("legendre_column_stats: empty data");
  if (d < 1) throw std::invalid_argument("legendre_column_stats: no columns");
  if (!((data.values.array() >= 0.0) && (data.values.array() <= 1.0)).all())
    throw std::domain_error("legendre_column_stats: data outside [0,1]^d");

  const ColumnLayout layout(d, basis);
  const int p = layout.length();
  if (p > opts.max_column_dim)
    throw std::invalid_argument("legendre_column_stats: column dimension " +
                                std::to_string(p) + " exceeds cap");

  const int m1 = basis.m1, m2 = basis.m2;
  const int kmax = std::max(m1, m2);

  std::vector<ColumnStats> out(d);
  for (int i = 0; i < d; ++i) {
    out[i].i = i;
    out[i].n = n;
    out[i].gamma = MatrixXd::Zero(p, p);
    out[i].kvec = VectorXd::Zero(p);
  }

  // Samples are consumed in blocks; each column accumulates over blocks in
  // sample order, so the result does not depend on the thread count.
  const long block = 4096;
  BlockEvals ev;
  ev.value.resize(d);
  ev.d1.resize(d);
  ev.d2.resize(d);
  std::vector<VectorXd> a(d, VectorXd::Zero(p));
  std::vector<VectorXd> kc(d, VectorXd::Zero(p));

  for (long row0 = 0; row0 < n; row0 += block) {
    const long rows = std::min(block, n - row0);
    eval_block(data.values, row0, rows, kmax, ev);
    parallel_for(d, opts.threads, [&](int i) {
      VectorXd& ai = a[i];
      VectorXd& ki = kc[i];
      for (long r = 0; r < rows; ++r) {
        const double xi = data.values(row0 + r, i);
        const double w = xi * (1.0 - xi);
        const double w1 = -2.0 * (2.0 * xi - 1.0) * w;
        const double w2 = w * w;
        for (int k = 1; k <= m1; ++k) {
          const double df = ev.d1[i](r, k);
          ai(k - 1) = w * df;
          ki(k - 1) = w1 * df + w2 * ev.d2[i](r, k);
        }
        for (int j = 0; j < d; ++j) {
          if (j == i) continue;
          const int off = layout.edge_offset(i, j);
          const bool at_lo = i < j;
          for (int k = 1; k <= m2; ++k) {
            for (int l = 1; l <= m2; ++l) {
              // Degree k at the smaller vertex, l at the larger.
              const int u = off + (k - 1) * m2 + (l - 1);
              double df, df2;
              if (at_lo) {
                df = ev.d1[i](r, k) * ev.value[j](r, l);
                df2 = ev.d2[i](r, k) * ev.value[j](r, l);
              } else {
                df = ev.value[j](r, k) * ev.d1[i](r, l);
                df2 = ev.value[j](r, k) * ev.d2[i](r, l);
              }
              ai(u) = w * df;
              ki(u) = w1 * df + w2 * df2;
            }
          }
        }
        out[i].gamma.selfadjointView<Eigen::Lower>().rankUpdate(ai, 1.0);
        out[i].kvec += ki;
      }
    });
  }

  for (int i = 0; i < d; ++i) {
    out[i].gamma.triangularView<Eigen::StrictlyUpper>() =
        out[i].gamma.transpose();
    out[i].gamma /= double(n);
    out[i].kvec /= double(n);
  }
  return out;
}

std::vector<ColumnStats> column_stats(const Dataset& data,
                                      const BasisSpec& basis,
                                      const StatsOptions& opts) {
  if (basis.kind == BasisSpec::Kind::Gaussian)
    return gaussian_column_stats(gaussian_stats(data));
  return legendre_column_stats(data, basis, opts);
}

double hyvarinen_score(const ParamBlocks& theta,
                       const std::vector<ColumnStats>& stats) {
  if (static_cast<int>(stats.size()) != theta.d())
    throw std::invalid_argument("hyvarinen_score: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < theta.d(); ++i) {
    const VectorXd c = theta.column(i);
    if (c.size() != stats[i].gamma.rows())
      throw std::invalid_argument("hyvarinen_score: layout mismatch");
    s += 0.5 * c.dot(stats[i].gamma * c) + stats[i].kvec.dot(c);
  }
  return s;
}

double hyvarinen_score(const MatrixXd& omega, const GaussianStats& stats) {
  return 0.5 * (omega * stats.sigma_hat * omega).trace() - omega.trace();
}

double score_on_holdout(const ParamBlocks& theta, const Dataset& holdout,
                        const BasisSpec& basis, const StatsOptions& opts) {
  return hyvarinen_score(theta, column_stats(holdout, basis, opts));
}

double gaussian_nll(const MatrixXd& omega, const MatrixXd& holdout_sigma) {
  const int d = static_cast<int>(omega.rows());
  if (omega.cols() != d || holdout_sigma.rows() != d ||
      holdout_sigma.cols() != d)
    throw std::invalid_argument("gaussian_nll: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(omega);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gaussian_nll: eigensolver failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    return std::numeric_limits<double>::infinity();
  const double logdet = es.eigenvalues().array().log().sum();
  return -0.5 * logdet + 0.5 * (omega * holdout_sigma).trace() +
         0.5 * d * std::log(2.0 * std::numbers::pi);
}

}  // namespace quasr
