#pragma once

#include "quasr/statistics.hpp"

#include <functional>
#include <vector>

namespace quasr {

// Group soft threshold (1 - t/||x||_2)_+ x; exactly zero when ||x|| <= t.
VectorXd group_shrink(const VectorXd& x, double t);

struct AdmmConfig {
  double lambda = 0.0;
  double rho = 1.0;
  int max_iters = 50000;
  // Relative l1 change of the stacked theta columns per iteration.
  double rel_tol = 1e-4;
  bool penalize_vertex = true;
  int threads = 1;
};

// Cached solve operator for (gamma_i + rho I). Full form stores the
// eigendecomposition gamma = Q diag(lam) Q'; the thin form keeps only the
// data-range eigenpairs (from an SVD of the sample rows) and applies
//   (1/rho) (v - Q diag(lam/(lam+rho)) Q' v),
// which agrees with the full inverse because the complement of the range has
// eigenvalue zero.
struct ColumnFactor {
  MatrixXd q;
  VectorXd lam;
  double rho = 0.0;
  bool thin = false;

  int dim() const { return static_cast<int>(q.rows()); }
  VectorXd apply(const VectorXd& v) const;
};

ColumnFactor build_column_factor(const ColumnStats& stats, double rho);

// Data-matrix route for n < p: a_rows holds one a_i(x^r)' per row, so
// gamma = (1/n) a_rows' a_rows and the factor needs only the thin SVD.
ColumnFactor build_column_factor(const MatrixXd& a_rows, long n, double rho);

// Type-erased solve handle; lets augmented operators chain with plain
// factors inside the solver.
struct ColumnSolve {
  int dim = 0;
  std::function<VectorXd(const VectorXd&)> apply;
};

ColumnSolve as_solve(ColumnFactor f);

// Solve operator for the enlarged matrix [[A, b], [b', c]] + rho I, given a
// cached operator for A + rho I. Uses the block inverse through the Schur
// complement S = (c + rho I) - b' (A + rho I)^{-1} b; each apply costs two
// base applies plus small dense work. Throws std::runtime_error when S is
// numerically singular.
ColumnSolve augment_factor(const ColumnSolve& base, const MatrixXd& b,
                           const MatrixXd& c, double rho);

// Consensus variables of the group solver. theta and y are per-column dense
// vectors in ColumnLayout order; z holds the shared blocks (vertex z_ii and
// pooled edge z_ij), with exact zeros stored as absent edge keys.
struct AdmmState {
  std::vector<VectorXd> theta;
  std::vector<VectorXd> y;
  ParamBlocks z;
};

struct AdmmInfo {
  int iterations = 0;
  bool converged = false;
  double rel_change = 0.0;
  double consensus_gap = 0.0;
};

// Consensus ADMM over columns:
//   (a) theta_i <- (gamma_i + rho I)^{-1} (-kvec_i - y_i + rho z_i)
//   (b) z_g     <- shrink of the pooled estimate, threshold lambda/rho
//   (c) y_i     <- y_i + rho (theta_i - z_i)
// The edge z pools the two column copies, so the lambda/rho threshold
// corresponds to an edge penalty of 2 lambda ||theta_ij|| (one lambda per
// copy) and a vertex penalty of lambda ||theta_ii||.
// The estimate is read from z, so reported edge blocks are exactly sparse.
// Pass factors to reuse cached (gamma_i + rho I) solves across calls; pass
// warm to resume from a previous state; state_out receives the final state.
FitResult admm_fit(const std::vector<ColumnStats>& stats,
                   const BasisSpec& basis, const AdmmConfig& cfg,
                   const AdmmState* warm = nullptr,
                   const std::vector<ColumnSolve>* factors = nullptr,
                   AdmmState* state_out = nullptr, AdmmInfo* info = nullptr);

// Group KKT residual for the consensus objective. Pools the gradient of both
// column copies of each edge group, divides by the group weight (1 for
// vertex, 2 for edge), and measures the distance from the subdifferential of
// lambda ||.||_2: for zero groups (||g||/w - lambda)_+, else
// ||g/w + lambda theta_g/||theta_g||||.
double general_kkt_residual(const ParamBlocks& theta,
                            const std::vector<ColumnStats>& stats,
                            double lambda, bool penalize_vertex = true);

}  // namespace quasr
