#pragma once

#include "quasr/types.hpp"

#include <vector>

namespace quasr {

// Quadratic-form statistics for one column of the score objective:
//   (1/2) theta_{.,i}' gamma theta_{.,i} + kvec' theta_{.,i}
// with gamma = (1/n) sum_r a_i(x^r) a_i(x^r)' and kvec the matching linear
// term. Entries follow ColumnLayout(d, basis).
struct ColumnStats {
  int i = 0;
  MatrixXd gamma;
  VectorXd kvec;
  long n = 0;
};

// Second moments about the sample mean, 1/n normalization.
struct GaussianStats {
  MatrixXd sigma_hat;
  long n = 0;
};

struct StatsOptions {
  int threads = 1;
  // Refuse per-column dimensions beyond this.
  int max_column_dim = 20000;
};

GaussianStats gaussian_stats(const Dataset& data);

// Expand GaussianStats into per-column statistics: gamma_i is sigma_hat with
// row/column i moved to the front, kvec_i = -e_1. This is the layout the
// group solvers consume; the linear term encodes the trace(-Omega) part of
// the Gaussian objective columnwise.
std::vector<ColumnStats> gaussian_column_stats(const GaussianStats& stats);

// Bounded-support statistics on [0,1]^d for the pairwise Legendre family.
// For column i, with w = x_i(1-x_i):
//   a-entries:      w * (d/dx_i) of each basis function touching i
//   kvec-entries:   -2(2x_i-1) w * (d/dx_i) + w^2 * (d^2/dx_i^2)
// averaged over samples. Throws std::domain_error for data off [0,1]^d and
// std::invalid_argument for empty data or a column dimension over the cap.
std::vector<ColumnStats> legendre_column_stats(const Dataset& data,
                                               const BasisSpec& basis,
                                               const StatsOptions& opts = {});

// Dispatch on basis kind.
std::vector<ColumnStats> column_stats(const Dataset& data,
                                      const BasisSpec& basis,
                                      const StatsOptions& opts = {});

// Empirical score risk: sum_i (1/2) c_i' gamma_i c_i + kvec_i' c_i with
// c_i = theta_{.,i}.
double hyvarinen_score(const ParamBlocks& theta,
                       const std::vector<ColumnStats>& stats);

// Gaussian closed form: trace((1/2) Omega sigma_hat Omega - Omega).
double hyvarinen_score(const MatrixXd& omega, const GaussianStats& stats);

// Rebuilds statistics on the holdout set and evaluates the score there.
double score_on_holdout(const ParamBlocks& theta, const Dataset& holdout,
                        const BasisSpec& basis, const StatsOptions& opts = {});

// Gaussian negative log-likelihood per observation against holdout moments:
//   -(1/2) logdet(Omega) + (1/2) trace(Omega sigma) + (d/2) log(2 pi).
// Returns +inf when omega is not positive definite.
double gaussian_nll(const MatrixXd& omega, const MatrixXd& holdout_sigma);

}  // namespace quasr
