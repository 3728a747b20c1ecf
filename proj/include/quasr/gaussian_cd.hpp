#pragma once

#include "quasr/statistics.hpp"

#include <vector>

namespace quasr {

// max(|x| - t, 0) * sign(x); exact zero inside the threshold.
double soft_threshold(double x, double t);

struct CdConfig {
  double lambda = 0.0;
  int max_sweeps = 10000;
  // Relative l1 change of Omega over one full sweep.
  double rel_tol = 1e-8;
  bool penalize_diagonal = true;
  // Record the objective after every sweep (testing aid).
  bool track_objective = false;
};

struct CdResult {
  MatrixXd omega;
  int sweeps = 0;
  bool converged = false;
  double kkt = 0.0;
  std::vector<double> objective_trace;
};

// Coordinate descent for
//   min_Omega trace((1/2) Omega sigma_hat Omega - Omega) + lambda ||Omega||_1
// over symmetric Omega; ||.||_1 sums all d^2 entries, so off-diagonals carry
// an effective weight of 2. Starts from the identity unless init is given
// (init must be symmetric). Dot products skip entries of Omega that are
// exactly zero. Throws std::invalid_argument on a nonpositive diagonal of
// sigma_hat or a non-symmetric init.
CdResult cd_fit(const GaussianStats& stats, const CdConfig& cfg,
                const MatrixXd* init = nullptr);

// Max over entries of the distance of -G_ij from the subdifferential of
// lambda |.| at Omega_ij, where G = (1/2)(Omega sigma + sigma Omega) - I.
double kkt_residual(const MatrixXd& omega, const GaussianStats& stats,
                    double lambda, bool penalize_diagonal = true);

double gaussian_objective(const MatrixXd& omega, const GaussianStats& stats,
                          double lambda, bool penalize_diagonal = true);

FitResult to_fit_result(const CdResult& r);

}  // namespace quasr
