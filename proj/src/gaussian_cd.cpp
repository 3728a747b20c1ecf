#include "quasr/gaussian_cd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace quasr {

double soft_threshold(double x, double t) {
  const double m = std::abs(x) - t;
  if (m <= 0.0) return 0.0;
  return x > 0.0 ? m : -m;
}

namespace {

// Sorted nonzero row indices per column of Omega. Skipping exact zeros in
// the update dot products leaves the sums bit-identical to the dense loop
// (adding an exact 0.0 term never changes the accumulator).
struct NonzeroLists {
  std::vector<std::vector<int>> rows;

  explicit NonzeroLists(const MatrixXd& omega) {
    const int d = static_cast<int>(omega.rows());
    rows.resize(d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i)
        if (omega(i, j) != 0.0) rows[j].push_back(i);
  }

  void update(int i, int j, bool nonzero) {
    auto& r = rows[j];
    auto it = std::lower_bound(r.begin(), r.end(), i);
    const bool present = it != r.end() && *it == i;
    if (nonzero && !present)
      r.insert(it, i);
    else if (!nonzero && present)
      r.erase(it);
  }
};

}  // namespace

CdResult cd_fit(const GaussianStats& stats, const CdConfig& cfg,
                const MatrixXd* init) {
  const MatrixXd& sig = stats.sigma_hat;
  const int d = static_cast<int>(sig.rows());
  if (sig.cols() != d) throw std::invalid_argument("cd_fit: sigma not square");
  for (int i = 0; i < d; ++i)
    if (!(sig(i, i) > 0.0))
      throw std::invalid_argument("cd_fit: nonpositive diagonal in sigma_hat");
  if (cfg.lambda < 0.0) throw std::invalid_argument("cd_fit: negative lambda");

  MatrixXd omega;
  if (init) {
    if (init->rows() != d || init->cols() != d)
      throw std::invalid_argument("cd_fit: init size mismatch");
    const double scale = std::max(1.0, init->cwiseAbs().maxCoeff());
    if ((*init - init->transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("cd_fit: init not symmetric");
    omega = *init;
  } else {
    omega = MatrixXd::Identity(d, d);
  }

  NonzeroLists nz(omega);
  const double lam_diag = cfg.penalize_diagonal ? cfg.lambda : 0.0;
  const double lam_off = 2.0 * cfg.lambda;  // ||Omega||_1 counts both copies

  CdResult res;
  if (cfg.track_objective)
    res.objective_trace.push_back(
        gaussian_objective(omega, stats, cfg.lambda, cfg.penalize_diagonal));

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        const double old = omega(i, j);
        double next;
        if (i == j) {
          // c = 1 - sum_{k != i} sigma_ik omega_ki
          double c = 1.0;
          for (int k : nz.rows[i])
            if (k != i) c -= sig(i, k) * omega(k, i);
          next = soft_threshold(c, lam_diag) / sig(i, i);
        } else {
          // c = -sum_{k != i} sigma_ik omega_kj - sum_{k != j} sigma_jk omega_ki
          double c = 0.0;
          for (int k : nz.rows[j])
            if (k != i) c -= sig(i, k) * omega(k, j);
          for (int k : nz.rows[i])
            if (k != j) c -= sig(j, k) * omega(k, i);
          next = soft_threshold(c, lam_off) / (sig(i, i) + sig(j, j));
        }
        if (next != old) {
          omega(i, j) = next;
          omega(j, i) = next;
          const bool nonzero = next != 0.0;
          nz.update(i, j, nonzero);
          if (i != j) nz.update(j, i, nonzero);
        }
        change += std::abs(next - old);
      }
    }
    res.sweeps = sweep;
    if (cfg.track_objective)
      res.objective_trace.push_back(
          gaussian_objective(omega, stats, cfg.lambda, cfg.penalize_diagonal));

    double norm = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) norm += std::abs(omega(i, j));
    if (norm == 0.0 ? change == 0.0 : change / norm < cfg.rel_tol) {
      res.converged = true;
      break;
    }
  }

  res.omega = std::move(omega);
  res.kkt = kkt_residual(res.omega, stats, cfg.lambda, cfg.penalize_diagonal);
  return res;
}

double kkt_residual(const MatrixXd& omega, const GaussianStats& stats,
                    double lambda, bool penalize_diagonal) {
  const MatrixXd& sig = stats.sigma_hat;
  const int d = static_cast<int>(omega.rows());
  const MatrixXd so = sig * omega;
  // G = (1/2)(Omega sigma + sigma Omega) - I; stationarity is entrywise
  // -G_ij in lambda_ij * subgradient(|Omega_ij|).
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const double g = 0.5 * (so(i, j) + so(j, i)) - (i == j ? 1.0 : 0.0);
      const double lam = (i == j && !penalize_diagonal) ? 0.0 : lambda;
      double r;
      if (omega(i, j) == 0.0)
        r = std::max(std::abs(g) - lam, 0.0);
      else
        r = std::abs(g + lam * (omega(i, j) > 0.0 ? 1.0 : -1.0));
      worst = std::max(worst, r);
    }
  }
  return worst;
}

double gaussian_objective(const MatrixXd& omega, const GaussianStats& stats,
                          double lambda, bool penalize_diagonal) {
  double l1 = omega.cwiseAbs().sum();
  if (!penalize_diagonal) l1 -= omega.diagonal().cwiseAbs().sum();
  return hyvarinen_score(omega, stats) + lambda * l1;
}

FitResult to_fit_result(const CdResult& r) {
  FitResult out;
  out.theta = blocks_from_precision(r.omega);
  out.iterations = r.sweeps;
  out.converged = r.converged;
  out.kkt = r.kkt;
  out.edges = edge_set_of(out.theta);
  return out;
}

}  // namespace quasr
