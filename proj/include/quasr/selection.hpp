#pragma once

#include "quasr/admm.hpp"
#include "quasr/gaussian_cd.hpp"

#include <optional>
#include <vector>

namespace quasr {

// Smallest lambda at which the all-zero estimate satisfies the group KKT
// conditions: max over penalized groups of ||pooled kvec_g||_2 / weight_g
// (weight 1 for vertex groups, 2 for edge groups). For the Gaussian family
// this equals 1 exactly.
double lambda_start(const std::vector<ColumnStats>& stats,
                    const BasisSpec& basis, bool penalize_vertex = true);
double lambda_start(const GaussianStats& stats);

struct PathSpec {
  // Explicit grid (descending). Empty means log-spaced: `count` points from
  // lambda_start down to ratio * lambda_start.
  std::vector<double> lambdas;
  int count = 30;
  double ratio = 0.01;
  // Optional ascending truncation ladder (m1, m2); empty uses the basis's
  // own degrees. Componentwise non-decreasing, strictly growing total size.
  std::vector<std::pair<int, int>> truncations;
};

enum class SolverChoice { Auto, Cd, Admm };
enum class Criterion { HyvarinenHoldout, NllHoldout };

struct FitPathOptions {
  SolverChoice solver = SolverChoice::Auto;
  AdmmConfig admm;  // lambda field ignored
  CdConfig cd;      // lambda field ignored
  int threads = 1;
};

struct PathEntry {
  double lambda = 0.0;
  int m1 = 1, m2 = 1;
  ParamBlocks theta;
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;
  int edge_count = 0;
  double train_score = 0.0;
  // NaN when no holdout / not applicable (NLL for non-Gaussian bases).
  double holdout_score = 0.0;
  double holdout_nll = 0.0;
  // Index of the entry whose solution seeded this fit; -1 for a cold start.
  int warm_from = -1;
  double seconds = 0.0;
};

struct PathResult {
  std::vector<PathEntry> entries;
  std::vector<double> lambdas;  // resolved grid, descending
  double lambda_start_used = 0.0;
  BasisSpec basis;
  int d = 0;
};

// Fit every (lambda, truncation) cell. Lambda descends with warm starts from
// the previous solution; truncation ascends with zero-padded warm starts and
// Schur-complement reuse of the cached column factors. Gaussian + Cd runs
// coordinate descent on the precision matrix; everything else runs the group
// ADMM. holdout may be null (holdout scores come back NaN).
PathResult fit_path(const Dataset& train, const BasisSpec& basis,
                    const PathSpec& spec, const Dataset* holdout,
                    const FitPathOptions& opts = {});

struct Selected {
  int index = -1;
  double lambda = 0.0;
  int m1 = 1, m2 = 1;
  double criterion_value = 0.0;
};

// Argmin of the requested holdout criterion over path entries; ties resolve
// to the larger lambda (the sparser model). Entries with NaN criterion are
// skipped; NllHoldout requires the Gaussian basis. Throws
// std::invalid_argument when the path has no scored entries.
Selected select_model(const PathResult& path, Criterion crit);

}  // namespace quasr
