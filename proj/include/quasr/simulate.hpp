#pragma once

#include "quasr/selection.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace quasr {

// Stream splitting: splitmix64 of (master, index) so replication r gets an
// independent, reproducible seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct GraphModelSpec {
  enum class Kind { Tree, ErdosRenyi };
  Kind kind = Kind::Tree;
  int d = 10;
  double edge_prob = 0.1;  // ErdosRenyi only
  // Off-diagonal precision weights: uniform magnitude in [lo, hi], random
  // sign. Diagonal = row sum of |off-diagonals| + slack, so the matrix is
  // strictly diagonally dominant, hence PD.
  double weight_lo = 0.2;
  double weight_hi = 0.5;
  double diagonal_slack = 1.0;
};

// Uniform labeled tree via a random Pruefer sequence.
Graph random_tree(int d, std::mt19937_64& rng);
Graph erdos_renyi(int d, double p, std::mt19937_64& rng);

struct SimData {
  Dataset data;            // standardized draws (RealLine), or copula output
  Graph graph;
  MatrixXd precision;      // generating precision on the original scale
  MatrixXd precision_std;  // precision of the population-variance-scaled
                           // variables: D^{1/2} Sigma D^{1/2} inverted
};

// Build a PD precision supported exactly on a sampled graph, draw n normal
// vectors with that precision, standardize. Deterministic given seed.
SimData gen_gaussian_graph(const GraphModelSpec& spec, long n,
                           std::uint64_t seed);

// Elementwise y = sign(x - 1/2) |x - 1/2|^{0.6} / 5 + 1/2, clamped to
// [eps, 1-eps] with eps = 1e-9; output support becomes UnitCube. The input
// is expected to be Gaussian data prepared with mean 0.5 and sd 1/8.
Dataset copula_transform(const Dataset& data);

// Gaussian pipeline, then rescale to mean 0.5 / sd 1/8 and apply the copula
// map. The returned graph/precisions are those of the Gaussian source.
SimData gen_copula_graph(const GraphModelSpec& spec, long n,
                         std::uint64_t seed);

struct EdgeMetrics {
  // tp_rate is absent (has_tp false) when the truth has no edges.
  bool has_tp = false;
  double tp_rate = 0.0;
  double tn_rate = 1.0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

EdgeMetrics edge_metrics(const Graph& estimated, const Graph& truth);

struct RocPoint {
  double lambda = 0.0;
  double fpr = 0.0;  // 1 - TN rate
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // one per path entry, lambda descending
  int selected = -1;             // index of the select_model choice
};

RocCurve roc_curve(const PathResult& path, const Graph& truth,
                   int selected_index = -1);

struct ExperimentConfig {
  GraphModelSpec graph;
  long n = 100;
  long n_holdout = 100;
  int reps = 25;
  BasisSpec basis;
  bool copula = false;
  PathSpec path;
  Criterion criterion = Criterion::NllHoldout;
  FitPathOptions fit;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct RepReport {
  int rep = 0;
  bool ok = false;
  std::string error;
  EdgeMetrics metrics;
  double heldout_risk = 0.0;
  double selected_lambda = 0.0;
  int selected_m1 = 1, selected_m2 = 1;
  int edge_count = 0;
  // Min eigenvalue of the selected precision (Gaussian basis only, else NaN).
  double min_eig = 0.0;
  RocCurve roc;
  double fit_seconds = 0.0;
};

struct MetricReport {
  std::vector<RepReport> reps;
  int failures = 0;
  double tp_mean = 0.0, tp_sd = 0.0;
  double tn_mean = 0.0, tn_sd = 0.0;
  double risk_mean = 0.0, risk_sd = 0.0;
  // Averaged over replications by grid index.
  std::vector<RocPoint> roc_mean;
  double total_seconds = 0.0;
};

// Independent replications with seeds derive_seed(cfg.seed, rep); aggregates
// mean/sd of TP, TN, and held-out risk over successful replications. Failed
// replications are recorded with their error and excluded from aggregates.
// Replications run in parallel (cfg.threads) into fixed slots, so results
// are identical to the serial order.
MetricReport run_experiment(const ExperimentConfig& cfg);

}  // namespace quasr
