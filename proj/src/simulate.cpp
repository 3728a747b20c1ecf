#include "quasr/simulate.hpp"

#include "quasr/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace quasr {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 of the (master, index) pair.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

Graph random_tree(int d, std::mt19937_64& rng) {
  if (d < 1) throw std::invalid_argument("random_tree: d < 1");
  Graph g(d);
  if (d == 1) return g;
  if (d == 2) {
    g.add_edge(0, 1);
    return g;
  }
  // Pruefer decode: uniform over labeled trees.
  std::uniform_int_distribution<int> unif(0, d - 1);
  std::vector<int> seq(d - 2);
  for (int& s : seq) s = unif(rng);
  std::vector<int> degree(d, 1);
  for (int s : seq) ++degree[s];
  std::set<int> leaves;
  for (int v = 0; v < d; ++v)
    if (degree[v] == 1) leaves.insert(v);
  for (int s : seq) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    g.add_edge(leaf, s);
    if (--degree[s] == 1) leaves.insert(s);
  }
  const int a = *leaves.begin();
  const int b = *std::next(leaves.begin());
  g.add_edge(a, b);
  return g;
}

Graph erdos_renyi(int d, double p, std::mt19937_64& rng) {
  if (d < 1) throw std::invalid_argument("erdos_renyi: d < 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("erdos_renyi: p outside [0,1]");
  Graph g(d);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (unif(rng) < p) g.add_edge(i, j);
  return g;
}

namespace {

MatrixXd precision_on_graph(const Graph& g, const GraphModelSpec& spec,
                            std::mt19937_64& rng) {
  const int d = g.d;
  MatrixXd omega = MatrixXd::Zero(d, d);
  std::uniform_real_distribution<double> mag(spec.weight_lo, spec.weight_hi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& [i, j] : g.edges) {
    const double w = mag(rng) * (coin(rng) < 0.5 ? -1.0 : 1.0);
    omega(i, j) = w;
    omega(j, i) = w;
  }
  double slack = spec.diagonal_slack;
  for (int attempt = 0; attempt < 10; ++attempt) {
    for (int i = 0; i < d; ++i) {
      double row = 0.0;
      for (int j = 0; j < d; ++j)
        if (j != i) row += std::abs(omega(i, j));
      omega(i, i) = row + slack;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(omega);
    if (es.eigenvalues().minCoeff() > 1e-6) return omega;
    slack += 1.0;  // strict diagonal dominance makes this unreachable
  }
  throw std::runtime_error("precision_on_graph: positive definite repair failed");
}

}  // namespace

SimData gen_gaussian_graph(const GraphModelSpec& spec, long n,
                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_gaussian_graph: n < 1");
  if (spec.d < 1) throw std::invalid_argument("gen_gaussian_graph: d < 1");
  if (!(spec.weight_lo > 0.0 && spec.weight_hi >= spec.weight_lo))
    throw std::invalid_argument("gen_gaussian_graph: bad weight range");
  std::mt19937_64 rng(seed);

  SimData out;
  out.graph = spec.kind == GraphModelSpec::Kind::Tree
                  ? random_tree(spec.d, rng)
                  : erdos_renyi(spec.d, spec.edge_prob, rng);
  out.precision = precision_on_graph(out.graph, spec, rng);

  const int d = spec.d;
  const Eigen::LLT<MatrixXd> llt(out.precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gen_gaussian_graph: Cholesky failed");

  // x = L^{-T} z has covariance (L L')^{-1} = Omega^{-1}.
  MatrixXd z(n, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long r = 0; r < n; ++r)
    for (int j = 0; j < d; ++j) z(r, j) = normal(rng);
  const MatrixXd x =
      llt.matrixU().solve(z.transpose()).transpose();

  Dataset raw;
  raw.values = x;
  raw.support = Support::RealLine;
  out.data = standardize(raw);

  // Precision of the population-variance-scaled variables: with
  // D = diag(Sigma), (D^{-1/2} Sigma D^{-1/2})^{-1} = D^{1/2} Omega D^{1/2};
  // exact zeros stay exact.
  const MatrixXd sigma = llt.solve(MatrixXd::Identity(d, d));
  const VectorXd dsqrt = sigma.diagonal().array().sqrt();
  out.precision_std = dsqrt.asDiagonal() * out.precision * dsqrt.asDiagonal();
  return out;
}

Dataset copula_transform(const Dataset& data) {
  if (data.support == Support::UnitCube)
    throw std::invalid_argument("copula_transform: input already on [0,1]^d");
  Dataset out;
  out.values = data.values.unaryExpr([](double x) {
    constexpr double eps = 1e-9;
    const double t = x - 0.5;
    const double y = std::copysign(std::pow(std::abs(t), 0.6) / 5.0, t) + 0.5;
    return std::clamp(y, eps, 1.0 - eps);
  });
  out.support = Support::UnitCube;
  out.standardized = false;
  return out;
}

SimData gen_copula_graph(const GraphModelSpec& spec, long n,
                         std::uint64_t seed) {
  SimData out = gen_gaussian_graph(spec, n, seed);
  Dataset shifted;
  // Standardized draws rescaled to the mean-0.5, sd-1/8 convention the
  // copula map expects.
  shifted.values = out.data.values / 8.0;
  shifted.values.array() += 0.5;
  shifted.support = Support::RealLine;
  out.data = copula_transform(shifted);
  return out;
}

EdgeMetrics edge_metrics(const Graph& estimated, const Graph& truth) {
  if (estimated.d != truth.d)
    throw std::invalid_argument("edge_metrics: dimension mismatch");
  EdgeMetrics m;
  const int d = truth.d;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const bool in_truth = truth.has_edge(i, j);
      const bool in_est = estimated.has_edge(i, j);
      if (in_truth && in_est) ++m.tp;
      if (in_truth && !in_est) ++m.fn;
      if (!in_truth && in_est) ++m.fp;
      if (!in_truth && !in_est) ++m.tn;
    }
  m.has_tp = truth.edge_count() > 0;
  if (m.has_tp) m.tp_rate = double(m.tp) / double(m.tp + m.fn);
  const int negatives = m.tn + m.fp;
  m.tn_rate = negatives > 0 ? double(m.tn) / double(negatives) : 1.0;
  return m;
}

RocCurve roc_curve(const PathResult& path, const Graph& truth,
                   int selected_index) {
  if (path.entries.empty())
    throw std::invalid_argument("roc_curve: empty path");
  RocCurve out;
  out.selected = selected_index;
  out.points.reserve(path.entries.size());
  for (const auto& e : path.entries) {
    const EdgeMetrics m = edge_metrics(edge_set_of(e.theta), truth);
    RocPoint pt;
    pt.lambda = e.lambda;
    pt.fpr = 1.0 - m.tn_rate;
    pt.tpr = m.has_tp ? m.tp_rate : 0.0;
    out.points.push_back(pt);
  }
  return out;
}

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / double(v.size() - 1));
}

}  // namespace

MetricReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("run_experiment: reps < 1");
  if (cfg.n < 1 || cfg.n_holdout < 1)
    throw std::invalid_argument("run_experiment: need train and holdout rows");
  const double t0 = now_seconds();

  MetricReport report;
  report.reps.resize(cfg.reps);

  parallel_for(cfg.reps, cfg.threads, [&](int rep) {
    RepReport r;
    r.rep = rep;
    try {
      const std::uint64_t seed = derive_seed(cfg.seed, rep);
      const SimData sim =
          cfg.copula ? gen_copula_graph(cfg.graph, cfg.n + cfg.n_holdout, seed)
                     : gen_gaussian_graph(cfg.graph, cfg.n + cfg.n_holdout,
                                          seed);
      Dataset train;
      train.values = sim.data.values.topRows(cfg.n);
      train.support = sim.data.support;
      train.standardized = sim.data.standardized;
      Dataset holdout;
      holdout.values = sim.data.values.bottomRows(cfg.n_holdout);
      holdout.support = sim.data.support;
      holdout.standardized = sim.data.standardized;

      const double f0 = now_seconds();
      const PathResult path =
          fit_path(train, cfg.basis, cfg.path, &holdout, cfg.fit);
      r.fit_seconds = now_seconds() - f0;

      const Selected sel = select_model(path, cfg.criterion);
      const PathEntry& e = path.entries[sel.index];
      r.metrics = edge_metrics(edge_set_of(e.theta), sim.graph);
      r.heldout_risk = sel.criterion_value;
      r.selected_lambda = sel.lambda;
      r.selected_m1 = sel.m1;
      r.selected_m2 = sel.m2;
      r.edge_count = e.edge_count;
      if (cfg.basis.kind == BasisSpec::Kind::Gaussian) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            precision_from_blocks(e.theta));
        r.min_eig = es.eigenvalues().minCoeff();
      } else {
        r.min_eig = std::numeric_limits<double>::quiet_NaN();
      }
      r.roc = roc_curve(path, sim.graph, sel.index);
      r.ok = true;
    } catch (const std::exception& ex) {
      r.ok = false;
      r.error = ex.what();
    }
    report.reps[rep] = std::move(r);
  });

  std::vector<double> tps, tns, risks;
  for (const auto& r : report.reps) {
    if (!r.ok) {
      ++report.failures;
      continue;
    }
    if (r.metrics.has_tp) tps.push_back(r.metrics.tp_rate);
    tns.push_back(r.metrics.tn_rate);
    risks.push_back(r.heldout_risk);
  }
  mean_sd(tps, report.tp_mean, report.tp_sd);
  mean_sd(tns, report.tn_mean, report.tn_sd);
  mean_sd(risks, report.risk_mean, report.risk_sd);

  // ROC averaged by grid index over successful replications.
  size_t npoints = 0;
  for (const auto& r : report.reps)
    if (r.ok) npoints = std::max(npoints, r.roc.points.size());
  for (size_t k = 0; k < npoints; ++k) {
    RocPoint avg;
    int count = 0;
    for (const auto& r : report.reps) {
      if (!r.ok || k >= r.roc.points.size()) continue;
      avg.lambda += r.roc.points[k].lambda;
      avg.fpr += r.roc.points[k].fpr;
      avg.tpr += r.roc.points[k].tpr;
      ++count;
    }
    if (count > 0) {
      avg.lambda /= count;
      avg.fpr /= count;
      avg.tpr /= count;
    }
    report.roc_mean.push_back(avg);
  }

  report.total_seconds = now_seconds() - t0;
  return report;
}

}  // namespace quasr
