#include "quasr/selection.hpp"

#include "quasr/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace quasr {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double lambda_start(const std::vector<ColumnStats>& stats,
                    const BasisSpec& basis, bool penalize_vertex) {
  const int d = static_cast<int>(stats.size());
  if (d < 1) throw std::invalid_argument("lambda_start: no columns");
  const ColumnLayout layout(d, basis);
  const int vd = layout.vertex_dim;
  const int ed = layout.edge_dim;
  double worst = 0.0;
  if (penalize_vertex)
    for (int i = 0; i < d; ++i)
      worst = std::max(worst, stats[i].kvec.head(vd).norm());
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      // At theta = 0 the pooled group gradient is the pooled linear term;
      // edge groups carry weight 2 (one lambda per column copy).
      const VectorXd g = stats[i].kvec.segment(layout.edge_offset(i, j), ed) +
                         stats[j].kvec.segment(layout.edge_offset(j, i), ed);
      worst = std::max(worst, 0.5 * g.norm());
    }
  return worst;
}

double lambda_start(const GaussianStats& stats) {
  BasisSpec basis;  // Gaussian
  return lambda_start(gaussian_column_stats(stats), basis, true);
}

namespace {

std::vector<double> resolve_grid(const PathSpec& spec, double lam_start) {
  if (!spec.lambdas.empty()) {
    for (size_t k = 1; k < spec.lambdas.size(); ++k)
      if (!(spec.lambdas[k] < spec.lambdas[k - 1]))
        throw std::invalid_argument("fit_path: lambdas must descend");
    if (spec.lambdas.back() < 0.0)
      throw std::invalid_argument("fit_path: negative lambda");
    return spec.lambdas;
  }
  if (spec.count < 1) throw std::invalid_argument("fit_path: empty grid");
  if (!(spec.ratio > 0.0 && spec.ratio <= 1.0))
    throw std::invalid_argument("fit_path: ratio must be in (0,1]");
  std::vector<double> grid(spec.count);
  if (spec.count == 1) {
    grid[0] = lam_start;
    return grid;
  }
  for (int k = 0; k < spec.count; ++k)
    grid[k] = lam_start *
              std::pow(spec.ratio, double(k) / double(spec.count - 1));
  return grid;
}

std::vector<std::pair<int, int>> resolve_truncations(const PathSpec& spec,
                                                     const BasisSpec& basis) {
  if (spec.truncations.empty()) return {{basis.m1, basis.m2}};
  if (basis.kind == BasisSpec::Kind::Gaussian)
    throw std::invalid_argument(
        "fit_path: truncation ladder needs the Legendre basis");
  auto prev = spec.truncations.front();
  for (size_t l = 1; l < spec.truncations.size(); ++l) {
    const auto cur = spec.truncations[l];
    if (cur.first < prev.first || cur.second < prev.second ||
        (cur.first == prev.first && cur.second == prev.second))
      throw std::invalid_argument("fit_path: truncations must ascend");
    prev = cur;
  }
  return spec.truncations;
}

// Positions of the level-`old` column entries inside the level-`new` layout.
// Old entries keep their block and within-block degree indices; the new
// layout interleaves the added degrees, so this is a permutation selection.
std::vector<int> old_positions(int i, const ColumnLayout& lo, int m2_old,
                               const ColumnLayout& ln, int m2_new) {
  std::vector<int> pos;
  pos.reserve(lo.length());
  for (int u = 0; u < lo.vertex_dim; ++u) pos.push_back(u);
  for (int j = 0; j < lo.d; ++j) {
    if (j == i) continue;
    const int off_new = ln.edge_offset(i, j);
    for (int k = 1; k <= m2_old; ++k)
      for (int l = 1; l <= m2_old; ++l)
        pos.push_back(off_new + (k - 1) * m2_new + (l - 1));
  }
  return pos;
}

// Zero-padded copy of a column vector from the old layout into the new one.
VectorXd pad_column(const VectorXd& v, const std::vector<int>& old_pos,
                    int new_len) {
  VectorXd out = VectorXd::Zero(new_len);
  for (size_t u = 0; u < old_pos.size(); ++u) out(old_pos[u]) = v(u);
  return out;
}

AdmmState pad_state(const AdmmState& st, const BasisSpec& old_basis,
                    const BasisSpec& new_basis) {
  const int d = st.z.d();
  const ColumnLayout lo(d, old_basis);
  const ColumnLayout ln(d, new_basis);
  AdmmState out;
  out.theta.resize(d);
  out.y.resize(d);
  out.z = ParamBlocks(d, new_basis);
  for (int i = 0; i < d; ++i) {
    const auto pos = old_positions(i, lo, old_basis.m2, ln, new_basis.m2);
    out.theta[i] = pad_column(st.theta[i], pos, ln.length());
    out.y[i] = pad_column(st.y[i], pos, ln.length());
  }
  for (int i = 0; i < d; ++i)
    out.z.vertex(i).head(old_basis.vertex_dim()) = st.z.vertex(i);
  for (const auto& [key, block] : st.z.edge_blocks()) {
    VectorXd nb = VectorXd::Zero(new_basis.edge_dim());
    for (int k = 1; k <= old_basis.m2; ++k)
      for (int l = 1; l <= old_basis.m2; ++l)
        nb((k - 1) * new_basis.m2 + (l - 1)) =
            block((k - 1) * old_basis.m2 + (l - 1));
    out.z.set_edge(key.first, key.second, std::move(nb));
  }
  return out;
}

// Augmented solve operators for the enlarged statistics, reusing the cached
// level factors through the Schur complement. The augmented operator works
// in [old entries, new entries] order, so it is wrapped with the position
// maps to expose the natural new layout.
std::vector<ColumnSolve> augment_level(
    const std::vector<ColumnSolve>& old_ops,
    const std::vector<ColumnStats>& new_stats, const BasisSpec& old_basis,
    const BasisSpec& new_basis, double rho, int threads) {
  const int d = static_cast<int>(new_stats.size());
  const ColumnLayout lo(d, old_basis);
  const ColumnLayout ln(d, new_basis);
  std::vector<ColumnSolve> ops(d);
  parallel_for(d, threads, [&](int i) {
    const auto old_pos = old_positions(i, lo, old_basis.m2, ln, new_basis.m2);
    std::vector<char> is_old(ln.length(), 0);
    for (int pv : old_pos) is_old[pv] = 1;
    std::vector<int> new_pos;
    for (int u = 0; u < ln.length(); ++u)
      if (!is_old[u]) new_pos.push_back(u);

    const int p = static_cast<int>(old_pos.size());
    const int q = static_cast<int>(new_pos.size());
    const MatrixXd& g = new_stats[i].gamma;
    MatrixXd b(p, q), c(q, q);
    for (int a = 0; a < p; ++a)
      for (int k = 0; k < q; ++k) b(a, k) = g(old_pos[a], new_pos[k]);
    for (int a = 0; a < q; ++a)
      for (int k = 0; k < q; ++k) c(a, k) = g(new_pos[a], new_pos[k]);

    const ColumnSolve block_op = augment_factor(old_ops[i], b, c, rho);
    ColumnSolve wrapped;
    wrapped.dim = ln.length();
    wrapped.apply = [block_op, old_pos, new_pos](const VectorXd& v) {
      VectorXd perm(v.size());
      const int np = static_cast<int>(old_pos.size());
      for (int u = 0; u < np; ++u) perm(u) = v(old_pos[u]);
      for (size_t u = 0; u < new_pos.size(); ++u)
        perm(np + u) = v(new_pos[u]);
      const VectorXd sol = block_op.apply(perm);
      VectorXd out(v.size());
      for (int u = 0; u < np; ++u) out(old_pos[u]) = sol(u);
      for (size_t u = 0; u < new_pos.size(); ++u)
        out(new_pos[u]) = sol(np + u);
      return out;
    };
    ops[i] = std::move(wrapped);
  });
  return ops;
}

}  // namespace

PathResult fit_path(const Dataset& train, const BasisSpec& basis,
                    const PathSpec& spec, const Dataset* holdout,
                    const FitPathOptions& opts) {
  basis.validate();
  if (holdout && holdout->d() != train.d())
    throw std::invalid_argument("fit_path: holdout dimension mismatch");

  const auto truncs = resolve_truncations(spec, basis);
  const bool gaussian = basis.kind == BasisSpec::Kind::Gaussian;

  SolverChoice solver = opts.solver;
  if (solver == SolverChoice::Auto)
    solver = gaussian ? SolverChoice::Cd : SolverChoice::Admm;
  if (solver == SolverChoice::Cd && !gaussian)
    throw std::invalid_argument(
        "fit_path: coordinate descent requires the Gaussian basis");

  // Statistics per truncation level.
  StatsOptions sopts;
  sopts.threads = opts.threads;
  std::vector<BasisSpec> level_basis;
  std::vector<std::vector<ColumnStats>> level_stats;
  for (const auto& [m1, m2] : truncs) {
    BasisSpec b = basis;
    b.m1 = m1;
    b.m2 = m2;
    level_basis.push_back(b);
    level_stats.push_back(column_stats(train, b, sopts));
  }

  double lam_start = 0.0;
  for (size_t l = 0; l < truncs.size(); ++l)
    lam_start = std::max(
        lam_start, lambda_start(level_stats[l], level_basis[l],
                                opts.admm.penalize_vertex));
  const std::vector<double> grid = resolve_grid(spec, lam_start);

  // Holdout statistics per level, built once.
  std::vector<std::vector<ColumnStats>> holdout_stats;
  GaussianStats holdout_gauss;
  if (holdout) {
    for (const auto& b : level_basis)
      holdout_stats.push_back(column_stats(*holdout, b, sopts));
    if (gaussian) holdout_gauss = gaussian_stats(*holdout);
  }

  PathResult out;
  out.lambdas = grid;
  out.lambda_start_used = lam_start;
  out.basis = basis;
  out.d = train.d();

  GaussianStats train_gauss;
  if (gaussian) train_gauss = gaussian_stats(train);

  auto push_entry = [&](size_t level, double lambda, ParamBlocks theta,
                        int iterations, bool converged, double kkt,
                        int warm_from, double seconds) {
    PathEntry e;
    e.lambda = lambda;
    e.m1 = level_basis[level].m1;
    e.m2 = level_basis[level].m2;
    e.iterations = iterations;
    e.converged = converged;
    e.kkt = kkt;
    e.edge_count = edge_set_of(theta).edge_count();
    e.train_score = hyvarinen_score(theta, level_stats[level]);
    e.holdout_score =
        holdout ? hyvarinen_score(theta, holdout_stats[level]) : kNaN;
    e.holdout_nll = (holdout && gaussian)
                        ? gaussian_nll(precision_from_blocks(theta),
                                       holdout_gauss.sigma_hat)
                        : kNaN;
    e.warm_from = warm_from;
    e.seconds = seconds;
    e.theta = std::move(theta);
    out.entries.push_back(std::move(e));
  };

  if (solver == SolverChoice::Cd) {
    CdConfig cfg = opts.cd;
    MatrixXd omega = MatrixXd::Identity(train.d(), train.d());
    int warm_from = -1;
    for (double lambda : grid) {
      cfg.lambda = lambda;
      const double t0 = now_seconds();
      CdResult r = cd_fit(train_gauss, cfg, &omega);
      const double dt = now_seconds() - t0;
      omega = r.omega;
      push_entry(0, lambda, blocks_from_precision(r.omega), r.sweeps,
                 r.converged, r.kkt, warm_from, dt);
      warm_from = static_cast<int>(out.entries.size()) - 1;
    }
    return out;
  }

  // Group ADMM over the (truncation, lambda) grid: lambda descends within a
  // level warm-started from the previous solution; the first fit of level
  // l > 0 warm-starts from the first-lambda state of level l - 1, zero
  // padded into the enlarged layout.
  AdmmConfig cfg = opts.admm;
  cfg.threads = opts.threads;
  std::vector<ColumnSolve> ops;
  AdmmState level_head_state;
  int level_head_index = -1;
  for (size_t level = 0; level < truncs.size(); ++level) {
    const int dcols = train.d();
    if (level == 0) {
      ops.resize(dcols);
      parallel_for(dcols, opts.threads, [&](int i) {
        ops[i] = as_solve(build_column_factor(level_stats[level][i], cfg.rho));
      });
    } else {
      ops = augment_level(ops, level_stats[level], level_basis[level - 1],
                          level_basis[level], cfg.rho, opts.threads);
    }

    AdmmState state;
    bool have_state = false;
    int warm_from = -1;
    if (level > 0) {
      state = pad_state(level_head_state, level_basis[level - 1],
                        level_basis[level]);
      have_state = true;
      warm_from = level_head_index;
    }

    for (size_t k = 0; k < grid.size(); ++k) {
      cfg.lambda = grid[k];
      const double t0 = now_seconds();
      AdmmInfo info;
      FitResult r = admm_fit(level_stats[level], level_basis[level], cfg,
                             have_state ? &state : nullptr, &ops, &state,
                             &info);
      const double dt = now_seconds() - t0;
      have_state = true;
      push_entry(level, grid[k], std::move(r.theta), r.iterations, r.converged,
                 r.kkt, warm_from, dt);
      warm_from = static_cast<int>(out.entries.size()) - 1;
      if (k == 0) {
        level_head_state = state;
        level_head_index = warm_from;
      }
    }
  }
  return out;
}

Selected select_model(const PathResult& path, Criterion crit) {
  if (crit == Criterion::NllHoldout &&
      path.basis.kind != BasisSpec::Kind::Gaussian)
    throw std::invalid_argument(
        "select_model: NLL selection requires the Gaussian basis");
  Selected best;
  double best_value = std::numeric_limits<double>::infinity();
  bool any = false;
  for (size_t k = 0; k < path.entries.size(); ++k) {
    const PathEntry& e = path.entries[k];
    const double v = crit == Criterion::HyvarinenHoldout ? e.holdout_score
                                                         : e.holdout_nll;
    if (std::isnan(v)) continue;
    any = true;
    // Strict improvement keeps the earlier (larger lambda) entry on ties.
    if (v < best_value) {
      best_value = v;
      best.index = static_cast<int>(k);
    }
  }
  if (!any)
    throw std::invalid_argument("select_model: no scored path entries");
  if (best.index < 0) best.index = 0;  // every score +inf: sparsest model
  const PathEntry& e = path.entries[best.index];
  best.lambda = e.lambda;
  best.m1 = e.m1;
  best.m2 = e.m2;
  best.criterion_value = crit == Criterion::HyvarinenHoldout ? e.holdout_score
                                                             : e.holdout_nll;
  return best;
}

}  // namespace quasr
