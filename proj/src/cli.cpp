#include "quasr/cli.hpp"

#include "quasr/io.hpp"
#include "quasr/parallel.hpp"
#include "quasr/selection.hpp"
#include "quasr/simulate.hpp"
#include "quasr/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace quasr {

namespace {

namespace fs = std::filesystem;

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int env_threads_default() {
  if (const char* env = std::getenv("QUASR_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

std::string join_args(const std::string& cmd,
                      const std::vector<std::string>& args) {
  std::string s = "quasr " + cmd;
  for (const auto& a : args) s += " " + a;
  return s;
}

void write_json_file(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

int parse_or_exit(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back(app.get_name().c_str());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return -1;  // handled, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << app.get_name() << ": " << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}

struct FitArgs {
  std::string data_file;
  std::string basis = "gaussian";
  int m1 = 2, m2 = 2;
  double lambda = -1.0;
  bool path = false;
  int path_count = 30;
  double path_ratio = 0.01;
  std::string holdout_file;
  std::string solver = "auto";
  double rho = 1.0;
  double tol = -1.0;
  std::uint64_t seed = 0;
  int threads = env_threads_default();
  bool deterministic = false;
  std::string out_dir = ".";
};

json entry_json(const PathEntry& e) {
  json j;
  j["lambda"] = e.lambda;
  j["m1"] = e.m1;
  j["m2"] = e.m2;
  j["iterations"] = e.iterations;
  j["converged"] = e.converged;
  j["kkt"] = e.kkt;
  j["edge_count"] = e.edge_count;
  j["train_score"] = e.train_score;
  if (!std::isnan(e.holdout_score)) j["holdout_score"] = e.holdout_score;
  if (!std::isnan(e.holdout_nll)) j["holdout_nll"] = e.holdout_nll;
  j["warm_from"] = e.warm_from;
  return j;
}

}  // namespace

int cmd_fit(const std::vector<std::string>& args) {
  CLI::App app{"Fit a sparse pairwise graphical model", "fit"};
  FitArgs a;
  app.add_option("data", a.data_file, "Input CSV (n rows x d columns)")
      ->required();
  app.add_option("--basis", a.basis, "gaussian or legendre")
      ->check(CLI::IsMember({"gaussian", "legendre"}));
  app.add_option("--m1", a.m1, "Vertex polynomial degree (legendre)");
  app.add_option("--m2", a.m2, "Edge polynomial degree (legendre)");
  auto* lam_opt =
      app.add_option("--lambda", a.lambda, "Single penalty level");
  auto* path_opt =
      app.add_flag("--path", a.path, "Fit a descending lambda grid");
  lam_opt->excludes(path_opt);
  path_opt->excludes(lam_opt);
  app.add_option("--path-count", a.path_count, "Grid size for --path");
  app.add_option("--path-ratio", a.path_ratio,
                 "Smallest grid value as a fraction of lambda_start");
  app.add_option("--holdout", a.holdout_file, "Holdout CSV for scoring");
  app.add_option("--solver", a.solver, "cd, admm, or auto")
      ->check(CLI::IsMember({"cd", "admm", "auto"}));
  app.add_option("--rho", a.rho, "ADMM penalty parameter");
  app.add_option("--tol", a.tol, "Solver relative tolerance");
  app.add_option("--seed", a.seed, "Seed recorded in the manifest");
  app.add_option("--threads", a.threads, "Worker threads");
  app.add_flag("--deterministic", a.deterministic,
               "Force single-threaded execution");
  app.add_option("--out", a.out_dir, "Output directory");
  if (int rc = parse_or_exit(app, args)) return rc < 0 ? kExitOk : rc;

  try {
    if (!a.path && a.lambda < 0.0)
      throw std::invalid_argument("provide --lambda X or --path");
    if (a.deterministic) a.threads = 1;
    a.threads = resolve_threads(a.threads);

    BasisSpec basis;
    basis.kind = a.basis == "gaussian" ? BasisSpec::Kind::Gaussian
                                       : BasisSpec::Kind::LegendrePairwise;
    basis.m1 = a.m1;
    basis.m2 = a.m2;
    basis.validate();
    const bool gaussian = basis.kind == BasisSpec::Kind::Gaussian;

    SolverChoice solver = SolverChoice::Auto;
    if (a.solver == "cd") solver = SolverChoice::Cd;
    if (a.solver == "admm") solver = SolverChoice::Admm;
    if (solver == SolverChoice::Cd && !gaussian)
      throw std::invalid_argument("--solver cd requires --basis gaussian");

    RunManifest manifest;
    manifest.command = join_args("fit", args);
    manifest.seed = a.seed;
    manifest.threads = a.threads;
    manifest.deterministic = a.deterministic;
    manifest.version = kVersion;
    manifest.started_at = iso_now();

    const double t_read = now_seconds();
    Dataset data;
    data.values = read_csv_matrix(a.data_file);
    data.support = gaussian ? Support::RealLine : Support::UnitCube;

    Dataset holdout;
    const bool have_holdout = !a.holdout_file.empty();
    if (have_holdout) {
      holdout.values = read_csv_matrix(a.holdout_file);
      holdout.support = data.support;
      if (holdout.values.cols() != data.values.cols())
        throw std::invalid_argument("holdout column count differs from data");
    }
    manifest.stage_seconds["read"] = now_seconds() - t_read;

    FitPathOptions opts;
    opts.solver = solver;
    opts.threads = a.threads;
    opts.admm.rho = a.rho;
    opts.admm.threads = a.threads;
    if (a.tol > 0.0) {
      opts.admm.rel_tol = a.tol;
      opts.cd.rel_tol = a.tol;
    }

    PathSpec pspec;
    pspec.count = a.path_count;
    pspec.ratio = a.path_ratio;
    if (!a.path) pspec.lambdas = {a.lambda};

    const double t_fit = now_seconds();
    const PathResult path =
        fit_path(data, basis, pspec, have_holdout ? &holdout : nullptr, opts);
    manifest.stage_seconds["fit"] = now_seconds() - t_fit;

    int report_index = static_cast<int>(path.entries.size()) - 1;
    json selected_json;
    if (a.path && have_holdout) {
      const Selected sel = select_model(path, Criterion::HyvarinenHoldout);
      report_index = sel.index;
      selected_json = {{"index", sel.index},
                       {"lambda", sel.lambda},
                       {"m1", sel.m1},
                       {"m2", sel.m2},
                       {"holdout_score", sel.criterion_value}};
    }
    const PathEntry& chosen = path.entries[report_index];

    bool all_converged = true;
    for (const auto& e : path.entries) all_converged &= e.converged;

    fs::create_directories(a.out_dir);
    const std::string theta_path = (fs::path(a.out_dir) / "theta.json").string();
    const std::string edges_path = (fs::path(a.out_dir) / "edges.csv").string();
    const std::string diag_path =
        (fs::path(a.out_dir) / "diagnostics.json").string();
    const std::string manifest_path =
        (fs::path(a.out_dir) / "manifest.json").string();
    manifest.outputs = {"theta.json", "edges.csv", "diagnostics.json"};

    json theta_j = theta_to_json(chosen.theta, basis);
    theta_j["lambda"] = chosen.lambda;
    theta_j["manifest"] = manifest_to_json(manifest);
    write_json_file(theta_path, theta_j);
    write_edges_csv(edges_path, chosen.theta);

    json diag;
    diag["lambda_start"] = path.lambda_start_used;
    diag["converged"] = all_converged;
    json entries = json::array();
    for (const auto& e : path.entries) entries.push_back(entry_json(e));
    diag["entries"] = std::move(entries);
    if (!selected_json.is_null()) diag["selected"] = selected_json;
    diag["manifest"] = manifest_to_json(manifest);
    write_json_file(diag_path, diag);
    write_json_file(manifest_path, manifest_to_json(manifest));

    return all_converged ? kExitOk : kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "fit: " << e.what() << "\n";
    return kExitBadInput;
  }
}

int cmd_simulate(const std::vector<std::string>& args) {
  CLI::App app{"Sample a sparse Gaussian (or copula) graphical model",
               "simulate"};
  std::string graph = "tree";
  double p = 0.1;
  int d = 10;
  long n = 100;
  bool copula = false;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  app.add_option("--graph", graph, "tree or er")
      ->check(CLI::IsMember({"tree", "er"}));
  app.add_option("--p", p, "Erdos-Renyi edge probability");
  app.add_option("--d", d, "Number of variables");
  app.add_option("--n", n, "Number of samples");
  app.add_flag("--copula", copula, "Apply the Gaussian-copula transform");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out_dir, "Output directory");
  if (int rc = parse_or_exit(app, args)) return rc < 0 ? kExitOk : rc;

  try {
    GraphModelSpec spec;
    spec.kind = graph == "tree" ? GraphModelSpec::Kind::Tree
                                : GraphModelSpec::Kind::ErdosRenyi;
    spec.d = d;
    spec.edge_prob = p;

    RunManifest manifest;
    manifest.command = join_args("simulate", args);
    manifest.seed = seed;
    manifest.deterministic = true;
    manifest.version = kVersion;
    manifest.started_at = iso_now();

    const double t0 = now_seconds();
    const SimData sim = copula ? gen_copula_graph(spec, n, seed)
                               : gen_gaussian_graph(spec, n, seed);
    manifest.stage_seconds["generate"] = now_seconds() - t0;

    fs::create_directories(out_dir);
    write_csv_matrix((fs::path(out_dir) / "data.csv").string(),
                     sim.data.values);
    {
      std::ostringstream edges;
      for (const auto& [i, j] : sim.graph.edges)
        edges << i << ',' << j << '\n';
      write_text((fs::path(out_dir) / "truth_edges.csv").string(),
                 edges.str());
    }
    // Truth on the same scale as data.csv (the standardized variables).
    write_csv_matrix((fs::path(out_dir) / "precision.csv").string(),
                     sim.precision_std);
    manifest.outputs = {"data.csv", "truth_edges.csv", "precision.csv"};
    write_json_file((fs::path(out_dir) / "manifest.json").string(),
                    manifest_to_json(manifest));
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << "\n";
    return kExitBadInput;
  }
}

int cmd_experiment(const std::vector<std::string>& args) {
  CLI::App app{"Replicated structure-recovery experiment", "experiment"};
  std::string config_file;
  std::string out_dir = ".";
  int threads = 0;
  bool deterministic = false;
  app.add_option("--config", config_file, "Experiment descriptor JSON")
      ->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads (overrides descriptor)");
  app.add_flag("--deterministic", deterministic,
               "Force single-threaded execution");
  if (int rc = parse_or_exit(app, args)) return rc < 0 ? kExitOk : rc;

  try {
    std::ifstream in(config_file);
    if (!in) throw std::invalid_argument("cannot open " + config_file);
    json desc;
    try {
      in >> desc;
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(config_file + ": " + e.what());
    }
    ExperimentConfig cfg = experiment_from_json(desc);
    if (threads >= 1) cfg.threads = threads;
    if (const char* env = std::getenv("QUASR_THREADS");
        env && threads < 1 && !desc.contains("threads")) {
      const int v = std::atoi(env);
      if (v >= 1) cfg.threads = v;
    }
    if (deterministic) {
      cfg.threads = 1;
      cfg.fit.threads = 1;
      cfg.fit.admm.threads = 1;
    }

    RunManifest manifest;
    manifest.command = join_args("experiment", args);
    manifest.config = experiment_to_json(cfg);
    manifest.seed = cfg.seed;
    manifest.threads = cfg.threads;
    manifest.deterministic = deterministic;
    manifest.version = kVersion;
    manifest.started_at = iso_now();

    const double t0 = now_seconds();
    const MetricReport report = run_experiment(cfg);
    manifest.stage_seconds["experiment"] = now_seconds() - t0;

    for (const auto& r : report.reps)
      if (!r.ok)
        std::cerr << "experiment: replication " << r.rep << " failed: "
                  << r.error << "\n";

    fs::create_directories(out_dir);
    {
      std::ostringstream m;
      m << "rep,tp,tn,heldout_risk,selected_lambda,edge_count,min_eig\n";
      for (const auto& r : report.reps) {
        if (!r.ok) continue;
        m << r.rep << ',';
        if (r.metrics.has_tp) m << fmt_double(r.metrics.tp_rate);
        m << ',' << fmt_double(r.metrics.tn_rate) << ','
          << fmt_double(r.heldout_risk) << ','
          << fmt_double(r.selected_lambda) << ',' << r.edge_count << ','
          << fmt_double(r.min_eig) << '\n';
      }
      write_text((fs::path(out_dir) / "metrics.csv").string(), m.str());
    }
    {
      std::ostringstream roc;
      roc << "lambda,fpr,tpr\n";
      for (const auto& pt : report.roc_mean)
        roc << fmt_double(pt.lambda) << ',' << fmt_double(pt.fpr) << ','
            << fmt_double(pt.tpr) << '\n';
      write_text((fs::path(out_dir) / "roc.csv").string(), roc.str());
    }
    json summary;
    summary["reps"] = cfg.reps;
    summary["failures"] = report.failures;
    summary["tp_mean"] = report.tp_mean;
    summary["tp_sd"] = report.tp_sd;
    summary["tn_mean"] = report.tn_mean;
    summary["tn_sd"] = report.tn_sd;
    summary["risk_mean"] = report.risk_mean;
    summary["risk_sd"] = report.risk_sd;
    summary["total_seconds"] = report.total_seconds;
    summary["config"] = experiment_to_json(cfg);
    manifest.outputs = {"metrics.csv", "roc.csv", "summary.json"};
    summary["manifest"] = manifest_to_json(manifest);
    write_json_file((fs::path(out_dir) / "summary.json").string(), summary);
    write_json_file((fs::path(out_dir) / "manifest.json").string(),
                    manifest_to_json(manifest));
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "experiment: " << e.what() << "\n";
    return kExitBadInput;
  }
}

int run_cli(const std::vector<std::string>& args) {
  if (args.empty()) {
    std::cerr << "usage: quasr {fit, simulate, experiment} [options]\n"
              << "       quasr <command> --help for details\n";
    return kExitBadInput;
  }
  const std::string cmd = args[0];
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (cmd == "fit") return cmd_fit(rest);
  if (cmd == "simulate") return cmd_simulate(rest);
  if (cmd == "experiment") return cmd_experiment(rest);
  if (cmd == "--help" || cmd == "-h") {
    std::cout << "usage: quasr {fit, simulate, experiment} [options]\n";
    return kExitOk;
  }
  if (cmd == "--version") {
    std::cout << kVersion << "\n";
    return kExitOk;
  }
  std::cerr << "unknown command: " << cmd << "\n";
  return kExitBadInput;
}

}  // namespace quasr
