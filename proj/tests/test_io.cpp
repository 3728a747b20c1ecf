#include "quasr/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

using namespace quasr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("quasr_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

BasisSpec legendre_basis(int m1, int m2) {
  BasisSpec b;
  b.kind = BasisSpec::Kind::LegendrePairwise;
  b.m1 = m1;
  b.m2 = m2;
  return b;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles survive the round trip through text") {
  std::mt19937_64 rng(111);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(-1e10, 1e10);
  for (int k = 0; k < 1000; ++k) {
    const double v = k % 2 ? normal(rng) : unif(rng);
    CHECK(parse_double(fmt_double(v)) == v);
  }
  CHECK(parse_double(fmt_double(0.1)) == 0.1);
  CHECK(parse_double(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(parse_double(fmt_double(5e-324)) == 5e-324);
  CHECK(parse_double("  2.5 ") == 2.5);
  CHECK_THROWS_AS(parse_double("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
}

TEST_CASE("csv matrices round trip exactly") {
  TempDir tmp;
  std::mt19937_64 rng(112);
  std::normal_distribution<double> normal;
  MatrixXd m = MatrixXd::NullaryExpr(
      17, 5, [&](Eigen::Index, Eigen::Index) { return normal(rng) * 1e3; });
  const std::string path = tmp.file("m.csv");
  write_csv_matrix(path, m);
  CHECK(read_csv_matrix(path) == m);
}

TEST_CASE("csv reader skips a single header line") {
  TempDir tmp;
  const std::string path = tmp.file("h.csv");
  write_text(path, "alpha,beta\n1,2\n3,4\n");
  const MatrixXd m = read_csv_matrix(path);
  REQUIRE(m.rows() == 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 4.0);

  // Windows line endings and spaces are tolerated.
  write_text(tmp.file("crlf.csv"), "1, 2\r\n3 ,4\r\n");
  const MatrixXd w = read_csv_matrix(tmp.file("crlf.csv"));
  CHECK(w(0, 1) == 2.0);
  CHECK(w(1, 0) == 3.0);
}

TEST_CASE("csv reader reports malformed input with its line number") {
  TempDir tmp;
  write_text(tmp.file("ragged.csv"), "1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(tmp.file("ragged.csv")),
                       doctest::Contains(":2:"), std::invalid_argument);

  write_text(tmp.file("bad.csv"), "1,2\n3,zap\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(tmp.file("bad.csv")),
                       doctest::Contains(":2:"), std::invalid_argument);

  write_text(tmp.file("empty.csv"), "");
  CHECK_THROWS_AS(read_csv_matrix(tmp.file("empty.csv")),
                  std::invalid_argument);
  CHECK_THROWS_AS(read_csv_matrix(tmp.file("missing.csv")),
                  std::invalid_argument);
  // A header with nothing under it is not a matrix.
  write_text(tmp.file("only_header.csv"), "a,b\n");
  CHECK_THROWS_AS(read_csv_matrix(tmp.file("only_header.csv")),
                  std::invalid_argument);
}

TEST_CASE("theta json round trips bit for bit") {
  std::mt19937_64 rng(113);
  std::normal_distribution<double> normal;
  const BasisSpec basis = legendre_basis(2, 3);
  ParamBlocks theta(4, basis);
  for (int i = 0; i < 4; ++i)
    for (int u = 0; u < basis.vertex_dim(); ++u)
      theta.vertex(i)[u] = normal(rng);
  VectorXd e(basis.edge_dim());
  for (int u = 0; u < e.size(); ++u) e[u] = normal(rng) * 1e-7;
  theta.set_edge(0, 2, e);
  theta.set_edge(1, 3, 2 * e);

  const json j = theta_to_json(theta, basis);
  BasisSpec back_basis;
  const ParamBlocks back = theta_from_json(j, &back_basis);
  CHECK(back.d() == 4);
  CHECK(back_basis.kind == basis.kind);
  CHECK(back_basis.m1 == basis.m1);
  CHECK(back_basis.m2 == basis.m2);
  for (int i = 0; i < 4; ++i) CHECK(back.vertex(i) == theta.vertex(i));
  CHECK(back.edge_blocks().size() == 2);
  CHECK(*back.edge_if(0, 2) == e);
  CHECK(back.edge_if(0, 1) == nullptr);

  json tampered = j;
  tampered["blocks"][0]["values"].push_back(1.0);
  CHECK_THROWS_AS(theta_from_json(tampered), std::invalid_argument);
}

TEST_CASE("edges csv lists nonzero blocks in order") {
  TempDir tmp;
  ParamBlocks theta(4, BasisSpec{});
  theta.edge(1, 3) = VectorXd::Constant(1, -2.0);
  theta.edge(0, 2) = VectorXd::Constant(1, 0.5);
  const std::string path = tmp.file("edges.csv");
  write_edges_csv(path, theta);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,j,group_norm");
  std::getline(in, line);
  CHECK(line == "0,2,0.5");
  std::getline(in, line);
  CHECK(line == "1,3,2");
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("manifest json carries the run description") {
  RunManifest m;
  m.command = "fit data.csv --lambda 0.5";
  m.config = {{"lambda", 0.5}};
  m.seed = 7;
  m.threads = 2;
  m.version = "0.1.0";
  m.started_at = "2024-05-01T10:00:00Z";
  m.stage_seconds["fit"] = 1.25;
  m.outputs = {"theta.json"};
  const json j = manifest_to_json(m);
  CHECK(j["command"] == "fit data.csv --lambda 0.5");
  CHECK(j["seed"] == 7);
  CHECK(j["threads"] == 2);
  CHECK(j["deterministic"] == false);
  CHECK(j["version"] == "0.1.0");
  CHECK(j["stage_seconds"]["fit"] == 1.25);
  CHECK(j["outputs"][0] == "theta.json");
  CHECK(j["config"]["lambda"] == 0.5);
}

TEST_CASE("experiment descriptors parse and reject unknown keys") {
  const json j = {
      {"graph",
       {{"kind", "er"}, {"d", 40}, {"p", 0.05}, {"weight_lo", 0.3},
        {"weight_hi", 0.4}, {"diagonal_slack", 1.5}}},
      {"n", 250},
      {"n_holdout", 125},
      {"reps", 7},
      {"basis", {{"kind", "legendre"}, {"m1", 3}, {"m2", 2}}},
      {"copula", true},
      {"path",
       {{"count", 11}, {"ratio", 0.02},
        {"truncations", json::array({json::array({1, 1}),
                                     json::array({3, 2})})}}},
      {"criterion", "hyvarinen"},
      {"solver", "admm"},
      {"rho", 1.5},
      {"tol", 1e-5},
      {"seed", 99},
      {"threads", 2},
  };
  const ExperimentConfig cfg = experiment_from_json(j);
  CHECK(cfg.graph.kind == GraphModelSpec::Kind::ErdosRenyi);
  CHECK(cfg.graph.d == 40);
  CHECK(cfg.graph.edge_prob == 0.05);
  CHECK(cfg.graph.weight_lo == 0.3);
  CHECK(cfg.graph.diagonal_slack == 1.5);
  CHECK(cfg.n == 250);
  CHECK(cfg.n_holdout == 125);
  CHECK(cfg.reps == 7);
  CHECK(cfg.basis.kind == BasisSpec::Kind::LegendrePairwise);
  CHECK(cfg.basis.m1 == 3);
  CHECK(cfg.copula);
  CHECK(cfg.path.count == 11);
  REQUIRE(cfg.path.truncations.size() == 2);
  CHECK(cfg.path.truncations[1] == std::pair<int, int>{3, 2});
  CHECK(cfg.criterion == Criterion::HyvarinenHoldout);
  CHECK(cfg.fit.solver == SolverChoice::Admm);
  CHECK(cfg.fit.admm.rho == 1.5);
  CHECK(cfg.fit.admm.rel_tol == 1e-5);
  CHECK(cfg.seed == 99);
  CHECK(cfg.threads == 2);

  const json echoed = experiment_to_json(cfg);
  CHECK(experiment_from_json(echoed).n == 250);

  json unknown = j;
  unknown["bogus"] = 1;
  CHECK_THROWS_WITH_AS(experiment_from_json(unknown),
                       doctest::Contains("bogus"), std::invalid_argument);

  json bad_kind = j;
  bad_kind["graph"]["kind"] = "lattice";
  CHECK_THROWS_AS(experiment_from_json(bad_kind), std::invalid_argument);

  json bad_crit = j;
  bad_crit["criterion"] = "aic";
  CHECK_THROWS_AS(experiment_from_json(bad_crit), std::invalid_argument);
}

TEST_CASE("defaults fill missing descriptor keys") {
  const ExperimentConfig cfg = experiment_from_json(json::object());
  CHECK(cfg.graph.kind == GraphModelSpec::Kind::Tree);
  CHECK(cfg.n == 100);
  CHECK(cfg.reps == 25);
  CHECK(cfg.basis.kind == BasisSpec::Kind::Gaussian);
  CHECK(cfg.criterion == Criterion::NllHoldout);
  CHECK(cfg.fit.solver == SolverChoice::Auto);
}

}  // TEST_SUITE
