#include "quasr/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "quasr/io.hpp"

using namespace quasr;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::stringstream captured_out, captured_err;
  auto* old_out = std::cout.rdbuf(captured_out.rdbuf());
  auto* old_err = std::cerr.rdbuf(captured_err.rdbuf());
  CliRun r;
  r.code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = captured_out.str();
  r.err = captured_err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("quasr_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version and help exit cleanly") {
  const CliRun v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"fit", "--help"}).code == 0);
  CHECK(run({}).code == kExitBadInput);
  CHECK(run({"frobnicate"}).code == kExitBadInput);
}

TEST_CASE("simulate writes the advertised artifacts") {
  TempDir tmp;
  const CliRun r = run({"simulate", "--graph", "tree", "--d", "10", "--n",
                        "50", "--seed", "5", "--out", tmp.sub("sim")});
  CHECK(r.code == 0);
  const std::string edges = slurp(tmp.sub("sim") + "/truth_edges.csv");
  CHECK(count_lines(edges) == 9);
  const std::string data = slurp(tmp.sub("sim") + "/data.csv");
  CHECK(count_lines(data) == 50);
  CHECK(fs::exists(tmp.sub("sim") + "/precision.csv"));
  CHECK(fs::exists(tmp.sub("sim") + "/manifest.json"));

  const CliRun again = run({"simulate", "--graph", "tree", "--d", "10", "--n",
                            "50", "--seed", "5", "--out", tmp.sub("sim2")});
  CHECK(again.code == 0);
  CHECK(slurp(tmp.sub("sim2") + "/data.csv") == data);

  const CliRun other = run({"simulate", "--graph", "tree", "--d", "10", "--n",
                            "50", "--seed", "6", "--out", tmp.sub("sim3")});
  CHECK(slurp(tmp.sub("sim3") + "/data.csv") != data);
}

TEST_CASE("simulate copula data live strictly inside the unit cube") {
  TempDir tmp;
  CHECK(run({"simulate", "--graph", "er", "--p", "0.2", "--d", "8", "--n",
             "40", "--copula", "--out", tmp.sub("cop")}).code == 0);
  const MatrixXd m = read_csv_matrix(tmp.sub("cop") + "/data.csv");
  CHECK(m.minCoeff() > 0.0);
  CHECK(m.maxCoeff() < 1.0);
}

TEST_CASE("a penalty above the critical value yields the zero model") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "6", "--n", "80", "--out",
               tmp.sub("sim")}).code == 0);
  const CliRun r = run({"fit", tmp.sub("sim") + "/data.csv", "--lambda",
                        "1.5", "--out", tmp.sub("fit")});
  CHECK(r.code == 0);

  const json theta = load_json(tmp.sub("fit") + "/theta.json");
  CHECK(theta["d"] == 6);
  CHECK(theta["lambda"] == 1.5);
  for (const auto& block : theta["blocks"])
    for (const auto& v : block["values"]) CHECK(v.get<double>() == 0.0);

  const std::string edges = slurp(tmp.sub("fit") + "/edges.csv");
  CHECK(edges == "i,j,group_norm\n");

  const json diag = load_json(tmp.sub("fit") + "/diagnostics.json");
  CHECK(diag["entries"].size() == 1);
  CHECK(diag["entries"][0]["converged"] == true);
}

TEST_CASE("path fits report one diagnostics entry per grid point") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "5", "--n", "150", "--copula", "--seed",
               "3", "--out", tmp.sub("train")}).code == 0);
  REQUIRE(run({"simulate", "--d", "5", "--n", "100", "--copula", "--seed",
               "103", "--out", tmp.sub("hold")}).code == 0);
  const CliRun r = run({"fit", tmp.sub("train") + "/data.csv", "--basis",
                        "legendre", "--m1", "3", "--m2", "2", "--holdout",
                        tmp.sub("hold") + "/data.csv", "--path",
                        "--path-count", "9", "--out", tmp.sub("fit")});
  CHECK(r.code == 0);
  const json diag = load_json(tmp.sub("fit") + "/diagnostics.json");
  REQUIRE(diag["entries"].size() == 9);
  for (const auto& e : diag["entries"]) {
    CHECK(e.contains("holdout_score"));
    CHECK(e["m1"] == 3);
    CHECK(e["m2"] == 2);
  }
  CHECK(diag.contains("selected"));
  CHECK(diag["lambda_start"].get<double>() > 0.0);
  // First grid point carries the empty model.
  CHECK(diag["entries"][0]["edge_count"] == 0);
}

TEST_CASE("malformed input leaves no partial outputs behind") {
  TempDir tmp;
  write_text(tmp.sub("bad.csv"), "1,2\n3,oops\n");
  const CliRun r =
      run({"fit", tmp.sub("bad.csv"), "--lambda", "0.5", "--out",
           tmp.sub("fit")});
  CHECK(r.code == kExitBadInput);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(tmp.sub("fit") + "/theta.json"));
  CHECK_FALSE(fs::exists(tmp.sub("fit") + "/diagnostics.json"));
}

TEST_CASE("flag validation failures exit with the input error code") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "4", "--n", "30", "--out",
               tmp.sub("sim")}).code == 0);
  const std::string data = tmp.sub("sim") + "/data.csv";
  CHECK(run({"fit", data, "--out", tmp.sub("a")}).code == kExitBadInput);
  CHECK(run({"fit", data, "--lambda", "0.5", "--path"}).code ==
        kExitBadInput);
  CHECK(run({"fit", data, "--lambda", "0.5", "--solver", "newton"}).code ==
        kExitBadInput);
  CHECK(run({"fit", data, "--basis", "legendre", "--solver", "cd",
             "--lambda", "0.5"}).code == kExitBadInput);
  CHECK(run({"fit", tmp.sub("nowhere.csv"), "--lambda", "0.5"}).code ==
        kExitBadInput);
  CHECK(run({"simulate", "--graph", "torus"}).code == kExitBadInput);
}

TEST_CASE("gaussian data are rejected by the bounded-support basis") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "4", "--n", "30", "--out",
               tmp.sub("sim")}).code == 0);
  const CliRun r = run({"fit", tmp.sub("sim") + "/data.csv", "--basis",
                        "legendre", "--lambda", "0.5", "--out",
                        tmp.sub("fit")});
  CHECK(r.code == kExitBadInput);
  CHECK(r.err.find("[0,1]") != std::string::npos);
}

TEST_CASE("hitting the iteration cap reports partial results with exit 3") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "4", "--n", "60", "--out",
               tmp.sub("sim")}).code == 0);
  const CliRun r = run({"fit", tmp.sub("sim") + "/data.csv", "--solver",
                        "admm", "--lambda", "0.1", "--tol", "1e-300",
                        "--out", tmp.sub("fit")});
  CHECK(r.code == kExitNotConverged);
  const json diag = load_json(tmp.sub("fit") + "/diagnostics.json");
  CHECK(diag["entries"][0]["converged"] == false);
  CHECK(fs::exists(tmp.sub("fit") + "/theta.json"));
  CHECK(fs::exists(tmp.sub("fit") + "/edges.csv"));
}

TEST_CASE("fits are reproducible apart from the manifest timings") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "6", "--n", "120", "--seed", "8", "--out",
               tmp.sub("sim")}).code == 0);
  const std::vector<std::string> base = {
      "fit", tmp.sub("sim") + "/data.csv", "--path", "--path-count", "6",
      "--deterministic"};
  std::vector<std::string> first = base;
  first.insert(first.end(), {"--out", tmp.sub("f1")});
  std::vector<std::string> second = base;
  second.insert(second.end(), {"--out", tmp.sub("f2")});
  REQUIRE(run(first).code == 0);
  REQUIRE(run(second).code == 0);

  json a = load_json(tmp.sub("f1") + "/theta.json");
  json b = load_json(tmp.sub("f2") + "/theta.json");
  a.erase("manifest");
  b.erase("manifest");
  CHECK(a.dump() == b.dump());
  CHECK(slurp(tmp.sub("f1") + "/edges.csv") ==
        slurp(tmp.sub("f2") + "/edges.csv"));
}

TEST_CASE("experiment descriptor drives a full run") {
  TempDir tmp;
  const json desc = {
      {"graph", {{"kind", "tree"}, {"d", 8}}},
      {"n", 100},
      {"n_holdout", 80},
      {"reps", 2},
      {"path", {{"count", 7}}},
      {"criterion", "nll"},
      {"solver", "cd"},
      {"seed", 21},
  };
  write_text(tmp.sub("exp.json"), desc.dump());
  const CliRun r = run({"experiment", "--config", tmp.sub("exp.json"),
                        "--out", tmp.sub("run")});
  CHECK(r.code == 0);

  const std::string metrics = slurp(tmp.sub("run") + "/metrics.csv");
  CHECK(count_lines(metrics) == 3);  // header + one row per replication
  CHECK(metrics.rfind("rep,tp,tn,heldout_risk,selected_lambda,edge_count,"
                      "min_eig\n", 0) == 0);

  const std::string roc = slurp(tmp.sub("run") + "/roc.csv");
  CHECK(count_lines(roc) == 8);
  std::istringstream roc_in(roc);
  std::string line;
  std::getline(roc_in, line);
  CHECK(line == "lambda,fpr,tpr");
  std::getline(roc_in, line);
  // Largest penalty: the empty model, no discoveries of either kind.
  CHECK(line.substr(line.find(',')) == ",0,0");

  const json summary = load_json(tmp.sub("run") + "/summary.json");
  CHECK(summary["reps"] == 2);
  CHECK(summary["failures"] == 0);
  CHECK(summary["tp_mean"].get<double>() >= 0.0);
  CHECK(summary["tp_mean"].get<double>() <= 1.0);

  // Reruns reproduce the data tables byte for byte.
  const CliRun again = run({"experiment", "--config", tmp.sub("exp.json"),
                            "--out", tmp.sub("run2")});
  REQUIRE(again.code == 0);
  CHECK(slurp(tmp.sub("run2") + "/metrics.csv") == metrics);
  CHECK(slurp(tmp.sub("run2") + "/roc.csv") == roc);
}

TEST_CASE("experiment rejects a broken descriptor") {
  TempDir tmp;
  write_text(tmp.sub("broken.json"), "{ not json");
  CHECK(run({"experiment", "--config", tmp.sub("broken.json"), "--out",
             tmp.sub("x")}).code == kExitBadInput);

  write_text(tmp.sub("unknown.json"), R"({"regularizer": "ridge"})");
  const CliRun r = run({"experiment", "--config", tmp.sub("unknown.json"),
                        "--out", tmp.sub("y")});
  CHECK(r.code == kExitBadInput);
  CHECK(r.err.find("regularizer") != std::string::npos);

  CHECK(run({"experiment", "--config", tmp.sub("absent.json"), "--out",
             tmp.sub("z")}).code == kExitBadInput);
}

TEST_CASE("thread count comes from the environment unless overridden") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--d", "4", "--n", "40", "--out",
               tmp.sub("sim")}).code == 0);
  setenv("QUASR_THREADS", "2", 1);
  REQUIRE(run({"fit", tmp.sub("sim") + "/data.csv", "--lambda", "0.5",
               "--out", tmp.sub("env")}).code == 0);
  unsetenv("QUASR_THREADS");
  const json env_manifest = load_json(tmp.sub("env") + "/manifest.json");
  CHECK(env_manifest["threads"] == 2);

  REQUIRE(run({"fit", tmp.sub("sim") + "/data.csv", "--lambda", "0.5",
               "--threads", "3", "--out", tmp.sub("flag")}).code == 0);
  CHECK(load_json(tmp.sub("flag") + "/manifest.json")["threads"] == 3);

  REQUIRE(run({"fit", tmp.sub("sim") + "/data.csv", "--lambda", "0.5",
               "--threads", "3", "--deterministic", "--out",
               tmp.sub("det")}).code == 0);
  const json det = load_json(tmp.sub("det") + "/manifest.json");
  CHECK(det["threads"] == 1);
  CHECK(det["deterministic"] == true);
}

}  // TEST_SUITE
