#include "quasr/io.hpp"

#include "quasr/version.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace quasr {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first &&
         (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
    --last;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool try_parse_row(const std::vector<std::string>& fields,
                   std::vector<double>& out) {
  out.clear();
  out.reserve(fields.size());
  for (const auto& f : fields) {
    try {
      out.push_back(parse_double(f));
    } catch (const std::invalid_argument&) {
      return false;
    }
  }
  return true;
}

}  // namespace

MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  bool first = true;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    if (!try_parse_row(fields, row)) {
      // A single non-numeric leading line is treated as a header.
      if (first) {
        first = false;
        continue;
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": malformed row");
    }
    if (first) {
      first = false;
      width = row.size();
    } else if (rows.empty()) {
      width = row.size();
    }
    if (row.size() != width && !rows.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": ragged row");
    width = row.size();
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::invalid_argument(path + ": no data rows");
  MatrixXd m(rows.size(), width);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < width; ++c) m(r, c) = rows[r][c];
  return m;
}

void write_csv_matrix(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << fmt_double(m(r, c));
    }
    out << '\n';
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["deterministic"] = m.deterministic;
  j["version"] = m.version.empty() ? kVersion : m.version;
  j["started_at"] = m.started_at;
  j["stage_seconds"] = m.stage_seconds;
  j["outputs"] = m.outputs;
  return j;
}

namespace {

std::string basis_kind_name(BasisSpec::Kind k) {
  return k == BasisSpec::Kind::Gaussian ? "gaussian" : "legendre";
}

BasisSpec::Kind basis_kind_from(const std::string& s) {
  if (s == "gaussian") return BasisSpec::Kind::Gaussian;
  if (s == "legendre") return BasisSpec::Kind::LegendrePairwise;
  throw std::invalid_argument("unknown basis kind: " + s);
}

}  // namespace

json theta_to_json(const ParamBlocks& theta, const BasisSpec& basis) {
  json j;
  j["d"] = theta.d();
  j["basis"] = {{"kind", basis_kind_name(basis.kind)},
                {"m1", basis.m1},
                {"m2", basis.m2}};
  j["vertex_dim"] = theta.vertex_dim();
  j["edge_dim"] = theta.edge_dim();
  json blocks = json::array();
  for (int i = 0; i < theta.d(); ++i) {
    json b;
    b["i"] = i;
    b["j"] = i;
    b["values"] = std::vector<double>(
        theta.vertex(i).data(), theta.vertex(i).data() + theta.vertex_dim());
    blocks.push_back(std::move(b));
  }
  for (const auto& [key, block] : theta.edge_blocks()) {
    json b;
    b["i"] = key.first;
    b["j"] = key.second;
    b["values"] =
        std::vector<double>(block.data(), block.data() + block.size());
    blocks.push_back(std::move(b));
  }
  j["blocks"] = std::move(blocks);
  return j;
}

ParamBlocks theta_from_json(const json& j, BasisSpec* basis_out) {
  const int d = j.at("d").get<int>();
  const int vd = j.at("vertex_dim").get<int>();
  const int ed = j.at("edge_dim").get<int>();
  ParamBlocks theta(d, vd, ed);
  if (basis_out) {
    basis_out->kind = basis_kind_from(j.at("basis").at("kind").get<std::string>());
    basis_out->m1 = j.at("basis").at("m1").get<int>();
    basis_out->m2 = j.at("basis").at("m2").get<int>();
  }
  for (const auto& b : j.at("blocks")) {
    const int i = b.at("i").get<int>();
    const int jj = b.at("j").get<int>();
    const auto values = b.at("values").get<std::vector<double>>();
    if (i == jj) {
      if (static_cast<int>(values.size()) != vd)
        throw std::invalid_argument("theta_from_json: vertex block size");
      for (int u = 0; u < vd; ++u) theta.vertex(i)(u) = values[u];
    } else {
      if (static_cast<int>(values.size()) != ed)
        throw std::invalid_argument("theta_from_json: edge block size");
      VectorXd v(ed);
      for (int u = 0; u < ed; ++u) v(u) = values[u];
      theta.set_edge(i, jj, std::move(v));
    }
  }
  return theta;
}

void write_edges_csv(const std::string& path, const ParamBlocks& theta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "i,j,group_norm\n";
  for (const auto& [key, block] : theta.edge_blocks()) {
    const double norm = block.norm();
    if (norm > 0.0)
      out << key.first << ',' << key.second << ',' << fmt_double(norm) << '\n';
  }
}

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object())
    throw std::invalid_argument("experiment descriptor must be a JSON object");
  check_keys(j, "descriptor",
             {"graph", "n", "n_holdout", "reps", "basis", "copula", "path",
              "criterion", "solver", "rho", "tol", "max_iters", "seed",
              "threads"});
  ExperimentConfig cfg;

  if (j.contains("graph")) {
    const json& g = j.at("graph");
    check_keys(g, "graph",
               {"kind", "d", "p", "weight_lo", "weight_hi", "diagonal_slack"});
    if (g.contains("kind")) {
      const auto kind = g.at("kind").get<std::string>();
      if (kind == "tree")
        cfg.graph.kind = GraphModelSpec::Kind::Tree;
      else if (kind == "er")
        cfg.graph.kind = GraphModelSpec::Kind::ErdosRenyi;
      else
        throw std::invalid_argument("unknown graph kind: " + kind);
    }
    if (g.contains("d")) cfg.graph.d = g.at("d").get<int>();
    if (g.contains("p")) cfg.graph.edge_prob = g.at("p").get<double>();
    if (g.contains("weight_lo")) cfg.graph.weight_lo = g.at("weight_lo").get<double>();
    if (g.contains("weight_hi")) cfg.graph.weight_hi = g.at("weight_hi").get<double>();
    if (g.contains("diagonal_slack"))
      cfg.graph.diagonal_slack = g.at("diagonal_slack").get<double>();
  }
  if (j.contains("n")) cfg.n = j.at("n").get<long>();
  if (j.contains("n_holdout")) cfg.n_holdout = j.at("n_holdout").get<long>();
  if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
  if (j.contains("basis")) {
    const json& b = j.at("basis");
    check_keys(b, "basis", {"kind", "m1", "m2"});
    if (b.contains("kind"))
      cfg.basis.kind = basis_kind_from(b.at("kind").get<std::string>());
    if (b.contains("m1")) cfg.basis.m1 = b.at("m1").get<int>();
    if (b.contains("m2")) cfg.basis.m2 = b.at("m2").get<int>();
  }
  if (j.contains("copula")) cfg.copula = j.at("copula").get<bool>();
  if (j.contains("path")) {
    const json& p = j.at("path");
    check_keys(p, "path", {"count", "ratio", "lambdas", "truncations"});
    if (p.contains("count")) cfg.path.count = p.at("count").get<int>();
    if (p.contains("ratio")) cfg.path.ratio = p.at("ratio").get<double>();
    if (p.contains("lambdas"))
      cfg.path.lambdas = p.at("lambdas").get<std::vector<double>>();
    if (p.contains("truncations"))
      for (const auto& t : p.at("truncations")) {
        if (!t.is_array() || t.size() != 2)
          throw std::invalid_argument("truncations entries must be [m1, m2]");
        cfg.path.truncations.emplace_back(t[0].get<int>(), t[1].get<int>());
      }
  }
  if (j.contains("criterion")) {
    const auto c = j.at("criterion").get<std::string>();
    if (c == "nll")
      cfg.criterion = Criterion::NllHoldout;
    else if (c == "hyvarinen")
      cfg.criterion = Criterion::HyvarinenHoldout;
    else
      throw std::invalid_argument("unknown criterion: " + c);
  }
  if (j.contains("solver")) {
    const auto s = j.at("solver").get<std::string>();
    if (s == "auto")
      cfg.fit.solver = SolverChoice::Auto;
    else if (s == "cd")
      cfg.fit.solver = SolverChoice::Cd;
    else if (s == "admm")
      cfg.fit.solver = SolverChoice::Admm;
    else
      throw std::invalid_argument("unknown solver: " + s);
  }
  if (j.contains("rho")) cfg.fit.admm.rho = j.at("rho").get<double>();
  if (j.contains("tol")) {
    cfg.fit.admm.rel_tol = j.at("tol").get<double>();
    cfg.fit.cd.rel_tol = j.at("tol").get<double>();
  }
  if (j.contains("max_iters")) {
    cfg.fit.admm.max_iters = j.at("max_iters").get<int>();
    cfg.fit.cd.max_sweeps = j.at("max_iters").get<int>();
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  return cfg;
}

json experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["graph"] = {
      {"kind",
       cfg.graph.kind == GraphModelSpec::Kind::Tree ? "tree" : "er"},
      {"d", cfg.graph.d},
      {"p", cfg.graph.edge_prob},
      {"weight_lo", cfg.graph.weight_lo},
      {"weight_hi", cfg.graph.weight_hi},
      {"diagonal_slack", cfg.graph.diagonal_slack}};
  j["n"] = cfg.n;
  j["n_holdout"] = cfg.n_holdout;
  j["reps"] = cfg.reps;
  j["basis"] = {{"kind", basis_kind_name(cfg.basis.kind)},
                {"m1", cfg.basis.m1},
                {"m2", cfg.basis.m2}};
  j["copula"] = cfg.copula;
  json path;
  path["count"] = cfg.path.count;
  path["ratio"] = cfg.path.ratio;
  if (!cfg.path.lambdas.empty()) path["lambdas"] = cfg.path.lambdas;
  if (!cfg.path.truncations.empty()) {
    json t = json::array();
    for (const auto& [m1, m2] : cfg.path.truncations)
      t.push_back({m1, m2});
    path["truncations"] = std::move(t);
  }
  j["path"] = std::move(path);
  j["criterion"] =
      cfg.criterion == Criterion::NllHoldout ? "nll" : "hyvarinen";
  j["solver"] = cfg.fit.solver == SolverChoice::Auto
                    ? "auto"
                    : (cfg.fit.solver == SolverChoice::Cd ? "cd" : "admm");
  j["rho"] = cfg.fit.admm.rho;
  j["tol"] = cfg.fit.admm.rel_tol;
  j["max_iters"] = cfg.fit.admm.max_iters;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  return j;
}

}  // namespace quasr
