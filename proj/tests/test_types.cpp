#include "quasr/types.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace quasr;

namespace {

BasisSpec legendre_basis(int m1, int m2) {
  BasisSpec b;
  b.kind = BasisSpec::Kind::LegendrePairwise;
  b.m1 = m1;
  b.m2 = m2;
  return b;
}

}  // namespace

TEST_SUITE("types") {

TEST_CASE("graph normalizes edges and rejects bad ones") {
  Graph g(5);
  g.add_edge(3, 1);
  CHECK(g.has_edge(1, 3));
  CHECK(g.has_edge(3, 1));
  CHECK(g.edge_count() == 1);
  g.add_edge(1, 3);
  CHECK(g.edge_count() == 1);
  CHECK_THROWS_AS(g.add_edge(2, 2), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge(-1, 2), std::invalid_argument);
  CHECK_FALSE(g.has_edge(0, 1));
}

TEST_CASE("standardize centers and scales with 1/n moments") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  Dataset raw;
  raw.values = MatrixXd::NullaryExpr(50, 3, [&](Eigen::Index, Eigen::Index) {
    return 2.0 + 3.0 * normal(rng);
  });
  const Dataset out = standardize(raw);
  CHECK(out.standardized);
  CHECK(out.values.rows() == 50);
  for (int j = 0; j < 3; ++j) {
    const double mean = out.values.col(j).mean();
    const double var = out.values.col(j).squaredNorm() / 50.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("standardize rejects degenerate input") {
  Dataset one_row;
  one_row.values = MatrixXd::Ones(1, 2);
  CHECK_THROWS_AS(standardize(one_row), std::invalid_argument);

  Dataset constant_col;
  constant_col.values = MatrixXd::Zero(10, 2);
  constant_col.values.col(0).setRandom();
  CHECK_THROWS_AS(standardize(constant_col), std::invalid_argument);
}

TEST_CASE("basis dimensions") {
  BasisSpec g;
  CHECK(g.vertex_dim() == 1);
  CHECK(g.edge_dim() == 1);

  const BasisSpec l = legendre_basis(3, 2);
  CHECK(l.vertex_dim() == 3);
  CHECK(l.edge_dim() == 4);
  CHECK_NOTHROW(l.validate());
  CHECK_THROWS_AS(legendre_basis(0, 2).validate(), std::invalid_argument);
  CHECK_THROWS_AS(legendre_basis(2, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(legendre_basis(51, 2).validate(), std::invalid_argument);
}

TEST_CASE("column layout offsets") {
  const ColumnLayout lay(5, legendre_basis(3, 2));
  CHECK(lay.length() == 3 + 4 * 4);
  CHECK(lay.neighbor_rank(2, 0) == 0);
  CHECK(lay.neighbor_rank(2, 1) == 1);
  CHECK(lay.neighbor_rank(2, 3) == 2);
  CHECK(lay.neighbor_rank(2, 4) == 3);
  CHECK(lay.edge_offset(2, 0) == 3);
  CHECK(lay.edge_offset(2, 4) == 3 + 3 * 4);
}

TEST_CASE("param blocks store edges sparsely") {
  ParamBlocks theta(4, legendre_basis(2, 2));
  CHECK(theta.edge_if(0, 1) == nullptr);
  CHECK_FALSE(theta.has_edge(0, 1));

  VectorXd v(4);
  v << 1, 2, 3, 4;
  theta.set_edge(1, 0, v);
  CHECK(theta.has_edge(0, 1));
  REQUIRE(theta.edge_if(0, 1) != nullptr);
  CHECK(*theta.edge_if(0, 1) == v);
  CHECK(theta.edge(0, 1) == v);

  theta.vertex(2) << 5, 6;
  CHECK(theta.l1_norm() == doctest::Approx(1 + 2 + 3 + 4 + 5 + 6));

  theta.edge(2, 3).setZero();
  CHECK(theta.has_edge(2, 3));
  theta.prune();
  CHECK_FALSE(theta.has_edge(2, 3));
  CHECK(theta.has_edge(0, 1));

  theta.erase_edge(0, 1);
  CHECK_FALSE(theta.has_edge(0, 1));
}

TEST_CASE("column view positions invert locate") {
  ParamBlocks theta(5, legendre_basis(3, 2));
  for (int i = 0; i < 5; ++i) {
    ColumnView col(theta, i);
    for (int pos = 0; pos < col.length(); ++pos) {
      const auto [j, u] = col.locate(pos);
      CHECK(col.position(j, u) == pos);
    }
    CHECK(col.locate(0).first == i);
  }
}

TEST_CASE("edge entries are shared between their two columns") {
  ParamBlocks theta(4, legendre_basis(2, 3));
  ColumnView c1(theta, 1);
  ColumnView c3(theta, 3);
  c1.set(3, 5, 2.5);
  CHECK(c3.get(1, 5) == 2.5);
  CHECK(theta.edge(1, 3)[5] == 2.5);
  c3.set(1, 5, -1.0);
  CHECK(c1.get(3, 5) == -1.0);

  c1.set(1, 2, 7.0);
  CHECK(theta.vertex(1)[2] == 7.0);
}

TEST_CASE("gather and scatter round trip") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal;
  ParamBlocks theta(5, legendre_basis(3, 2));
  ColumnView col(theta, 2);
  VectorXd dense(col.length());
  for (int k = 0; k < dense.size(); ++k) dense[k] = normal(rng);
  // Zero out one edge segment; scatter should leave that block absent.
  const ColumnLayout lay = theta.layout();
  dense.segment(lay.edge_offset(2, 4), lay.edge_dim).setZero();
  col.scatter(dense);
  CHECK(col.gather() == dense);
  CHECK(theta.column(2) == dense);
  CHECK_FALSE(theta.has_edge(2, 4));
  CHECK(theta.has_edge(0, 2));
}

TEST_CASE("edge set uses a strict norm threshold") {
  ParamBlocks theta(3, BasisSpec{});
  theta.edge(0, 1) = VectorXd::Constant(1, 0.5);
  theta.edge(1, 2) = VectorXd::Constant(1, 1e-12);
  const Graph strict = edge_set_of(theta);
  CHECK(strict.edge_count() == 2);
  const Graph tol = edge_set_of(theta, 1e-8);
  CHECK(tol.edge_count() == 1);
  CHECK(tol.has_edge(0, 1));
  const Graph at = edge_set_of(theta, 0.5);
  CHECK(at.edge_count() == 0);
}

TEST_CASE("group norms cover vertices and stored edges") {
  ParamBlocks theta(3, legendre_basis(2, 2));
  theta.vertex(0) << 3, 4;
  VectorXd e(4);
  e << 1, 1, 1, 1;
  theta.set_edge(0, 2, e);
  const auto norms = group_norms(theta);
  CHECK(norms.at({0, 0}) == doctest::Approx(5.0));
  CHECK(norms.at({1, 1}) == doctest::Approx(0.0));
  CHECK(norms.at({0, 2}) == doctest::Approx(2.0));
  CHECK(norms.count({0, 1}) == 0);
}

TEST_CASE("precision matrix converters round trip") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  MatrixXd omega = MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) omega(i, i) = 1.0 + i;
  omega(0, 2) = omega(2, 0) = normal(rng);
  omega(1, 3) = omega(3, 1) = normal(rng);

  const ParamBlocks theta = blocks_from_precision(omega);
  CHECK(theta.vertex(1)[0] == omega(1, 1));
  CHECK(theta.has_edge(0, 2));
  CHECK_FALSE(theta.has_edge(0, 1));
  CHECK(precision_from_blocks(theta) == omega);
}

}  // TEST_SUITE
