#include "quasr/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace quasr {

Graph::Graph(int d_in) : d(d_in) {
  if (d_in < 0) throw std::invalid_argument("Graph: negative vertex count");
}

void Graph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("Graph: self loop");
  if (i < 0 || j < 0 || i >= d || j >= d)
    throw std::invalid_argument("Graph: vertex out of range");
  if (i > j) std::swap(i, j);
  edges.emplace(i, j);
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return edges.count({i, j}) > 0;
}

Dataset standardize(const Dataset& data) {
  const long n = data.n();
  const int d = data.d();
  if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  Dataset out = data;
  for (int j = 0; j < d; ++j) {
    const double mean = out.values.col(j).mean();
    out.values.col(j).array() -= mean;
    const double var = out.values.col(j).squaredNorm() / double(n);
    if (!(var > 0.0))
      throw std::invalid_argument("standardize: zero-variance column " +
                                  std::to_string(j));
    out.values.col(j) /= std::sqrt(var);
  }
  out.standardized = true;
  return out;
}

void BasisSpec::validate() const {
  if (kind == Kind::Gaussian) return;
  if (m1 < 1 || m2 < 1)
    throw std::invalid_argument("BasisSpec: degrees must be >= 1");
  if (m1 > 50 || m2 > 50)
    throw std::invalid_argument("BasisSpec: degree cap is 50");
}

ParamBlocks::ParamBlocks(int d, int vertex_dim, int edge_dim)
    : d_(d), vdim_(vertex_dim), edim_(edge_dim) {
  if (d < 1 || vertex_dim < 1 || edge_dim < 1)
    throw std::invalid_argument("ParamBlocks: bad dimensions");
  vertex_.assign(d, VectorXd::Zero(vertex_dim));
}

ColumnLayout ParamBlocks::layout() const {
  ColumnLayout l;
  l.d = d_;
  l.vertex_dim = vdim_;
  l.edge_dim = edim_;
  return l;
}

VectorXd& ParamBlocks::vertex(int i) {
  if (i < 0 || i >= d_) throw std::out_of_range("ParamBlocks: vertex index");
  return vertex_[i];
}

const VectorXd& ParamBlocks::vertex(int i) const {
  if (i < 0 || i >= d_) throw std::out_of_range("ParamBlocks: vertex index");
  return vertex_[i];
}

namespace {
std::pair<int, int> edge_key(int i, int j) {
  if (i == j) throw std::invalid_argument("ParamBlocks: (i,i) is not an edge");
  return i < j ? std::make_pair(i, j) : std::make_pair(j, i);
}
}  // namespace

bool ParamBlocks::has_edge(int i, int j) const {
  return edge_.count(edge_key(i, j)) > 0;
}

const VectorXd* ParamBlocks::edge_if(int i, int j) const {
  auto it = edge_.find(edge_key(i, j));
  return it == edge_.end() ? nullptr : &it->second;
}

VectorXd& ParamBlocks::edge(int i, int j) {
  auto key = edge_key(i, j);
  auto it = edge_.find(key);
  if (it == edge_.end())
    it = edge_.emplace(key, VectorXd::Zero(edim_)).first;
  return it->second;
}

void ParamBlocks::set_edge(int i, int j, VectorXd v) {
  if (v.size() != edim_)
    throw std::invalid_argument("ParamBlocks: edge block size mismatch");
  edge_[edge_key(i, j)] = std::move(v);
}

void ParamBlocks::erase_edge(int i, int j) { edge_.erase(edge_key(i, j)); }

void ParamBlocks::prune() {
  for (auto it = edge_.begin(); it != edge_.end();) {
    if (it->second.isZero(0.0))
      it = edge_.erase(it);
    else
      ++it;
  }
}

VectorXd ParamBlocks::column(int i) const {
  const ColumnLayout l = layout();
  VectorXd c = VectorXd::Zero(l.length());
  c.head(vdim_) = vertex_[i];
  for (int j = 0; j < d_; ++j) {
    if (j == i) continue;
    if (const VectorXd* b = edge_if(i, j))
      c.segment(l.edge_offset(i, j), edim_) = *b;
  }
  return c;
}

double ParamBlocks::l1_norm() const {
  double s = 0.0;
  for (const auto& v : vertex_) s += v.lpNorm<1>();
  for (const auto& [k, v] : edge_) s += v.lpNorm<1>();
  return s;
}

ColumnView::ColumnView(ParamBlocks& owner, int i)
    : owner_(&owner), i_(i), layout_(owner.layout()) {
  if (i < 0 || i >= owner.d())
    throw std::out_of_range("ColumnView: column index");
}

double ColumnView::get(int j, int u) const {
  if (j == i_) return owner_->vertex_[i_](u);
  const VectorXd* b = owner_->edge_if(i_, j);
  return b ? (*b)(u) : 0.0;
}

void ColumnView::set(int j, int u, double value) {
  if (j == i_) {
    owner_->vertex_[i_](u) = value;
  } else {
    owner_->edge(i_, j)(u) = value;
  }
}

std::pair<int, int> ColumnView::locate(int pos) const {
  if (pos < 0 || pos >= layout_.length())
    throw std::out_of_range("ColumnView: position");
  if (pos < layout_.vertex_dim) return {i_, pos};
  const int rank = (pos - layout_.vertex_dim) / layout_.edge_dim;
  const int u = (pos - layout_.vertex_dim) % layout_.edge_dim;
  const int j = rank < i_ ? rank : rank + 1;
  return {j, u};
}

int ColumnView::position(int j, int u) const {
  if (j == i_) return u;
  return layout_.edge_offset(i_, j) + u;
}

VectorXd ColumnView::gather() const { return owner_->column(i_); }

void ColumnView::scatter(const VectorXd& column) {
  if (column.size() != layout_.length())
    throw std::invalid_argument("ColumnView: column length mismatch");
  owner_->vertex_[i_] = column.head(layout_.vertex_dim);
  for (int j = 0; j < layout_.d; ++j) {
    if (j == i_) continue;
    VectorXd seg = column.segment(layout_.edge_offset(i_, j), layout_.edge_dim);
    if (seg.isZero(0.0))
      owner_->erase_edge(i_, j);
    else
      owner_->set_edge(i_, j, std::move(seg));
  }
}

Graph edge_set_of(const ParamBlocks& theta, double tol) {
  Graph g(theta.d());
  for (const auto& [key, block] : theta.edge_blocks())
    if (block.norm() > tol) g.add_edge(key.first, key.second);
  return g;
}

std::map<std::pair<int, int>, double> group_norms(const ParamBlocks& theta) {
  std::map<std::pair<int, int>, double> norms;
  for (int i = 0; i < theta.d(); ++i) norms[{i, i}] = theta.vertex(i).norm();
  for (const auto& [key, block] : theta.edge_blocks())
    norms[key] = block.norm();
  return norms;
}

ParamBlocks blocks_from_precision(const MatrixXd& omega) {
  const int d = static_cast<int>(omega.rows());
  if (omega.cols() != d)
    throw std::invalid_argument("blocks_from_precision: matrix not square");
  ParamBlocks theta(d, 1, 1);
  for (int i = 0; i < d; ++i) theta.vertex(i)(0) = omega(i, i);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (omega(i, j) != 0.0)
        theta.set_edge(i, j, VectorXd::Constant(1, omega(i, j)));
  return theta;
}

MatrixXd precision_from_blocks(const ParamBlocks& theta) {
  if (theta.vertex_dim() != 1 || theta.edge_dim() != 1)
    throw std::invalid_argument("precision_from_blocks: not a Gaussian layout");
  const int d = theta.d();
  MatrixXd omega = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) omega(i, i) = theta.vertex(i)(0);
  for (const auto& [key, block] : theta.edge_blocks()) {
    omega(key.first, key.second) = block(0);
    omega(key.second, key.first) = block(0);
  }
  return omega;
}

}  // namespace quasr
