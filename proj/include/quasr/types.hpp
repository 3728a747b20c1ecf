#pragma once

#include <Eigen/Dense>

#include <map>
#include <set>
#include <utility>
#include <vector>

namespace quasr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Undirected graph on vertices 0..d-1. Edges are stored as (i, j) with i < j;
// add_edge normalizes the order and rejects self-loops.
struct Graph {
  int d = 0;
  std::set<std::pair<int, int>> edges;

  Graph() = default;
  explicit Graph(int d_in);

  void add_edge(int i, int j);
  bool has_edge(int i, int j) const;
  int edge_count() const { return static_cast<int>(edges.size()); }
};

enum class Support { RealLine, UnitCube };

// Observations stored one row per sample.
struct Dataset {
  MatrixXd values;
  Support support = Support::RealLine;
  bool standardized = false;

  long n() const { return values.rows(); }
  int d() const { return static_cast<int>(values.cols()); }
};

// Column-center and scale to unit variance (moments with 1/n normalization,
// so the second-moment matrix of the result has unit diagonal exactly).
// Throws std::invalid_argument on n < 2 or a zero-variance column.
Dataset standardize(const Dataset& data);

// Which sufficient-statistics family the model uses, and its truncation
// degrees. For the Gaussian family both per-group dimensions are 1 and
// m1/m2 are ignored.
struct BasisSpec {
  enum class Kind { Gaussian, LegendrePairwise };
  Kind kind = Kind::Gaussian;
  int m1 = 1;  // vertex polynomial degrees 1..m1
  int m2 = 1;  // edge factors use degrees 1..m2 in each coordinate

  int vertex_dim() const { return kind == Kind::Gaussian ? 1 : m1; }
  int edge_dim() const { return kind == Kind::Gaussian ? 1 : m2 * m2; }
  void validate() const;
};

// Flat layout of one parameter column theta_{.,i}: the vertex block first,
// then one edge block per neighbor j != i in ascending j. Within an edge
// block for the pair (lo, hi), lo < hi, entry u = (k-1)*m2 + (l-1) holds the
// coefficient of phi_k(x_lo) phi_l(x_hi); both columns of an edge use this
// one canonical order.
struct ColumnLayout {
  int d = 0;
  int vertex_dim = 0;
  int edge_dim = 0;

  ColumnLayout() = default;
  ColumnLayout(int d_in, const BasisSpec& basis)
      : d(d_in), vertex_dim(basis.vertex_dim()), edge_dim(basis.edge_dim()) {}

  int length() const { return vertex_dim + (d - 1) * edge_dim; }
  // Position of j among {0..d-1} \ {i}.
  int neighbor_rank(int i, int j) const { return j < i ? j : j - 1; }
  // Start of neighbor j's block inside column i.
  int edge_offset(int i, int j) const {
    return vertex_dim + neighbor_rank(i, j) * edge_dim;
  }
};

// Block-sparse parameter container. Vertex blocks are always materialized;
// an absent edge key (i, j), i < j, means exactly the zero block.
class ParamBlocks {
 public:
  ParamBlocks() = default;
  ParamBlocks(int d, int vertex_dim, int edge_dim);
  ParamBlocks(int d, const BasisSpec& basis)
      : ParamBlocks(d, basis.vertex_dim(), basis.edge_dim()) {}

  int d() const { return d_; }
  int vertex_dim() const { return vdim_; }
  int edge_dim() const { return edim_; }
  ColumnLayout layout() const;

  VectorXd& vertex(int i);
  const VectorXd& vertex(int i) const;

  bool has_edge(int i, int j) const;
  // nullptr when the block is (implicitly) zero.
  const VectorXd* edge_if(int i, int j) const;
  // Inserts a zero block when absent.
  VectorXd& edge(int i, int j);
  void set_edge(int i, int j, VectorXd v);
  void erase_edge(int i, int j);
  // Drop edge blocks that are exactly zero.
  void prune();

  const std::map<std::pair<int, int>, VectorXd>& edge_blocks() const {
    return edge_;
  }

  // Gather theta_{.,i} into a dense column (ColumnLayout order).
  VectorXd column(int i) const;

  double l1_norm() const;

 private:
  friend class ColumnView;
  int d_ = 0, vdim_ = 0, edim_ = 0;
  std::vector<VectorXd> vertex_;
  std::map<std::pair<int, int>, VectorXd> edge_;
};

// Entry-level accessor for one column of a ParamBlocks. Entries are addressed
// either by flat position in the ColumnLayout or by (block vertex j, index u);
// j == i addresses the vertex block. Writing entry (j, u) through column i and
// reading (i, u) through column j touch the same stored value.
class ColumnView {
 public:
  ColumnView(ParamBlocks& owner, int i);

  int index() const { return i_; }
  int length() const { return layout_.length(); }

  double get(int j, int u) const;
  void set(int j, int u, double value);

  // Flat position <-> (block vertex, within-block index).
  std::pair<int, int> locate(int pos) const;
  int position(int j, int u) const;

  VectorXd gather() const;
  // Write a whole dense column back; edge segments that are exactly zero are
  // dropped from the block map.
  void scatter(const VectorXd& column);

 private:
  ParamBlocks* owner_;
  int i_;
  ColumnLayout layout_;
};

// Edges whose block l2 norm is strictly greater than tol.
Graph edge_set_of(const ParamBlocks& theta, double tol = 0.0);

// l2 norm of every group: all vertex keys (i, i) plus the stored edge keys.
// Absent edge blocks are zero and are not listed.
std::map<std::pair<int, int>, double> group_norms(const ParamBlocks& theta);

// Gaussian-basis converters: vertex block (i,i) holds Omega_ii, edge block
// (i,j) holds Omega_ij. Zero off-diagonals stay absent / absent blocks read
// back as zero.
ParamBlocks blocks_from_precision(const MatrixXd& omega);
MatrixXd precision_from_blocks(const ParamBlocks& theta);

// Shared solver output: estimate plus convergence diagnostics.
struct FitResult {
  ParamBlocks theta;
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;
  Graph edges;
};

}  // namespace quasr
