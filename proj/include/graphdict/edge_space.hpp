#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace graphdict {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Canonical enumeration of the unordered node pairs of an N-node graph.
//
// Pairs (i, j) with i < j are numbered row by row through the strict upper
// triangle: (0,1), (0,2), ..., (0,N-1), (1,2), ... Every vectorized weight,
// dictionary row and serialized matrix in the library uses this ordering.
class EdgeSpace {
 public:
  explicit EdgeSpace(Index n_nodes);

  Index n_nodes() const { return n_nodes_; }
  Index n_edges() const { return n_edges_; }

  // Index of the unordered pair {i, j}. Throws std::domain_error when
  // i == j or either node is out of range.
  Index edge_index(Index i, Index j) const;

  // Endpoints (i, j), i < j, of edge e.
  std::pair<Index, Index> endpoints(Index e) const { return pairs_.at(static_cast<std::size_t>(e)); }

  const std::vector<std::pair<Index, Index>>& pairs() const { return pairs_; }

  // Node count for a given number of edges; throws if E is not triangular.
  static Index nodes_for_edges(Index n_edges);

  bool operator==(const EdgeSpace& other) const { return n_nodes_ == other.n_nodes_; }

 private:
  Index n_nodes_;
  Index n_edges_;
  std::vector<std::pair<Index, Index>> pairs_;
};

// Tag written into serialized headers to pin the edge ordering above.
inline constexpr const char* kEdgeOrderingTag = "upper-row-major-v1";

}  // namespace graphdict
