#include "graphdict/edge_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace graphdict {

EdgeSpace::EdgeSpace(Index n_nodes) : n_nodes_(n_nodes), n_edges_(n_nodes * (n_nodes - 1) / 2) {
  if (n_nodes < 1) throw std::domain_error("EdgeSpace: node count must be positive");
  pairs_.reserve(static_cast<std::size_t>(n_edges_));
  for (Index i = 0; i < n_nodes_; ++i)
    for (Index j = i + 1; j < n_nodes_; ++j) pairs_.emplace_back(i, j);
}

Index EdgeSpace::edge_index(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= n_nodes_ || j >= n_nodes_)
    throw std::domain_error("edge_index: node out of range");
  if (i == j) throw std::domain_error("edge_index: self-loops have no edge index");
  if (i > j) std::swap(i, j);
  return i * n_nodes_ - i * (i + 1) / 2 + (j - i - 1);
}

Index EdgeSpace::nodes_for_edges(Index n_edges) {
  const auto n = static_cast<Index>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(n_edges))) / 2.0));
  if (n * (n - 1) / 2 != n_edges)
    throw std::domain_error("edge count " + std::to_string(n_edges) + " is not N(N-1)/2 for any N");
  return n;
}

}  // namespace graphdict
