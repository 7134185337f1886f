#pragma once

#include <functional>

#include "graphdict/edge_space.hpp"

namespace graphdict {

using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

// ---------------------------------------------------------------------------
// Validated domain types. The raw operators below work on plain matrices
// because primal-dual iterates leave the feasible set mid-iteration; these
// wrappers are for data that must satisfy the model constraints.

// Nonnegative edge weights of a single graph.
class WeightVector {
 public:
  WeightVector(EdgeSpace space, Vector values);
  const EdgeSpace& space() const { return space_; }
  const Vector& values() const { return values_; }

 private:
  EdgeSpace space_;
  Vector values_;
};

// K nonnegative atoms stored as rows of a K x E matrix.
class Dictionary {
 public:
  Dictionary(EdgeSpace space, Matrix weights);
  const EdgeSpace& space() const { return space_; }
  const Matrix& weights() const { return weights_; }
  Index n_atoms() const { return weights_.rows(); }
  WeightVector atom(Index k) const { return {space_, weights_.row(k).transpose()}; }

 private:
  EdgeSpace space_;
  Matrix weights_;
};

// Per-sample atom activations, T x K, entries in [0, 1].
class Coefficients {
 public:
  explicit Coefficients(Matrix values);
  const Matrix& values() const { return values_; }
  Index n_samples() const { return values_.rows(); }
  Index n_atoms() const { return values_.cols(); }

 private:
  Matrix values_;
};

// Stack of T square N x N slices stored side by side in one N x (N*T)
// matrix, so the whole tensor can travel through the solver as a Matrix.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index n_slices, Index n);
  static Tensor3 from_storage(Matrix storage, Index n_slices);

  Index n_slices() const { return n_slices_; }
  Index n() const { return n_; }

  auto slice(Index t) { return storage_.block(0, t * n_, n_, n_); }
  auto slice(Index t) const { return storage_.block(0, t * n_, n_, n_); }

  const Matrix& storage() const { return storage_; }
  Matrix& storage() { return storage_; }

  double inner(const Tensor3& other) const;

 private:
  Index n_slices_ = 0;
  Index n_ = 0;
  Matrix storage_;
};

// ---------------------------------------------------------------------------
// Operators

// Combinatorial Laplacian of a (possibly signed, mid-iteration) weight vector.
Matrix laplacian_from_weights(const EdgeSpace& space, const VectorRef& w);
Matrix laplacian_from_weights(const WeightVector& w);

// Weighted node degrees; equals the diagonal of the Laplacian.
Vector degree_map(const EdgeSpace& space, const VectorRef& w);

// Dense N x E incidence-sum operator D with [Dw]_n = sum_m w_(n,m).
Matrix degree_operator(const EdgeSpace& space);

// Slice t is the Laplacian of row t of coefficients * weights.
Tensor3 bilinear_laplacian(const EdgeSpace& space, const MatrixRef& coefficients, const MatrixRef& weights);

// T x E matrix with entries Y_nn + Y_mm - Y_nm - Y_mn per slice and edge.
// Does not assume the slices are symmetric.
Matrix dual_difference(const EdgeSpace& space, const Tensor3& y);

// Partial adjoint into coefficient space: dY * W^T (T x K).
Matrix adjoint_wrt_coefficients(const EdgeSpace& space, const Tensor3& y, const MatrixRef& weights);

// Partial adjoint into weight space: Delta^T * dY (K x E).
Matrix adjoint_wrt_weights(const EdgeSpace& space, const MatrixRef& coefficients, const Tensor3& y);

// T x E squared pairwise differences (x_tn - x_tm)^2.
Matrix pairwise_sq_dist(const EdgeSpace& space, const MatrixRef& signals);

// U g(Lambda) U^T for a symmetric matrix. Throws std::runtime_error when the
// eigensolver does not converge.
Matrix graph_filter(const MatrixRef& laplacian, const std::function<double(double)>& g);

// Like graph_filter but eigenvalues at or below 1e-10 * max eigenvalue map
// to zero instead of going through g (pseudo-inverse semantics).
Matrix pseudo_inverse_filter(const MatrixRef& laplacian, const std::function<double(double)>& g);

// Moore-Penrose pseudo-inverse of a Laplacian.
Matrix laplacian_pinv(const MatrixRef& laplacian);

// Relative eigenvalue cutoff used by the pseudo-inverse filters.
inline constexpr double kSpectralCutoff = 1e-10;

// Connected component label per node for a weight vector (edges with w > 0).
std::vector<Index> connected_components(const EdgeSpace& space, const VectorRef& w);

}  // namespace graphdict
