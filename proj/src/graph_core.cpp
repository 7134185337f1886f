#include "graphdict/graph_core.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace graphdict {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_edges(const EdgeSpace& space, Index cols, const char* what) {
  if (cols != space.n_edges())
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(space.n_edges()) +
                                " edge columns, got " + std::to_string(cols));
}

}  // namespace

WeightVector::WeightVector(EdgeSpace space, Vector values) : space_(std::move(space)), values_(std::move(values)) {
  require_edges(space_, values_.size(), "WeightVector");
  if ((values_.array() < 0.0).any() || !values_.allFinite())
    throw std::domain_error("WeightVector: weights must be finite and nonnegative");
}

Dictionary::Dictionary(EdgeSpace space, Matrix weights) : space_(std::move(space)), weights_(std::move(weights)) {
  require_edges(space_, weights_.cols(), "Dictionary");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite())
    throw std::domain_error("Dictionary: weights must be finite and nonnegative");
}

Coefficients::Coefficients(Matrix values) : values_(std::move(values)) {
  if ((values_.array() < 0.0).any() || (values_.array() > 1.0).any() || !values_.allFinite())
    throw std::domain_error("Coefficients: entries must lie in [0, 1]");
}

Tensor3::Tensor3(Index n_slices, Index n) : n_slices_(n_slices), n_(n), storage_(Matrix::Zero(n, n * n_slices)) {}

Tensor3 Tensor3::from_storage(Matrix storage, Index n_slices) {
  Tensor3 t;
  t.n_slices_ = n_slices;
  t.n_ = storage.rows();
  if (storage.cols() != t.n_ * n_slices) throw std::invalid_argument("Tensor3: storage shape does not match slices");
  t.storage_ = std::move(storage);
  return t;
}

double Tensor3::inner(const Tensor3& other) const {
  require(other.n_ == n_ && other.n_slices_ == n_slices_, "Tensor3::inner: shape mismatch");
  return storage_.cwiseProduct(other.storage_).sum();
}

Matrix laplacian_from_weights(const EdgeSpace& space, const VectorRef& w) {
  require_edges(space, w.size(), "laplacian_from_weights");
  const Index n = space.n_nodes();
  Matrix lap = Matrix::Zero(n, n);
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [i, j] = space.endpoints(e);
    lap(i, j) = -w(e);
    lap(j, i) = -w(e);
    lap(i, i) += w(e);
    lap(j, j) += w(e);
  }
  return lap;
}

Matrix laplacian_from_weights(const WeightVector& w) { return laplacian_from_weights(w.space(), w.values()); }

Vector degree_map(const EdgeSpace& space, const VectorRef& w) {
  require_edges(space, w.size(), "degree_map");
  Vector deg = Vector::Zero(space.n_nodes());
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [i, j] = space.endpoints(e);
    deg(i) += w(e);
    deg(j) += w(e);
  }
  return deg;
}

Matrix degree_operator(const EdgeSpace& space) {
  Matrix d = Matrix::Zero(space.n_nodes(), space.n_edges());
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [i, j] = space.endpoints(e);
    d(i, e) = 1.0;
    d(j, e) = 1.0;
  }
  return d;
}

Tensor3 bilinear_laplacian(const EdgeSpace& space, const MatrixRef& coefficients, const MatrixRef& weights) {
  require(coefficients.cols() == weights.rows(), "bilinear_laplacian: atom count mismatch");
  require_edges(space, weights.cols(), "bilinear_laplacian");
  const Matrix mixed = coefficients * weights;
  Tensor3 out(mixed.rows(), space.n_nodes());
  for (Index t = 0; t < mixed.rows(); ++t) {
    auto s = out.slice(t);
    for (Index e = 0; e < space.n_edges(); ++e) {
      const auto [i, j] = space.endpoints(e);
      const double v = mixed(t, e);
      s(i, j) = -v;
      s(j, i) = -v;
      s(i, i) += v;
      s(j, j) += v;
    }
  }
  return out;
}

Matrix dual_difference(const EdgeSpace& space, const Tensor3& y) {
  require(y.n() == space.n_nodes(), "dual_difference: slice size does not match node count");
  Matrix dy(y.n_slices(), space.n_edges());
  for (Index t = 0; t < y.n_slices(); ++t) {
    const auto s = y.slice(t);
    for (Index e = 0; e < space.n_edges(); ++e) {
      const auto [n, m] = space.endpoints(e);
      dy(t, e) = s(n, n) + s(m, m) - s(n, m) - s(m, n);
    }
  }
  return dy;
}

Matrix adjoint_wrt_coefficients(const EdgeSpace& space, const Tensor3& y, const MatrixRef& weights) {
  require_edges(space, weights.cols(), "adjoint_wrt_coefficients");
  return dual_difference(space, y) * weights.transpose();
}

Matrix adjoint_wrt_weights(const EdgeSpace& space, const MatrixRef& coefficients, const Tensor3& y) {
  require(coefficients.rows() == y.n_slices(), "adjoint_wrt_weights: sample count mismatch");
  return coefficients.transpose() * dual_difference(space, y);
}

Matrix pairwise_sq_dist(const EdgeSpace& space, const MatrixRef& signals) {
  require(signals.cols() == space.n_nodes(), "pairwise_sq_dist: signal width does not match node count");
  Matrix z(signals.rows(), space.n_edges());
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [n, m] = space.endpoints(e);
    z.col(e) = (signals.col(n) - signals.col(m)).array().square();
  }
  return z;
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> eigen_symmetric(const MatrixRef& a) {
  require(a.rows() == a.cols(), "graph_filter: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw std::runtime_error("graph_filter: eigendecomposition failed");
  return eig;
}

}  // namespace

Matrix graph_filter(const MatrixRef& laplacian, const std::function<double(double)>& g) {
  const auto eig = eigen_symmetric(laplacian);
  const Vector lam = eig.eigenvalues().unaryExpr(g);
  const Matrix& u = eig.eigenvectors();
  return u * lam.asDiagonal() * u.transpose();
}

Matrix pseudo_inverse_filter(const MatrixRef& laplacian, const std::function<double(double)>& g) {
  const auto eig = eigen_symmetric(laplacian);
  const Vector& lam = eig.eigenvalues();
  const double top = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  const double cut = kSpectralCutoff * top;
  Vector gl(lam.size());
  for (Index i = 0; i < lam.size(); ++i) gl(i) = (top > 0.0 && lam(i) > cut) ? g(lam(i)) : 0.0;
  const Matrix& u = eig.eigenvectors();
  return u * gl.asDiagonal() * u.transpose();
}

Matrix laplacian_pinv(const MatrixRef& laplacian) {
  return pseudo_inverse_filter(laplacian, [](double l) { return 1.0 / l; });
}

std::vector<Index> connected_components(const EdgeSpace& space, const VectorRef& w) {
  require_edges(space, w.size(), "connected_components");
  std::vector<Index> parent(static_cast<std::size_t>(space.n_nodes()));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Index e = 0; e < space.n_edges(); ++e) {
    if (w(e) <= 0.0) continue;
    const auto [i, j] = space.endpoints(e);
    const Index a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<Index> label(parent.size());
  for (Index i = 0; i < space.n_nodes(); ++i) label[i] = find(i);
  return label;
}

}  // namespace graphdict
