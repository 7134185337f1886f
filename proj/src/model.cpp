#include "graphdict/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "graphdict/rng.hpp"
#include "graphdict/tv_prox.hpp"

namespace graphdict {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-12;

bool finite_nonneg(double a) { return std::isfinite(a) && a >= 0.0; }

}  // namespace

const char* variant_name(Variant v) { return v == Variant::Log ? "log" : "spectral"; }

Variant parse_variant(const std::string& name) {
  if (name == "log" || name == "Log") return Variant::Log;
  if (name == "spectral" || name == "Spectral") return Variant::Spectral;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

void Hyperparams::validate() const {
  if (!finite_nonneg(alpha_w_l1)) throw std::invalid_argument("alpha_w_l1 must be nonnegative");
  if (!finite_nonneg(alpha_c_l1)) throw std::invalid_argument("alpha_c_l1 must be nonnegative");
  if (!finite_nonneg(alpha_ortho)) throw std::invalid_argument("alpha_ortho must be nonnegative");
  if (!finite_nonneg(alpha_diff)) throw std::invalid_argument("alpha_diff must be nonnegative");
  if (window_size < 1) throw std::invalid_argument("window_size must be positive");
  if (fixed_coefficients) Coefficients{*fixed_coefficients};
}

// ---------------------------------------------------------------------------

SpectralBasis::SpectralBasis(Matrix u) : u_(std::move(u)) {
  if (u_.rows() != u_.cols()) throw std::domain_error("SpectralBasis: U must be square");
  const Index n = u_.rows();
  if ((u_.transpose() * u_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
    throw std::domain_error("SpectralBasis: U is not orthonormal");
  constant_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto col = u_.col(i);
    constant_[static_cast<std::size_t>(i)] = (col.array() - col.mean()).matrix().norm() < 1e-6;
  }
}

SpectralBasis spectral_basis_from_data(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("spectral_basis_from_data: need at least 2 samples");
  const double t = static_cast<double>(x.rows());
  const Vector mean = x.colwise().mean().transpose();
  const Matrix cov = x.transpose() * x / t - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("spectral_basis_from_data: eigendecomposition failed");
  const Index n = cov.rows();
  // ascending from Eigen, reverse to descending
  Matrix u(n, n);
  Vector lam(n);
  for (Index i = 0; i < n; ++i) {
    u.col(i) = eig.eigenvectors().col(n - 1 - i);
    lam(i) = eig.eigenvalues()(n - 1 - i);
  }
  SpectralBasis basis(u);
  const double top = lam.size() ? std::abs(lam(0)) : 0.0;
  basis.degenerate = !(top > 1e-12);
  for (Index i = 0; i + 1 < n && !basis.degenerate; ++i)
    if (lam(i) - lam(i + 1) <= 1e-10 * top) basis.degenerate = true;
  return basis;
}

// ---------------------------------------------------------------------------

std::pair<Matrix, Matrix> grad_f(const Matrix& w, const Matrix& c, const Matrix& z, const Hyperparams& h) {
  if (c.cols() != w.rows() || z.rows() != c.rows() || z.cols() != w.cols())
    throw std::invalid_argument("grad_f: dimension mismatch");
  Matrix gw = c.transpose() * z;
  if (h.alpha_ortho != 0.0) {
    const Eigen::RowVectorXd total = w.colwise().sum();
    gw += h.alpha_ortho * ((-w).rowwise() + total);
  }
  return {std::move(gw), z * w.transpose()};
}

Matrix prox_g_w(const Matrix& w, double tau, const Hyperparams& h) {
  return (w.array() - tau * h.alpha_w_l1).cwiseMax(0.0).matrix();
}

Matrix prox_g_c(const Matrix& c, double tau, const Hyperparams& h) {
  Matrix out = c;
  if (h.alpha_diff > 0.0)
    for (Index k = 0; k < out.cols(); ++k) out.col(k) = tv1d_prox(out.col(k), tau * h.alpha_diff);
  return (out.array() - tau * h.alpha_c_l1).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

Matrix prox_h_conj_log(const Matrix& y, double sigma) {
  return ((y.array() - (y.array().square() + 4.0 * sigma).sqrt()) / 2.0).matrix();
}

Matrix prox_h_conj_log(const Matrix& y, double sigma, const Vector& column_weights) {
  if (column_weights.size() != y.cols()) throw std::invalid_argument("prox_h_conj_log: weight count mismatch");
  Matrix out(y.rows(), y.cols());
  for (Index j = 0; j < y.cols(); ++j) {
    const double s = 4.0 * sigma * column_weights(j);
    out.col(j) = ((y.col(j).array() - (y.col(j).array().square() + s).sqrt()) / 2.0).matrix();
  }
  return out;
}

Matrix degree_forward(const EdgeSpace& space, const Matrix& c, const Matrix& w) {
  if (c.cols() != w.rows() || w.cols() != space.n_edges()) throw std::invalid_argument("degree_forward: dimension mismatch");
  const Matrix mixed = c * w;
  Matrix deg = Matrix::Zero(space.n_nodes(), mixed.rows());
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [n, m] = space.endpoints(e);
    deg.row(n) += mixed.col(e).transpose();
    deg.row(m) += mixed.col(e).transpose();
  }
  return deg;
}

namespace {

// (Y^T D), T x E with entries Y(n,t) + Y(m,t)
Matrix degree_pullback(const EdgeSpace& space, const Matrix& y) {
  if (y.rows() != space.n_nodes()) throw std::invalid_argument("degree adjoint: dual has wrong node count");
  Matrix out(y.cols(), space.n_edges());
  for (Index e = 0; e < space.n_edges(); ++e) {
    const auto [n, m] = space.endpoints(e);
    out.col(e) = (y.row(n) + y.row(m)).transpose();
  }
  return out;
}

}  // namespace

Matrix degree_adjoint_c(const EdgeSpace& space, const Matrix& y, const Matrix& w) {
  if (w.cols() != space.n_edges()) throw std::invalid_argument("degree_adjoint_c: dimension mismatch");
  return degree_pullback(space, y) * w.transpose();
}

Matrix degree_adjoint_w(const EdgeSpace& space, const Matrix& c, const Matrix& y) {
  if (c.rows() != y.cols()) throw std::invalid_argument("degree_adjoint_w: dimension mismatch");
  return c.transpose() * degree_pullback(space, y);
}

Tensor3 prox_h_conj_spectral(const Tensor3& y, double gamma, const SpectralBasis& basis, const Vector& slice_weights) {
  const Matrix& u = basis.u();
  if (u.rows() != y.n()) throw std::invalid_argument("prox_h_conj_spectral: basis size mismatch");
  if (slice_weights.size() != y.n_slices()) throw std::invalid_argument("prox_h_conj_spectral: weight count mismatch");
  Tensor3 out(y.n_slices(), y.n());
  for (Index t = 0; t < y.n_slices(); ++t) {
    const Vector lam = (u.transpose() * y.slice(t) * u).diagonal();
    const double g4 = 4.0 * gamma * slice_weights(t);
    const Vector mapped = ((lam.array() - (lam.array().square() + g4).sqrt()) / 2.0).matrix();
    out.slice(t) = u * mapped.asDiagonal() * u.transpose();
  }
  return out;
}

Tensor3 prox_h_conj_spectral(const Tensor3& y, double gamma, const SpectralBasis& basis) {
  return prox_h_conj_spectral(y, gamma, basis, Vector::Ones(y.n_slices()));
}

// ---------------------------------------------------------------------------

Index n_windows(Index n_samples, int window_size) { return (n_samples + window_size - 1) / window_size; }

std::pair<Matrix, Vector> aggregate_windows(const Matrix& z, int window_size) {
  if (window_size < 1) throw std::invalid_argument("window_size must be positive");
  const Index nw = n_windows(z.rows(), window_size);
  Matrix zw = Matrix::Zero(nw, z.cols());
  Vector counts = Vector::Zero(nw);
  for (Index t = 0; t < z.rows(); ++t) {
    zw.row(t / window_size) += z.row(t);
    counts(t / window_size) += 1.0;
  }
  return {std::move(zw), std::move(counts)};
}

Matrix expand_windows(const Matrix& c, Index n_samples, int window_size) {
  if (c.rows() != n_windows(n_samples, window_size)) throw std::invalid_argument("expand_windows: window count mismatch");
  Matrix out(n_samples, c.cols());
  for (Index t = 0; t < n_samples; ++t) out.row(t) = c.row(t / window_size);
  return out;
}

Matrix hierarchical_coefficients(Index nw, int levels) {
  if (levels < 1 || nw < 1) throw std::invalid_argument("hierarchical_coefficients: need levels >= 1 and windows >= 1");
  const Index k = (Index{1} << levels) - 1;
  Matrix c = Matrix::Zero(nw, k);
  for (int d = 0; d < levels; ++d) {
    const Index first = (Index{1} << d) - 1;
    for (Index j = 0; j < nw; ++j) c(j, first + (j << d) / nw) = 1.0;
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

double barrier_log(const Matrix& deg, const Vector& counts) {
  double v = 0.0;
  for (Index j = 0; j < deg.cols(); ++j)
    for (Index n = 0; n < deg.rows(); ++n) {
      if (!(deg(n, j) > 0.0)) return kInf;
      v -= counts(j) * std::log(deg(n, j));
    }
  return v;
}

double barrier_spectral(const EdgeSpace& space, const Matrix& c, const Matrix& w, const Vector& counts,
                        const SpectralBasis& basis) {
  const Tensor3 lap = bilinear_laplacian(space, c, w);
  const Matrix& u = basis.u();
  double v = 0.0;
  for (Index t = 0; t < lap.n_slices(); ++t) {
    const Vector lam = (u.transpose() * lap.slice(t) * u).diagonal();
    for (Index i = 0; i < lam.size(); ++i) {
      if (basis.constant_columns()[static_cast<std::size_t>(i)]) continue;
      if (!(lam(i) > 0.0)) return kInf;
      v -= counts(t) * std::log(lam(i));
    }
  }
  return v;
}

double smooth_and_penalties(const Matrix& w, const Matrix& c, const Matrix& z, const Hyperparams& h) {
  if ((w.array() < 0.0).any() || (c.array() < 0.0).any() || (c.array() > 1.0).any()) return kInf;
  double v = (c * w).cwiseProduct(z).sum();
  v += h.alpha_w_l1 * w.sum() + h.alpha_c_l1 * c.sum();
  if (h.alpha_ortho != 0.0) {
    const Matrix gram = w * w.transpose();
    v += h.alpha_ortho * (gram.sum() - gram.trace()) / 2.0;
  }
  if (h.alpha_diff != 0.0 && c.rows() > 1)
    v += h.alpha_diff * (c.bottomRows(c.rows() - 1) - c.topRows(c.rows() - 1)).cwiseAbs().sum();
  return v;
}

}  // namespace

double ModelProblem::objective(const Matrix& w, const Matrix& c) const {
  const double base = smooth_and_penalties(w, c, z, hyper);
  if (!std::isfinite(base)) return base;
  if (hyper.variant == Variant::Log) return base + barrier_log(degree_forward(space, c, w), counts);
  return base + barrier_spectral(space, c, w, counts, *basis);
}

double objective_value(const Matrix& w, const Matrix& c, const Matrix& x, const Hyperparams& h) {
  const ModelProblem mp = build_problem(x, w.rows(), h);
  return mp.objective(w, c);
}

Matrix ModelProblem::dual_init(const Matrix& c, const Matrix& w) const {
  if (hyper.variant == Variant::Log) {
    Matrix deg = degree_forward(space, c, w);
    for (Index j = 0; j < deg.cols(); ++j)
      for (Index n = 0; n < deg.rows(); ++n) deg(n, j) = -counts(j) / std::max(deg(n, j), kFloor);
    return deg;
  }
  const Tensor3 lap = bilinear_laplacian(space, c, w);
  const Matrix& u = basis->u();
  Tensor3 y(lap.n_slices(), lap.n());
  for (Index t = 0; t < lap.n_slices(); ++t) {
    Vector lam = (u.transpose() * lap.slice(t) * u).diagonal();
    for (Index i = 0; i < lam.size(); ++i)
      lam(i) = basis->constant_columns()[static_cast<std::size_t>(i)] ? 0.0 : -counts(t) / std::max(lam(i), kFloor);
    y.slice(t) = u * lam.asDiagonal() * u.transpose();
  }
  return y.storage();
}

ModelProblem build_problem(const Matrix& x, Index n_atoms, const Hyperparams& h) {
  h.validate();
  if (n_atoms < 1) throw std::invalid_argument("build_problem: need at least one atom");
  const Index t = x.rows();
  if (t < 1) throw std::invalid_argument("build_problem: no samples");
  if (!h.allow_ragged_window && t % h.window_size != 0)
    throw std::invalid_argument("build_problem: window_size " + std::to_string(h.window_size) +
                                " does not divide " + std::to_string(t) + " samples");

  ModelProblem mp{.problem = {}, .space = EdgeSpace(x.cols()), .z = {}, .counts = {}, .n_atoms = n_atoms, .hyper = h,
                  .basis = nullptr};
  std::tie(mp.z, mp.counts) = aggregate_windows(pairwise_sq_dist(mp.space, x), h.window_size);
  const Index nw = mp.z.rows();
  if (h.fixed_coefficients && (h.fixed_coefficients->rows() != nw || h.fixed_coefficients->cols() != n_atoms))
    throw std::invalid_argument("build_problem: fixed_coefficients must be " + std::to_string(nw) + " x " +
                                std::to_string(n_atoms));

  auto z = std::make_shared<const Matrix>(mp.z);
  auto counts = std::make_shared<const Vector>(mp.counts);
  const EdgeSpace space = mp.space;
  BilinearProblem& p = mp.problem;

  p.grad_w = [z, h](const Matrix& w, const Matrix& c) { return grad_f(w, c, *z, h).first; };
  p.grad_c = [z](const Matrix& w, const Matrix&) { return Matrix(*z * w.transpose()); };
  p.prox_w = [h](const Matrix& w, double tau) { return prox_g_w(w, tau, h); };
  if (h.fixed_coefficients) {
    auto fixed = std::make_shared<const Matrix>(*h.fixed_coefficients);
    p.prox_c = [fixed](const Matrix&, double) { return *fixed; };
  } else {
    p.prox_c = [h](const Matrix& c, double tau) { return prox_g_c(c, tau, h); };
  }
  p.lipschitz_w = h.alpha_ortho * static_cast<double>(n_atoms - 1);
  p.lipschitz_c = 0.0;

  if (h.variant == Variant::Log) {
    p.op = [space](const Matrix& c, const Matrix& w) { return degree_forward(space, c, w); };
    p.adjoint_c = [space](const Matrix& y, const Matrix& w) { return degree_adjoint_c(space, y, w); };
    p.adjoint_w = [space](const Matrix& c, const Matrix& y) { return degree_adjoint_w(space, c, y); };
    p.prox_dual = [counts](const Matrix& y, double sigma) { return prox_h_conj_log(y, sigma, *counts); };
  } else {
    mp.basis = std::make_shared<const SpectralBasis>(spectral_basis_from_data(x));
    p.use_laplacian_coupling(space);
    auto basis = mp.basis;
    p.prox_dual = [counts, basis](const Matrix& y, double sigma) {
      const Tensor3 yt = Tensor3::from_storage(y, counts->size());
      return prox_h_conj_spectral(yt, sigma, *basis, *counts).storage();
    };
  }
  return mp;
}

InitialPoint initial_point(const ModelProblem& mp, std::uint64_t seed) {
  Rng rng(seed);
  const Index k = mp.n_atoms, e = mp.space.n_edges();
  Matrix w(k, e);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < e; ++j) w(i, j) = rng.uniform();
  for (Index i = 0; i < k; ++i) {
    const double s = w.row(i).sum();
    if (s > 0.0) w.row(i) /= s;
  }
  Matrix c = mp.hyper.fixed_coefficients ? *mp.hyper.fixed_coefficients
                                         : Matrix::Constant(mp.z.rows(), k, 1.0 / static_cast<double>(k));

  // minimize a*s + b*s^2 - B*log(s) over the scale s of W
  double n_barrier = static_cast<double>(mp.space.n_nodes());
  if (mp.hyper.variant == Variant::Spectral)
    n_barrier -= static_cast<double>(std::count(mp.basis->constant_columns().begin(),
                                                mp.basis->constant_columns().end(), true));
  const double big_b = n_barrier * mp.counts.sum();
  const double a = (c * w).cwiseProduct(mp.z).sum() + mp.hyper.alpha_w_l1 * w.sum();
  const Matrix gram = w * w.transpose();
  const double b = mp.hyper.alpha_ortho * (gram.sum() - gram.trace()) / 2.0;
  double scale = 1.0;
  if (b > 0.0)
    scale = (-a + std::sqrt(a * a + 8.0 * b * big_b)) / (4.0 * b);
  else if (a > 0.0)
    scale = big_b / a;
  if (std::isfinite(scale) && scale > 0.0) w *= scale;
  return {std::move(w), std::move(c)};
}

SolverParams default_solver_params() {
  SolverParams p;
  p.sigma = 0.1;
  p.max_iter = 150;
  p.rel_tol = 1e-7;
  p.min_iter = 50;
  p.recalibrate_every = 1;
  p.step_safety = 0.9;
  return p;
}

namespace {

FitResult run(const ModelProblem& mp, Matrix w, Matrix c, const SolverParams& sp) {
  SolverState init;
  init.y = mp.dual_init(c, w);
  init.w = std::move(w);
  init.c = std::move(c);
  BilinearProblem prob = mp.problem;
  prob.objective = [&mp](const Matrix& ww, const Matrix& cc) { return mp.objective(ww, cc); };
  SolverState out = solve(prob, sp, std::move(init));
  FitResult r{out.w, out.c, std::move(out)};
  return r;
}

}  // namespace

FitResult fit(const Matrix& x, Index n_atoms, const Hyperparams& h, const SolverParams& sp, std::uint64_t seed) {
  const ModelProblem mp = build_problem(x, n_atoms, h);
  InitialPoint p0 = initial_point(mp, seed);
  return run(mp, std::move(p0.w), std::move(p0.c), sp);
}

FitResult fit_coefficients(const Matrix& x, const Matrix& w, const Hyperparams& h, const SolverParams& sp) {
  Hyperparams hh = h;
  hh.fixed_coefficients.reset();
  ModelProblem mp = build_problem(x, w.rows(), hh);
  if (w.cols() != mp.space.n_edges()) throw std::invalid_argument("fit_coefficients: dictionary edge count mismatch");
  auto frozen = std::make_shared<const Matrix>(w);
  mp.problem.prox_w = [frozen](const Matrix&, double) { return *frozen; };
  mp.problem.grad_w = [](const Matrix& ww, const Matrix&) { return Matrix(Matrix::Zero(ww.rows(), ww.cols())); };
  mp.problem.lipschitz_w = 0.0;
  Matrix c = Matrix::Constant(mp.z.rows(), w.rows(), 1.0 / static_cast<double>(w.rows()));
  return run(mp, w, std::move(c), sp);
}

void sort_atoms_by_mass(Matrix& w, Matrix& c) {
  if (c.cols() != w.rows()) throw std::invalid_argument("sort_atoms_by_mass: atom count mismatch");
  std::vector<Index> order(static_cast<std::size_t>(w.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector mass = c.colwise().sum().transpose();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return mass(a) > mass(b); });
  Matrix w2(w.rows(), w.cols()), c2(c.rows(), c.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    w2.row(static_cast<Index>(i)) = w.row(order[i]);
    c2.col(static_cast<Index>(i)) = c.col(order[i]);
  }
  w = std::move(w2);
  c = std::move(c2);
}

}  // namespace graphdict
