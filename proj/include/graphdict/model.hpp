#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>

#include "graphdict/graph_core.hpp"
#include "graphdict/solver.hpp"

namespace graphdict {

enum class Variant { Log, Spectral };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct Hyperparams {
  double alpha_w_l1 = 0.0;
  double alpha_c_l1 = 0.0;
  double alpha_ortho = 0.0;
  double alpha_diff = 0.0;
  int window_size = 1;
  bool allow_ragged_window = true;  // last window may be shorter than window_size
  Variant variant = Variant::Log;
  std::optional<Matrix> fixed_coefficients;  // n_windows x K, hierarchical mode

  void validate() const;
};

// Shared eigenvectors for the Spectral variant.
class SpectralBasis {
 public:
  explicit SpectralBasis(Matrix u);
  const Matrix& u() const { return u_; }
  // columns proportional to the all-ones vector (Laplacian nullspace)
  const std::vector<bool>& constant_columns() const { return constant_; }
  bool degenerate = false;

 private:
  Matrix u_;
  std::vector<bool> constant_;
};

// Eigenvectors of the empirical covariance, sorted by descending eigenvalue.
SpectralBasis spectral_basis_from_data(const Matrix& x);

// ---------------------------------------------------------------------------
// Pieces of the objective

// (grad_W f, grad_Delta f) for f = sum((C W) .* Z) + alpha_ortho * sum_{k<k'} <w_k, w_k'>.
std::pair<Matrix, Matrix> grad_f(const Matrix& w, const Matrix& c, const Matrix& z, const Hyperparams& h);

// (W - tau*alpha_w)_+
Matrix prox_g_w(const Matrix& w, double tau, const Hyperparams& h);

// Column-wise TV prox (if alpha_diff > 0), then shift by tau*alpha_c, then clamp to [0,1].
Matrix prox_g_c(const Matrix& c, double tau, const Hyperparams& h);

// (Y - sqrt(Y^2 + 4 sigma))/2, elementwise.
Matrix prox_h_conj_log(const Matrix& y, double sigma);
// Column j uses sigma * weights(j): barrier weighted by window sample count.
Matrix prox_h_conj_log(const Matrix& y, double sigma, const Vector& column_weights);

// N x T degree matrix D (C W)^T.
Matrix degree_forward(const EdgeSpace& space, const Matrix& c, const Matrix& w);
// Coefficient adjoint: (Y^T D) W^T, T x K.
Matrix degree_adjoint_c(const EdgeSpace& space, const Matrix& y, const Matrix& w);
// Weight adjoint: C^T (Y^T D), K x E.
Matrix degree_adjoint_w(const EdgeSpace& space, const Matrix& c, const Matrix& y);

// Per slice: U diag(phi(diag(U^T Y_t U))) U^T with phi(l) = (l - sqrt(l^2 + 4 gamma))/2.
Tensor3 prox_h_conj_spectral(const Tensor3& y, double gamma, const SpectralBasis& basis);
Tensor3 prox_h_conj_spectral(const Tensor3& y, double gamma, const SpectralBasis& basis, const Vector& slice_weights);

// Full loss on raw samples (window rows of c are expanded internally via h.window_size).
// +infinity when W < 0, C outside the box, or a barrier argument is not positive.
double objective_value(const Matrix& w, const Matrix& c, const Matrix& x, const Hyperparams& h);

// ---------------------------------------------------------------------------
// Problem assembly

// Window sums of the rows of z and the sample count of each window.
std::pair<Matrix, Vector> aggregate_windows(const Matrix& z, int window_size);
Index n_windows(Index n_samples, int window_size);
// Repeat window rows back onto samples.
Matrix expand_windows(const Matrix& c, Index n_samples, int window_size);

// Binary tree encoding, breadth-first: root on all windows, then 2 children
// splitting it, and so on. levels=2 gives 3 atoms.
Matrix hierarchical_coefficients(Index n_windows, int levels);

struct ModelProblem {
  BilinearProblem problem;
  EdgeSpace space;
  Matrix z;       // window-aggregated Z
  Vector counts;  // samples per window
  Index n_atoms = 0;
  Hyperparams hyper;
  std::shared_ptr<const SpectralBasis> basis;  // Spectral only

  // barrier gradient at op(c, w), used as the initial dual
  Matrix dual_init(const Matrix& c, const Matrix& w) const;
  double objective(const Matrix& w, const Matrix& c) const;
};

ModelProblem build_problem(const Matrix& x, Index n_atoms, const Hyperparams& h);

struct InitialPoint {
  Matrix w;
  Matrix c;
};

// W uniform(0,1) rows normalized to unit L1, C = 1/K (or the fixed
// coefficients), then W rescaled along the ray to the minimizer of the
// linear + barrier part of the objective.
InitialPoint initial_point(const ModelProblem& mp, std::uint64_t seed);

// Solver defaults used by the model: sigma 0.1, steps recalibrated every iteration.
SolverParams default_solver_params();

struct FitResult {
  Matrix w;  // K x E
  Matrix c;  // n_windows x K
  SolverState state;
};

FitResult fit(const Matrix& x, Index n_atoms, const Hyperparams& h, const SolverParams& sp, std::uint64_t seed);

// Learn only coefficients with the dictionary frozen.
FitResult fit_coefficients(const Matrix& x, const Matrix& w, const Hyperparams& h, const SolverParams& sp);

// Reorder atoms by descending total coefficient mass (stable).
void sort_atoms_by_mass(Matrix& w, Matrix& c);

}  // namespace graphdict
