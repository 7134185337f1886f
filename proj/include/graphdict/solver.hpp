#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdict/graph_core.hpp"

namespace graphdict {

// Primal blocks: W (K x E) and C (coefficients, T x K). The dual variable is
// carried as a plain Matrix whose layout is decided by the coupling operator
// (Tensor3 storage for the Laplacian coupling, N x T for the degree coupling).
struct BilinearProblem {
  std::function<Matrix(const Matrix& w, double tau)> prox_w;
  std::function<Matrix(const Matrix& c, double tau)> prox_c;
  std::function<Matrix(const Matrix& w, const Matrix& c)> grad_w;
  std::function<Matrix(const Matrix& w, const Matrix& c)> grad_c;
  std::function<Matrix(const Matrix& y, double sigma)> prox_dual;

  // coupling op(C, W) and its partial adjoints
  std::function<Matrix(const Matrix& c, const Matrix& w)> op;
  std::function<Matrix(const Matrix& y, const Matrix& w)> adjoint_c;
  std::function<Matrix(const Matrix& c, const Matrix& y)> adjoint_w;

  // optional, used for the objective trace only
  std::function<double(const Matrix& w, const Matrix& c)> objective;

  // Lipschitz constants of grad_w in W and grad_c in C
  double lipschitz_w = 0.0;
  double lipschitz_c = 0.0;

  // Fill op/adjoints with the Laplacian-tensor coupling of graph-core.
  void use_laplacian_coupling(const EdgeSpace& space);
};

struct SolverParams {
  double tau_w = 1.0;
  double tau_c = 1.0;
  double sigma = 0.1;
  int max_iter = 1000;
  double rel_tol = 1e-6;
  std::optional<double> lipschitz_estimate;  // overrides the problem's beta

  int min_iter = 0;             // convergence test is skipped before this
  int recalibrate_every = 0;    // 0: keep tau_w, tau_c fixed
  double step_safety = 0.9;

  void validate() const;
};

struct SolverState {
  Matrix w;
  Matrix c;
  Matrix y;
  int iteration = 0;
  std::vector<double> residual_w;
  std::vector<double> residual_c;
  std::vector<double> residual_dual;
  std::vector<double> objective;  // empty when the problem has no objective hook
  bool converged = false;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, SolverState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const SolverState& state() const { return state_; }

 private:
  SolverState state_;
};

// One bilinear primal-dual iteration (Jacobi: both primal blocks read the
// old iterates, the dual reads the over-relaxed pair).
SolverState step(const SolverState& state, const BilinearProblem& prob, const SolverParams& params);

SolverState solve(const BilinearProblem& prob, const SolverParams& params, SolverState init);

struct StepSizes {
  double tau_w;
  double tau_c;
  double norm_w;  // estimated ||op(C, .)||
  double norm_c;  // estimated ||op(., W)||
};

// tau = safety / (beta/2 + sigma * rho^2) per block, rho from power
// iteration on the two linearizations at the given iterates.
// Non-empty warm vectors seed the power iteration and receive the final
// iterates, so repeated calibration along a trajectory can use few iterations.
StepSizes calibrate_steps(const BilinearProblem& prob, const Matrix& w, const Matrix& c, double sigma,
                          double safety = 0.9, int power_iters = 30, double lipschitz_override = -1.0,
                          Matrix* warm_w = nullptr, Matrix* warm_c = nullptr);

// Largest singular value of a linear map given by forward/adjoint closures.
double operator_norm(const std::function<Matrix(const Matrix&)>& forward,
                     const std::function<Matrix(const Matrix&)>& adjoint, Matrix start, int iters,
                     Matrix* final_vector = nullptr);

// iteration,residual_w,residual_c,residual_dual,objective
std::string trace_csv(const SolverState& state);

}  // namespace graphdict
