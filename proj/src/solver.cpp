#include "graphdict/solver.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace graphdict {

namespace {

constexpr double kEps = 1e-12;

double rel_change(const Matrix& next, const Matrix& prev) {
  if (next.size() == 0) return 0.0;
  return (next - prev).norm() / std::max(prev.norm(), kEps);
}

}  // namespace

void BilinearProblem::use_laplacian_coupling(const EdgeSpace& space) {
  op = [space](const Matrix& c, const Matrix& w) { return bilinear_laplacian(space, c, w).storage(); };
  adjoint_c = [space](const Matrix& y, const Matrix& w) {
    return adjoint_wrt_coefficients(space, Tensor3::from_storage(y, y.cols() / space.n_nodes()), w);
  };
  adjoint_w = [space](const Matrix& c, const Matrix& y) {
    return adjoint_wrt_weights(space, c, Tensor3::from_storage(y, y.cols() / space.n_nodes()));
  };
}

void SolverParams::validate() const {
  if (!(tau_w > 0.0) || !(tau_c > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("solver: step parameters must be positive");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("solver: rel_tol must be positive");
  if (max_iter < 0) throw std::invalid_argument("solver: max_iter must be nonnegative");
  if (lipschitz_estimate && !(*lipschitz_estimate > 0.0))
    throw std::invalid_argument("solver: lipschitz_estimate must be positive");
  if (!(step_safety > 0.0)) throw std::invalid_argument("solver: step_safety must be positive");
}

namespace {

// in-place iteration so long solves do not copy the trace every step
void advance(SolverState& s, const BilinearProblem& prob, const SolverParams& params) {
  if (s.c.cols() != s.w.rows()) throw std::invalid_argument("solver step: atom count mismatch");

  Matrix w = prob.prox_w(s.w - params.tau_w * (prob.adjoint_w(s.c, s.y) + prob.grad_w(s.w, s.c)), params.tau_w);
  Matrix c = prob.prox_c(s.c - params.tau_c * (prob.adjoint_c(s.y, s.w) + prob.grad_c(s.w, s.c)), params.tau_c);
  const Matrix bar = prob.op(2.0 * c - s.c, 2.0 * w - s.w);
  Matrix y = prob.prox_dual(s.y + params.sigma * bar, params.sigma);

  ++s.iteration;
  s.residual_w.push_back(rel_change(w, s.w));
  s.residual_c.push_back(rel_change(c, s.c));
  s.residual_dual.push_back(rel_change(y, s.y));
  s.w = std::move(w);
  s.c = std::move(c);
  s.y = std::move(y);
  if (prob.objective) s.objective.push_back(prob.objective(s.w, s.c));

  if (!s.w.allFinite() || !s.c.allFinite() || !s.y.allFinite())
    throw DivergenceError("solver diverged at iteration " + std::to_string(s.iteration), s);
}

}  // namespace

SolverState step(const SolverState& state, const BilinearProblem& prob, const SolverParams& params) {
  SolverState next = state;
  advance(next, prob, params);
  return next;
}

double operator_norm(const std::function<Matrix(const Matrix&)>& forward,
                     const std::function<Matrix(const Matrix&)>& adjoint, Matrix v, int iters,
                     Matrix* final_vector) {
  double n = v.norm();
  if (n == 0.0) return 0.0;
  v /= n;
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Matrix u = adjoint(forward(v));
    lambda = u.norm();
    if (lambda == 0.0 || !std::isfinite(lambda)) return 0.0;
    v = u / lambda;
  }
  if (final_vector) *final_vector = v;
  return std::sqrt(lambda);
}

StepSizes calibrate_steps(const BilinearProblem& prob, const Matrix& w, const Matrix& c, double sigma, double safety,
                          int power_iters, double lipschitz_override, Matrix* warm_w, Matrix* warm_c) {
  // Perron start: the linearizations map nonnegative inputs to nonnegative
  // degree/Laplacian patterns, so the all-ones start is never orthogonal to
  // the leading singular vector.
  auto start = [](const Matrix* warm, Index r, Index k) {
    return (warm && warm->rows() == r && warm->cols() == k && warm->norm() > 0.0) ? *warm : Matrix::Ones(r, k);
  };
  const double norm_w = operator_norm([&](const Matrix& v) { return prob.op(c, v); },
                                      [&](const Matrix& y) { return prob.adjoint_w(c, y); },
                                      start(warm_w, w.rows(), w.cols()), power_iters, warm_w);
  const double norm_c = operator_norm([&](const Matrix& v) { return prob.op(v, w); },
                                      [&](const Matrix& y) { return prob.adjoint_c(y, w); },
                                      start(warm_c, c.rows(), c.cols()), power_iters, warm_c);
  const double bw = lipschitz_override > 0.0 ? lipschitz_override : prob.lipschitz_w;
  const double bc = lipschitz_override > 0.0 ? lipschitz_override : prob.lipschitz_c;
  const double dw = std::max(bw / 2.0 + sigma * norm_w * norm_w, kEps);
  const double dc = std::max(bc / 2.0 + sigma * norm_c * norm_c, kEps);
  return {safety / dw, safety / dc, norm_w, norm_c};
}

SolverState solve(const BilinearProblem& prob, const SolverParams& params, SolverState state) {
  params.validate();
  SolverParams p = params;
  const double beta = params.lipschitz_estimate.value_or(-1.0);
  state.converged = false;
  Matrix warm_w, warm_c;
  for (int it = 0; it < params.max_iter; ++it) {
    if (params.recalibrate_every > 0 && it % params.recalibrate_every == 0) {
      const int iters = it == 0 ? 30 : 3;
      const StepSizes s = calibrate_steps(prob, state.w, state.c, p.sigma, p.step_safety, iters, beta, &warm_w, &warm_c);
      p.tau_w = s.tau_w;
      p.tau_c = s.tau_c;
    }
    advance(state, prob, p);
    const double r = std::max(state.residual_w.back(), state.residual_c.back());
    if (state.iteration >= params.min_iter && r < params.rel_tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

std::string trace_csv(const SolverState& state) {
  std::string out = "iteration,residual_w,residual_c,residual_dual,objective\n";
  const std::size_t n = state.residual_w.size();
  const std::size_t first = static_cast<std::size_t>(state.iteration) - n;
  char buf[160];
  for (std::size_t i = 0; i < n; ++i) {
    const double obj = i < state.objective.size() ? state.objective[i] : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", first + i + 1, state.residual_w[i],
                  state.residual_c[i], state.residual_dual[i], obj);
    out += buf;
  }
  return out;
}

}  // namespace graphdict
