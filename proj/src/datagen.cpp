#include "graphdict/datagen.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace graphdict {

namespace {

void require_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

// Factor once, sample many: x = U sqrt(Lambda^+) eta, then re-centre per component.
struct LgmrfFactor {
  Matrix transform;  // N x N, x = transform * eta
  std::vector<Index> component;
  Index n_components = 0;

  explicit LgmrfFactor(const Matrix& lap) {
    transform = pseudo_inverse_filter(lap, [](double l) { return std::sqrt(1.0 / l); });
    const Index n = lap.rows();
    // components from the off-diagonal pattern
    std::vector<Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (lap(i, j) != 0.0) {
          const Index a = find(i), b = find(j);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    component.resize(parent.size());
    std::map<Index, Index> relabel;
    for (Index i = 0; i < n; ++i) {
      const auto [it, fresh] = relabel.try_emplace(find(i), static_cast<Index>(relabel.size()));
      component[i] = it->second;
    }
    n_components = static_cast<Index>(relabel.size());
  }

  Vector draw(Rng& rng) const {
    const Index n = transform.rows();
    Vector eta(n);
    for (Index i = 0; i < n; ++i) eta(i) = rng.normal();
    Vector x = transform * eta;
    Vector sum = Vector::Zero(n_components), cnt = Vector::Zero(n_components);
    for (Index i = 0; i < n; ++i) {
      sum(component[i]) += x(i);
      cnt(component[i]) += 1.0;
    }
    for (Index i = 0; i < n; ++i) x(i) -= sum(component[i]) / cnt(component[i]);
    return x;
  }
};

}  // namespace

WeightVector er_graph(Index n_nodes, double p, const WeightSpec& weights, Rng& rng) {
  require_prob(p, "er_graph: p");
  EdgeSpace space(n_nodes);
  Vector w = Vector::Zero(space.n_edges());
  for (Index e = 0; e < space.n_edges(); ++e)
    if (rng.bernoulli(p)) w(e) = weights.draw(rng);
  return {space, w};
}

Matrix superposition_coefficients(Index n_atoms, Index s, Index n_samples, Rng& rng) {
  if (s < 1 || s > n_atoms) throw std::domain_error("superposition_coefficients: need 1 <= s <= K");
  Matrix c = Matrix::Zero(n_samples, n_atoms);
  std::vector<Index> atoms(static_cast<std::size_t>(n_atoms));
  for (Index t = 0; t < n_samples; ++t) {
    const Index count = 1 + static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(s)));
    std::iota(atoms.begin(), atoms.end(), Index{0});
    rng.shuffle(atoms);
    for (Index i = 0; i < count; ++i) c(t, atoms[static_cast<std::size_t>(i)]) = 1.0;
  }
  return c;
}

Index train_size_for(Index n_atoms, Index s, Index per_atom) { return 2 * n_atoms * per_atom / (s + 1); }

Matrix lgmrf_sample(const Matrix& laplacian, Index n_samples, Rng& rng) {
  const LgmrfFactor f(laplacian);
  Matrix x(n_samples, laplacian.rows());
  for (Index t = 0; t < n_samples; ++t) x.row(t) = f.draw(rng).transpose();
  return x;
}

Matrix signals_for_graphs(const EdgeSpace& space, const Matrix& mixed, Rng& rng) {
  std::map<std::vector<double>, LgmrfFactor> cache;
  Matrix x(mixed.rows(), space.n_nodes());
  for (Index t = 0; t < mixed.rows(); ++t) {
    std::vector<double> key(static_cast<std::size_t>(mixed.cols()));
    for (Index e = 0; e < mixed.cols(); ++e) key[static_cast<std::size_t>(e)] = mixed(t, e);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, LgmrfFactor(laplacian_from_weights(space, mixed.row(t).transpose()))).first;
    x.row(t) = it->second.draw(rng).transpose();
  }
  return x;
}

GraphSequence emeg_process(Index n_nodes, double p0, double p_add, double p_del, Index n_steps, Rng& rng,
                           const WeightSpec& weights) {
  require_prob(p0, "emeg: p0");
  require_prob(p_add, "emeg: p_add");
  require_prob(p_del, "emeg: p_del");
  if (n_steps < 1) throw std::invalid_argument("emeg: need at least one step");
  EdgeSpace space(n_nodes);
  Matrix seq(n_steps, space.n_edges());
  seq.row(0) = er_graph(n_nodes, p0, weights, rng).values().transpose();
  for (Index t = 1; t < n_steps; ++t) {
    seq.row(t) = seq.row(t - 1);
    for (Index e = 0; e < space.n_edges(); ++e) {
      if (seq(t, e) > 0.0) {
        if (rng.bernoulli(p_del)) seq(t, e) = 0.0;
      } else if (rng.bernoulli(p_add)) {
        seq(t, e) = weights.draw(rng);
      }
    }
  }
  return {space, seq, {}};
}

GraphSequence sbg_process(int n_states, Index n_nodes, double p, double p_stay, Index n_steps, Rng& rng,
                          const WeightSpec& weights) {
  if (n_states < 2) throw std::invalid_argument("sbg: need at least two states");
  require_prob(p_stay, "sbg: p_stay");
  if (n_steps < 1) throw std::invalid_argument("sbg: need at least one step");
  EdgeSpace space(n_nodes);
  std::vector<Vector> states;
  for (int s = 0; s < n_states; ++s) states.push_back(er_graph(n_nodes, p, weights, rng).values());
  Matrix seq(n_steps, space.n_edges());
  std::vector<int> labels(static_cast<std::size_t>(n_steps));
  int cur = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_states)));
  for (Index t = 0; t < n_steps; ++t) {
    if (t > 0 && !rng.bernoulli(p_stay)) {
      int next = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_states - 1)));
      if (next >= cur) ++next;
      cur = next;
    }
    labels[static_cast<std::size_t>(t)] = cur;
    seq.row(t) = states[static_cast<std::size_t>(cur)].transpose();
  }
  return {space, seq, labels};
}

SuperpositionTask generate_superposition_task(const SuperpositionParams& prm, Rng& rng) {
  if (prm.n_atoms < 1 || prm.n_nodes < 2 || prm.per_atom < 1 || prm.n_test < 0)
    throw std::invalid_argument("superposition task: parameters must be positive");
  EdgeSpace space(prm.n_nodes);
  SuperpositionTask task;
  task.w.resize(prm.n_atoms, space.n_edges());
  for (Index k = 0; k < prm.n_atoms; ++k) task.w.row(k) = er_graph(prm.n_nodes, prm.p, prm.weights, rng).values().transpose();
  const Index t_tr = train_size_for(prm.n_atoms, prm.s, prm.per_atom);
  task.c_tr = superposition_coefficients(prm.n_atoms, prm.s, t_tr, rng);
  task.c_te = superposition_coefficients(prm.n_atoms, prm.s, prm.n_test, rng);
  task.x_tr = signals_for_graphs(space, task.c_tr * task.w, rng);
  task.x_te = signals_for_graphs(space, task.c_te * task.w, rng);
  return task;
}

Matrix TimeVaryingTask::sample_weights() const {
  Matrix out(x.rows(), graphs.weights.cols());
  for (Index t = 0; t < x.rows(); ++t) out.row(t) = graphs.weights.row(t / signals_per_graph);
  return out;
}

TimeVaryingTask generate_time_varying_task(const TimeVaryingParams& prm, Rng& rng) {
  if (prm.signals_per_graph < 1) throw std::invalid_argument("time-varying task: signals_per_graph must be positive");
  TimeVaryingTask task{prm.process == ProcessKind::Emeg
                           ? emeg_process(prm.n_nodes, prm.p0, prm.p_add, prm.p_del, prm.n_graphs, rng)
                           : sbg_process(prm.n_states, prm.n_nodes, prm.p_state, prm.p_stay, prm.n_graphs, rng),
                       Matrix(), prm.signals_per_graph};
  Matrix mixed(prm.n_graphs * prm.signals_per_graph, task.graphs.space.n_edges());
  for (Index t = 0; t < mixed.rows(); ++t) mixed.row(t) = task.graphs.weights.row(t / prm.signals_per_graph);
  task.x = signals_for_graphs(task.graphs.space, mixed, rng);
  return task;
}

}  // namespace graphdict
