#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphdict/graph_core.hpp"
#include "graphdict/rng.hpp"

namespace graphdict {

enum class WeightDist { Unit, Uniform };

struct WeightSpec {
  WeightDist dist = WeightDist::Unit;
  double lo = 0.1;
  double hi = 3.0;

  double draw(Rng& rng) const { return dist == WeightDist::Unit ? 1.0 : rng.uniform(lo, hi); }
  static WeightSpec uniform(double lo, double hi) { return {WeightDist::Uniform, lo, hi}; }
};

// Each edge present w.p. p, with weight drawn from `weights`. Edges are
// visited in canonical order; one Bernoulli draw per edge, then a weight
// draw for present edges.
WeightVector er_graph(Index n_nodes, double p, const WeightSpec& weights, Rng& rng);

// T x K binary rows: count ~ uniform{1..s}, atoms chosen without replacement.
Matrix superposition_coefficients(Index n_atoms, Index s, Index n_samples, Rng& rng);

// floor(2 K per_atom / (s + 1)): expected per-atom sample count = per_atom.
Index train_size_for(Index n_atoms, Index s, Index per_atom);

// T rows x ~ N(0, L^+). Each row is re-centred on every connected component
// so its projection onto component indicators is zero.
Matrix lgmrf_sample(const Matrix& laplacian, Index n_samples, Rng& rng);

struct GraphSequence {
  EdgeSpace space;
  Matrix weights;           // T_G x E
  std::vector<int> labels;  // SBG state per step; empty for EMEG
};

GraphSequence emeg_process(Index n_nodes, double p0, double p_add, double p_del, Index n_steps, Rng& rng,
                           const WeightSpec& weights = WeightSpec::uniform(0.1, 3.0));

GraphSequence sbg_process(int n_states, Index n_nodes, double p, double p_stay, Index n_steps, Rng& rng,
                          const WeightSpec& weights = WeightSpec::uniform(0.1, 3.0));

struct SuperpositionParams {
  Index n_atoms = 5;
  Index n_nodes = 30;
  double p = 0.2;
  Index s = 1;
  Index per_atom = 500;
  Index n_test = 500;
  WeightSpec weights;
};

struct SuperpositionTask {
  Matrix w;     // K x E true dictionary
  Matrix c_tr;  // T_tr x K
  Matrix x_tr;  // T_tr x N
  Matrix c_te;
  Matrix x_te;
};

SuperpositionTask generate_superposition_task(const SuperpositionParams& params, Rng& rng);

// Signals for a weight matrix: row t uses the Laplacian of mixed(t, :).
// Laplacian factorizations are cached for repeated rows.
Matrix signals_for_graphs(const EdgeSpace& space, const Matrix& mixed, Rng& rng);

enum class ProcessKind { Emeg, Sbg };

struct TimeVaryingParams {
  ProcessKind process = ProcessKind::Emeg;
  Index n_nodes = 18;
  Index n_graphs = 16;
  Index signals_per_graph = 10;
  // EMEG
  double p0 = 0.1;
  double p_add = 0.001;
  double p_del = 0.01;
  // SBG
  int n_states = 6;
  double p_state = 0.05;
  double p_stay = 0.98;
};

struct TimeVaryingTask {
  GraphSequence graphs;
  Matrix x;  // (n_graphs * signals_per_graph) x N
  Index signals_per_graph = 1;

  // per-sample ground-truth weights (graph of sample t repeated)
  Matrix sample_weights() const;
};

TimeVaryingTask generate_time_varying_task(const TimeVaryingParams& params, Rng& rng);

}  // namespace graphdict
