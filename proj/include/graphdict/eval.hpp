#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "graphdict/graph_core.hpp"

namespace graphdict {

using EdgeSet = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Present iff weight > eps.
EdgeSet threshold_edges(const VectorRef& w, double eps);

// Default relative edge threshold: eps = rel * max(w).
inline constexpr double kDefaultEdgeThreshold = 1e-4;

struct ConfusionCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

ConfusionCounts confusion(const EdgeSet& pred, const EdgeSet& truth);

// (tp tn - fp fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)); 0 when a factor is 0.
double mcc(const ConfusionCounts& c);
double mcc(const EdgeSet& pred, const EdgeSet& truth);

// Per-row MCC between thresholded estimated weights (eps = rel_eps * row max)
// and truth rows (edge present iff weight > 0).
std::vector<double> instantaneous_mcc(const Matrix& estimated, const Matrix& truth, double rel_eps = kDefaultEdgeThreshold);

// Mean over samples of the MCC of C_t W against the truth graph of sample t.
// c must have one row per sample (expand windows first).
double mean_instantaneous_mcc(const Matrix& w, const Matrix& c, const Matrix& truth,
                              double rel_eps = kDefaultEdgeThreshold);

struct StateFeatures {
  std::int64_t occurrences = 0;   // maximal active runs
  std::int64_t active_count = 0;  // active samples
  double coverage = 0.0;          // active_count / rate, seconds
  double avg_duration = 0.0;      // coverage / occurrences, 0 if none
};

std::vector<StateFeatures> state_features(const Matrix& c, double sampling_rate, double active_eps = 0.0);

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
  std::vector<std::pair<std::string, std::vector<double>>> dims;

  std::size_t size() const;
  // Point i of the cartesian product, last dimension varying fastest.
  std::vector<std::pair<std::string, double>> point(std::size_t i) const;
  void validate() const;
};

struct GridPoint {
  std::size_t index = 0;
  std::vector<std::pair<std::string, double>> values;
  double get(const std::string& name, double fallback) const;
};

struct GridRow {
  GridPoint point;
  double score = 0.0;
  bool failed = false;
  std::string error;
  double wall_seconds = 0.0;
};

struct GridResult {
  std::size_t best = 0;
  std::vector<GridRow> rows;
  const GridRow& best_row() const { return rows.at(best); }
};

// Scorer trains on the point and returns its training score; an exception
// marks the point failed. Points run on up to `threads` workers with seeds
// derive_seed(master_seed, "grid", i). Ties go to the first point in
// enumeration order. Throws std::runtime_error when every point fails.
GridResult grid_search(const GridSpec& grid, const std::function<double(const GridPoint&, std::uint64_t)>& scorer,
                       std::uint64_t master_seed, int threads = 1);

// One row per grid point: dims..., score, failed, wall_seconds.
std::string score_table_csv(const GridSpec& grid, const GridResult& result);

// Run jobs 0..n-1 on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

}  // namespace graphdict
