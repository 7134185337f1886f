#include "graphdict/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "graphdict/rng.hpp"

namespace graphdict {

EdgeSet threshold_edges(const VectorRef& w, double eps) {
  if (eps < 0.0) throw std::invalid_argument("threshold_edges: eps must be nonnegative");
  return w.array() > eps;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(const EdgeSet& pred, const EdgeSet& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (Index i = 0; i < pred.size(); ++i) {
    if (pred(i))
      truth(i) ? ++c.tp : ++c.fp;
    else
      truth(i) ? ++c.fn : ++c.tn;
  }
  return c;
}

double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

double mcc(const EdgeSet& pred, const EdgeSet& truth) { return mcc(confusion(pred, truth)); }

std::vector<double> instantaneous_mcc(const Matrix& estimated, const Matrix& truth, double rel_eps) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols())
    throw std::invalid_argument("instantaneous_mcc: shape mismatch");
  std::vector<double> out(static_cast<std::size_t>(estimated.rows()));
  for (Index t = 0; t < estimated.rows(); ++t) {
    const Vector row = estimated.row(t).transpose();
    const double top = row.size() ? row.maxCoeff() : 0.0;
    const EdgeSet pred = threshold_edges(row, std::max(rel_eps * top, 0.0));
    out[static_cast<std::size_t>(t)] = mcc(pred, truth.row(t).transpose().array() > 0.0);
  }
  return out;
}

double mean_instantaneous_mcc(const Matrix& w, const Matrix& c, const Matrix& truth, double rel_eps) {
  if (c.cols() != w.rows()) throw std::invalid_argument("mean_instantaneous_mcc: atom count mismatch");
  const auto scores = instantaneous_mcc(c * w, truth, rel_eps);
  if (scores.empty()) return 0.0;
  double s = 0.0;
  for (double v : scores) s += v;
  return s / static_cast<double>(scores.size());
}

std::vector<StateFeatures> state_features(const Matrix& c, double sampling_rate, double active_eps) {
  if (!(sampling_rate > 0.0)) throw std::invalid_argument("state_features: sampling rate must be positive");
  std::vector<StateFeatures> out(static_cast<std::size_t>(c.cols()));
  for (Index k = 0; k < c.cols(); ++k) {
    StateFeatures& f = out[static_cast<std::size_t>(k)];
    bool prev = false;
    for (Index t = 0; t < c.rows(); ++t) {
      const bool on = c(t, k) > active_eps;
      if (on) ++f.active_count;
      if (on && !prev) ++f.occurrences;
      prev = on;
    }
    f.coverage = static_cast<double>(f.active_count) / sampling_rate;
    f.avg_duration = f.occurrences ? f.coverage / static_cast<double>(f.occurrences) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t GridSpec::size() const {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (const auto& d : dims) n *= d.second.size();
  return n;
}

std::vector<std::pair<std::string, double>> GridSpec::point(std::size_t i) const {
  std::vector<std::pair<std::string, double>> p(dims.size());
  for (std::size_t d = dims.size(); d-- > 0;) {
    const auto& vals = dims[d].second;
    p[d] = {dims[d].first, vals[i % vals.size()]};
    i /= vals.size();
  }
  return p;
}

void GridSpec::validate() const {
  if (dims.empty()) throw std::invalid_argument("grid: no dimensions");
  for (const auto& d : dims)
    if (d.second.empty()) throw std::invalid_argument("grid: empty value list for '" + d.first + "'");
}

double GridPoint::get(const std::string& name, double fallback) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  return fallback;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

GridResult grid_search(const GridSpec& grid, const std::function<double(const GridPoint&, std::uint64_t)>& scorer,
                       std::uint64_t master_seed, int threads) {
  grid.validate();
  GridResult res;
  res.rows.resize(grid.size());
  parallel_for(res.rows.size(), threads, [&](std::size_t i) {
    GridRow& row = res.rows[i];
    row.point.index = i;
    row.point.values = grid.point(i);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      row.score = scorer(row.point, derive_seed(master_seed, "grid", i));
      if (!std::isfinite(row.score)) {
        row.failed = true;
        row.error = "non-finite score";
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  bool any = false;
  std::string failures;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const GridRow& r = res.rows[i];
    if (r.failed) {
      failures += "\n  point " + std::to_string(i) + ": " + r.error;
      continue;
    }
    if (!any || r.score > res.rows[res.best].score) res.best = i;
    any = true;
  }
  if (!any) throw std::runtime_error("grid search: every point failed" + failures);
  return res;
}

std::string score_table_csv(const GridSpec& grid, const GridResult& result) {
  std::string out;
  for (const auto& d : grid.dims) out += d.first + ",";
  out += "score,failed,wall_seconds\n";
  char buf[64];
  for (const GridRow& r : result.rows) {
    for (const auto& v : r.point.values) {
      std::snprintf(buf, sizeof buf, "%.17g,", v.second);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%d,%.6f\n", r.score, r.failed ? 1 : 0, r.wall_seconds);
    out += buf;
  }
  return out;
}

}  // namespace graphdict
