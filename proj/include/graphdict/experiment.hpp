#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdict/datagen.hpp"
#include "graphdict/eval.hpp"
#include "graphdict/model.hpp"
#include "graphdict/solver.hpp"

namespace graphdict {

// Invalid or incomplete configuration; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Superposition, TimeVarying };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Superposition;
  std::vector<std::uint64_t> seeds{0};
  std::string output = "out";
  std::string format = "csv";  // "csv" or "binary"

  SuperpositionParams superposition;
  std::vector<Index> s_values{1};
  TimeVaryingParams time_varying;

  Index n_atoms = 5;
  Hyperparams model;
  double edge_threshold = kDefaultEdgeThreshold;
  SolverParams solver = default_solver_params();

  GridSpec grid;           // empty: single point from `model`
  std::vector<std::string> methods{"log"};
  GridSpec spectral_grid;  // empty: reuse `grid`

  int hier_levels = 2;
  int hier_window = 10;
  int hier_max_iter = 3000;
  GridSpec hier_grid;

  Index control_atoms = 3;
  double control_p = 0.1;

  int inference_max_iter = 1000;
  double sampling_rate = 1.0;
};

// Parse JSON text; overrides are KEY=VALUE with dotted keys, VALUE parsed as
// JSON when possible and as a string otherwise. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
// Canonical JSON (fixed key order, every field present).
std::string config_to_json(const ExperimentConfig& cfg);

// Grid keys understood by the experiment harness.
const std::vector<std::string>& grid_keys();

Hyperparams hyperparams_at(const ExperimentConfig& cfg, const GridPoint& p);
SolverParams solver_params_at(const ExperimentConfig& cfg, const GridPoint& p);

// ---------------------------------------------------------------------------
// Commands. Errors propagate as ConfigError, IoError or DivergenceError.

// Write the dataset for seeds[0] (one subdirectory s<k> per s value when
// several are configured).
void cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out);

// Fit the configured model to x_train of a dataset directory.
void cmd_fit(const ExperimentConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out);

// Score a fitted model directory against a dataset directory.
void cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& model_dir, const std::filesystem::path& dataset,
              const std::filesystem::path& out);

struct ResultRow {
  std::string setting;
  std::string method;
  std::string split;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ExperimentReport {
  std::vector<ResultRow> rows;
  std::string aggregated_csv;
  std::string report_json;

  const ResultRow* find(const std::string& setting, const std::string& method, const std::string& split) const;
};

// gen -> grid search -> fit -> eval for every seed and setting. When out is
// non-empty, writes aggregated.csv, report.json, manifest.json and grid tables.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out, int threads = 1);

}  // namespace graphdict
