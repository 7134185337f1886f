#include "graphdict/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "graphdict/rng.hpp"
#include "graphdict/serialize.hpp"

namespace graphdict {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// JSON helpers that report the offending field

template <typename T>
T field(const json& obj, const std::string& section, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config field '" + section + key + "' has the wrong type");
  }
}

void reject_unknown(const json& obj, const std::string& section, std::initializer_list<const char*> known) {
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) throw ConfigError("unknown config field '" + section + k + "'");
}

const json& object_at(const json& root, const char* key) {
  static const json empty = json::object();
  if (!root.contains(key)) return empty;
  const json& v = root.at(key);
  if (!v.is_object()) throw ConfigError(std::string("config field '") + key + "' must be an object");
  return v;
}

GridSpec grid_from_json(const json& obj, const std::string& section) {
  GridSpec g;
  const auto& keys = grid_keys();
  for (const auto& [k, v] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError("unknown grid dimension '" + section + k + "'");
    std::vector<double> vals;
    try {
      vals = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    } catch (const json::exception&) {
      throw ConfigError("grid dimension '" + section + k + "' must be a number or list of numbers");
    }
    if (vals.empty()) throw ConfigError("grid dimension '" + section + k + "' is empty");
    g.dims.emplace_back(k, std::move(vals));
  }
  return g;
}

json grid_to_json(const GridSpec& g) {
  json j = json::object();
  for (const auto& [k, v] : g.dims) j[k] = v;
  return j;
}

void set_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad override key '" + dotted + "'");
    if (!node->is_object()) throw ConfigError("override '" + dotted + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

std::string kind_name(ExperimentKind k) { return k == ExperimentKind::Superposition ? "superposition" : "time_varying"; }

// ---------------------------------------------------------------------------
// dataset files

std::string ext_for(const std::string& format) { return format == "binary" ? ".gdsm" : ".csv"; }

void save(const fs::path& dir, const std::string& stem, const Matrix& m, const ExperimentConfig& cfg,
          std::vector<std::string>& files) {
  const std::string name = stem + ext_for(cfg.format);
  save_matrix(dir / name, m);
  files.push_back(name);
}

std::optional<fs::path> find_matrix(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".csv", ".gdsm"})
    if (fs::exists(dir / (stem + ext))) return dir / (stem + ext);
  return std::nullopt;
}

Matrix load_required(const fs::path& dir, const std::string& stem) {
  const auto p = find_matrix(dir, stem);
  if (!p) throw IoError("missing matrix '" + stem + "' in " + dir.string());
  return load_matrix(*p);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// per-seed pipelines

struct BestFit {
  GridPoint point;
  Matrix w;
  Matrix c;  // per sample
  double score = 0.0;
};

Matrix random_control_atoms(Index k, Index n_nodes, double p, Rng& rng) {
  EdgeSpace space(n_nodes);
  Matrix w(k, space.n_edges());
  for (Index i = 0; i < k; ++i) w.row(i) = er_graph(n_nodes, p, WeightSpec::uniform(0.1, 3.0), rng).values().transpose();
  return w;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

GridSpec or_single(const GridSpec& g) {
  if (!g.dims.empty()) return g;
  GridSpec one;
  one.dims.push_back({"max_iter", {-1.0}});  // sentinel: use the solver default
  return one;
}

struct Harness {
  const ExperimentConfig& cfg;
  int threads;
  fs::path out;

  // Grid search of the learned-dictionary model on x scored against truth
  // (per-sample weights). Optional fixed coefficients switch to hierarchical mode.
  BestFit search(const Matrix& x, const Matrix& truth, const GridSpec& grid, std::optional<Variant> variant,
                 std::uint64_t seed, const fs::path& table_path, const std::optional<Matrix>& fixed = std::nullopt,
                 int fixed_window = 1, int fixed_max_iter = -1) const {
    std::vector<BestFit> fits(grid.size());
    auto scorer = [&](const GridPoint& p, std::uint64_t pseed) {
      Hyperparams h = hyperparams_at(cfg, p);
      SolverParams sp = solver_params_at(cfg, p);
      Index k = static_cast<Index>(p.get("n_atoms", static_cast<double>(cfg.n_atoms)));
      if (variant) h.variant = *variant;
      if (fixed) {
        h.fixed_coefficients = *fixed;
        h.window_size = fixed_window;
        k = fixed->cols();
        if (fixed_max_iter > 0 && p.get("max_iter", -1.0) <= 0.0) sp.max_iter = fixed_max_iter;
      }
      const FitResult r = fit(x, k, h, sp, pseed);
      BestFit& b = fits[p.index];
      b.point = p;
      b.w = r.w;
      b.c = expand_windows(r.c, x.rows(), h.window_size);
      b.score = mean_instantaneous_mcc(b.w, b.c, truth, p.get("edge_threshold", cfg.edge_threshold));
      return b.score;
    };
    const GridResult res = grid_search(grid, scorer, seed, threads);
    if (!out.empty()) {
      ensure_dir(table_path.parent_path());
      write_text(table_path, score_table_csv(grid, res));
    }
    return fits[res.best];
  }
};

void record_best(json& entry, const BestFit& b) {
  json p = json::object();
  for (const auto& [k, v] : b.point.values) p[k] = v;
  entry["best_point"] = p;
  entry["train_mcc"] = b.score;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<std::string>& grid_keys() {
  static const std::vector<std::string> keys{"alpha_w_l1", "alpha_c_l1", "alpha_ortho", "alpha_diff", "n_atoms",
                                             "window_size", "max_iter",  "edge_threshold", "sigma"};
  return keys;
}

Hyperparams hyperparams_at(const ExperimentConfig& cfg, const GridPoint& p) {
  Hyperparams h = cfg.model;
  h.alpha_w_l1 = p.get("alpha_w_l1", h.alpha_w_l1);
  h.alpha_c_l1 = p.get("alpha_c_l1", h.alpha_c_l1);
  h.alpha_ortho = p.get("alpha_ortho", h.alpha_ortho);
  h.alpha_diff = p.get("alpha_diff", h.alpha_diff);
  h.window_size = static_cast<int>(p.get("window_size", h.window_size));
  return h;
}

SolverParams solver_params_at(const ExperimentConfig& cfg, const GridPoint& p) {
  SolverParams sp = cfg.solver;
  const double it = p.get("max_iter", -1.0);
  if (it >= 0.0) sp.max_iter = static_cast<int>(it);
  sp.sigma = p.get("sigma", sp.sigma);
  return sp;
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not KEY=VALUE");
    const std::string raw = ov.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_path(root, ov.substr(0, eq), std::move(value));
  }

  reject_unknown(root, "", {"experiment", "seeds", "output", "format", "superposition", "time_varying", "model",
                            "solver", "grid", "methods", "spectral_grid", "hier", "control", "inference",
                            "sampling_rate"});
  if (!root.contains("experiment")) throw ConfigError("missing required field 'experiment'");

  ExperimentConfig cfg;
  const std::string kind = field<std::string>(root, "", "experiment", "");
  if (kind == "superposition")
    cfg.experiment = ExperimentKind::Superposition;
  else if (kind == "time_varying")
    cfg.experiment = ExperimentKind::TimeVarying;
  else
    throw ConfigError("config field 'experiment' must be 'superposition' or 'time_varying'");

  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    try {
      cfg.seeds = s.is_array() ? s.get<std::vector<std::uint64_t>>() : std::vector<std::uint64_t>{s.get<std::uint64_t>()};
    } catch (const json::exception&) {
      throw ConfigError("config field 'seeds' must be a list of unsigned integers");
    }
    if (cfg.seeds.empty()) throw ConfigError("config field 'seeds' is empty");
  }
  cfg.output = field<std::string>(root, "", "output", cfg.output);
  cfg.format = field<std::string>(root, "", "format", cfg.format);
  if (cfg.format != "csv" && cfg.format != "binary") throw ConfigError("config field 'format' must be 'csv' or 'binary'");
  cfg.sampling_rate = field<double>(root, "", "sampling_rate", cfg.sampling_rate);
  if (!(cfg.sampling_rate > 0.0)) throw ConfigError("config field 'sampling_rate' must be positive");

  {
    const json& o = object_at(root, "superposition");
    const std::string sec = "superposition.";
    reject_unknown(o, sec, {"n_atoms", "n_nodes", "p", "s", "per_atom", "n_test", "weights", "weight_lo", "weight_hi"});
    auto& sp = cfg.superposition;
    sp.n_atoms = field<Index>(o, sec, "n_atoms", sp.n_atoms);
    sp.n_nodes = field<Index>(o, sec, "n_nodes", sp.n_nodes);
    sp.p = field<double>(o, sec, "p", sp.p);
    sp.per_atom = field<Index>(o, sec, "per_atom", sp.per_atom);
    sp.n_test = field<Index>(o, sec, "n_test", sp.n_test);
    const std::string wd = field<std::string>(o, sec, "weights", "unit");
    if (wd != "unit" && wd != "uniform") throw ConfigError("config field 'superposition.weights' must be 'unit' or 'uniform'");
    sp.weights.dist = wd == "unit" ? WeightDist::Unit : WeightDist::Uniform;
    sp.weights.lo = field<double>(o, sec, "weight_lo", sp.weights.lo);
    sp.weights.hi = field<double>(o, sec, "weight_hi", sp.weights.hi);
    if (o.contains("s")) {
      const json& s = o.at("s");
      try {
        cfg.s_values = s.is_array() ? s.get<std::vector<Index>>() : std::vector<Index>{s.get<Index>()};
      } catch (const json::exception&) {
        throw ConfigError("config field 'superposition.s' must be an integer or list of integers");
      }
    }
    if (cfg.s_values.empty()) throw ConfigError("config field 'superposition.s' is empty");
    for (Index s : cfg.s_values)
      if (s < 1 || s > sp.n_atoms) throw ConfigError("config field 'superposition.s' must lie in [1, n_atoms]");
    if (sp.n_nodes < 2 || sp.n_atoms < 1 || sp.per_atom < 1 || sp.n_test < 1)
      throw ConfigError("config section 'superposition' has a non-positive size");
    if (!(sp.p >= 0.0 && sp.p <= 1.0)) throw ConfigError("config field 'superposition.p' must lie in [0, 1]");
    sp.s = cfg.s_values.front();
  }
  {
    const json& o = object_at(root, "time_varying");
    const std::string sec = "time_varying.";
    reject_unknown(o, sec, {"process", "n_nodes", "n_graphs", "signals_per_graph", "p0", "p_add", "p_del", "n_states",
                            "p_state", "p_stay"});
    auto& tv = cfg.time_varying;
    const std::string proc = field<std::string>(o, sec, "process", "emeg");
    if (proc != "emeg" && proc != "sbg") throw ConfigError("config field 'time_varying.process' must be 'emeg' or 'sbg'");
    tv.process = proc == "emeg" ? ProcessKind::Emeg : ProcessKind::Sbg;
    tv.n_nodes = field<Index>(o, sec, "n_nodes", tv.n_nodes);
    tv.n_graphs = field<Index>(o, sec, "n_graphs", tv.n_graphs);
    tv.signals_per_graph = field<Index>(o, sec, "signals_per_graph", tv.signals_per_graph);
    tv.p0 = field<double>(o, sec, "p0", tv.p0);
    tv.p_add = field<double>(o, sec, "p_add", tv.p_add);
    tv.p_del = field<double>(o, sec, "p_del", tv.p_del);
    tv.n_states = field<int>(o, sec, "n_states", tv.n_states);
    tv.p_state = field<double>(o, sec, "p_state", tv.p_state);
    tv.p_stay = field<double>(o, sec, "p_stay", tv.p_stay);
    if (tv.n_nodes < 2 || tv.n_graphs < 1 || tv.signals_per_graph < 1)
      throw ConfigError("config section 'time_varying' has a non-positive size");
  }
  {
    const json& o = object_at(root, "model");
    const std::string sec = "model.";
    reject_unknown(o, sec, {"variant", "n_atoms", "alpha_w_l1", "alpha_c_l1", "alpha_ortho", "alpha_diff",
                            "window_size", "ragged_window", "edge_threshold"});
    try {
      cfg.model.variant = parse_variant(field<std::string>(o, sec, "variant", "log"));
    } catch (const std::invalid_argument&) {
      throw ConfigError("config field 'model.variant' must be 'log' or 'spectral'");
    }
    cfg.n_atoms = field<Index>(o, sec, "n_atoms", cfg.n_atoms);
    cfg.model.alpha_w_l1 = field<double>(o, sec, "alpha_w_l1", 0.0);
    cfg.model.alpha_c_l1 = field<double>(o, sec, "alpha_c_l1", 0.0);
    cfg.model.alpha_ortho = field<double>(o, sec, "alpha_ortho", 0.0);
    cfg.model.alpha_diff = field<double>(o, sec, "alpha_diff", 0.0);
    cfg.model.window_size = field<int>(o, sec, "window_size", 1);
    cfg.model.allow_ragged_window = field<bool>(o, sec, "ragged_window", true);
    cfg.edge_threshold = field<double>(o, sec, "edge_threshold", cfg.edge_threshold);
    if (cfg.n_atoms < 1) throw ConfigError("config field 'model.n_atoms' must be positive");
    try {
      cfg.model.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config section 'model': ") + e.what());
    }
  }
  {
    const json& o = object_at(root, "solver");
    const std::string sec = "solver.";
    reject_unknown(o, sec, {"tau_w", "tau_c", "sigma", "max_iter", "rel_tol", "min_iter", "recalibrate_every",
                            "step_safety", "lipschitz"});
    auto& sp = cfg.solver;
    sp.tau_w = field<double>(o, sec, "tau_w", sp.tau_w);
    sp.tau_c = field<double>(o, sec, "tau_c", sp.tau_c);
    sp.sigma = field<double>(o, sec, "sigma", sp.sigma);
    sp.max_iter = field<int>(o, sec, "max_iter", sp.max_iter);
    sp.rel_tol = field<double>(o, sec, "rel_tol", sp.rel_tol);
    sp.min_iter = field<int>(o, sec, "min_iter", sp.min_iter);
    sp.recalibrate_every = field<int>(o, sec, "recalibrate_every", sp.recalibrate_every);
    sp.step_safety = field<double>(o, sec, "step_safety", sp.step_safety);
    if (o.contains("lipschitz")) sp.lipschitz_estimate = field<double>(o, sec, "lipschitz", 0.0);
    try {
      sp.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config section 'solver': ") + e.what());
    }
  }
  cfg.grid = grid_from_json(object_at(root, "grid"), "grid.");
  cfg.spectral_grid = grid_from_json(object_at(root, "spectral_grid"), "spectral_grid.");
  if (root.contains("methods")) {
    try {
      cfg.methods = root.at("methods").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw ConfigError("config field 'methods' must be a list of strings");
    }
    for (const auto& m : cfg.methods)
      if (m != "log" && m != "spectral" && m != "hier" && m != "random")
        throw ConfigError("config field 'methods' has unknown method '" + m + "'");
  }
  {
    const json& o = object_at(root, "hier");
    const std::string sec = "hier.";
    reject_unknown(o, sec, {"levels", "window_size", "max_iter", "grid"});
    cfg.hier_levels = field<int>(o, sec, "levels", cfg.hier_levels);
    cfg.hier_window = field<int>(o, sec, "window_size", cfg.hier_window);
    cfg.hier_max_iter = field<int>(o, sec, "max_iter", cfg.hier_max_iter);
    cfg.hier_grid = grid_from_json(object_at(o, "grid"), "hier.grid.");
    if (cfg.hier_levels < 1 || cfg.hier_window < 1 || cfg.hier_max_iter < 0)
      throw ConfigError("config section 'hier' has a non-positive value");
  }
  {
    const json& o = object_at(root, "control");
    const std::string sec = "control.";
    reject_unknown(o, sec, {"n_atoms", "p"});
    cfg.control_atoms = field<Index>(o, sec, "n_atoms", cfg.control_atoms);
    cfg.control_p = field<double>(o, sec, "p", cfg.control_p);
    if (cfg.control_atoms < 1) throw ConfigError("config field 'control.n_atoms' must be positive");
  }
  {
    const json& o = object_at(root, "inference");
    reject_unknown(o, "inference.", {"max_iter"});
    cfg.inference_max_iter = field<int>(o, "inference.", "max_iter", cfg.inference_max_iter);
    if (cfg.inference_max_iter < 0) throw ConfigError("config field 'inference.max_iter' must be nonnegative");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, overrides);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = kind_name(cfg.experiment);
  j["seeds"] = cfg.seeds;
  j["output"] = cfg.output;
  j["format"] = cfg.format;
  const auto& sp = cfg.superposition;
  j["superposition"] = {{"n_atoms", sp.n_atoms},
                        {"n_nodes", sp.n_nodes},
                        {"p", sp.p},
                        {"s", cfg.s_values},
                        {"per_atom", sp.per_atom},
                        {"n_test", sp.n_test},
                        {"weights", sp.weights.dist == WeightDist::Unit ? "unit" : "uniform"},
                        {"weight_lo", sp.weights.lo},
                        {"weight_hi", sp.weights.hi}};
  const auto& tv = cfg.time_varying;
  j["time_varying"] = {{"process", tv.process == ProcessKind::Emeg ? "emeg" : "sbg"},
                       {"n_nodes", tv.n_nodes},
                       {"n_graphs", tv.n_graphs},
                       {"signals_per_graph", tv.signals_per_graph},
                       {"p0", tv.p0},
                       {"p_add", tv.p_add},
                       {"p_del", tv.p_del},
                       {"n_states", tv.n_states},
                       {"p_state", tv.p_state},
                       {"p_stay", tv.p_stay}};
  j["model"] = {{"variant", variant_name(cfg.model.variant)},
                {"n_atoms", cfg.n_atoms},
                {"alpha_w_l1", cfg.model.alpha_w_l1},
                {"alpha_c_l1", cfg.model.alpha_c_l1},
                {"alpha_ortho", cfg.model.alpha_ortho},
                {"alpha_diff", cfg.model.alpha_diff},
                {"window_size", cfg.model.window_size},
                {"ragged_window", cfg.model.allow_ragged_window},
                {"edge_threshold", cfg.edge_threshold}};
  const auto& so = cfg.solver;
  j["solver"] = {{"tau_w", so.tau_w},         {"tau_c", so.tau_c},       {"sigma", so.sigma},
                 {"max_iter", so.max_iter},   {"rel_tol", so.rel_tol},   {"min_iter", so.min_iter},
                 {"recalibrate_every", so.recalibrate_every}, {"step_safety", so.step_safety}};
  if (so.lipschitz_estimate) j["solver"]["lipschitz"] = *so.lipschitz_estimate;
  j["grid"] = grid_to_json(cfg.grid);
  j["methods"] = cfg.methods;
  j["spectral_grid"] = grid_to_json(cfg.spectral_grid);
  j["hier"] = {{"levels", cfg.hier_levels},
               {"window_size", cfg.hier_window},
               {"max_iter", cfg.hier_max_iter},
               {"grid", grid_to_json(cfg.hier_grid)}};
  j["control"] = {{"n_atoms", cfg.control_atoms}, {"p", cfg.control_p}};
  j["inference"] = {{"max_iter", cfg.inference_max_iter}};
  j["sampling_rate"] = cfg.sampling_rate;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& files, json extra = json::object()) {
  json m;
  m["format_version"] = kFormatVersion;
  m["command"] = command;
  m["edge_ordering"] = kEdgeOrderingTag;
  m["files"] = files;
  m["config"] = json::parse(config_to_json(cfg));
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void gen_one(const ExperimentConfig& cfg, std::uint64_t seed, Index s, const fs::path& dir) {
  ensure_dir(dir);
  std::vector<std::string> files;
  json extra;
  extra["seed"] = seed;
  if (cfg.experiment == ExperimentKind::Superposition) {
    SuperpositionParams prm = cfg.superposition;
    prm.s = s;
    Rng rng(derive_seed(seed, "superposition-data", static_cast<std::uint64_t>(s)));
    const SuperpositionTask task = generate_superposition_task(prm, rng);
    save(dir, "x_train", task.x_tr, cfg, files);
    save(dir, "truth_train", task.c_tr * task.w, cfg, files);
    save(dir, "x_test", task.x_te, cfg, files);
    save(dir, "truth_test", task.c_te * task.w, cfg, files);
    save(dir, "w_true", task.w, cfg, files);
    save(dir, "c_train", task.c_tr, cfg, files);
    save(dir, "c_test", task.c_te, cfg, files);
    extra["s"] = s;
    extra["n_train"] = task.x_tr.rows();
  } else {
    Rng rng(derive_seed(seed, "time-varying-data"));
    const TimeVaryingTask task = generate_time_varying_task(cfg.time_varying, rng);
    save(dir, "x_train", task.x, cfg, files);
    save(dir, "truth_train", task.sample_weights(), cfg, files);
    save(dir, "graphs", task.graphs.weights, cfg, files);
    extra["signals_per_graph"] = task.signals_per_graph;
    extra["labels"] = task.graphs.labels;
    extra["n_train"] = task.x.rows();
  }
  write_manifest(dir, cfg, "gen", files, extra);
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg, const fs::path& out) {
  const std::uint64_t seed = cfg.seeds.front();
  if (cfg.experiment == ExperimentKind::Superposition && cfg.s_values.size() > 1) {
    for (Index s : cfg.s_values) gen_one(cfg, seed, s, out / ("s" + std::to_string(s)));
  } else {
    gen_one(cfg, seed, cfg.s_values.front(), out);
  }
}

void cmd_fit(const ExperimentConfig& cfg, const fs::path& dataset, const fs::path& out) {
  const Matrix x = load_required(dataset, "x_train");
  ensure_dir(out);
  const std::uint64_t seed = derive_seed(cfg.seeds.front(), "fit-init");
  json rep;
  rep["seed"] = cfg.seeds.front();
  rep["variant"] = variant_name(cfg.model.variant);
  rep["n_atoms"] = cfg.n_atoms;
  rep["window_size"] = cfg.model.window_size;
  std::vector<std::string> files;
  try {
    FitResult r = fit(x, cfg.n_atoms, cfg.model, cfg.solver, seed);
    sort_atoms_by_mass(r.w, r.c);
    save(out, "w", r.w, cfg, files);
    save(out, "c", r.c, cfg, files);
    write_text(out / "trace.csv", trace_csv(r.state));
    files.push_back("trace.csv");
    rep["iterations"] = r.state.iteration;
    rep["converged"] = r.state.converged;
    rep["diverged"] = false;
    rep["final_objective"] = r.state.objective.empty() ? json(nullptr) : json(r.state.objective.back());
  } catch (const DivergenceError& e) {
    write_text(out / "trace.csv", trace_csv(e.state()));
    rep["iterations"] = e.state().iteration;
    rep["converged"] = false;
    rep["diverged"] = true;
    rep["error"] = e.what();
    write_text(out / "report.json", rep.dump(2) + "\n");
    throw;
  }
  write_text(out / "report.json", rep.dump(2) + "\n");
  files.push_back("report.json");
  write_manifest(out, cfg, "fit", files, {{"dataset", dataset.string()}});
}

void cmd_eval(const ExperimentConfig& cfg, const fs::path& model_dir, const fs::path& dataset, const fs::path& out) {
  const Matrix w = load_required(model_dir, "w");
  const Matrix c = load_required(model_dir, "c");
  const Matrix x = load_required(dataset, "x_train");
  const Matrix truth = load_required(dataset, "truth_train");
  int window = cfg.model.window_size;
  if (fs::exists(model_dir / "report.json")) {
    const json rep = read_json_file(model_dir / "report.json");
    if (rep.contains("window_size")) window = rep.at("window_size").get<int>();
  }
  if (w.cols() != truth.cols() || c.cols() != w.rows())
    throw ConfigError("model and dataset shapes are inconsistent");
  const Matrix cs = c.rows() == x.rows() ? c : expand_windows(c, x.rows(), window);
  ensure_dir(out);

  const auto per_sample = instantaneous_mcc(cs * w, truth, cfg.edge_threshold);
  std::string csv = "sample,mcc\n";
  for (std::size_t t = 0; t < per_sample.size(); ++t) csv += std::to_string(t) + "," + fmt(per_sample[t], "%.17g") + "\n";
  write_text(out / "train_mcc.csv", csv);

  json m;
  m["train_mean_mcc"] = mean_of(per_sample);
  m["edge_threshold"] = cfg.edge_threshold;
  std::vector<std::string> files{"train_mcc.csv", "metrics.json"};
  if (find_matrix(dataset, "x_test") && find_matrix(dataset, "truth_test")) {
    const Matrix xt = load_required(dataset, "x_test");
    const Matrix tt = load_required(dataset, "truth_test");
    Hyperparams h = cfg.model;
    h.window_size = 1;
    SolverParams sp = cfg.solver;
    sp.max_iter = cfg.inference_max_iter;
    const FitResult r = fit_coefficients(xt, w, h, sp);
    m["test_mean_mcc"] = mean_instantaneous_mcc(w, r.c, tt, cfg.edge_threshold);
  }
  json feats = json::array();
  for (const StateFeatures& f : state_features(cs, cfg.sampling_rate)) {
    feats.push_back({{"occurrences", f.occurrences},
                     {"active_count", f.active_count},
                     {"coverage", f.coverage},
                     {"avg_duration", f.avg_duration}});
  }
  m["state_features"] = feats;
  write_text(out / "metrics.json", m.dump(2) + "\n");
  write_manifest(out, cfg, "eval", files, {{"model", model_dir.string()}, {"dataset", dataset.string()}});
}

// ---------------------------------------------------------------------------

const ResultRow* ExperimentReport::find(const std::string& setting, const std::string& method,
                                        const std::string& split) const {
  for (const ResultRow& r : rows)
    if (r.setting == setting && r.method == method && r.split == split) return &r;
  return nullptr;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const fs::path& out, int threads) {
  json report;
  report["experiment"] = kind_name(cfg.experiment);
  report["seeds"] = cfg.seeds;
  report["runs"] = json::array();
  const Harness hs{cfg, threads, out};
  const GridSpec grid = or_single(cfg.grid);

  std::vector<ResultRow> rows;
  auto add_row = [&](const std::string& setting, const std::string& method, const std::string& split) {
    rows.push_back({setting, method, split, {}, 0.0, 0.0});
  };

  if (cfg.experiment == ExperimentKind::Superposition) {
    for (Index s : cfg.s_values) {
      const std::string setting = "s=" + std::to_string(s);
      add_row(setting, "GraphDictLog", "test");
      const std::size_t test_idx = rows.size() - 1;
      add_row(setting, "GraphDictLog", "train");
      const std::size_t train_idx = rows.size() - 1;
      for (std::uint64_t seed : cfg.seeds) {
        SuperpositionParams prm = cfg.superposition;
        prm.s = s;
        Rng rng(derive_seed(seed, "superposition-data", static_cast<std::uint64_t>(s)));
        const SuperpositionTask task = generate_superposition_task(prm, rng);
        const fs::path dir = out.empty() ? fs::path() : out / ("s" + std::to_string(s)) / ("seed_" + std::to_string(seed));
        const BestFit best = hs.search(task.x_tr, task.c_tr * task.w, grid, Variant::Log,
                                       derive_seed(seed, "grid-log", static_cast<std::uint64_t>(s)), dir / "grid_log.csv");

        Hyperparams h = hyperparams_at(cfg, best.point);
        h.variant = Variant::Log;
        SolverParams sp = solver_params_at(cfg, best.point);
        sp.max_iter = cfg.inference_max_iter;
        const FitResult inf = fit_coefficients(task.x_te, best.w, h, sp);
        const Matrix ct = expand_windows(inf.c, task.x_te.rows(), h.window_size);
        const double test_mcc = mean_instantaneous_mcc(best.w, ct, task.c_te * task.w,
                                                       best.point.get("edge_threshold", cfg.edge_threshold));
        rows[test_idx].per_seed.push_back(test_mcc);
        rows[train_idx].per_seed.push_back(best.score);

        json entry;
        entry["setting"] = setting;
        entry["seed"] = seed;
        entry["method"] = "GraphDictLog";
        record_best(entry, best);
        entry["test_mcc"] = test_mcc;
        report["runs"].push_back(entry);
      }
    }
  } else {
    const std::string setting = std::string(cfg.time_varying.process == ProcessKind::Emeg ? "emeg" : "sbg") + " " +
                                std::to_string(cfg.time_varying.n_graphs) + "x" +
                                std::to_string(cfg.time_varying.signals_per_graph);
    std::map<std::string, std::size_t> idx;
    const std::map<std::string, std::string> label{{"log", "GraphDictLog"},
                                                   {"spectral", "GraphDictSpectral"},
                                                   {"hier", "GraphDictHier"},
                                                   {"random", "RandomControl"}};
    for (const auto& m : cfg.methods) {
      add_row(setting, label.at(m), "train");
      idx[m] = rows.size() - 1;
    }
    for (std::uint64_t seed : cfg.seeds) {
      Rng rng(derive_seed(seed, "time-varying-data"));
      const TimeVaryingTask task = generate_time_varying_task(cfg.time_varying, rng);
      const Matrix truth = task.sample_weights();
      const fs::path dir = out.empty() ? fs::path() : out / ("seed_" + std::to_string(seed));
      for (const auto& m : cfg.methods) {
        json entry;
        entry["setting"] = setting;
        entry["seed"] = seed;
        entry["method"] = label.at(m);
        double score = 0.0;
        if (m == "log" || m == "spectral") {
          const bool spec = m == "spectral";
          const GridSpec g = spec && !cfg.spectral_grid.dims.empty() ? cfg.spectral_grid : grid;
          const BestFit b = hs.search(task.x, truth, g, spec ? Variant::Spectral : Variant::Log,
                                      derive_seed(seed, spec ? "grid-spectral" : "grid-log"),
                                      dir / (spec ? "grid_spectral.csv" : "grid_log.csv"));
          record_best(entry, b);
          score = b.score;
        } else if (m == "hier") {
          const Matrix fixed = hierarchical_coefficients(n_windows(task.x.rows(), cfg.hier_window), cfg.hier_levels);
          const BestFit b = hs.search(task.x, truth, or_single(cfg.hier_grid), Variant::Log, derive_seed(seed, "grid-hier"),
                                      dir / "grid_hier.csv", fixed, cfg.hier_window, cfg.hier_max_iter);
          record_best(entry, b);
          score = b.score;
        } else {
          Rng crng(derive_seed(seed, "random-control"));
          const Matrix wr = random_control_atoms(cfg.control_atoms, task.x.cols(), cfg.control_p, crng);
          Hyperparams h;
          SolverParams sp = cfg.solver;
          sp.max_iter = cfg.inference_max_iter;
          const FitResult r = fit_coefficients(task.x, wr, h, sp);
          score = mean_instantaneous_mcc(wr, r.c, truth, cfg.edge_threshold);
          entry["train_mcc"] = score;
        }
        rows[idx[m]].per_seed.push_back(score);
        report["runs"].push_back(entry);
      }
    }
  }

  ExperimentReport rep;
  std::string csv = "experiment,setting,method,split";
  for (std::uint64_t s : cfg.seeds) csv += ",seed_" + std::to_string(s);
  csv += ",mean,std\n";
  json summary = json::array();
  for (ResultRow& r : rows) {
    r.mean = mean_of(r.per_seed);
    r.stddev = std_of(r.per_seed);
    csv += kind_name(cfg.experiment) + "," + r.setting + "," + r.method + "," + r.split;
    for (double v : r.per_seed) csv += "," + fmt(v);
    csv += "," + fmt(r.mean) + "," + fmt(r.stddev) + "\n";
    summary.push_back({{"setting", r.setting},
                       {"method", r.method},
                       {"split", r.split},
                       {"per_seed", r.per_seed},
                       {"mean", r.mean},
                       {"std", r.stddev}});
  }
  report["summary"] = summary;
  rep.rows = std::move(rows);
  rep.aggregated_csv = csv;
  rep.report_json = report.dump(2) + "\n";
  if (!out.empty()) {
    ensure_dir(out);
    write_text(out / "aggregated.csv", rep.aggregated_csv);
    write_text(out / "report.json", rep.report_json);
    write_manifest(out, cfg, "experiment", {"aggregated.csv", "report.json"});
  }
  return rep;
}

}  // namespace graphdict
