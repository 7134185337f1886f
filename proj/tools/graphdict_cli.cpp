// graphdict: gen / fit / eval / experiment front end.
//
// exit codes: 0 ok, 2 config error, 3 divergence, 4 I/O error, 1 anything else

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphdict/experiment.hpp"
#include "graphdict/serialize.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kDiverged = 3, kIo = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file")->required();
  cmd->add_option("--seed", c.seed, "master seed (replaces the config seed list)");
  cmd->add_option("--out", c.out, "output directory (default: config 'output')");
  cmd->add_option("--override", c.overrides, "KEY=VALUE, dotted keys, repeatable")->take_all();
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

graphdict::ExperimentConfig resolve(const Common& c, std::string& out) {
  graphdict::ExperimentConfig cfg = graphdict::load_config(c.config, c.overrides);
  if (c.seed) cfg.seeds = {*c.seed};
  if (!c.out.empty()) cfg.output = c.out;
  out = cfg.output;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph dictionary learning from smooth signals"};
  app.require_subcommand(1);

  Common gen_opts, fit_opts, eval_opts, exp_opts;
  std::string fit_dataset, eval_dataset, eval_model;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, gen_opts);
  auto* fitc = app.add_subcommand("fit", "fit a dictionary to a dataset");
  add_common(fitc, fit_opts);
  fitc->add_option("--dataset", fit_dataset, "dataset directory")->required();
  auto* evalc = app.add_subcommand("eval", "score a fitted model");
  add_common(evalc, eval_opts);
  evalc->add_option("--model", eval_model, "model directory")->required();
  evalc->add_option("--dataset", eval_dataset, "dataset directory")->required();
  auto* expc = app.add_subcommand("experiment", "full pipeline over seeds and grid");
  add_common(expc, exp_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    std::string out;
    if (gen->parsed()) {
      const auto cfg = resolve(gen_opts, out);
      graphdict::cmd_gen(cfg, out);
    } else if (fitc->parsed()) {
      const auto cfg = resolve(fit_opts, out);
      graphdict::cmd_fit(cfg, fit_dataset, out);
    } else if (evalc->parsed()) {
      const auto cfg = resolve(eval_opts, out);
      graphdict::cmd_eval(cfg, eval_model, eval_dataset, out);
    } else {
      const auto cfg = resolve(exp_opts, out);
      const auto rep = graphdict::run_experiment(cfg, out, exp_opts.threads);
      std::fputs(rep.aggregated_csv.c_str(), stdout);
    }
  } catch (const graphdict::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const graphdict::DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const graphdict::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kConfig;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOk;
}
