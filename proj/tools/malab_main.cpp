// Command-line driver: one subcommand per experiment, shared options.

#include <CLI11.hpp>
#include <cstdio>

#include "malab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"malab: section geometry, sliding-paraboloid contact engines and "
               "Harnack-type estimate verification on grids"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  std::int64_t grid = -1;

  for (const std::string& name : malab::experimentNames()) {
    auto* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--grid", grid, "override grid.cells");
  }

  CLI11_PARSE(app, argc, argv);

  std::string name;
  for (const std::string& candidate : malab::experimentNames())
    if (app.got_subcommand(candidate)) name = candidate;

  try {
    malab::ExperimentConfig cfg = malab::ExperimentConfig::fromFile(config_path);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (grid > 0) cfg.set("grid.cells", std::to_string(grid));
    malab::ExperimentOutcome outcome = malab::runExperiment(name, cfg, out_dir);
    std::printf("%s: %s\n", name.c_str(),
                outcome.summary["status"].get<std::string>().c_str());
    return outcome.exit_code;
  } catch (const malab::LabError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return e.kind() == "ConfigError" ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
