#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "panshuffle/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "panshuffle: simulators and empirical audits for shuffle-model and "
      "pan-private protocols"};

  std::string experiment;
  std::string config_path;
  std::string out_path;
  uint64_t seed = 0;
  bool seed_set = false;
  int64_t trials = 0;
  int jobs = 1;
  bool timing = false;
  bool list = false;

  app.add_option("--experiment", experiment,
                 "Experiment name (see --list)");
  app.add_option("--config", config_path,
                 "Config file with an [experiment] section of key = value "
                 "lines; comma-separated values form a grid");
  app.add_option("--seed", seed, "Root seed (fallback: PANSHUFFLE_SEED, then 1)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--out", out_path, "CSV output path");
  app.add_option("--trials", trials, "Override the trial count per grid point");
  app.add_option("--jobs", jobs, "Worker threads for trial fan-out")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timing", timing,
               "Include wall_time_s in the CSV (breaks byte-for-byte "
               "reproducibility across runs)");
  app.add_flag("--list", list, "List experiment names and exit");

  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : panshuffle::experiment_names())
      std::printf("%s\n", name.c_str());
    return 0;
  }
  if (experiment.empty()) {
    std::fprintf(stderr, "error: --experiment is required (try --list)\n");
    return 2;
  }

  panshuffle::ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.trials_override = trials;
  cfg.jobs = jobs;
  cfg.out_path = out_path;

  if (seed_set) {
    cfg.seed = seed;
  } else if (const char* env = std::getenv("PANSHUFFLE_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  } else {
    cfg.seed = 1;
  }

  try {
    if (!config_path.empty()) panshuffle::load_config_file(config_path, cfg);
    panshuffle::ExperimentResult result = panshuffle::run_experiment(cfg);
    const std::string csv = panshuffle::to_csv(result.rows, timing);
    if (out_path.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      panshuffle::write_csv(out_path, result.rows, timing);
      std::printf("wrote %zu rows to %s\n", result.rows.size(),
                  out_path.c_str());
    }
    for (const auto& row : result.rows) {
      if (!row.ok)
        std::fprintf(stderr, "invalid grid point [%s]: %s\n",
                     row.params.c_str(), row.note.c_str());
    }
    return result.all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
