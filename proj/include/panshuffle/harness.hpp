#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panshuffle/random.hpp"

namespace panshuffle {

/// One grid point: experiment parameter name -> value string.
using GridPoint = std::map<std::string, std::string>;

/// Experiment request: name, parameter grid (each key lists one or more
/// values; the grid is their cartesian product), seed, and output path.
struct ExperimentConfig {
  std::string experiment;
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  uint64_t seed = 1;
  std::string out_path;
  int64_t trials_override = 0;  // > 0 replaces each point's trial count
  int jobs = 1;

  /// Cartesian product of the grid lists, in file order.
  std::vector<GridPoint> expand_grid() const;
};

/// One output row: a single metric at a single grid point.
struct ResultRow {
  std::string experiment;
  std::string params;  // self-describing "k=10;n=50;..." echo of the point
  std::string metric;
  double value = 0.0;
  double ci_half_width = 0.0;
  int64_t trials = 0;
  double wall_time_s = 0.0;
  bool ok = true;       // false marks an invalid grid point
  std::string note;     // error text for invalid points
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  bool all_pass = true;  // every acceptance-tagged metric met its threshold
};

/// Runs the named experiment over the grid. Invalid grid points produce
/// error rows and do not abort the run.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

const std::vector<std::string>& experiment_names();

/// Reads the [experiment] section of a flat key-value config file into
/// cfg.grid. Unknown sections are ignored; comma-separated values expand
/// the grid.
void load_config_file(const std::string& path, ExperimentConfig& cfg);

/// Default grid for an experiment, used when no config file is given.
std::vector<std::pair<std::string, std::vector<std::string>>> default_grid(
    const std::string& experiment);

/// CSV with a "# schema_version=1" comment line; numbers carry 9
/// significant digits. Timing is opt-in so that identical (config, seed)
/// pairs produce byte-identical files.
std::string to_csv(const std::vector<ResultRow>& rows,
                   bool include_timing = false);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows,
               bool include_timing = false);

/// Calibration result for the uniformity tester: the smallest per-
/// repetition sample count that reached the target power, and the implied
/// constant relative to the sample-complexity formula.
struct CalibrationResult {
  int64_t m_star = 0;
  double c_m = 0.0;
};

/// Doubling-then-binary-search for the smallest m at which the full
/// tester reaches target_power both on the uniform distribution and on
/// the half-flat far distribution at distance alpha. Measured rates must
/// clear the target at one-sided 80% confidence. Throws when the sample
/// cap is exceeded.
CalibrationResult calibrate_ut(uint32_t k, double alpha, double eps,
                               double delta, double target_power,
                               RandomSource& rng,
                               int64_t probe_trials = 200,
                               int64_t sample_cap = 10'000'000);

struct LemmaCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  bool all_pass = true;
};

/// Closed-form-vs-oracle checks: Bin-parity law, the 2^g/(2^g-1) <= 2/g
/// inequality, the noise-moment identities, noise-cross-term symmetry,
/// and the Poisson tail bound. An explicit empty selection runs nothing.
LemmaReport lemma_suite(uint64_t seed,
                        const std::vector<std::string>* selection = nullptr);

}  // namespace panshuffle
