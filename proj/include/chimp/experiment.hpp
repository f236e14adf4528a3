#pragma once

// Synthetic learning experiment: labels from a known capacity plus Gaussian
// noise, repeated fits, and label/variable error tables.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chimp/dataset.hpp"
#include "chimp/measure.hpp"
#include "chimp/training.hpp"

namespace chimp {

/// The four N = 3 target capacities (soft-max, mean, soft-mean, arbitrary).
/// `index` is 1-based.
FuzzyMeasure table1_measure(int index);
std::string table1_name(int index);

struct NoiseSpec {
  std::vector<double> multipliers{0.0, 0.01, 0.05, 0.1, 0.3, 0.5};
  std::uint64_t seed = 7;

  void check() const;
};

/// M rows uniform in [0,1]^n, labels chi(target, row) + N(0, (multiplier * sigma_y)^2)
/// where sigma_y is the population std of the noiseless labels. Rows and the
/// standard normal draws depend only on `seed`, so datasets that differ only
/// in `multiplier` share rows and noise direction.
Dataset generate(const FuzzyMeasure& target, std::size_t rows, double multiplier, std::uint64_t seed,
                 const std::string& target_name = "custom");

/// Deterministic 64-bit mixing of a base seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Runs `count` independent jobs, on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job, std::size_t threads = 0);

struct Exp1Options {
  std::size_t rows = 300;
  double train_fraction = 0.8;
  std::vector<int> measures{1, 2, 3, 4};
  std::size_t threads = 0;
};

struct TrialMetrics {
  double train_mse = 0.0;  // against noiseless training labels
  double test_mse = 0.0;   // against noiseless test labels
  double fm_mse = 0.0;     // learned g vs target over the 2^n - 1 nonempty subsets
  std::uint64_t seed = 0;
  bool ok = true;
  std::string failure;
};

struct Exp1Cell {
  int measure = 0;
  double multiplier = 0.0;
  std::vector<TrialMetrics> trials;
  double train_mse = 0.0;  // means over successful trials
  double test_mse = 0.0;
  double fm_mse = 0.0;
  std::size_t failures = 0;
};

struct Exp1Table {
  std::vector<double> multipliers;
  std::vector<Exp1Cell> cells;  // measure-major, multiplier-minor

  const Exp1Cell& cell(int measure, std::size_t level) const;
};

/// For each target measure and noise multiplier: generate M rows, then cfg.trials
/// times split 80/20, fit, and record errors. Trial failures are recorded, not thrown.
Exp1Table run_experiment1(const TrainConfig& cfg, const NoiseSpec& noise, const Exp1Options& options = {});

/// One row per measure: label (test) errors per noise level, then FM variable errors.
void write_table2_csv(const Exp1Table& table, std::ostream& out);
/// One row per (measure, noise level) with train/test/fm errors and failures.
void write_cells_csv(const Exp1Table& table, std::ostream& out);
/// One row per trial.
void write_trials_csv(const Exp1Table& table, std::ostream& out);

}  // namespace chimp
