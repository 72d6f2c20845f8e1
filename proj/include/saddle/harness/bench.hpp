#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saddle/harness/config.hpp"
#include "saddle/harness/doa.hpp"
#include "saddle/harness/experiment.hpp"

/**
 * \file bench.hpp
 *
 * @brief Named reproductions of the benchmark tables and the
 * domain-of-attraction figure.
 *
 *   table1  three-hole, starts 0.2 from SP1/SP2, presets (2,0) (0,2) (1,1)
 *   table2  three-hole, starts 0.1 from (-1, 0), box 0.25
 *   table3  three-hole, three-step NCG inner solves, presets (2,0) (0,2)
 *   table4  Morse island, perturbed heptamer minimum, box 0.2
 *   table5  sphere, W1 / W2 geodesic and the naive retraction W2
 *   fig2    50 x 50 IMF and Newton grids on the three-hole surface
 *
 * Every column of a table is its own single-run experiment with a fixed
 * seed, so the column order matches the printed tables.
 */

namespace saddle::harness {

std::vector<std::string> bench_presets();

/// The experiments behind a table preset (empty for fig2).
std::vector<ExperimentConfig> bench_experiments(const std::string& preset);

struct BenchResult {
  std::string preset;
  std::vector<ExperimentConfig> configs;
  std::vector<ExperimentReport> reports;   ///< parallel to configs
  std::optional<DoaGrid> imf_grid, newton_grid;

  /// One column per experiment (first run of each).
  std::vector<ConvergenceRecord> columns() const;
  std::vector<std::string> labels() const;
  /// Tables: every run converged. fig2: IMF labels more nodes than Newton
  /// and every IMF basin is 4-connected.
  bool ok() const;
};

/// Run a preset; with out_dir set, per-experiment outputs land in
/// out_dir/<experiment name>/ plus a combined table.md / table.csv.
BenchResult run_bench(const std::string& preset, const std::filesystem::path& out_dir = {}, int threads = 0);

}  // namespace saddle::harness
