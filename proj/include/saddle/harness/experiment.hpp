#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddle/harness/config.hpp"
#include "saddle/imf.hpp"

/**
 * \file experiment.hpp
 *
 * @brief Run every start of a config with the chosen method and collect the
 * records; GAD and Newton traces are mapped onto ConvergenceRecord so all
 * methods share one output format.
 */

namespace saddle::harness {

struct RunOutcome {
  int id = 0;
  Vector start;
  ConvergenceRecord record;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::string problem;
  Method method = Method::imf;
  std::vector<std::string> labels;
  std::vector<RunOutcome> runs;

  bool all_converged() const;
  std::vector<ConvergenceRecord> records() const;
  /// Summary with per-run status, order, terminal index, reference and the
  /// start seed; timings are the only non-reproducible fields.
  nlohmann::json summary(const ExperimentConfig& cfg) const;
};

/// Executes all runs (in parallel over starts).
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Same, on an already constructed potential.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const Potential& p);

/// Writes run_<id>.csv, summary.json, table.<ext> per format and, for the
/// Morse island with output.xyz, final_<id>.xyz under cfg.output.dir.
void write_report(const ExperimentReport& report, const ExperimentConfig& cfg);

/// Convert a GAD trajectory (iter = Euler step count); errors against the
/// nearest reference.
ConvergenceRecord record_from_gad(const Potential& p, const GADTrajectory& traj, double dt,
                                  const std::vector<Vector>& refs, bool on_sphere);

/// Convert a Newton path; only index-1 convergence counts as converged.
ConvergenceRecord record_from_newton(const Potential& p, const NewtonResult& res, const std::vector<Vector>& refs);

/// Known stationary points of the given index (used as error references).
std::vector<Vector> known_points(const Potential& p, int index);

}  // namespace saddle::harness
