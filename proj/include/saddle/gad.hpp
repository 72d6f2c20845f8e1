#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "saddle/common.hpp"
#include "saddle/manifold.hpp"
#include "saddle/potentials.hpp"

/**
 * \file gad.hpp
 *
 * @brief Gentlest ascent dynamics, explicit Euler.
 *
 *   x' = -grad V + reversal <grad V, v>/<v, v> v
 *   gamma v' = -H v + <v, H v>/<v, v> v
 *
 * with reversal = 2 for the standard flow.
 */

namespace saddle {

struct GADState {
  Vector x;
  Vector v;
  double t = 0.0;
};

struct GADParams {
  double gamma = 1.0;
  double reversal = 2.0;
  /// Replace the v update by the exact min-mode of H(x) at every step.
  bool exact_direction = false;
  double eigen_tol = 1e-12;
};

/// One Euler step; v is renormalised afterwards.
GADState euler_step(const Potential& p, const GADState& s, double dt, const GADParams& params = {});

/// Euler step with tangent-projected forces followed by retraction of x and
/// re-projection and normalisation of v.
GADState euler_step_manifold(const Potential& p, const ManifoldSpec& M, const GADState& s, double dt,
                             const GADParams& params = {});

struct GADSample {
  double t = 0.0;
  Vector x;
  Vector v;
  double grad_norm = 0.0;
  double rayleigh = 0.0;   ///< <v, H v>
};

struct GADTrajectory {
  std::vector<GADSample> samples;   ///< every record_every steps plus the last
  bool converged = false;
  int steps = 0;
  double lambda = 0.0;              ///< <v, H v> at the end

  GADState final_state() const;
  /// Distances of the recorded positions to ref.
  std::vector<double> errors(const Vector& ref) const;
  /// Columns t, x0.., v0.., grad_norm.
  void write_csv(std::ostream& out) const;
};

/**
 * @brief Integrate until |grad V|_inf <= tol and the eigen-residual
 * |H v - <v, H v> v| <= tol (tangent-projected when M is given).
 */
GADTrajectory run_gad(const Potential& p, const GADState& s0, double dt, int max_steps, double tol,
                      const GADParams& params = {}, const ManifoldSpec* M = nullptr, int record_every = 1);

}  // namespace saddle
