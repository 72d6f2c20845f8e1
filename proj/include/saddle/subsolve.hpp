#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saddle/common.hpp"
#include "saddle/objective.hpp"
#include "saddle/potentials.hpp"

/**
 * \file subsolve.hpp
 *
 * @brief Inner minimisers for min_y L(y) and the Newton baseline.
 */

namespace saddle {

enum class SubsolveMethod { sd, ncg };

/// Shape of the trust region around the inner start: the square box
/// |y - y0|_inf <= r or the ball |y - y0|_2 <= r.
enum class BoxNorm { inf, two };

struct SubsolveConfig {
  SubsolveMethod method = SubsolveMethod::ncg;
  int max_inner_iters = 2000;
  double grad_tol = 1e-14;            ///< on |grad L|_inf (tangent part on a manifold)
  double step_size = 0.1;             ///< sd trial step; ncg fallback when curvature is not positive
  std::optional<double> box_radius;   ///< trust-region radius around y0
  BoxNorm box_norm = BoxNorm::inf;
  int ncg_restart = 50;

  void validate() const;
};

enum class SubsolveStatus { converged, max_iters, stalled };

struct SubsolveResult {
  Vector y;
  int inner_iters = 0;
  double grad_norm = 0.0;   ///< inf-norm of the (reduced) gradient at y
  double value = 0.0;
  SubsolveStatus status = SubsolveStatus::converged;
};

/// Inner failure with the partial trace of objective values.
class SubsolveError : public SolverError {
 public:
  SubsolveError(const std::string& what, std::vector<double> trace)
      : SolverError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/**
 * @brief Steepest descent or Polak-Ribiere+ conjugate gradients with
 * backtracking Armijo line search (c = 1e-4, halving).
 *
 * Trial steps come from the exact curvature p^T H_L p when it is positive.
 * With a box, every trial point is clipped into [y0 - r, y0 + r]; gradient
 * components pushing against an active bound are dropped and NCG restarts
 * after any clipped step. A line search that cannot make progress ends the
 * solve with status stalled (this is how the roundoff floor is reached).
 * Within the noise margin 5e-14 (1 + L.magnitude(y0)) of the current value a
 * step is also accepted if it reduces the gradient or, when unclipped, at
 * least halves the slope along the search direction. The final value never
 * exceeds L(y0) by more than that margin.
 */
SubsolveResult minimize(const Objective& L, const Vector& y0, const SubsolveConfig& cfg);

/// y0 - dt * grad L(y0).
Vector sd_single_step(const Objective& L, const Vector& y0, double dt);

/// Relaxation of V itself (used to prepare minima as starting points).
SubsolveResult minimize_potential(const Potential& p, const Vector& x0, const SubsolveConfig& cfg);

struct NewtonResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  int index = -1;            ///< Morse index on convergence, -1 otherwise
  std::string failure;       ///< empty on convergence
  std::vector<Vector> path;  ///< iterates, starting with x0
};

/**
 * @brief Undamped Newton iteration on grad V = 0 with dense solves.
 *
 * Fails on a singular Hessian, a step longer than max_step, leaving the box
 * |x|_inf <= domain_bound or exhausting max_iters. Converged points are
 * classified by a dense eigensolve.
 */
NewtonResult newton_stationary(const Potential& p, const Vector& x0, double tol = 1e-10, int max_iters = 200,
                               double max_step = 10.0, double domain_bound = 1e6);

}  // namespace saddle
