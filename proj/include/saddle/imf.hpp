#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddle/common.hpp"
#include "saddle/eigensolver.hpp"
#include "saddle/manifold.hpp"
#include "saddle/objective.hpp"
#include "saddle/potentials.hpp"
#include "saddle/subsolve.hpp"

/**
 * \file imf.hpp
 *
 * @brief Outer iteration x_{k+1} = Phi(x_k): min-mode solve at x_k, modified
 * objective anchored at x_k, inner minimisation started from x_k.
 */

namespace saddle {

struct SearchState {
  Vector x;
  Matrix v;                     ///< min-mode directions at the previous anchor (columns)
  std::vector<double> lambda;   ///< their eigenvalues, ascending
  int outer_iter = 0;
  double grad_norm = 0.0;       ///< |grad V(x)|_inf (Riemannian on a manifold)
  double last_step_norm = 0.0;
  int last_inner_iters = 0;
  double lambda_gap = std::numeric_limits<double>::quiet_NaN();
  bool near_degenerate = false;
};

enum class ManifoldKind { none, sphere };

struct IMFConfig {
  Coefficients coeffs = Coefficients::mixed();
  /// Overrides coeffs when set; required shape for index > 1 (defaults to
  /// SubsetCoefficients::minimal(index) otherwise).
  std::optional<SubsetCoefficients> subset_coeffs;
  int index = 1;
  double eigen_tol = 1e-10;
  int eigen_max_iters = 5000;
  SubsolveConfig subsolve;
  double grad_tol = 1e-10;      ///< outer stop on |grad V|_inf
  /// Accepted instead of grad_tol once Phi(x) == x in floating point.
  double floor_grad_tol = 1e-12;
  int max_outer_iters = 50;
  std::vector<Vector> references;   ///< known saddles for error reporting
  ManifoldKind manifold = ManifoldKind::none;
  SphereProjection sphere_projection = SphereProjection::geodesic;
  double domain_bound = 1e3;        ///< |x|_inf beyond this => diverged
  double energy_floor = -std::numeric_limits<double>::infinity();
  std::optional<std::pair<Vector, Vector>> region;   ///< leaving [lo, hi] => left_region
  /// alpha + beta = 1 + lambda_2 / |lambda_1| each iteration (ratio kept).
  bool adaptive = false;
  bool verify_index = true;
  Eigen::Index dense_cap = 1000;

  void validate() const;
};

enum class RunStatus { converged, max_iters, diverged, left_region, wrong_index, failed };

std::string to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

struct IterationRecord {
  int iter = 0;
  Vector x;
  double error = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();   ///< at x (NaN when never evaluated)
  int inner_iters = 0;
  double step_norm = 0.0;
};

struct ConvergenceRecord {
  std::vector<IterationRecord> iterations;   ///< row 0 is the start point
  RunStatus status = RunStatus::max_iters;
  std::string message;
  int terminal_index = -1;     ///< dense count of negative eigenvalues, -1 if unchecked
  int reference_id = -1;       ///< nearest configured reference, -1 if none
  std::optional<double> order;

  const Vector& final_x() const { return iterations.back().x; }
  int outer_iterations() const { return iterations.empty() ? 0 : iterations.back().iter; }
  std::vector<double> errors() const;

  /// One row per iteration: iter,error,grad_norm,lambda1,inner_iters,step_norm,x0..x{d-1}.
  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
  static ConvergenceRecord from_json(const nlohmann::json& j);
};

/// One application of Phi. Solver failures are rethrown as SolverError
/// carrying the outer iteration.
SearchState step(const Potential& p, const SearchState& s, const IMFConfig& cfg);

/// Iterate until |grad V|_inf <= grad_tol or a terminal condition.
ConvergenceRecord run(const Potential& p, const Vector& x0, const IMFConfig& cfg);

/// Central-difference Jacobian of x -> Phi(x) (flat space only).
Matrix jacobian_of_phi(const Potential& p, const Vector& x, const IMFConfig& cfg, double h = 1e-4);

/**
 * @brief Order of convergence from an error sequence.
 *
 * Takes the final strictly decreasing run of errors above floor and fits
 * log e_{k+1} = q log e_k + c by least squares over at most `window` pairs.
 * Throws ContractError with fewer than min_points usable errors.
 */
double estimate_order(const std::vector<double>& errors, int window = 3, double floor = 1e-14, int min_points = 4);

/// Named coefficient presets: "2,0", "0,2", "1,1".
Coefficients coefficient_preset(const std::string& name);

}  // namespace saddle
