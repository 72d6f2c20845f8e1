#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "saddle/common.hpp"
#include "saddle/potentials.hpp"

namespace saddle {

/// Orthogonal projector onto a subspace (e.g. a tangent space).
using Projector = std::function<Vector(const Vector&)>;

/// Smallest eigenpairs of a (possibly projected) Hessian.
struct MinModeResult {
  std::vector<double> eigenvalues;   ///< ascending
  Matrix eigenvectors;               ///< one orthonormal column per eigenvalue
  std::vector<double> residual_norms;
  int iterations = 0;
  /// Gap between the last returned eigenvalue and the next Ritz value
  /// (infinity when the search space held nothing beyond the block).
  double gap = 0.0;
  /// Spectral scale estimate used for relative tolerances.
  double scale = 0.0;
  /// Some returned eigenvalue lies within 1e-8 * scale of a neighbour.
  bool near_degenerate = false;

  Vector vector(int i) const { return eigenvectors.col(i); }
};

struct MinModeOptions {
  double tol = 1e-10;          ///< residual bound, relative to the spectral scale
  int max_iters = 5000;
  int guard = 2;               ///< extra block vectors beyond m
  Matrix warm_start;           ///< optional seed columns (need not be orthonormal)
  Projector projector;         ///< optional; eigenvectors are confined to its range
  int constraint_count = 0;    ///< codimension of the projector's range
  unsigned seed = 20140317u;   ///< fill for columns not supplied by warm_start
};

/// Carries the best eigenpairs reached before the iteration budget ran out.
class MinModeError : public SolverError {
 public:
  MinModeError(const std::string& what, MinModeResult best) : SolverError(what), best_(std::move(best)) {}
  const MinModeResult& best() const { return best_; }

 private:
  MinModeResult best_;
};

/// Linear operator form used by the block solver.
using LinearOperator = std::function<Vector(const Vector&)>;

/**
 * @brief Block Rayleigh-quotient minimisation (LOBPCG without preconditioner).
 *
 * Finds the m smallest eigenpairs of the symmetric operator A restricted to
 * the range of the optional projector. Each iteration orthonormalises the
 * search space [X, R, P] (dropping numerically dependent directions) and
 * performs Rayleigh-Ritz on it, so small problems are solved exactly once the
 * space fills the whole domain. Throws MinModeError when the residuals of the
 * first m pairs are not below tol * scale within max_iters.
 */
MinModeResult lobpcg(const LinearOperator& apply, Eigen::Index dim, int m, const MinModeOptions& opt = {});

/// m smallest eigenpairs of the Hessian of p at x (projected when opt.projector is set).
MinModeResult min_modes(const Potential& p, const Vector& x, int m, const MinModeOptions& opt = {});

struct DenseSpectrum {
  Vector eigenvalues;   ///< ascending
  Matrix eigenvectors;  ///< columns
  int negative_count(double tol = 0.0) const;
};

/// Hessian assembled column by column from hessian_vec, symmetrised.
Matrix dense_hessian(const Potential& p, const Vector& x, Eigen::Index cap = 1000);

/// Full spectrum of the Hessian. Throws ContractError above the dimension cap.
DenseSpectrum dense_eigensolve(const Potential& p, const Vector& x, Eigen::Index cap = 1000);

/// Spectrum of a symmetric matrix (B^T M B when a basis is given).
DenseSpectrum dense_eigensolve(const Matrix& m, const Matrix& basis = {});

}  // namespace saddle
