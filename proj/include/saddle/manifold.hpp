#pragma once

#include <functional>
#include <string>
#include <vector>

#include "saddle/common.hpp"
#include "saddle/eigensolver.hpp"
#include "saddle/objective.hpp"
#include "saddle/subsolve.hpp"

/**
 * \file manifold.hpp
 *
 * @brief Equality-constrained manifolds {c_i(x) = 0}: tangent projection,
 * retraction and constrained subproblem solves. The unit sphere is the only
 * builtin instance.
 */

namespace saddle {

struct Constraint {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  /// Action of the constraint Hessian; empty means the constraint is affine.
  std::function<Vector(const Vector&, const Vector&)> hessian_vec;
};

class ManifoldSpec {
 public:
  using Retraction = std::function<Vector(const Vector&, const Vector&)>;

  ManifoldSpec(std::string name, Eigen::Index ambient_dim, std::vector<Constraint> constraints,
               Retraction retraction);

  const std::string& name() const { return name_; }
  Eigen::Index ambient_dimension() const { return dim_; }
  int codimension() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  /// max_i |c_i(x)|.
  double infeasibility(const Vector& x) const;
  /// Throws ContractError when infeasibility exceeds tol.
  void require_feasible(const Vector& x, double tol = 1e-8) const;

  /// Orthonormal basis of span{grad c_i(x)}; throws ContractError on rank
  /// deficiency (relative tolerance 1e-10).
  Matrix normal_basis(const Vector& x) const;
  /// Orthonormal basis of the tangent space (d - p columns).
  Matrix tangent_basis(const Vector& x) const;
  Vector project(const Vector& x, const Vector& u) const;
  Projector projector_at(const Vector& x) const;

  /// R_x(step): a point on the manifold.
  Vector retract(const Vector& x, const Vector& step) const;

  /// Least-squares multipliers mu with g ~ sum_i mu_i grad c_i(x).
  Vector multipliers(const Vector& x, const Vector& g) const;
  /// -sum_i mu_i grad^2 c_i(x) u for the multipliers of g.
  Vector curvature_action(const Vector& x, const Vector& g, const Vector& u) const;

 private:
  Matrix constraint_gradients(const Vector& x) const;

  std::string name_;
  Eigen::Index dim_;
  std::vector<Constraint> constraints_;
  Retraction retraction_;
};

/// Unit sphere |x|^2 = 1 with the metric-projection retraction (x+u)/|x+u|.
ManifoldSpec make_sphere(Eigen::Index ambient_dim = 3);

/// u minus its normal component at feasible x (checked to 1e-8).
Vector tangent_project(const ManifoldSpec& M, const Vector& x, const Vector& u);
Matrix tangent_basis(const ManifoldSpec& M, const Vector& x);

struct GeodesicProjection {
  double theta = 0.0;
  Vector point;
  bool degenerate = false;  ///< <x,y> = <v,y> = 0; theta set to pi/2
};

/// Nearest point to y on the great circle x cos t + v sin t.
GeodesicProjection sphere_geodesic_project(const Vector& x, const Vector& v, const Vector& y);

/**
 * @brief Minimise L over the manifold from feasible y0.
 *
 * Projected steepest descent or PR+ conjugate gradients: steps along tangent
 * directions, retraction back onto M, directions carried over by projection.
 * Line-search trial steps use the Riemannian curvature of L along p.
 */
SubsolveResult solve_constrained_subproblem(const Objective& L, const ManifoldSpec& M, const Vector& y0,
                                            const SubsolveConfig& cfg);

/// Riemannian Hessian of p at feasible x in the tangent_basis coordinates.
Matrix riemannian_hessian(const Potential& p, const ManifoldSpec& M, const Vector& x);

/// Riemannian gradient (tangent projection of the Euclidean one).
Vector riemannian_gradient(const Potential& p, const ManifoldSpec& M, const Vector& x);

}  // namespace saddle
