#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "saddle/common.hpp"
#include "saddle/potentials.hpp"

/**
 * \file objective.hpp
 *
 * @brief The per-iteration modified objective L(y; x, v, alpha, beta) whose
 * local minimiser defines the next iterate.
 */

namespace saddle {

/// Smooth scalar function of y with gradient and Hessian-vector product.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& y) const = 0;
  virtual Vector gradient(const Vector& y) const = 0;
  virtual Vector hessian_vec(const Vector& y, const Vector& u) const = 0;
  /// Scale of the terms summed into value(y); rounding error in value(y) is
  /// relative to this, not to |value(y)|, when terms cancel.
  virtual double magnitude(const Vector& y) const { return std::abs(value(y)); }
};

/// V itself viewed as an Objective (used for plain relaxations).
class PotentialObjective final : public Objective {
 public:
  explicit PotentialObjective(const Potential& p) : p_(&p) {}
  Eigen::Index dimension() const override { return p_->dimension(); }
  double value(const Vector& y) const override { return p_->energy(y); }
  Vector gradient(const Vector& y) const override { return p_->gradient(y); }
  Vector hessian_vec(const Vector& y, const Vector& u) const override { return p_->hessian_vec(y, u); }

 private:
  const Potential* p_;
};

/// (alpha, beta) weights of the hyperplane term W1 and the ray term W2.
struct Coefficients {
  double alpha = 1.0;
  double beta = 1.0;

  double sum() const { return alpha + beta; }

  static Coefficients w1() { return {2.0, 0.0}; }
  static Coefficients w2() { return {0.0, 2.0}; }
  static Coefficients mixed() { return {1.0, 1.0}; }
};

/// Subset-indexed weights for index-m objectives. Keys are bit masks over the
/// m directions (bit i set <=> direction i in the subset); zero is invalid.
struct SubsetCoefficients {
  std::map<unsigned, double> alpha;
  std::map<unsigned, double> beta;

  double sum() const;
  /// alpha_s = 0 everywhere, beta on the full set = 2.
  static SubsetCoefficients minimal(int m);
  /// Index-1 weights expressed as subset weights.
  static SubsetCoefficients from(const Coefficients& c);
};

enum class ObjectiveVariant { flat, index_m, manifold_geodesic, manifold_retraction };

/// How points are pulled onto the great circles of a sphere frame.
enum class SphereProjection { geodesic, retraction };

/// Anchor and directions on S^2: x, the min-mode v and its tangent complement.
struct GeodesicFrame {
  Vector x;
  Vector v;
  Vector v_perp;

  /// Frame at x with min-mode v; v_perp = x cross v. Validates unit length
  /// and orthogonality to 1e-10.
  static GeodesicFrame on_sphere(const Vector& x, const Vector& v);
};

/**
 * @brief L(y) = (1 - sum alpha) V(y) + sum_s alpha_s V(x + P_s^perp (y - x))
 *               - sum_s beta_s V(x + P_s (y - x)).
 *
 * Immutable after construction; holds a non-owning pointer to the potential,
 * which must outlive it. Only the projectors V_s V_s^T enter, so flipping the
 * sign of any direction leaves L unchanged.
 *
 * The manifold variants act on S^2 and replace the affine projections by
 * projections onto the great circles through x along v (ray term) and along
 * v_perp (hyperplane term). Their value/gradient/Hessian are those of the
 * natural extension to R^3; inputs must lie on the sphere to 1e-8.
 */
class ModifiedObjective final : public Objective {
 public:
  Eigen::Index dimension() const override { return anchor_.size(); }
  double value(const Vector& y) const override;
  Vector gradient(const Vector& y) const override;
  Vector hessian_vec(const Vector& y, const Vector& u) const override;
  double magnitude(const Vector& y) const override;

  ObjectiveVariant variant() const { return variant_; }
  const Vector& anchor() const { return anchor_; }
  const Matrix& directions() const { return dirs_; }
  double coefficient_sum() const;
  const Potential& potential() const { return *p_; }

 private:
  friend ModifiedObjective build_flat(const Potential&, const Vector&, const Vector&, double, double);
  friend ModifiedObjective build_index_m(const Potential&, const Vector&, const Matrix&, const SubsetCoefficients&);
  friend ModifiedObjective build_manifold(const Potential&, const GeodesicFrame&, const Coefficients&,
                                          SphereProjection);

  struct Term {
    double alpha = 0.0;
    double beta = 0.0;
    Matrix basis;  ///< columns spanning the subset's directions
  };

  ModifiedObjective() = default;
  void check_point(const Vector& y, const char* where) const;
  double accumulate(const Vector& y, bool absolute) const;

  const Potential* p_ = nullptr;
  ObjectiveVariant variant_ = ObjectiveVariant::flat;
  Vector anchor_;
  Matrix dirs_;
  double alpha_total_ = 0.0;
  std::vector<Term> terms_;
  // manifold variants
  GeodesicFrame frame_;
  Coefficients sphere_coeffs_;
};

/// Index-1 objective in flat space. Requires alpha + beta > 1 and |v| = 1.
ModifiedObjective build_flat(const Potential& p, const Vector& x, const Vector& v, double alpha, double beta);

inline ModifiedObjective build_flat(const Potential& p, const Vector& x, const Vector& v, const Coefficients& c) {
  return build_flat(p, x, v, c.alpha, c.beta);
}

/// Index-m objective over the columns of V (orthonormal to 1e-10).
ModifiedObjective build_index_m(const Potential& p, const Vector& x, const Matrix& V, const SubsetCoefficients& c);

/// S^2 objective: (1 - alpha) V(y) + alpha V(xi_perp(y)) - beta V(xi_v(y)).
ModifiedObjective build_manifold(const Potential& p, const GeodesicFrame& frame, const Coefficients& c,
                                 SphereProjection projection = SphereProjection::geodesic);

enum class ManifoldTerm { w1, w2, mix };
Coefficients coefficients_for(ManifoldTerm t);

/// Throws ContractError unless the sum exceeds one.
void check_coefficient_sum(double sum);

}  // namespace saddle
