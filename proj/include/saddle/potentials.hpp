#pragma once

#include "json.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "saddle/common.hpp"

/**
 * \file potentials.hpp
 *
 * @brief Energy surfaces: the abstract model plus the benchmark builtins.
 */

namespace saddle {

/// A stationary point with its Morse index (number of negative Hessian
/// eigenvalues; on a manifold, of the Riemannian Hessian).
struct StationaryPoint {
  std::string label;
  Vector point;
  int index = 0;
};

/**
 * @brief Smooth energy V : R^d -> R with gradient and Hessian-vector action.
 *
 * Public entry points check dimensions and forward to the protected
 * implementation hooks. Implementations must be pure: concurrent calls from
 * several threads on the same instance are allowed.
 *
 * hessian_vec defaults to a central difference of the gradient along the
 * normalised direction with step 1e-5 * (1 + |x|_inf).
 */
class Potential {
 public:
  virtual ~Potential() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual std::string name() const = 0;

  double energy(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Vector hessian_vec(const Vector& x, const Vector& u) const;

  /// Known stationary points (may be empty).
  const std::vector<StationaryPoint>& stationary_points() const { return known_; }

 protected:
  virtual double energy_impl(const Vector& x) const = 0;
  virtual Vector gradient_impl(const Vector& x) const = 0;
  virtual Vector hessian_vec_impl(const Vector& x, const Vector& u) const;

  std::vector<StationaryPoint> known_;
};

using PotentialPtr = std::shared_ptr<const Potential>;

/// Central-difference gradient of the energy.
Vector fd_gradient(const Potential& p, const Vector& x, double h = 1e-5);

/// Central difference of the gradient along u (u need not be normalised).
Vector fd_hessian_vec(const Potential& p, const Vector& x, const Vector& u);

/// Potential assembled from callables. Missing gradient / Hessian handles fall
/// back to finite differences.
class FunctionPotential final : public Potential {
 public:
  using EnergyFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessVecFn = std::function<Vector(const Vector&, const Vector&)>;

  FunctionPotential(std::string name, Eigen::Index dim, EnergyFn energy, GradientFn gradient = {},
                    HessVecFn hessian_vec = {}, std::vector<StationaryPoint> known = {});

  Eigen::Index dimension() const override { return dim_; }
  std::string name() const override { return name_; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;

 private:
  std::string name_;
  Eigen::Index dim_;
  EnergyFn energy_;
  GradientFn gradient_;
  HessVecFn hessian_vec_;
};

/// V = 1/4 (x^2 - 1)^2 + 1/2 mu y^2.
class DoubleWell final : public Potential {
 public:
  explicit DoubleWell(double mu);
  Eigen::Index dimension() const override { return 2; }
  std::string name() const override { return "double_well"; }
  double mu() const { return mu_; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;

 private:
  double mu_;
};

/// Three-hole surface with minima near (+-1, 0), (0, 1.5), a maximum near
/// (0, 0.5) and saddles SP1 = (0, -0.31583), SP2/SP3 = (-+0.61727, 1.10273).
/// The Gaussian wells use fully negated exponents.
class ThreeHole final : public Potential {
 public:
  ThreeHole();
  Eigen::Index dimension() const override { return 2; }
  std::string name() const override { return "three_hole"; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;

 private:
  Eigen::Matrix2d hessian(const Vector& x) const;
};

/// V = sum_i c_i x_i^2 in R^3, meant to be restricted to the unit sphere.
/// Known points are the constrained stationary points for c = (1, 2, 3).
class SphereQuadratic final : public Potential {
 public:
  explicit SphereQuadratic(Eigen::Vector3d coeffs = {1.0, 2.0, 3.0});
  Eigen::Index dimension() const override { return 3; }
  std::string name() const override { return "sphere_quadratic"; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;

 private:
  Eigen::Vector3d c_;
};

/// V = 1/2 (x - c)^T H (x - c) with constant symmetric H.
class Quadratic final : public Potential {
 public:
  explicit Quadratic(Matrix hessian, Vector center = {});
  Eigen::Index dimension() const override { return h_.rows(); }
  std::string name() const override { return "quadratic"; }
  const Matrix& hessian() const { return h_; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector&, const Vector& u) const override { return h_ * u; }

 private:
  Matrix h_;
  Vector c_;
};

/// Three-dimensional test surface with an index-2 saddle at the origin:
/// 1/2 (-2x^2 - y^2 + 3z^2) plus cubic and quartic couplings that leave the
/// origin's gradient and Hessian untouched.
class CubicIndexTwo final : public Potential {
 public:
  CubicIndexTwo();
  Eigen::Index dimension() const override { return 3; }
  std::string name() const override { return "index2_cubic"; }

 protected:
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;
};

// ---------------------------------------------------------------------------
// Morse island on an FCC(111) slab

struct MorseClusterSpec {
  double A = 0.7102;                 ///< eV
  double a = 1.6047;                 ///< 1/Angstrom
  double R0 = 2.8970;                ///< Angstrom
  double Rc = 9.5;                   ///< cutoff, Angstrom
  double lattice_constant = 2.74412; ///< nearest-neighbour distance, Angstrom
  int slab_layers = 6;
  int atoms_per_layer = 56;
  int frozen_layers = 3;
  int island_atoms = 7;

  void validate() const;
  /// Number of atoms whose coordinates are optimised.
  int free_atoms() const { return (slab_layers - frozen_layers) * atoms_per_layer + island_atoms; }
};

/// Cut-and-shifted Morse pair energy and its first two radial derivatives.
struct MorsePair {
  double A, a, R0, Rc, shift;

  explicit MorsePair(const MorseClusterSpec& s);
  double raw(double r) const;
  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
};

struct MorseLattice {
  Eigen::Matrix3Xd positions;   ///< all atoms, slab layers bottom-up, then island
  std::vector<bool> frozen;     ///< per atom
  int free_count() const;
  /// Coordinates of the free atoms, flattened atom-major (x0 y0 z0 x1 ...).
  Vector free_coordinates() const;
};

/**
 * @brief Finite open FCC(111) slab with ABC stacking plus a compact island.
 *
 * Each layer holds the atoms_per_layer triangular-lattice sites nearest a
 * common vertical axis (a roughly circular patch, which keeps the number of
 * low-coordinated edge atoms small). The island sits on the fcc hollow sites
 * above the top layer: the on-axis site plus up to six in-plane neighbours.
 */
MorseLattice build_morse_lattice(const MorseClusterSpec& spec);

class MorseIsland final : public Potential {
 public:
  explicit MorseIsland(MorseClusterSpec spec = {});
  Eigen::Index dimension() const override { return 3 * static_cast<Eigen::Index>(free_.size()); }
  std::string name() const override { return "morse_island"; }

  const MorseClusterSpec& spec() const { return spec_; }
  const MorseLattice& lattice() const { return lattice_; }
  /// Unrelaxed starting geometry as an optimisation vector.
  Vector initial_point() const { return lattice_.free_coordinates(); }
  /// Full atomic positions with the free atoms replaced by x.
  Eigen::Matrix3Xd full_positions(const Vector& x) const;
  int atom_count() const { return static_cast<int>(lattice_.positions.cols()); }

 protected:
  /// Frozen-frozen pairs are omitted, so energies are relative to the rigid substrate.
  double energy_impl(const Vector& x) const override;
  Vector gradient_impl(const Vector& x) const override;
  Vector hessian_vec_impl(const Vector& x, const Vector& u) const override;

 private:
  MorseClusterSpec spec_;
  MorsePair pair_;
  MorseLattice lattice_;
  std::vector<int> free_;       ///< free slot -> atom
  std::vector<int> slot_;       ///< atom -> free slot or -1
};

/// Standard XYZ: atom count, comment line, then "El x y z" rows.
void write_xyz(std::ostream& out, const Eigen::Matrix3Xd& positions, std::string_view comment,
               std::string_view element = "Pt");

/**
 * @brief Instantiate a benchmark surface by name.
 *
 * Names: double_well {mu}, three_hole {}, sphere_quadratic {coeffs},
 * morse_island {A, a, R0, Rc, lattice_constant, slab_layers, atoms_per_layer,
 * frozen_layers, island_atoms}, quadratic {diag | matrix, center},
 * index2_cubic {}. Unknown names or keys raise ContractError.
 */
PotentialPtr make_builtin(std::string_view name, const nlohmann::json& params = nlohmann::json::object());

/// Names accepted by make_builtin.
std::vector<std::string> builtin_names();

}  // namespace saddle
