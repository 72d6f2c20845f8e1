#pragma once

// Shared line-search descent loop behind minimize() and the constrained
// subproblem solver. Not installed.

#include "saddle/objective.hpp"
#include "saddle/subsolve.hpp"

namespace saddle::detail {

class Geometry {
 public:
  struct Move {
    Vector y;
    bool clipped = false;
  };

  virtual ~Geometry() = default;
  /// Gradient restricted to admissible directions at y.
  virtual Vector reduce(const Vector& y, const Vector& g) const = 0;
  virtual Move move(const Vector& y, const Vector& p, double t) const = 0;
  /// Carry a direction from the previous point to y.
  virtual Vector transport(const Vector& y, const Vector& p) const { (void)y; return p; }
  /// Second-order correction to p^T H_L p along curved paths.
  virtual double curvature_correction(const Vector& y, const Vector& p, const Vector& g) const {
    (void)y, (void)p, (void)g;
    return 0.0;
  }
};

SubsolveResult descend(const Objective& L, const Vector& y0, const SubsolveConfig& cfg, const Geometry& geo);

}  // namespace saddle::detail
