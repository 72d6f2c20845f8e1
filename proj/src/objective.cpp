#include "saddle/objective.hpp"

#include <fmt/core.h>

#include <bit>
#include <cmath>
#include <functional>
#include <numbers>

namespace saddle {

namespace {

constexpr double kUnitTol = 1e-10;
constexpr double kSphereTol = 1e-8;

// Angle of y along the great circle x cos t + w sin t, with its first and
// second derivatives with respect to y.
struct CircleAngle {
  double theta = 0.0;
  Vector grad;
  // Hessian action on u
  std::function<Vector(const Vector&)> hess;
};

CircleAngle circle_angle(const Vector& x, const Vector& w, const Vector& y, SphereProjection kind) {
  const double a = x.dot(y);
  const double b = w.dot(y);
  CircleAngle out;
  if (kind == SphereProjection::geodesic) {
    const double r2 = a * a + b * b;
    if (r2 == 0.0) {
      out.theta = std::numbers::pi / 2;
      out.grad = Vector::Zero(y.size());
      out.hess = [n = y.size()](const Vector&) { return Vector(Vector::Zero(n)); };
      return out;
    }
    out.theta = std::atan2(b, a);
    out.grad = (a * w - b * x) / r2;
    const double r4 = r2 * r2;
    out.hess = [x, w, a, b, r4](const Vector& u) -> Vector {
      const double xu = x.dot(u);
      const double wu = w.dot(u);
      return ((b * b - a * a) * (w * xu + x * wu) + 2.0 * a * b * (x * xu - w * wu)) / r4;
    };
  } else {
    // Retraction of the tangent step b w: atan(b) along the circle.
    const double q = 1.0 + b * b;
    out.theta = std::atan(b);
    out.grad = w / q;
    out.hess = [w, b, q](const Vector& u) -> Vector { return (-2.0 * b * w.dot(u) / (q * q)) * w; };
  }
  return out;
}

void check_unit_columns(const Matrix& V, const char* where) {
  const Matrix gram = V.transpose() * V;
  const double dev = (gram - Matrix::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff();
  if (dev > kUnitTol) {
    throw ContractError(fmt::format("{}: directions are not orthonormal (deviation {:.3e})", where, dev));
  }
}

Matrix subset_basis(const Matrix& V, unsigned mask) {
  Matrix b(V.rows(), std::popcount(mask));
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    if (mask & (1u << i)) b.col(c++) = V.col(i);
  }
  return b;
}

}  // namespace

double SubsetCoefficients::sum() const {
  double s = 0.0;
  for (const auto& [mask, a] : alpha) s += a;
  for (const auto& [mask, b] : beta) s += b;
  return s;
}

SubsetCoefficients SubsetCoefficients::minimal(int m) {
  require(m >= 1 && m < 32, "index-m coefficients: m must lie in [1, 31]");
  SubsetCoefficients c;
  c.beta[(1u << m) - 1u] = 2.0;
  return c;
}

SubsetCoefficients SubsetCoefficients::from(const Coefficients& c) {
  SubsetCoefficients s;
  s.alpha[1u] = c.alpha;
  s.beta[1u] = c.beta;
  return s;
}

GeodesicFrame GeodesicFrame::on_sphere(const Vector& x, const Vector& v) {
  require_dimension(x.size(), 3, "GeodesicFrame");
  require_dimension(v.size(), 3, "GeodesicFrame");
  require(std::abs(x.norm() - 1.0) <= kUnitTol, "GeodesicFrame: anchor is not on the unit sphere");
  require(std::abs(v.norm() - 1.0) <= kUnitTol, "GeodesicFrame: direction is not a unit vector");
  require(std::abs(x.dot(v)) <= kUnitTol, "GeodesicFrame: direction is not tangent at the anchor");
  const Eigen::Vector3d xc = x;
  const Eigen::Vector3d vc = v;
  return {x, v, Vector(xc.cross(vc))};
}

void check_coefficient_sum(double sum) {
  if (!(sum > 1.0)) {
    throw ContractError(fmt::format(
        "coefficient sum {} violates alpha + beta > 1; the modified objective is not locally convex at the "
        "saddle otherwise",
        sum));
  }
}

Coefficients coefficients_for(ManifoldTerm t) {
  switch (t) {
    case ManifoldTerm::w1: return Coefficients::w1();
    case ManifoldTerm::w2: return Coefficients::w2();
    case ManifoldTerm::mix: break;
  }
  return Coefficients::mixed();
}

ModifiedObjective build_flat(const Potential& p, const Vector& x, const Vector& v, double alpha, double beta) {
  require_dimension(x.size(), p.dimension(), "build_flat anchor");
  require_dimension(v.size(), p.dimension(), "build_flat direction");
  check_coefficient_sum(alpha + beta);
  require(std::abs(v.norm() - 1.0) <= kUnitTol, "build_flat: direction must have unit length");
  ModifiedObjective L;
  L.p_ = &p;
  L.variant_ = ObjectiveVariant::flat;
  L.anchor_ = x;
  L.dirs_ = v;
  L.alpha_total_ = alpha;
  L.terms_.push_back({alpha, beta, v});
  return L;
}

ModifiedObjective build_index_m(const Potential& p, const Vector& x, const Matrix& V, const SubsetCoefficients& c) {
  require_dimension(x.size(), p.dimension(), "build_index_m anchor");
  require_dimension(V.rows(), p.dimension(), "build_index_m directions");
  const auto m = V.cols();
  require(m >= 1 && m < 32, "build_index_m: need between 1 and 31 directions");
  check_unit_columns(V, "build_index_m");
  check_coefficient_sum(c.sum());

  const unsigned full = (1u << m) - 1u;
  std::map<unsigned, ModifiedObjective::Term> terms;
  auto add = [&](unsigned mask, double value, bool is_alpha) {
    if (mask == 0 || (mask & ~full) != 0) {
      throw ContractError(fmt::format("build_index_m: subset mask {} is not a nonempty subset of {} directions",
                                      mask, m));
    }
    auto& t = terms[mask];
    (is_alpha ? t.alpha : t.beta) = value;
  };
  for (const auto& [mask, a] : c.alpha) add(mask, a, true);
  for (const auto& [mask, b] : c.beta) add(mask, b, false);

  ModifiedObjective L;
  L.p_ = &p;
  L.variant_ = m == 1 ? ObjectiveVariant::flat : ObjectiveVariant::index_m;
  L.anchor_ = x;
  L.dirs_ = V;
  for (auto& [mask, t] : terms) {
    if (t.alpha == 0.0 && t.beta == 0.0) continue;
    t.basis = subset_basis(V, mask);
    L.alpha_total_ += t.alpha;
    L.terms_.push_back(std::move(t));
  }
  return L;
}

ModifiedObjective build_manifold(const Potential& p, const GeodesicFrame& frame, const Coefficients& c,
                                 SphereProjection projection) {
  require_dimension(p.dimension(), 3, "build_manifold");
  check_coefficient_sum(c.sum());
  // Revalidate: the frame may have been assembled by hand.
  const GeodesicFrame f = GeodesicFrame::on_sphere(frame.x, frame.v);
  require((f.v_perp - frame.v_perp).norm() <= 1e-8 || (f.v_perp + frame.v_perp).norm() <= 1e-8,
          "build_manifold: v_perp must be orthogonal to both the anchor and v");
  ModifiedObjective L;
  L.p_ = &p;
  L.variant_ = projection == SphereProjection::geodesic ? ObjectiveVariant::manifold_geodesic
                                                         : ObjectiveVariant::manifold_retraction;
  L.anchor_ = frame.x;
  L.dirs_ = frame.v;
  L.alpha_total_ = c.alpha;
  L.frame_ = frame;
  L.sphere_coeffs_ = c;
  return L;
}

double ModifiedObjective::coefficient_sum() const {
  if (variant_ == ObjectiveVariant::manifold_geodesic || variant_ == ObjectiveVariant::manifold_retraction) {
    return sphere_coeffs_.sum();
  }
  double s = 0.0;
  for (const auto& t : terms_) s += t.alpha + t.beta;
  return s;
}

void ModifiedObjective::check_point(const Vector& y, const char* where) const {
  require_dimension(y.size(), anchor_.size(), where);
  if (variant_ == ObjectiveVariant::manifold_geodesic || variant_ == ObjectiveVariant::manifold_retraction) {
    const double dev = std::abs(y.norm() - 1.0);
    if (dev > kSphereTol) {
      throw ContractError(fmt::format("{}: point is off the sphere by {:.3e}", where, dev));
    }
  }
}

double ModifiedObjective::value(const Vector& y) const {
  check_point(y, "ModifiedObjective::value");
  return accumulate(y, false);
}

double ModifiedObjective::magnitude(const Vector& y) const {
  check_point(y, "ModifiedObjective::magnitude");
  return accumulate(y, true);
}

double ModifiedObjective::accumulate(const Vector& y, bool absolute) const {
  // absolute: sum of |coefficient * V| instead of the signed sum.
  auto term = [absolute](double c, double e) { return absolute ? std::abs(c * e) : c * e; };
  double out = term(1.0 - alpha_total_, p_->energy(y));
  if (variant_ == ObjectiveVariant::flat || variant_ == ObjectiveVariant::index_m) {
    const Vector d = y - anchor_;
    for (const auto& t : terms_) {
      const Vector pd = t.basis * (t.basis.transpose() * d);
      if (t.alpha != 0.0) out += term(t.alpha, p_->energy(y - pd));
      if (t.beta != 0.0) out += term(-t.beta, p_->energy(anchor_ + pd));
    }
    return out;
  }
  const auto kind = variant_ == ObjectiveVariant::manifold_geodesic ? SphereProjection::geodesic
                                                                      : SphereProjection::retraction;
  const auto& fr = frame_;
  auto point = [&](const Vector& w) {
    const double th = circle_angle(fr.x, w, y, kind).theta;
    return Vector(fr.x * std::cos(th) + w * std::sin(th));
  };
  if (sphere_coeffs_.alpha != 0.0) out += term(sphere_coeffs_.alpha, p_->energy(point(fr.v_perp)));
  if (sphere_coeffs_.beta != 0.0) out += term(-sphere_coeffs_.beta, p_->energy(point(fr.v)));
  return out;
}

Vector ModifiedObjective::gradient(const Vector& y) const {
  check_point(y, "ModifiedObjective::gradient");
  Vector g = (1.0 - alpha_total_) * p_->gradient(y);
  if (variant_ == ObjectiveVariant::flat || variant_ == ObjectiveVariant::index_m) {
    const Vector d = y - anchor_;
    for (const auto& t : terms_) {
      const Vector pd = t.basis * (t.basis.transpose() * d);
      if (t.alpha != 0.0) {
        const Vector gv = p_->gradient(y - pd);
        g += t.alpha * (gv - t.basis * (t.basis.transpose() * gv));
      }
      if (t.beta != 0.0) {
        const Vector gv = p_->gradient(anchor_ + pd);
        g -= t.beta * (t.basis * (t.basis.transpose() * gv));
      }
    }
    return g;
  }
  const auto kind = variant_ == ObjectiveVariant::manifold_geodesic ? SphereProjection::geodesic
                                                                      : SphereProjection::retraction;
  const auto& fr = frame_;
  auto term = [&](const Vector& w, double weight) {
    if (weight == 0.0) return;
    const CircleAngle ang = circle_angle(fr.x, w, y, kind);
    const double c = std::cos(ang.theta), s = std::sin(ang.theta);
    const Vector xi = fr.x * c + w * s;
    const Vector dxi = -fr.x * s + w * c;
    g += weight * p_->gradient(xi).dot(dxi) * ang.grad;
  };
  term(fr.v_perp, sphere_coeffs_.alpha);
  term(fr.v, -sphere_coeffs_.beta);
  return g;
}

Vector ModifiedObjective::hessian_vec(const Vector& y, const Vector& u) const {
  check_point(y, "ModifiedObjective::hessian_vec");
  require_dimension(u.size(), anchor_.size(), "ModifiedObjective::hessian_vec direction");
  Vector h = (1.0 - alpha_total_) * p_->hessian_vec(y, u);
  if (variant_ == ObjectiveVariant::flat || variant_ == ObjectiveVariant::index_m) {
    const Vector d = y - anchor_;
    for (const auto& t : terms_) {
      const Vector pd = t.basis * (t.basis.transpose() * d);
      const Vector pu = t.basis * (t.basis.transpose() * u);
      if (t.alpha != 0.0) {
        const Vector hv = p_->hessian_vec(y - pd, u - pu);
        h += t.alpha * (hv - t.basis * (t.basis.transpose() * hv));
      }
      if (t.beta != 0.0 && pu.squaredNorm() > 0.0) {
        const Vector hv = p_->hessian_vec(anchor_ + pd, pu);
        h -= t.beta * (t.basis * (t.basis.transpose() * hv));
      }
    }
    return h;
  }
  const auto kind = variant_ == ObjectiveVariant::manifold_geodesic ? SphereProjection::geodesic
                                                                      : SphereProjection::retraction;
  const auto& fr = frame_;
  auto term = [&](const Vector& w, double weight) {
    if (weight == 0.0) return;
    const CircleAngle ang = circle_angle(fr.x, w, y, kind);
    const double c = std::cos(ang.theta), s = std::sin(ang.theta);
    const Vector xi = fr.x * c + w * s;
    const Vector dxi = -fr.x * s + w * c;
    const Vector gv = p_->gradient(xi);
    const double first = gv.dot(dxi);
    const double second = dxi.dot(p_->hessian_vec(xi, dxi)) - gv.dot(xi);
    h += weight * (second * ang.grad.dot(u) * ang.grad + first * ang.hess(u));
  };
  term(fr.v_perp, sphere_coeffs_.alpha);
  term(fr.v, -sphere_coeffs_.beta);
  return h;
}

}  // namespace saddle
