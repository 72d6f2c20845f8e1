#include "saddle/manifold.hpp"

#include <fmt/core.h>

#include <cmath>
#include <numbers>

#include "descent.hpp"

namespace saddle {

namespace {

constexpr double kRankTol = 1e-10;

class ManifoldGeometry final : public detail::Geometry {
 public:
  explicit ManifoldGeometry(const ManifoldSpec& m) : m_(m) {}

  Vector reduce(const Vector& y, const Vector& g) const override { return m_.project(y, g); }
  Move move(const Vector& y, const Vector& p, double t) const override { return {m_.retract(y, t * p), false}; }
  Vector transport(const Vector& y, const Vector& p) const override { return m_.project(y, p); }
  double curvature_correction(const Vector& y, const Vector& p, const Vector& g) const override {
    return p.dot(m_.curvature_action(y, g, p));
  }

 private:
  const ManifoldSpec& m_;
};

}  // namespace

ManifoldSpec::ManifoldSpec(std::string name, Eigen::Index ambient_dim, std::vector<Constraint> constraints,
                           Retraction retraction)
    : name_(std::move(name)), dim_(ambient_dim), constraints_(std::move(constraints)),
      retraction_(std::move(retraction)) {
  require(dim_ >= 1, "ManifoldSpec: ambient dimension must be positive");
  require(!constraints_.empty(), "ManifoldSpec: at least one constraint is required");
  require(static_cast<Eigen::Index>(constraints_.size()) < dim_, "ManifoldSpec: too many constraints");
  for (const auto& c : constraints_) {
    require(static_cast<bool>(c.value) && static_cast<bool>(c.gradient),
            "ManifoldSpec: constraints need value and gradient");
  }
  require(static_cast<bool>(retraction_), "ManifoldSpec: a retraction is required");
}

double ManifoldSpec::infeasibility(const Vector& x) const {
  require_dimension(x.size(), dim_, "ManifoldSpec");
  double worst = 0.0;
  for (const auto& c : constraints_) worst = std::max(worst, std::abs(c.value(x)));
  return worst;
}

void ManifoldSpec::require_feasible(const Vector& x, double tol) const {
  const double r = infeasibility(x);
  if (r > tol) throw ContractError(fmt::format("{}: point violates the constraints by {:.3e}", name_, r));
}

Matrix ManifoldSpec::constraint_gradients(const Vector& x) const {
  Matrix a(dim_, codimension());
  for (int i = 0; i < codimension(); ++i) a.col(i) = constraints_[static_cast<std::size_t>(i)].gradient(x);
  return a;
}

Matrix ManifoldSpec::normal_basis(const Vector& x) const {
  const Matrix a = constraint_gradients(x);
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix r = qr.matrixQR().topRows(codimension()).triangularView<Eigen::Upper>();
  const double big = r.diagonal().cwiseAbs().maxCoeff();
  for (int i = 0; i < codimension(); ++i) {
    if (!(std::abs(r(i, i)) > kRankTol * std::max(big, 1.0))) {
      throw ContractError(fmt::format("{}: constraint gradients are linearly dependent", name_));
    }
  }
  return qr.householderQ() * Matrix::Identity(dim_, codimension());
}

Matrix ManifoldSpec::tangent_basis(const Vector& x) const {
  const Matrix a = constraint_gradients(x);
  normal_basis(x);  // rank check
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  return q.rightCols(dim_ - codimension());
}

Vector ManifoldSpec::project(const Vector& x, const Vector& u) const {
  require_dimension(u.size(), dim_, "ManifoldSpec::project");
  const Matrix n = normal_basis(x);
  return u - n * (n.transpose() * u);
}

Projector ManifoldSpec::projector_at(const Vector& x) const {
  const Matrix n = normal_basis(x);
  return [n](const Vector& u) -> Vector { return u - n * (n.transpose() * u); };
}

Vector ManifoldSpec::retract(const Vector& x, const Vector& step) const { return retraction_(x, step); }

Vector ManifoldSpec::multipliers(const Vector& x, const Vector& g) const {
  const Matrix a = constraint_gradients(x);
  return a.colPivHouseholderQr().solve(g);
}

Vector ManifoldSpec::curvature_action(const Vector& x, const Vector& g, const Vector& u) const {
  const Vector mu = multipliers(x, g);
  Vector out = Vector::Zero(dim_);
  for (int i = 0; i < codimension(); ++i) {
    const auto& c = constraints_[static_cast<std::size_t>(i)];
    if (c.hessian_vec) out -= mu[i] * c.hessian_vec(x, u);
  }
  return out;
}

ManifoldSpec make_sphere(Eigen::Index ambient_dim) {
  require(ambient_dim >= 2, "make_sphere: ambient dimension must be at least 2");
  Constraint c;
  c.value = [](const Vector& x) { return x.squaredNorm() - 1.0; };
  c.gradient = [](const Vector& x) -> Vector { return 2.0 * x; };
  c.hessian_vec = [](const Vector&, const Vector& u) -> Vector { return 2.0 * u; };
  auto retraction = [](const Vector& x, const Vector& step) -> Vector {
    Vector y = x + step;
    const double n = y.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw SolverError("sphere retraction: step lands on the origin");
    return y / n;
  };
  return ManifoldSpec("sphere", ambient_dim, {c}, retraction);
}

Vector tangent_project(const ManifoldSpec& M, const Vector& x, const Vector& u) {
  M.require_feasible(x);
  return M.project(x, u);
}

Matrix tangent_basis(const ManifoldSpec& M, const Vector& x) {
  M.require_feasible(x);
  return M.tangent_basis(x);
}

GeodesicProjection sphere_geodesic_project(const Vector& x, const Vector& v, const Vector& y) {
  require(x.size() == v.size() && x.size() == y.size(), "sphere_geodesic_project: dimension mismatch");
  constexpr double tol = 1e-10;
  require(std::abs(x.norm() - 1.0) <= tol && std::abs(v.norm() - 1.0) <= tol && std::abs(y.norm() - 1.0) <= tol,
          "sphere_geodesic_project: inputs must be unit vectors");
  require(std::abs(x.dot(v)) <= tol, "sphere_geodesic_project: v must be tangent at x");
  const double a = x.dot(y);
  const double b = v.dot(y);
  GeodesicProjection out;
  if (a == 0.0 && b == 0.0) {
    out.theta = std::numbers::pi / 2;
    out.degenerate = true;
  } else {
    // atan(b/a) or that plus pi, whichever is closer: atan2 picks it.
    out.theta = std::atan2(b, a);
  }
  out.point = x * std::cos(out.theta) + v * std::sin(out.theta);
  return out;
}

SubsolveResult solve_constrained_subproblem(const Objective& L, const ManifoldSpec& M, const Vector& y0,
                                            const SubsolveConfig& cfg) {
  require_dimension(y0.size(), M.ambient_dimension(), "solve_constrained_subproblem");
  M.require_feasible(y0);
  return detail::descend(L, y0, cfg, ManifoldGeometry(M));
}

Vector riemannian_gradient(const Potential& p, const ManifoldSpec& M, const Vector& x) {
  return M.project(x, p.gradient(x));
}

Matrix riemannian_hessian(const Potential& p, const ManifoldSpec& M, const Vector& x) {
  M.require_feasible(x);
  const Matrix b = M.tangent_basis(x);
  const Vector g = p.gradient(x);
  Matrix h(b.cols(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const Vector u = b.col(j);
    h.col(j) = b.transpose() * (p.hessian_vec(x, u) + M.curvature_action(x, g, u));
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace saddle
