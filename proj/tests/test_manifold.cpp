#include <cmath>
#include <numbers>

#include "doctest.h"
#include "saddle/eigensolver.hpp"
#include "saddle/manifold.hpp"
#include "saddle/objective.hpp"
#include "support.hpp"

using namespace saddle;
using testing_support::Rng;

namespace {

Vector tangent_unit(Rng& rng, const Vector& x) {
  Vector u = rng.gaussian(x.size());
  u -= x.dot(u) * x;
  return u.normalized();
}

}  // namespace

TEST_CASE("tangent projection on the sphere") {
  const ManifoldSpec M = make_sphere(3);
  CHECK(tangent_project(M, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 1, 0)).isApprox(Eigen::Vector3d(0, 1, 0)));
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vector x = rng.unit(3);
    const Vector u = rng.gaussian(3);
    const Vector pu = M.project(x, u);
    const Vector grad_c = M.constraints()[0].gradient(x);
    CHECK(std::abs(grad_c.dot(pu)) <= 1e-12 * (1.0 + u.norm()));
    CHECK((M.project(x, pu) - pu).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const Matrix B = tangent_basis(M, Eigen::Vector3d(0, 0, 1));
  CHECK(B.cols() == 2);
  CHECK((B.transpose() * B - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK_THROWS_AS(M.require_feasible(Eigen::Vector3d(1.1, 0, 0)), ContractError);
}

TEST_CASE("a two-constraint manifold") {
  // circle = sphere intersected with the plane x3 = 0
  const ManifoldSpec S = make_sphere(3);
  std::vector<Constraint> cs = S.constraints();
  cs.push_back({[](const Vector& x) { return x[2]; }, [](const Vector&) { return Vector(Vector::Unit(3, 2)); },
                [](const Vector&, const Vector&) { return Vector(Vector::Zero(3)); }});
  const ManifoldSpec C("circle", 3, cs, [](const Vector& x, const Vector& s) {
    Vector y = x + s;
    y[2] = 0.0;
    return Vector(y.normalized());
  });
  CHECK(C.codimension() == 2);
  const Vector x = Eigen::Vector3d(0.6, 0.8, 0.0);
  const Vector pu = C.project(x, Eigen::Vector3d(1, 1, 1));
  CHECK(std::abs(pu.dot(x)) < 1e-14);
  CHECK(std::abs(pu[2]) < 1e-14);
  CHECK(C.tangent_basis(x).cols() == 1);
}

TEST_CASE("geodesic projection conventions") {
  const Vector x = Eigen::Vector3d(1, 0, 0), v = Eigen::Vector3d(0, 1, 0);
  const GeodesicProjection a = sphere_geodesic_project(x, v, x);
  CHECK(a.theta == doctest::Approx(0.0));
  CHECK((a.point - x).norm() < 1e-15);
  const GeodesicProjection b = sphere_geodesic_project(x, v, v);
  CHECK(b.theta == doctest::Approx(std::numbers::pi / 2));
  CHECK((b.point - v).norm() < 1e-15);
  const GeodesicProjection c = sphere_geodesic_project(x, v, Eigen::Vector3d(0, 0, 1));
  CHECK(c.degenerate);
  CHECK(c.theta == doctest::Approx(std::numbers::pi / 2));
  // the far branch: y behind x
  const GeodesicProjection d = sphere_geodesic_project(x, v, Vector(Eigen::Vector3d(-1, 0.1, 0).normalized()));
  CHECK(d.point.dot(Eigen::Vector3d(-1, 0, 0)) > 0.99);
}

TEST_CASE("geodesic projection agrees with a dense sweep") {
  Rng rng(2);
  const int n = 1000000;
  for (int k = 0; k < 5; ++k) {
    const Vector x = rng.unit(3);
    const Vector v = tangent_unit(rng, x);
    const Vector y = rng.unit(3);
    double best = -2.0, best_t = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = -std::numbers::pi + 2.0 * std::numbers::pi * i / n;
      const double c = (x * std::cos(t) + v * std::sin(t)).dot(y);
      if (c > best) {
        best = c;
        best_t = t;
      }
    }
    const GeodesicProjection g = sphere_geodesic_project(x, v, y);
    const double diff = std::remainder(g.theta - best_t, 2.0 * std::numbers::pi);
    CHECK(std::abs(diff) <= 1e-5);
  }
}

TEST_CASE("constrained subproblem on the sphere") {
  const auto p = make_builtin("sphere_quadratic");
  const ManifoldSpec M = make_sphere(3);
  SubsolveConfig cfg;
  cfg.grad_tol = 1e-13;
  SUBCASE("anchored at the saddle returns the anchor") {
    const Vector sp = Eigen::Vector3d(0, 1, 0);
    for (auto c : {Coefficients::w1(), Coefficients::w2()}) {
      const auto L = build_manifold(*p, GeodesicFrame::on_sphere(sp, Eigen::Vector3d(1, 0, 0)), c);
      const SubsolveResult r = solve_constrained_subproblem(L, M, sp, cfg);
      CHECK((r.y - sp).norm() < 1e-14);
    }
  }
  SUBCASE("feasible output with small tangent gradient") {
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
      const Vector sp = Eigen::Vector3d(0, k % 2 ? 1 : -1, 0);
      const Vector x = (sp + rng.gaussian(3, 0.15)).normalized();
      MinModeOptions mo;
      mo.projector = M.projector_at(x);
      mo.constraint_count = 1;
      const Vector v = M.project(x, min_modes(*p, x, 1, mo).vector(0)).normalized();
      const auto L = build_manifold(*p, GeodesicFrame::on_sphere(x, v), Coefficients::w2());
      const SubsolveResult r = solve_constrained_subproblem(L, M, x, cfg);
      CHECK(std::abs(r.y.norm() - 1.0) <= 1e-12);
      CHECK(inf_norm(M.project(r.y, L.gradient(r.y))) <= cfg.grad_tol);
      CHECK(L.value(r.y) <= L.value(x));
    }
  }
}

TEST_CASE("constrained min-modes are tangent") {
  const auto p = make_builtin("sphere_quadratic");
  const ManifoldSpec M = make_sphere(3);
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vector x = rng.unit(3);
    MinModeOptions mo;
    mo.projector = M.projector_at(x);
    mo.constraint_count = 1;
    const Vector v = min_modes(*p, x, 1, mo).vector(0);
    CHECK((M.project(x, v) - v).norm() <= 1e-10);
  }
}

TEST_CASE("Riemannian derivatives at the stationary points") {
  const auto p = make_builtin("sphere_quadratic");
  const ManifoldSpec M = make_sphere(3);
  for (const auto& sp : p->stationary_points()) {
    CHECK(riemannian_gradient(*p, M, sp.point).norm() < 1e-14);
    const DenseSpectrum s = dense_eigensolve(riemannian_hessian(*p, M, sp.point));
    CHECK(s.negative_count() == sp.index);
  }
  // at a generic point the Riemannian gradient is the tangent part
  Rng rng(5);
  const Vector x = rng.unit(3);
  CHECK((riemannian_gradient(*p, M, x) - M.project(x, p->gradient(x))).norm() < 1e-14);
}

TEST_CASE("sphere retraction") {
  const ManifoldSpec M = make_sphere(3);
  const Vector x = Eigen::Vector3d(1, 0, 0);
  const Vector y = M.retract(x, Eigen::Vector3d(0, 0.3, 0));
  CHECK(std::abs(y.norm() - 1.0) <= 1e-15);
  CHECK(y.isApprox(Vector(Eigen::Vector3d(1, 0.3, 0).normalized())));
  CHECK_THROWS_AS(M.retract(x, Eigen::Vector3d(-1, 0, 0)), SolverError);
}
