#include <cmath>
#include <sstream>

#include "doctest.h"
#include "saddle/imf.hpp"
#include "support.hpp"

using namespace saddle;
using testing_support::Rng;

namespace {

Vector point_of(const Potential& p, const std::string& label) {
  for (const auto& s : p.stationary_points()) {
    if (s.label == label) return s.point;
  }
  throw std::runtime_error("missing " + label);
}

IMFConfig exact(Coefficients c = Coefficients::mixed()) {
  IMFConfig cfg;
  cfg.coeffs = c;
  cfg.grad_tol = 1e-14;
  return cfg;
}

}  // namespace

TEST_CASE("quadratic surfaces are solved in one step from anywhere") {
  const Quadratic q(Vector(Eigen::Vector3d(-1.0, 2.0, 3.0)).asDiagonal());
  Rng rng(1);
  for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed()}) {
    for (int k = 0; k < 5; ++k) {
      SearchState s;
      s.x = rng.gaussian(3);
      CHECK(step(q, s, exact(c)).x.norm() < 1e-10);
    }
  }
  const ConvergenceRecord r = run(q, Eigen::Vector3d(0.4, -0.3, 0.2), exact());
  CHECK(r.status == RunStatus::converged);
  CHECK(r.outer_iterations() == 1);
  CHECK(r.terminal_index == 1);
}

TEST_CASE("a saddle is a fixed point") {
  const auto p = make_builtin("three_hole");
  for (const auto& label : {"SP1", "SP2", "SP3"}) {
    SearchState s;
    s.x = point_of(*p, label);
    CHECK((step(*p, s, exact()).x - s.x).norm() < 1e-12);
  }
}

TEST_CASE("errors decay quadratically near SP1") {
  const auto p = make_builtin("three_hole");
  const Vector sp = point_of(*p, "SP1");
  Rng rng(2);
  for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed()}) {
    IMFConfig cfg = exact(c);
    cfg.references = {sp};
    const double ang = rng.uniform(0, 6.283185307179586);
    const ConvergenceRecord r = run(*p, Vector(sp + 0.2 * Eigen::Vector2d(std::cos(ang), std::sin(ang))), cfg);
    REQUIRE(r.status == RunStatus::converged);
    CHECK(r.outer_iterations() <= 4);
    const auto e = r.errors();
    CHECK(e[1] < 0.1);
    CHECK(e[1] > 1e-4);
    for (std::size_t k = 1; k + 1 < e.size() && e[k + 1] > 1e-14; ++k) CHECK(e[k + 1] <= 10.0 * e[k] * e[k]);
  }
}

TEST_CASE("presets agree on the saddle they reach") {
  const auto p = make_builtin("three_hole");
  const Vector start = point_of(*p, "SP2") + Eigen::Vector2d(0.12, -0.1);
  std::vector<Vector> finals;
  for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed()}) {
    const ConvergenceRecord r = run(*p, start, exact(c));
    REQUIRE(r.status == RunStatus::converged);
    finals.push_back(r.final_x());
  }
  CHECK((finals[0] - finals[1]).norm() < 1e-8);
  CHECK((finals[0] - finals[2]).norm() < 1e-8);
}

TEST_CASE("escape from the left minimum with a trust box") {
  const auto p = make_builtin("three_hole");
  Rng rng(3);
  for (int k = 0; k < 6; ++k) {
    IMFConfig cfg = exact(k % 3 == 0 ? Coefficients::w1() : k % 3 == 1 ? Coefficients::w2() : Coefficients::mixed());
    cfg.subsolve.box_radius = 0.25;
    cfg.references = {point_of(*p, "SP1"), point_of(*p, "SP2")};
    const double ang = rng.uniform(0, 6.283185307179586);
    const ConvergenceRecord r = run(*p, Vector(Eigen::Vector2d(-1.0 + 0.1 * std::cos(ang), 0.1 * std::sin(ang))), cfg);
    CHECK(r.status == RunStatus::converged);
    CHECK(r.outer_iterations() <= 12);
    CHECK(r.terminal_index == 1);
    CHECK(r.iterations.back().error < 1e-12);
  }
}

TEST_CASE("Jacobian of the iteration map vanishes at saddles") {
  const auto p = make_builtin("three_hole");
  for (const auto& label : {"SP1", "SP2"}) {
    for (auto c : {Coefficients{0.75, 0.75}, Coefficients{1.5, 1.5}, Coefficients::w1(), Coefficients::w2()}) {
      const Matrix J = jacobian_of_phi(*p, point_of(*p, label), exact(c), 1e-4);
      CHECK(J.norm() <= 1e-4);
    }
  }
  const Quadratic q(Vector(Eigen::Vector3d(-1.0, 2.0, 3.0)).asDiagonal());
  CHECK(jacobian_of_phi(q, Eigen::Vector3d(0.3, 0.5, -0.7), exact()).norm() < 1e-6);
}

TEST_CASE("order estimation") {
  CHECK(estimate_order({1e-1, 1e-2, 1e-3, 1e-4}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(estimate_order({1e-1, 1e-2, 1e-4, 1e-8}) == doctest::Approx(2.0).epsilon(1e-12));
  // trailing values at the floor are ignored
  CHECK(estimate_order({1e-1, 1e-2, 1e-4, 1e-8, 1e-16, 0.0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_order({1e-1, 1e-2, 1e-4}), ContractError);
  CHECK_THROWS_AS(estimate_order({1e-1, 1e-2, 1e-1, 1e-4}), ContractError);
  // only the last window counts
  CHECK(estimate_order({1.0, 0.9, 0.8, 1e-1, 1e-2, 1e-4, 1e-8}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("run statuses") {
  const auto p = make_builtin("three_hole");
  const Vector sp = point_of(*p, "SP1");
  SUBCASE("max_iters") {
    IMFConfig cfg = exact();
    cfg.max_outer_iters = 1;
    const ConvergenceRecord r = run(*p, Vector(sp + Eigen::Vector2d(0.2, 0.0)), cfg);
    CHECK(r.status == RunStatus::max_iters);
    CHECK(r.outer_iterations() == 1);
  }
  SUBCASE("left_region") {
    IMFConfig cfg = exact();
    cfg.region = std::make_pair(Vector(Eigen::Vector2d(0.05, -0.5)), Vector(Eigen::Vector2d(0.3, 0.5)));
    const ConvergenceRecord r = run(*p, Vector(sp + Eigen::Vector2d(0.2, 0.0)), cfg);
    CHECK(r.status == RunStatus::left_region);
  }
  SUBCASE("diverged") {
    const DoubleWell dw(1.0);
    IMFConfig cfg = exact();
    cfg.subsolve.box_radius = 0.5;
    cfg.domain_bound = 3.0;
    // past the inflection line the flipped x-direction keeps climbing the outer wall
    const ConvergenceRecord r = run(dw, Eigen::Vector2d(1.5, 0.5), cfg);
    CHECK(r.status == RunStatus::diverged);
    CHECK(r.message.find("left the domain") != std::string::npos);
    CHECK(inf_norm(r.final_x()) > cfg.domain_bound);
  }
  SUBCASE("wrong_index") {
    IMFConfig cfg = exact();
    cfg.index = 2;
    const ConvergenceRecord r = run(*p, sp, cfg);
    CHECK(r.status == RunStatus::wrong_index);
    CHECK(r.terminal_index == 1);
  }
  SUBCASE("boxless start in a convex region is refused") {
    CHECK_THROWS_AS(run(*p, Vector(point_of(*p, "MIN1") + Eigen::Vector2d(0.05, 0.02)), exact()), ContractError);
  }
  SUBCASE("status names round trip") {
    for (auto s : {RunStatus::converged, RunStatus::max_iters, RunStatus::diverged, RunStatus::left_region,
                   RunStatus::wrong_index, RunStatus::failed}) {
      CHECK(run_status_from_string(to_string(s)) == s);
    }
  }
}

TEST_CASE("index-2 saddles") {
  const Quadratic q(Vector(Eigen::Vector3d(-2.0, -1.0, 3.0)).asDiagonal());
  IMFConfig cfg = exact();
  cfg.index = 2;
  SearchState s;
  s.x = Eigen::Vector3d(0.5, -0.4, 0.3);
  CHECK(step(q, s, cfg).x.norm() < 1e-10);

  const auto c = make_builtin("index2_cubic");
  cfg.references = {Vector::Zero(3)};
  const ConvergenceRecord r = run(*c, Eigen::Vector3d(0.25, -0.2, 0.15), cfg);
  CHECK(r.status == RunStatus::converged);
  CHECK(r.terminal_index == 2);
  REQUIRE(r.order.has_value());
  CHECK(*r.order >= 1.7);
  CHECK(*r.order <= 2.3);
}

TEST_CASE("sphere runs reach the saddles") {
  const auto p = make_builtin("sphere_quadratic");
  for (auto c : {Coefficients::w1(), Coefficients::w2()}) {
    IMFConfig cfg = exact(c);
    cfg.manifold = ManifoldKind::sphere;
    cfg.references = {Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, -1, 0)};
    const Vector x0 = Eigen::Vector3d(std::cos(0.1), std::sin(0.1) * std::cos(0.3), std::sin(0.1) * std::sin(0.3));
    const ConvergenceRecord r = run(*p, x0, cfg);
    CHECK(r.status == RunStatus::converged);
    CHECK(r.iterations.back().error < 1e-14);
    CHECK(r.terminal_index == 1);
  }
  IMFConfig boxed = exact();
  boxed.manifold = ManifoldKind::sphere;
  boxed.subsolve.box_radius = 0.1;
  CHECK_THROWS_AS(boxed.validate(), ContractError);
}

TEST_CASE("convergence record serialization") {
  const auto p = make_builtin("three_hole");
  IMFConfig cfg = exact();
  cfg.references = {point_of(*p, "SP1")};
  const ConvergenceRecord r = run(*p, Vector(point_of(*p, "SP1") + Eigen::Vector2d(0.1, 0.1)), cfg);
  const ConvergenceRecord back = ConvergenceRecord::from_json(r.to_json());
  CHECK(back.status == r.status);
  CHECK(back.iterations.size() == r.iterations.size());
  for (std::size_t k = 0; k < r.iterations.size(); ++k) {
    CHECK(back.iterations[k].x == r.iterations[k].x);
    CHECK(back.iterations[k].grad_norm == r.iterations[k].grad_norm);
    if (std::isfinite(r.iterations[k].error)) CHECK(back.iterations[k].error == r.iterations[k].error);
  }
  CHECK(back.order == r.order);
  CHECK(back.to_json() == r.to_json());

  std::ostringstream csv;
  r.write_csv(csv);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "iter,error,grad_norm,lambda1,inner_iters,step_norm,x0,x1");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == static_cast<int>(r.iterations.size()));
}

TEST_CASE("converged runs satisfy the gradient tolerance") {
  const auto p = make_builtin("three_hole");
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    IMFConfig cfg;
    cfg.subsolve.box_radius = 0.25;
    cfg.max_outer_iters = 100;
    const Vector x0 = Eigen::Vector2d(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 2.0));
    const ConvergenceRecord r = run(*p, x0, cfg);
    if (r.status == RunStatus::converged) {
      CHECK(r.iterations.back().grad_norm <= cfg.grad_tol);
      CHECK(r.terminal_index == 1);
    } else {
      CHECK(!r.message.empty());
    }
  }
}
