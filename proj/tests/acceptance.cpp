// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Each check runs the same code paths as the CLI.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "saddle/eigensolver.hpp"
#include "saddle/gad.hpp"
#include "saddle/harness/bench.hpp"
#include "saddle/harness/check.hpp"
#include "saddle/imf.hpp"
#include "saddle/objective.hpp"
#include "saddle/potentials.hpp"
#include "saddle/subsolve.hpp"

using namespace saddle;
using namespace saddle::harness;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back(what);
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Order of a converged record with the standard estimator; nullopt when the
// run produced too few errors above the floor.
std::optional<double> order_of(const ConvergenceRecord& r) {
  try {
    return estimate_order(r.errors());
  } catch (const ContractError&) {
    return std::nullopt;
  }
}

std::string fmt_order(const std::optional<double>& o) { return o ? fmt::format("{:.3f}", *o) : "n/a"; }

Matrix dense_hessian(const Objective& L, const Vector& y) {
  const auto n = y.size();
  Matrix H(n, n);
  for (Eigen::Index i = 0; i < n; ++i) H.col(i) = L.hessian_vec(y, Vector::Unit(n, i));
  return 0.5 * (H + H.transpose());
}

Vector point_of(const Potential& p, const std::string& label) {
  for (const auto& s : p.stationary_points()) {
    if (s.label == label) return s.point;
  }
  throw ContractError("missing stationary point " + label);
}

IMFConfig exact_cfg(Coefficients c) {
  IMFConfig cfg;
  cfg.coeffs = c;
  cfg.grad_tol = 1e-14;
  cfg.subsolve.grad_tol = 1e-14;
  return cfg;
}

// 1. One exact outer iteration solves a quadratic from any start.
Verdict quadratic_one_shot() {
  Verdict v;
  const auto t0 = Clock::now();
  const Quadratic q(Vector(Eigen::Vector3d(-1.0, 2.0, 3.0)).asDiagonal());
  std::mt19937_64 gen(101);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vector x(3);
    for (auto& c : x) c = nd(gen);
    x *= std::cbrt(ud(gen)) / x.norm();
    SearchState s;
    s.x = x;
    worst = std::max(worst, step(q, s, exact_cfg(Coefficients::mixed())).x.norm());
  }
  const double t = seconds_since(t0);
  v.require(worst <= 1e-10, fmt::format("worst distance {:.2e}", worst));
  v.require(t < 1.0, fmt::format("runtime {:.2f}s", t));
  v.notes.insert(v.notes.begin(), fmt::format("worst |x1| {:.2e}, {:.3f}s", worst, t));
  return v;
}

// 2. Saddle coordinates on the three-hole surface.
Verdict three_hole_coordinates() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto p = make_builtin("three_hole");
  const std::vector<Vector> printed{Eigen::Vector2d(0.0, -0.31582), Eigen::Vector2d(-0.61727, 1.10273),
                                    Eigen::Vector2d(0.61727, 1.10273)};
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  double worst = 0.0;
  for (const auto& target : printed) {
    for (int k = 0; k < 4; ++k) {
      const double a = ang(gen);
      IMFConfig cfg = exact_cfg(Coefficients::mixed());
      const ConvergenceRecord r = run(*p, Vector(target + 0.2 * Eigen::Vector2d(std::cos(a), std::sin(a))), cfg);
      v.require(r.status == RunStatus::converged, "run did not converge: " + r.message);
      worst = std::max(worst, (r.final_x() - target).cwiseAbs().maxCoeff());
    }
  }
  const double t = seconds_since(t0);
  v.require(worst <= 5e-5, fmt::format("worst coordinate error {:.2e}", worst));
  v.require(t < 1.0, fmt::format("runtime {:.2f}s", t));
  v.notes.insert(v.notes.begin(), fmt::format("worst coordinate error {:.2e}, {:.3f}s", worst, t));
  return v;
}

// 3. Table 1 protocol.
Verdict quadratic_rate() {
  Verdict v;
  const BenchResult b = run_bench("table1");
  const auto cols = b.columns();
  const auto labels = b.labels();
  std::string orders;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& r = cols[k];
    const auto o = order_of(r);
    orders += fmt::format("{}{}={}", k ? " " : "", labels[k], fmt_order(o));
    v.require(r.status == RunStatus::converged, labels[k] + " not converged");
    v.require(r.outer_iterations() <= 4 && r.iterations.back().error < 1e-14,
              fmt::format("{}: error {:.2e} after {} iterations", labels[k], r.iterations.back().error,
                          r.outer_iterations()));
    if (!o) {
      v.require(false, labels[k] + ": order not estimable (fewer than 4 errors above 1e-14)");
    } else {
      v.require(*o >= 1.7 && *o <= 2.3, fmt::format("{}: order {:.3f} outside [1.7, 2.3]", labels[k], *o));
    }
  }
  v.notes.insert(v.notes.begin(), orders);
  return v;
}

// 4. Table 2 protocol.
Verdict escape_from_minimum() {
  Verdict v;
  const BenchResult b = run_bench("table2");
  const auto cols = b.columns();
  const auto labels = b.labels();
  std::string summary;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& r = cols[k];
    const auto o = order_of(r);
    summary += fmt::format("{}{}:{}it/{}", k ? " " : "", labels[k], r.outer_iterations(), fmt_order(o));
    v.require(r.status == RunStatus::converged && r.terminal_index == 1, labels[k] + " not converged to index 1");
    v.require(r.outer_iterations() <= 12, fmt::format("{}: {} iterations", labels[k], r.outer_iterations()));
    v.require(o && *o >= 1.7, labels[k] + ": final order " + fmt_order(o));
  }
  v.notes.insert(v.notes.begin(), summary);
  return v;
}

// 5. Table 3 protocol.
Verdict inexact_solver() {
  Verdict v;
  const BenchResult b = run_bench("table3");
  const auto cols = b.columns();
  const auto labels = b.labels();
  std::string summary;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& r = cols[k];
    const auto e = r.errors();
    int reached = -1;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] < 1e-12) {
        reached = static_cast<int>(i);
        break;
      }
    }
    summary += fmt::format("{}{}:{}", k ? " " : "", labels[k], reached);
    v.require(reached >= 0 && reached <= 5, fmt::format("{}: below 1e-12 at iteration {}", labels[k], reached));
  }
  v.notes.insert(v.notes.begin(), "iteration reaching 1e-12: " + summary);
  return v;
}

// 6. FD Jacobian of the iteration map at the saddles.
Verdict vanishing_jacobian() {
  Verdict v;
  const auto p = make_builtin("three_hole");
  double worst = 0.0;
  for (const char* label : {"SP1", "SP2", "SP3"}) {
    for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed()}) {
      worst = std::max(worst, jacobian_of_phi(*p, point_of(*p, label), exact_cfg(c), 1e-4).norm());
    }
  }
  v.require(worst <= 1e-4, fmt::format("worst |J| {:.2e}", worst));
  v.notes.insert(v.notes.begin(), fmt::format("worst |J| {:.2e}", worst));
  return v;
}

// 7. Spectrum and conditioning of the L-Hessian.
Verdict l_hessian_spectrum() {
  Verdict v;
  const auto p = make_builtin("three_hole");
  double worst = 0.0;
  for (const char* label : {"SP1", "SP2", "SP3"}) {
    const Vector sp = point_of(*p, label);
    const DenseSpectrum ds = dense_eigensolve(*p, sp);
    const Vector mode = ds.eigenvectors.col(0);
    const double l1 = ds.eigenvalues[0], l2 = ds.eigenvalues[1];
    for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed(), Coefficients{0.3, 2.4}}) {
      const auto L = build_flat(*p, sp, mode, c);
      Eigen::SelfAdjointEigenSolver<Matrix> es(dense_hessian(L, sp));
      std::vector<double> expect{(1.0 - c.alpha - c.beta) * l1, l2};
      std::sort(expect.begin(), expect.end());
      for (int i = 0; i < 2; ++i)
        worst = std::max(worst, std::abs(es.eigenvalues()[i] - expect[i]) / std::abs(expect[i]));
    }
    // optimal sum: (1 - s) l1 = l2
    const double s = 1.0 + l2 / std::abs(l1);
    const auto L = build_flat(*p, sp, mode, 0.5 * s, 0.5 * s);
    Eigen::SelfAdjointEigenSolver<Matrix> es(dense_hessian(L, sp));
    const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    v.require(std::abs(cond - 1.0) <= 1e-8, fmt::format("{}: 2-d condition number {:.10f}", label, cond));
  }
  v.require(worst <= 1e-8, fmt::format("worst relative eigenvalue error {:.2e}", worst));

  Vector lam(5);
  lam << -2.0, 0.5, 1.0, 3.0, 7.0;
  const Quadratic q(lam.asDiagonal());
  const double s = 1.0 + lam[1] / std::abs(lam[0]);
  const auto L = build_flat(q, Vector::Zero(5), Vector::Unit(5, 0), 0.5 * s, 0.5 * s);
  Eigen::SelfAdjointEigenSolver<Matrix> es(dense_hessian(L, Vector::Zero(5)));
  const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
  v.require(std::abs(cond - lam[4] / lam[1]) <= 1e-8 * lam[4] / lam[1], fmt::format("5-d condition {:.6f}", cond));
  v.notes.insert(v.notes.begin(), fmt::format("worst eig rel err {:.2e}, 5-d cond {:.6f} (expect {:.6f})", worst,
                                              cond, lam[4] / lam[1]));
  return v;
}

// 8. Single-step IMF equals Euler GAD; rates of both.
Verdict gad_equivalence() {
  Verdict v;
  const auto p = make_builtin("three_hole");
  const Vector sp = point_of(*p, "SP1");
  const double dt = 0.01;
  GADParams gp;
  gp.exact_direction = true;
  double worst = 0.0;
  for (auto c : {Coefficients::w1(), Coefficients::w2(), Coefficients::mixed()}) {
    Vector x = sp + Eigen::Vector2d(0.25, 0.15);
    GADState g{x, Eigen::Vector2d(1.0, 0.0), 0.0};
    for (int k = 0; k < 100; ++k) {
      const Vector mode = dense_eigensolve(*p, x).eigenvectors.col(0);
      x = sd_single_step(build_flat(*p, x, mode, c), x, dt);
      g = euler_step(*p, g, dt, gp);
      worst = std::max(worst, (x - g.x).cwiseAbs().maxCoeff());
    }
  }
  v.require(worst <= 1e-12, fmt::format("max position gap {:.2e}", worst));

  const Vector x0 = sp + Eigen::Vector2d(0.1, 0.1);
  const GADTrajectory t = run_gad(*p, {x0, Eigen::Vector2d(1.0, 0.0), 0.0}, dt, 20000, 1e-12, {}, nullptr, 50);
  std::optional<double> gad_order;
  try {
    gad_order = estimate_order(t.errors(sp), 3, 1e-10);
  } catch (const ContractError&) {
  }
  v.require(t.converged, "GAD did not converge");
  v.require(gad_order && std::abs(*gad_order - 1.0) <= 0.1, "GAD order " + fmt_order(gad_order));

  IMFConfig cfg = exact_cfg(Coefficients::mixed());
  cfg.references = {sp};
  const ConvergenceRecord r = run(*p, x0, cfg);
  const auto imf_order = order_of(r);
  v.require(r.status == RunStatus::converged, "IMF did not converge");
  v.require(imf_order && *imf_order >= 1.7 && *imf_order <= 2.3, "IMF order " + fmt_order(imf_order));
  v.notes.insert(v.notes.begin(), fmt::format("max gap {:.2e}, GAD order {}, IMF order {}", worst,
                                              fmt_order(gad_order), fmt_order(imf_order)));
  return v;
}

// 9. Table 5 protocol on the sphere.
Verdict sphere() {
  Verdict v;
  const BenchResult b = run_bench("table5");
  const auto cols = b.columns();
  const auto labels = b.labels();
  std::string summary;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto& r = cols[k];
    const auto o = order_of(r);
    summary += fmt::format("{}{}: {} {}it err {:.1e} order {}", k ? "; " : "", labels[k], to_string(r.status),
                           r.outer_iterations(), r.iterations.back().error, fmt_order(o));
    if (k < 2) {
      v.require(r.status == RunStatus::converged && r.outer_iterations() <= 5 && r.iterations.back().error < 1e-14,
                labels[k] + " did not reach 1e-14 within 5 iterations");
      v.require(o && *o >= 1.7 && *o <= 2.3, labels[k] + ": order " + fmt_order(o));
    } else {
      v.require(o && *o <= 1.3, labels[k] + ": order " + fmt_order(o) + ", expected <= 1.3");
    }
  }
  v.notes.insert(v.notes.begin(), summary);
  return v;
}

// 10. Index-2 saddles.
Verdict index_two() {
  Verdict v;
  const Quadratic q(Vector(Eigen::Vector3d(-2.0, -1.0, 3.0)).asDiagonal());
  IMFConfig cfg = exact_cfg(Coefficients::mixed());
  cfg.index = 2;
  SearchState s;
  s.x = Eigen::Vector3d(0.5, -0.4, 0.3);
  const double d = step(q, s, cfg).x.norm();
  v.require(d <= 1e-10, fmt::format("one-step distance {:.2e}", d));

  const auto c = make_builtin("index2_cubic");
  cfg.references = {point_of(*c, "SP2")};
  const ConvergenceRecord r = run(*c, Eigen::Vector3d(0.25, -0.2, 0.15), cfg);
  const auto o = order_of(r);
  v.require(r.status == RunStatus::converged && r.terminal_index == 2, "cubic run: " + to_string(r.status));
  v.require(o && *o >= 1.7 && *o <= 2.3, "cubic order " + fmt_order(o));
  v.notes.insert(v.notes.begin(), fmt::format("one-step distance {:.2e}, cubic order {}", d, fmt_order(o)));
  return v;
}

// 11. Morse island.
Verdict morse_island() {
  Verdict v;
  const BenchResult b = run_bench("table4");
  const auto labels = b.labels();
  std::string summary;
  for (std::size_t k = 0; k < b.reports.size(); ++k) {
    const auto& run = b.reports[k].runs.front();
    const auto& r = run.record;
    summary += fmt::format("{}{}: {} {}it |F| {:.1e} index {} {:.0f}s", k ? "; " : "", labels[k],
                           to_string(r.status), r.outer_iterations(), r.iterations.back().grad_norm,
                           r.terminal_index, run.seconds);
    v.require(r.status == RunStatus::converged && r.outer_iterations() <= 16,
              fmt::format("{}: {} after {} iterations", labels[k], to_string(r.status), r.outer_iterations()));
    v.require(r.iterations.back().grad_norm <= 1e-9, labels[k] + ": force above 1e-9");
    v.require(r.terminal_index == 1, fmt::format("{}: terminal index {}", labels[k], r.terminal_index));
    v.require(run.seconds <= 600.0, fmt::format("{}: {:.0f}s", labels[k], run.seconds));
  }
  v.notes.insert(v.notes.begin(), summary);
  return v;
}

// 12. Domain of attraction.
Verdict domain_of_attraction() {
  Verdict v;
  const auto t0 = Clock::now();
  const BenchResult b = run_bench("fig2");
  const double t = seconds_since(t0);
  const DoaGrid& imf = *b.imf_grid;
  const DoaGrid& newton = *b.newton_grid;
  v.require(imf.labeled_count() > newton.labeled_count(),
            fmt::format("IMF {} cells vs Newton {}", imf.labeled_count(), newton.labeled_count()));
  std::string basins;
  for (int id = 0; id < 3; ++id) {
    basins += fmt::format(" {}:{}/{}", id, imf.count(id), imf.components(id));
    v.require(imf.count(id) == 0 || imf.components(id) == 1,
              fmt::format("basin {} has {} components", id, imf.components(id)));
  }
  v.require(t <= 120.0, fmt::format("runtime {:.1f}s", t));
  v.notes.insert(v.notes.begin(), fmt::format("IMF {} cells, Newton {} cells, basins (cells/components){}, {:.1f}s",
                                              imf.labeled_count(), newton.labeled_count(), basins, t));
  return v;
}

// 13. Invariant suite.
Verdict invariants() {
  Verdict v;
  const auto results = run_invariant_checks(2024);
  int passed = 0;
  for (const auto& r : results) {
    if (r.passed) {
      ++passed;
    } else {
      v.require(false, fmt::format("{} (worst {:.2e}, tol {:.2e})", r.name, r.worst, r.tolerance));
    }
  }
  v.require(!results.empty(), "no checks ran");
  v.notes.insert(v.notes.begin(), fmt::format("{}/{} checks", passed, results.size()));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"quadratic one-shot", quadratic_one_shot},
      {"three-hole saddle coordinates", three_hole_coordinates},
      {"quadratic rate (table1)", quadratic_rate},
      {"escape from minimum (table2)", escape_from_minimum},
      {"inexact inner solves (table3)", inexact_solver},
      {"vanishing Jacobian", vanishing_jacobian},
      {"L-Hessian spectrum", l_hessian_spectrum},
      {"GAD equivalence", gad_equivalence},
      {"sphere (table5)", sphere},
      {"index-2", index_two},
      {"Morse island (table4)", morse_island},
      {"domain of attraction (fig2)", domain_of_attraction},
      {"invariant suite", invariants},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.notes.push_back(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (std::size_t i = 0; i < v.notes.size(); ++i) detail += (i ? " | " : "") + v.notes[i];
    fmt::print("{} {:2d} {}: {}\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, detail);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
