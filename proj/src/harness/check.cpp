#include "saddle/harness/check.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "saddle/eigensolver.hpp"
#include "saddle/manifold.hpp"
#include "saddle/objective.hpp"
#include "saddle/potentials.hpp"

namespace saddle::harness {

namespace {

class Checker {
 public:
  explicit Checker(std::uint64_t seed) : rng_(seed) {}

  Vector gaussian(Eigen::Index n, double sigma = 1.0) {
    std::normal_distribution<double> nd(0.0, sigma);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng_);
    return v;
  }

  Vector unit(Eigen::Index n) {
    Vector v = gaussian(n);
    return v / v.norm();
  }

  /// Tangent unit vector at x on the sphere.
  Vector tangent_unit(const Vector& x) {
    Vector u = gaussian(x.size());
    u -= x.dot(u) * x;
    return u / u.norm();
  }

  void record(std::string name, double worst, double tol, std::string detail = {}) {
    out_.push_back({std::move(name), std::isfinite(worst) && worst <= tol, worst, tol, std::move(detail)});
  }

  void fail(std::string name, const std::exception& e) { out_.push_back({std::move(name), false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what()}); }

  std::vector<CheckResult> take() { return std::move(out_); }

 private:
  std::mt19937_64 rng_;
  std::vector<CheckResult> out_;
};

struct Surface {
  PotentialPtr p;
  bool sphere = false;
  std::vector<Vector> samples;
};

double rel_err(const Vector& a, const Vector& b) { return inf_norm(a - b) / (1.0 + inf_norm(b)); }

// Derivative of f along the great circle y cos t + u sin t at t = 0.
double geodesic_slope(const std::function<double(const Vector&)>& f, const Vector& y, const Vector& u, double h) {
  auto at = [&](double t) { return f(Vector(y * std::cos(t) + u * std::sin(t))); };
  return (at(h) - at(-h)) / (2.0 * h);
}

std::vector<Surface> surfaces(Checker& ck) {
  std::vector<Surface> out;
  for (const auto& name : builtin_names()) {
    Surface s;
    s.p = make_builtin(name);
    s.sphere = name == "sphere_quadratic";
    const Eigen::Index d = s.p->dimension();
    if (s.sphere) {
      for (int k = 0; k < 3; ++k) s.samples.push_back(ck.unit(d));
    } else if (const auto* m = dynamic_cast<const MorseIsland*>(s.p.get())) {
      s.samples.push_back(m->initial_point() + ck.gaussian(d, 0.05));
    } else {
      for (int k = 0; k < 3; ++k) s.samples.push_back(ck.gaussian(d, 0.7));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void derivative_checks(Checker& ck, const Surface& s) {
  const std::string name = s.p->name();
  try {
    double worst = 0.0;
    for (const auto& x : s.samples) worst = std::max(worst, rel_err(s.p->gradient(x), fd_gradient(*s.p, x)));
    ck.record(fmt::format("gradient vs finite differences [{}]", name), worst, 1e-6);
  } catch (const std::exception& e) {
    ck.fail(fmt::format("gradient vs finite differences [{}]", name), e);
  }
  try {
    double worst = 0.0;
    for (const auto& x : s.samples) {
      const Vector u = ck.unit(x.size());
      worst = std::max(worst, rel_err(s.p->hessian_vec(x, u), fd_hessian_vec(*s.p, x, u)));
    }
    ck.record(fmt::format("Hessian-vector vs finite differences [{}]", name), worst, 1e-5);
  } catch (const std::exception& e) {
    ck.fail(fmt::format("Hessian-vector vs finite differences [{}]", name), e);
  }
}

void objective_checks(Checker& ck, const Surface& s) {
  const std::string name = s.p->name();
  const Potential& p = *s.p;
  if (p.dimension() > 50) return;   // the flat checks below are dense in the dimension
  try {
    double flip = 0.0, grad = 0.0, hess = 0.0;
    for (const auto& x : s.samples) {
      if (s.sphere) {
        const Vector v = ck.tangent_unit(x);
        const Vector y = (x + 0.3 * ck.tangent_unit(x)).normalized();
        for (auto proj : {SphereProjection::geodesic, SphereProjection::retraction}) {
          const auto L = build_manifold(p, GeodesicFrame::on_sphere(x, v), Coefficients::mixed(), proj);
          const auto Lf = build_manifold(p, GeodesicFrame::on_sphere(x, -v), Coefficients::mixed(), proj);
          flip = std::max(flip, std::abs(L.value(y) - Lf.value(y)) / (1.0 + std::abs(L.value(y))));
          for (int k = 0; k < 2; ++k) {
            const Vector u = ck.tangent_unit(y);
            const double fd = geodesic_slope([&](const Vector& z) { return L.value(z); }, y, u, 1e-5);
            grad = std::max(grad, std::abs(fd - L.gradient(y).dot(u)) / (1.0 + L.gradient(y).norm()));
          }
        }
      } else {
        const Vector v = ck.unit(x.size());
        const Vector y = x + ck.gaussian(x.size(), 0.2);
        const auto L = build_flat(p, x, v, 1.0, 1.0);
        const auto Lf = build_flat(p, x, -v, 1.0, 1.0);
        flip = std::max(flip, std::abs(L.value(y) - Lf.value(y)) / (1.0 + std::abs(L.value(y))));
        flip = std::max(flip, rel_err(L.gradient(y), Lf.gradient(y)));
        Vector fd(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          Vector a = y, b = y;
          a[i] += 1e-5;
          b[i] -= 1e-5;
          fd[i] = (L.value(a) - L.value(b)) / 2e-5;
        }
        grad = std::max(grad, rel_err(L.gradient(y), fd));
        const Vector u = ck.unit(y.size());
        const Vector hfd = (L.gradient(y + 1e-5 * u) - L.gradient(y - 1e-5 * u)) / 2e-5;
        hess = std::max(hess, rel_err(L.hessian_vec(y, u), hfd));
      }
    }
    ck.record(fmt::format("sign-flip invariance of L [{}]", name), flip, 1e-12);
    ck.record(fmt::format("gradient of L vs finite differences [{}]", name), grad, 1e-6);
    if (!s.sphere) ck.record(fmt::format("Hessian-vector of L vs finite differences [{}]", name), hess, 1e-5);
  } catch (const std::exception& e) {
    ck.fail(fmt::format("modified objective [{}]", name), e);
  }
}

void stationarity_checks(Checker& ck, const Surface& s) {
  const std::string name = s.p->name();
  const Potential& p = *s.p;
  for (const auto& sp : p.stationary_points()) {
    if (sp.index < 1) continue;
    const std::string label = fmt::format("stationarity transfers to L [{} {}]", name, sp.label);
    try {
      const Vector& x = sp.point;
      double g = 0.0;
      if (s.sphere) {
        const ManifoldSpec M = make_sphere(3);
        MinModeOptions mo;
        mo.projector = M.projector_at(x);
        mo.constraint_count = 1;
        const Vector v = min_modes(p, x, 1, mo).vector(0);
        const auto L = build_manifold(p, GeodesicFrame::on_sphere(x, v.normalized()), Coefficients::mixed());
        g = inf_norm(M.project(x, L.gradient(x)));
      } else {
        const MinModeResult mm = min_modes(p, x, sp.index);
        const Matrix V = mm.eigenvectors;
        const auto L = sp.index == 1 ? build_flat(p, x, V.col(0), 1.0, 1.0)
                                     : build_index_m(p, x, V, SubsetCoefficients::minimal(sp.index));
        g = inf_norm(L.gradient(x));
      }
      ck.record(label, g, 1e-8);
    } catch (const std::exception& e) {
      ck.fail(label, e);
    }
  }
}

void projector_checks(Checker& ck) {
  try {
    const ManifoldSpec M = make_sphere(3);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vector x = ck.unit(3);
      const Vector u = ck.gaussian(3), w = ck.gaussian(3);
      const Vector pu = M.project(x, u);
      worst = std::max(worst, inf_norm(M.project(x, pu) - pu));
      worst = std::max(worst, std::abs(pu.dot(w) - u.dot(M.project(x, w))));
      worst = std::max(worst, std::abs(pu.dot(x)));
    }
    ck.record("tangent projector is an orthogonal projection [sphere]", worst, 1e-14);
  } catch (const std::exception& e) {
    ck.fail("tangent projector is an orthogonal projection [sphere]", e);
  }
}

void geodesic_checks(Checker& ck) {
  try {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vector x = ck.unit(3);
      const Vector v = ck.tangent_unit(x);
      const Vector y = ck.unit(3);
      const GeodesicProjection gp = sphere_geodesic_project(x, v, y);
      // Brute force: dense scan of the circle, then golden-section refinement.
      auto dist = [&](double t) { return (x * std::cos(t) + v * std::sin(t) - y).norm(); };
      const int n = 4000;
      double best_t = 0.0, best = dist(0.0);
      for (int i = 1; i < n; ++i) {
        const double t = -std::numbers::pi + 2.0 * std::numbers::pi * i / n;
        if (dist(t) < best) {
          best = dist(t);
          best_t = t;
        }
      }
      double a = best_t - 2.0 * std::numbers::pi / n, b = best_t + 2.0 * std::numbers::pi / n;
      const double r = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int it = 0; it < 100; ++it) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        if (dist(c) < dist(d)) {
          b = d;
        } else {
          a = c;
        }
      }
      const double brute = dist(0.5 * (a + b));
      worst = std::max(worst, (gp.point - y).norm() - brute);
      worst = std::max(worst, std::abs(gp.point.norm() - 1.0));
    }
    ck.record("geodesic projection matches brute force [sphere]", worst, 1e-9);
  } catch (const std::exception& e) {
    ck.fail("geodesic projection matches brute force [sphere]", e);
  }
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
  Checker ck(seed);
  for (const auto& s : surfaces(ck)) {
    derivative_checks(ck, s);
    objective_checks(ck, s);
    stationarity_checks(ck, s);
  }
  projector_checks(ck);
  geodesic_checks(ck);
  return ck.take();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

}  // namespace saddle::harness
