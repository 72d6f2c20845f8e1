#include "saddle/subsolve.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "descent.hpp"
#include "saddle/eigensolver.hpp"

namespace saddle {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr int kMaxExpansions = 40;
constexpr double kNoise = 5e-14;
constexpr double kRunaway = 1e8;

class FlatGeometry final : public detail::Geometry {
 public:
  explicit FlatGeometry(const Vector& y0, std::optional<double> radius) {
    if (radius) {
      lo_ = y0.array() - *radius;
      hi_ = y0.array() + *radius;
      // Rounding of y0 +- r can overshoot the radius by an ulp; pull the
      // bounds back until |bound - y0| <= r holds exactly.
      for (Eigen::Index i = 0; i < y0.size(); ++i) {
        while (hi_[i] - y0[i] > *radius) hi_[i] = std::nextafter(hi_[i], -HUGE_VAL);
        while (y0[i] - lo_[i] > *radius) lo_[i] = std::nextafter(lo_[i], HUGE_VAL);
      }
      boxed_ = true;
    }
  }

  Vector reduce(const Vector& y, const Vector& g) const override {
    if (!boxed_) return g;
    Vector r = g;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if ((y[i] >= hi_[i] && g[i] < 0.0) || (y[i] <= lo_[i] && g[i] > 0.0)) r[i] = 0.0;
    }
    return r;
  }

  Move move(const Vector& y, const Vector& p, double t) const override {
    Move m{y + t * p, false};
    if (!boxed_) return m;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (m.y[i] > hi_[i]) {
        m.y[i] = hi_[i];
        m.clipped = true;
      } else if (m.y[i] < lo_[i]) {
        m.y[i] = lo_[i];
        m.clipped = true;
      }
    }
    return m;
  }

 private:
  bool boxed_ = false;
  Vector lo_, hi_;
};

// Euclidean ball |y - y0|_2 <= r. Moves are projected radially onto the
// ball, so descent continues along the sphere once the boundary is reached.
class BallGeometry final : public detail::Geometry {
 public:
  BallGeometry(const Vector& y0, double radius) : y0_(y0), r_(radius) {}

  Vector reduce(const Vector& y, const Vector& g) const override {
    const Vector d = y - y0_;
    const double n = d.norm();
    if (n < r_ * (1.0 - 1e-12)) return g;
    const Vector u = d / n;
    const double gn = g.dot(u);
    // descent points outward: only the tangential part is admissible
    return gn < 0.0 ? Vector(g - gn * u) : g;
  }

  Move move(const Vector& y, const Vector& p, double t) const override {
    Move m{y + t * p, false};
    const Vector d = m.y - y0_;
    const double n = d.norm();
    if (n > r_) {
      m.y = y0_ + (r_ / n) * d;
      m.clipped = true;
    }
    return m;
  }

 private:
  Vector y0_;
  double r_;
};

}  // namespace

void SubsolveConfig::validate() const {
  require(max_inner_iters >= 1, "subsolve: max_inner_iters must be positive");
  require(grad_tol > 0.0, "subsolve: grad_tol must be positive");
  require(step_size > 0.0, "subsolve: step_size must be positive");
  require(ncg_restart >= 1, "subsolve: ncg_restart must be positive");
  if (box_radius) require(*box_radius > 0.0, "subsolve: box_radius must be positive");
}

namespace detail {

SubsolveResult descend(const Objective& L, const Vector& y0, const SubsolveConfig& cfg, const Geometry& geo) {
  cfg.validate();
  require_dimension(y0.size(), L.dimension(), "minimize");

  Vector y = y0;
  double f = L.value(y);
  if (!std::isfinite(f)) throw SubsolveError("minimize: objective is not finite at the start point", {f});
  Vector g = L.gradient(y);
  Vector gr = geo.reduce(y, g);
  const double f_start = f;
  const double noise = kNoise * (1.0 + L.magnitude(y0));

  std::vector<double> trace{f};
  Vector p, gr_prev;
  bool restart = true;
  int since_restart = 0;
  SubsolveResult out;
  out.status = SubsolveStatus::max_iters;

  int iters = 0;
  while (true) {
    if (inf_norm(gr) <= cfg.grad_tol) {
      out.status = SubsolveStatus::converged;
      break;
    }
    if (iters >= cfg.max_inner_iters) break;

    bool steepest = cfg.method == SubsolveMethod::sd || restart || since_restart >= cfg.ncg_restart;
    if (!steepest) {
      const double denom = gr_prev.squaredNorm();
      const double beta = denom > 0.0 ? std::max(0.0, gr.dot(gr - gr_prev) / denom) : 0.0;
      p = -gr + beta * p;
      if (gr.dot(p) >= 0.0) steepest = true;
    }
    if (steepest) {
      p = -gr;
      since_restart = 0;
    }

    double t = cfg.step_size;
    bool expand = false;
    if (cfg.method == SubsolveMethod::ncg) {
      const double kappa = p.dot(L.hessian_vec(y, p)) + geo.curvature_correction(y, p, g);
      if (kappa > 0.0 && std::isfinite(kappa)) {
        t = -gr.dot(p) / kappa;
      } else {
        t = cfg.step_size / inf_norm(p);
        expand = true;
      }
    }

    // Backtracking line search.
    bool accepted = false;
    Geometry::Move trial;
    double ft = 0.0;
    Vector gt;
    for (int k = 0; k < kMaxHalvings && !accepted; ++k, t *= 0.5) {
      trial = geo.move(y, p, t);
      if (trial.y == y) break;
      ft = L.value(trial.y);
      if (!std::isfinite(ft)) continue;
      const double pred = std::min(gr.dot(trial.y - y), 0.0);
      if (ft <= f + kArmijo * pred && ft < f) {
        accepted = true;
        break;
      }
      if (ft <= f + noise && ft <= f_start + noise) {
        // Value changes are at rounding level: fall back on derivatives.
        // Either the gradient shrinks, or (unclipped) the slope along p has
        // at least halved, which on a locally quadratic line means the step
        // lies within [t*/2, 3t*/2] of the line minimiser.
        Vector gcand = L.gradient(trial.y);
        const bool slope_ok =
            !trial.clipped && std::abs(geo.transport(trial.y, p).dot(gcand)) <= 0.5 * std::abs(gr.dot(p));
        if (slope_ok || geo.reduce(trial.y, gcand).norm() < gr.norm()) {
          gt = std::move(gcand);
          accepted = true;
          break;
        }
      }
    }
    if (accepted && expand && gt.size() == 0) {
      for (int k = 0; k < kMaxExpansions; ++k) {
        const Geometry::Move bigger = geo.move(y, p, 2.0 * t);
        if (bigger.y == trial.y) break;
        const double fb = L.value(bigger.y);
        if (!(fb < ft)) break;
        t *= 2.0;
        trial = bigger;
        ft = fb;
      }
      if ((trial.y - y0).norm() > kRunaway * (1.0 + y0.norm())) {
        trace.push_back(ft);
        throw SubsolveError("minimize: objective appears unbounded below along a negative-curvature direction",
                            trace);
      }
    }

    if (!accepted) {
      if (!steepest) {
        restart = true;
        continue;
      }
      out.status = SubsolveStatus::stalled;
      break;
    }

    gr_prev = geo.transport(trial.y, gr);
    p = geo.transport(trial.y, p);
    y = std::move(trial.y);
    f = ft;
    g = gt.size() > 0 ? std::move(gt) : L.gradient(y);
    gr = geo.reduce(y, g);
    restart = trial.clipped;
    ++since_restart;
    ++iters;
    trace.push_back(f);
  }

  out.y = std::move(y);
  out.inner_iters = iters;
  out.grad_norm = inf_norm(gr);
  out.value = f;
  return out;
}

}  // namespace detail

SubsolveResult minimize(const Objective& L, const Vector& y0, const SubsolveConfig& cfg) {
  if (cfg.box_radius && cfg.box_norm == BoxNorm::two) return detail::descend(L, y0, cfg, BallGeometry(y0, *cfg.box_radius));
  return detail::descend(L, y0, cfg, FlatGeometry(y0, cfg.box_radius));
}

Vector sd_single_step(const Objective& L, const Vector& y0, double dt) {
  require(dt > 0.0, "sd_single_step: dt must be positive");
  return y0 - dt * L.gradient(y0);
}

SubsolveResult minimize_potential(const Potential& p, const Vector& x0, const SubsolveConfig& cfg) {
  const PotentialObjective obj(p);
  return minimize(obj, x0, cfg);
}

NewtonResult newton_stationary(const Potential& p, const Vector& x0, double tol, int max_iters, double max_step,
                               double domain_bound) {
  require_dimension(x0.size(), p.dimension(), "newton_stationary");
  require(tol > 0.0 && max_iters >= 1, "newton_stationary: invalid tolerance or iteration budget");
  NewtonResult out;
  out.x = x0;
  out.path.push_back(x0);
  for (int it = 0; it <= max_iters; ++it) {
    const Vector g = p.gradient(out.x);
    if (inf_norm(g) <= tol) {
      out.iterations = it;
      out.converged = true;
      out.index = dense_eigensolve(p, out.x).negative_count();
      return out;
    }
    if (it == max_iters) break;
    const Matrix h = dense_hessian(p, out.x);
    const Eigen::FullPivLU<Matrix> lu(h);
    if (!lu.isInvertible()) {
      out.iterations = it;
      out.failure = "singular Hessian";
      return out;
    }
    const Vector step = lu.solve(-g);
    if (!step.allFinite() || step.norm() > max_step) {
      out.iterations = it + 1;
      out.failure = fmt::format("step norm {:.3e} exceeds {}", step.norm(), max_step);
      return out;
    }
    out.x += step;
    out.path.push_back(out.x);
    if (inf_norm(out.x) > domain_bound) {
      out.iterations = it + 1;
      out.failure = "left the domain";
      return out;
    }
  }
  out.iterations = max_iters;
  out.failure = "iteration budget exhausted";
  return out;
}

}  // namespace saddle
