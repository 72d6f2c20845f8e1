#include "saddle/gad.hpp"

#include <fmt/core.h>

#include <cmath>
#include <ostream>

#include "saddle/eigensolver.hpp"

namespace saddle {

namespace {

Vector normalized(const Vector& v, const char* where) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw SolverError(fmt::format("{}: direction vector vanished", where));
  return v / n;
}

void check_state(const Potential& p, const GADState& s, double dt, const GADParams& params) {
  require_dimension(s.x.size(), p.dimension(), "GAD position");
  require_dimension(s.v.size(), p.dimension(), "GAD direction");
  require(dt > 0.0, "GAD: dt must be positive");
  require(params.gamma > 0.0, "GAD: gamma must be positive");
  require(s.v.squaredNorm() > 0.0, "GAD: direction must be nonzero");
}

Vector exact_mode(const Potential& p, const Vector& x, const Vector& hint, const GADParams& params,
                  const Projector& proj = {}, int constraints = 0) {
  MinModeOptions o;
  o.tol = params.eigen_tol;
  o.warm_start = hint;
  o.projector = proj;
  o.constraint_count = constraints;
  Vector v = min_modes(p, x, 1, o).vector(0);
  // Keep the orientation continuous with the previous direction.
  if (v.dot(hint) < 0.0) v = -v;
  return v;
}

}  // namespace

GADState euler_step(const Potential& p, const GADState& s, double dt, const GADParams& params) {
  check_state(p, s, dt, params);
  GADState next;
  next.t = s.t + dt;
  const Vector v = params.exact_direction ? exact_mode(p, s.x, s.v, params) : s.v;
  const double vv = v.squaredNorm();
  const Vector g = p.gradient(s.x);
  next.x = s.x + dt * (-g + params.reversal * (g.dot(v) / vv) * v);
  if (params.exact_direction) {
    next.v = v;
  } else {
    const Vector hv = p.hessian_vec(s.x, v);
    next.v = normalized(v + (dt / params.gamma) * (-hv + (v.dot(hv) / vv) * v), "GAD");
  }
  return next;
}

GADState euler_step_manifold(const Potential& p, const ManifoldSpec& M, const GADState& s, double dt,
                             const GADParams& params) {
  check_state(p, s, dt, params);
  M.require_feasible(s.x);
  const Projector proj = M.projector_at(s.x);
  const Vector v = params.exact_direction ? exact_mode(p, s.x, proj(s.v), params, proj, M.codimension())
                                          : Vector(normalized(proj(s.v), "GAD"));
  const Vector g = proj(p.gradient(s.x));
  GADState next;
  next.t = s.t + dt;
  next.x = M.retract(s.x, dt * (-g + params.reversal * g.dot(v) * v));
  if (params.exact_direction) {
    next.v = normalized(M.project(next.x, v), "GAD");
  } else {
    // eta = <v, P H v> keeps |v| fixed to first order.
    const Vector hv = proj(p.hessian_vec(s.x, v));
    const Vector moved = v + (dt / params.gamma) * (-hv + v.dot(hv) * v);
    next.v = normalized(M.project(next.x, moved), "GAD");
  }
  return next;
}

GADState GADTrajectory::final_state() const {
  require(!samples.empty(), "GAD trajectory is empty");
  const auto& s = samples.back();
  return {s.x, s.v, s.t};
}

std::vector<double> GADTrajectory::errors(const Vector& ref) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back((s.x - ref).norm());
  return out;
}

void GADTrajectory::write_csv(std::ostream& out) const {
  const Eigen::Index d = samples.empty() ? 0 : samples.front().x.size();
  out << "t";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",v" << i;
  out << ",grad_norm\n";
  for (const auto& s : samples) {
    out << fmt::format("{:.17g}", s.t);
    for (Eigen::Index i = 0; i < d; ++i) out << fmt::format(",{:.17g}", s.x[i]);
    for (Eigen::Index i = 0; i < d; ++i) out << fmt::format(",{:.17g}", s.v[i]);
    out << fmt::format(",{:.17g}\n", s.grad_norm);
  }
}

GADTrajectory run_gad(const Potential& p, const GADState& s0, double dt, int max_steps, double tol,
                      const GADParams& params, const ManifoldSpec* M, int record_every) {
  require(max_steps >= 0, "run_gad: max_steps must be non-negative");
  require(tol > 0.0, "run_gad: tol must be positive");
  require(record_every >= 1, "run_gad: record_every must be positive");

  GADTrajectory traj;
  GADState s = s0;
  s.v = normalized(M ? M->project(s.x, s.v) : s.v, "GAD");

  auto measure = [&](const GADState& st, bool& done) {
    Vector g = p.gradient(st.x);
    Vector hv = p.hessian_vec(st.x, st.v);
    if (M) {
      g = M->project(st.x, g);
      hv = M->project(st.x, hv);
    }
    const double ray = st.v.dot(hv);
    const double gn = inf_norm(g);
    done = gn <= tol && (hv - ray * st.v).norm() <= tol;
    return GADSample{st.t, st.x, st.v, gn, ray};
  };

  bool done = false;
  traj.samples.push_back(measure(s, done));
  int k = 0;
  while (!done && k < max_steps) {
    s = M ? euler_step_manifold(p, *M, s, dt, params) : euler_step(p, s, dt, params);
    ++k;
    GADSample sample = measure(s, done);
    if (done || k % record_every == 0 || k == max_steps) traj.samples.push_back(std::move(sample));
  }
  traj.converged = done;
  traj.steps = k;
  traj.lambda = traj.samples.back().rayleigh;
  return traj;
}

}  // namespace saddle
