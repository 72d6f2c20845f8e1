#include "saddle/harness/experiment.hpp"

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "parallel.hpp"
#include "saddle/eigensolver.hpp"
#include "saddle/harness/table.hpp"
#include "saddle/manifold.hpp"

namespace saddle::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Nearest reference to the final point (or the final point itself), then
// errors and order.
void finalize(ConvergenceRecord& rec, const std::vector<Vector>& refs) {
  const Vector xf = rec.final_x();
  Vector ref = xf;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double d = (refs[i] - xf).norm();
    if (d < best) {
      best = d;
      rec.reference_id = static_cast<int>(i);
      ref = refs[i];
    }
  }
  for (auto& r : rec.iterations) r.error = (r.x - ref).norm();
  try {
    rec.order = estimate_order(rec.errors());
  } catch (const ContractError&) {
    rec.order.reset();
  }
}

int terminal_index(const Potential& p, const Vector& x, bool on_sphere) {
  if (on_sphere) {
    const ManifoldSpec M = make_sphere(p.dimension());
    return dense_eigensolve(riemannian_hessian(p, M, x)).negative_count();
  }
  return dense_eigensolve(p, x).negative_count();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw SolverError(fmt::format("cannot write {}", path.string()));
  out << text;
}

RunOutcome run_one(const ExperimentConfig& cfg, const Potential& p, const Vector& x0,
                   const std::vector<Vector>& refs) {
  RunOutcome o;
  o.start = x0;
  const auto t0 = std::chrono::steady_clock::now();
  const bool sphere = cfg.imf.manifold == ManifoldKind::sphere;
  switch (cfg.method) {
    case Method::imf: {
      IMFConfig c = cfg.imf;
      c.references = refs;
      o.record = run(p, x0, c);
      break;
    }
    case Method::gad: {
      std::optional<ManifoldSpec> M;
      if (sphere) M = make_sphere(p.dimension());
      GADState s0{x0, Vector(), 0.0};
      if (cfg.gad.direction) {
        s0.v = *cfg.gad.direction;
      } else {
        MinModeOptions mo;
        mo.tol = cfg.gad.params.eigen_tol;
        if (M) {
          mo.projector = M->projector_at(x0);
          mo.constraint_count = M->codimension();
        }
        s0.v = min_modes(p, x0, 1, mo).vector(0);
      }
      try {
        const GADTrajectory traj = run_gad(p, s0, cfg.gad.dt, cfg.gad.max_steps, cfg.gad.tol, cfg.gad.params,
                                           M ? &*M : nullptr, cfg.gad.record_every);
        o.record = record_from_gad(p, traj, cfg.gad.dt, refs, sphere);
      } catch (const ContractError&) {
        throw;
      } catch (const SolverError& e) {
        o.record.iterations.push_back({0, x0, kNaN, inf_norm(p.gradient(x0)), kNaN, 0, 0.0});
        o.record.status = RunStatus::failed;
        o.record.message = e.what();
        finalize(o.record, refs);
      }
      break;
    }
    case Method::newton:
      o.record = record_from_newton(p, newton_stationary(p, x0, cfg.newton.tol, cfg.newton.max_iters,
                                                         cfg.newton.max_step),
                                    refs);
      break;
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

}  // namespace

std::vector<Vector> known_points(const Potential& p, int index) {
  std::vector<Vector> out;
  for (const auto& sp : p.stationary_points()) {
    if (sp.index == index) out.push_back(sp.point);
  }
  return out;
}

ConvergenceRecord record_from_gad(const Potential& p, const GADTrajectory& traj, double dt,
                                  const std::vector<Vector>& refs, bool on_sphere) {
  require(!traj.samples.empty(), "record_from_gad: empty trajectory");
  ConvergenceRecord rec;
  const double t0 = traj.samples.front().t;
  Vector prev = traj.samples.front().x;
  for (const auto& s : traj.samples) {
    const int k = static_cast<int>(std::lround((s.t - t0) / dt));
    rec.iterations.push_back({k, s.x, kNaN, s.grad_norm, s.rayleigh, 0, (s.x - prev).norm()});
    prev = s.x;
  }
  if (traj.converged) {
    rec.status = RunStatus::converged;
    rec.terminal_index = terminal_index(p, rec.final_x(), on_sphere);
    if (rec.terminal_index != 1) {
      rec.status = RunStatus::wrong_index;
      rec.message = fmt::format("terminal point has index {}, expected 1", rec.terminal_index);
    }
  } else {
    rec.status = RunStatus::max_iters;
    rec.message = fmt::format("gradient {:.3e} after {} steps", traj.samples.back().grad_norm, traj.steps);
  }
  finalize(rec, refs);
  return rec;
}

ConvergenceRecord record_from_newton(const Potential& p, const NewtonResult& res, const std::vector<Vector>& refs) {
  ConvergenceRecord rec;
  for (std::size_t k = 0; k < res.path.size(); ++k) {
    const Vector& x = res.path[k];
    const double step = k == 0 ? 0.0 : (x - res.path[k - 1]).norm();
    rec.iterations.push_back({static_cast<int>(k), x, kNaN, inf_norm(p.gradient(x)), kNaN, 0, step});
  }
  rec.terminal_index = res.index;
  if (res.converged) {
    rec.status = res.index == 1 ? RunStatus::converged : RunStatus::wrong_index;
    if (res.index != 1) rec.message = fmt::format("terminal point has index {}, expected 1", res.index);
  } else if (res.failure == "iteration budget exhausted") {
    rec.status = RunStatus::max_iters;
    rec.message = res.failure;
  } else if (res.failure == "left the domain") {
    rec.status = RunStatus::diverged;
    rec.message = res.failure;
  } else {
    rec.status = RunStatus::failed;
    rec.message = res.failure;
  }
  finalize(rec, refs);
  return rec;
}

bool ExperimentReport::all_converged() const {
  for (const auto& r : runs) {
    if (r.record.status != RunStatus::converged) return false;
  }
  return !runs.empty();
}

std::vector<ConvergenceRecord> ExperimentReport::records() const {
  std::vector<ConvergenceRecord> out;
  for (const auto& r : runs) out.push_back(r.record);
  return out;
}

nlohmann::json ExperimentReport::summary(const ExperimentConfig& cfg) const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json runs_j = nlohmann::json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const auto& last = r.record.iterations.back();
    runs_j.push_back({{"id", r.id},
                      {"label", i < labels.size() ? labels[i] : fmt::format("run{}", r.id)},
                      {"status", to_string(r.record.status)},
                      {"message", r.record.message},
                      {"outer_iterations", r.record.outer_iterations()},
                      {"final_error", num(last.error)},
                      {"final_grad_norm", num(last.grad_norm)},
                      {"order", r.record.order ? num(*r.record.order) : nlohmann::json(nullptr)},
                      {"terminal_index", r.record.terminal_index},
                      {"reference_id", r.record.reference_id},
                      {"start", std::vector<double>(r.start.data(), r.start.data() + r.start.size())},
                      {"seconds", r.seconds}});
  }
  nlohmann::json seed = nullptr;
  if (cfg.start.kind != StartSpec::Kind::points) seed = cfg.start.seed;
  return {{"name", name},
          {"problem", problem},
          {"method", to_string(method)},
          {"seed", seed},
          {"all_converged", all_converged()},
          {"runs", runs_j},
          {"config", config_to_json(cfg)}};
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const PotentialPtr p = make_builtin(cfg.problem, cfg.problem_params);
  return run_experiment(cfg, *p);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Potential& p) {
  cfg.validate();
  const std::vector<Vector> starts = generate_starts(cfg, p);
  std::vector<Vector> refs = cfg.imf.references;
  if (refs.empty() && cfg.known_references) refs = known_points(p, cfg.imf.index);

  ExperimentReport rep;
  rep.name = cfg.name;
  rep.problem = cfg.problem;
  rep.method = cfg.method;
  rep.runs.resize(starts.size());
  detail::parallel_for(starts.size(), cfg.threads, [&](std::size_t i) {
    rep.runs[i] = run_one(cfg, p, starts[i], refs);
    rep.runs[i].id = static_cast<int>(i) + 1;
  });
  if (cfg.column_labels.size() == rep.runs.size()) {
    rep.labels = cfg.column_labels;
  } else {
    for (const auto& r : rep.runs) rep.labels.push_back(fmt::format("run{}", r.id));
  }
  return rep;
}

void write_report(const ExperimentReport& report, const ExperimentConfig& cfg) {
  if (cfg.output.dir.empty()) return;
  const auto& dir = cfg.output.dir;
  std::filesystem::create_directories(dir);
  for (const auto& r : report.runs) {
    std::ofstream out(dir / fmt::format("run_{}.csv", r.id));
    if (!out) throw SolverError(fmt::format("cannot write into {}", dir.string()));
    r.record.write_csv(out);
  }
  write_file(dir / "summary.json", report.summary(cfg).dump(2) + "\n");
  const auto records = report.records();
  for (const auto f : cfg.output.formats) {
    const char* ext = f == TableFormat::csv ? "csv" : f == TableFormat::json ? "json" : "md";
    write_file(dir / fmt::format("table.{}", ext), render_table(records, f, report.labels));
  }
  if (cfg.output.xyz) {
    const PotentialPtr p = make_builtin(cfg.problem, cfg.problem_params);
    const auto* m = dynamic_cast<const MorseIsland*>(p.get());
    if (!m) throw ContractError("config: output.xyz is only available for morse_island");
    for (const auto& r : report.runs) {
      std::ofstream out(dir / fmt::format("final_{}.xyz", r.id));
      write_xyz(out, m->full_positions(r.record.final_x()),
                fmt::format("{} run {} status {}", report.name, r.id, to_string(r.record.status)));
    }
  }
}

}  // namespace saddle::harness
