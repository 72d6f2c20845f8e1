#include "saddle/imf.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace saddle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool on_manifold(const IMFConfig& cfg) { return cfg.manifold == ManifoldKind::sphere; }

double stationarity(const Potential& p, const IMFConfig& cfg, const ManifoldSpec* M, const Vector& x) {
  if (on_manifold(cfg)) return inf_norm(riemannian_gradient(p, *M, x));
  return inf_norm(p.gradient(x));
}

Coefficients adapted(const Coefficients& c, const std::vector<double>& lambda) {
  if (lambda.size() < 2 || !(lambda[0] < 0.0) || !(lambda[1] > 0.0)) return c;
  const double target = 1.0 + lambda[1] / std::abs(lambda[0]);
  const double scale = target / c.sum();
  return {c.alpha * scale, c.beta * scale};
}

}  // namespace

void IMFConfig::validate() const {
  require(index >= 1, "IMF: index must be positive");
  require(eigen_tol > 0.0 && eigen_max_iters >= 1, "IMF: invalid eigensolver settings");
  require(grad_tol > 0.0, "IMF: grad_tol must be positive");
  require(max_outer_iters >= 0, "IMF: max_outer_iters must be non-negative");
  require(domain_bound > 0.0, "IMF: domain_bound must be positive");
  subsolve.validate();
  if (subset_coeffs) {
    check_coefficient_sum(subset_coeffs->sum());
  } else if (index == 1) {
    check_coefficient_sum(coeffs.sum());
  }
  if (on_manifold(*this)) {
    require(index == 1, "IMF: manifold searches support index 1 only");
    require(!subset_coeffs, "IMF: manifold searches take (alpha, beta) coefficients");
    require(!subsolve.box_radius, "IMF: the trust box is not available on a manifold");
  }
  if (region) require(region->first.size() == region->second.size(), "IMF: region bounds differ in size");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::diverged: return "diverged";
    case RunStatus::left_region: return "left_region";
    case RunStatus::wrong_index: return "wrong_index";
    case RunStatus::failed: return "failed";
  }
  return "failed";
}

RunStatus run_status_from_string(const std::string& s) {
  for (auto st : {RunStatus::converged, RunStatus::max_iters, RunStatus::diverged, RunStatus::left_region,
                  RunStatus::wrong_index, RunStatus::failed}) {
    if (to_string(st) == s) return st;
  }
  throw ContractError(fmt::format("unknown run status '{}'", s));
}

Coefficients coefficient_preset(const std::string& name) {
  if (name == "2,0") return Coefficients::w1();
  if (name == "0,2") return Coefficients::w2();
  if (name == "1,1") return Coefficients::mixed();
  throw ContractError(fmt::format("unknown coefficient preset '{}' (expected 2,0 | 0,2 | 1,1)", name));
}

SearchState step(const Potential& p, const SearchState& s, const IMFConfig& cfg) {
  require_dimension(s.x.size(), p.dimension(), "IMF step");
  const bool sphere = on_manifold(cfg);
  std::optional<ManifoldSpec> M;
  if (sphere) {
    M = make_sphere(p.dimension());
    M->require_feasible(s.x);
  }

  MinModeOptions eo;
  eo.tol = cfg.eigen_tol;
  eo.max_iters = cfg.eigen_max_iters;
  if (s.v.size() > 0 && s.v.rows() == p.dimension()) eo.warm_start = s.v;
  if (sphere) {
    eo.projector = M->projector_at(s.x);
    eo.constraint_count = M->codimension();
  }
  const int wanted = cfg.index + (cfg.adaptive ? 1 : 0);

  SearchState next = s;
  try {
    const MinModeResult modes = min_modes(p, s.x, wanted, eo);
    Matrix V = modes.eigenvectors.leftCols(cfg.index);
    std::vector<double> lambda(modes.eigenvalues.begin(), modes.eigenvalues.begin() + cfg.index);

    if (cfg.subsolve.box_radius == std::nullopt && !sphere && lambda.front() > 0.0) {
      throw ContractError(fmt::format(
          "IMF: smallest Hessian eigenvalue {:.4g} > 0 at outer iteration {}; the modified objective is unbounded "
          "below in convex regions, configure a trust box",
          lambda.front(), s.outer_iter));
    }

    SubsolveResult inner;
    if (sphere) {
      Vector v = M->project(s.x, V.col(0));
      v.normalize();
      V.col(0) = v;
      const Coefficients c = cfg.adaptive ? adapted(cfg.coeffs, modes.eigenvalues) : cfg.coeffs;
      const ModifiedObjective L =
          build_manifold(p, GeodesicFrame::on_sphere(s.x, v), c, cfg.sphere_projection);
      inner = solve_constrained_subproblem(L, *M, s.x, cfg.subsolve);
    } else if (cfg.index == 1 && !cfg.subset_coeffs) {
      const Coefficients c = cfg.adaptive ? adapted(cfg.coeffs, modes.eigenvalues) : cfg.coeffs;
      const ModifiedObjective L = build_flat(p, s.x, V.col(0), c);
      inner = minimize(L, s.x, cfg.subsolve);
    } else {
      const SubsetCoefficients c = cfg.subset_coeffs.value_or(SubsetCoefficients::minimal(cfg.index));
      const ModifiedObjective L = build_index_m(p, s.x, V, c);
      inner = minimize(L, s.x, cfg.subsolve);
    }

    next.x = inner.y;
    next.v = V;
    next.lambda = std::move(lambda);
    next.outer_iter = s.outer_iter + 1;
    next.last_step_norm = (inner.y - s.x).norm();
    next.last_inner_iters = inner.inner_iters;
    next.lambda_gap = modes.gap;
    next.near_degenerate = modes.near_degenerate;
    next.grad_norm = stationarity(p, cfg, M ? &*M : nullptr, next.x);
  } catch (const ContractError&) {
    throw;
  } catch (const SolverError& e) {
    throw SolverError(fmt::format("outer iteration {}: {}", s.outer_iter + 1, e.what()));
  }
  return next;
}

std::vector<double> ConvergenceRecord::errors() const {
  std::vector<double> out;
  out.reserve(iterations.size());
  for (const auto& r : iterations) out.push_back(r.error);
  return out;
}

ConvergenceRecord run(const Potential& p, const Vector& x0, const IMFConfig& cfg) {
  cfg.validate();
  require_dimension(x0.size(), p.dimension(), "IMF run");
  const bool sphere = on_manifold(cfg);
  std::optional<ManifoldSpec> M;
  if (sphere) {
    M = make_sphere(p.dimension());
    M->require_feasible(x0);
  }

  ConvergenceRecord rec;
  SearchState s;
  s.x = x0;
  s.grad_norm = stationarity(p, cfg, M ? &*M : nullptr, x0);
  rec.iterations.push_back({0, x0, kNaN, s.grad_norm, kNaN, 0, 0.0});

  while (true) {
    if (s.grad_norm <= cfg.grad_tol) {
      rec.status = RunStatus::converged;
      break;
    }
    if (s.outer_iter >= cfg.max_outer_iters) {
      rec.status = RunStatus::max_iters;
      rec.message = fmt::format("gradient {:.3e} after {} outer iterations", s.grad_norm, s.outer_iter);
      break;
    }
    try {
      SearchState next = step(p, s, cfg);
      rec.iterations.back().lambda1 = next.lambda.front();
      if (next.x == s.x) {
        // Phi(x) == x bitwise: rounding has taken over, nothing more to gain.
        if (next.grad_norm <= cfg.floor_grad_tol) {
          rec.status = RunStatus::converged;
        } else {
          rec.status = RunStatus::failed;
          rec.message = fmt::format("stagnated at gradient {:.3e}", next.grad_norm);
        }
        break;
      }
      s = std::move(next);
    } catch (const ContractError&) {
      throw;
    } catch (const SolverError& e) {
      rec.status = RunStatus::failed;
      rec.message = e.what();
      break;
    }
    rec.iterations.push_back({s.outer_iter, s.x, kNaN, s.grad_norm, kNaN, s.last_inner_iters, s.last_step_norm});

    const double e = p.energy(s.x);
    if (!s.x.allFinite() || !std::isfinite(e) || inf_norm(s.x) > cfg.domain_bound || e < cfg.energy_floor) {
      rec.status = RunStatus::diverged;
      rec.message = fmt::format("iterate left the domain at outer iteration {}", s.outer_iter);
      break;
    }
    if (cfg.region) {
      const auto& [lo, hi] = *cfg.region;
      if ((s.x.array() < lo.array()).any() || (s.x.array() > hi.array()).any()) {
        rec.status = RunStatus::left_region;
        rec.message = fmt::format("iterate left the region at outer iteration {}", s.outer_iter);
        break;
      }
    }
  }

  // Errors against the reference nearest the final point; without references
  // the final point itself serves.
  const Vector& xf = rec.final_x();
  Vector ref = xf;
  if (!cfg.references.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfg.references.size(); ++i) {
      require_dimension(cfg.references[i].size(), p.dimension(), "IMF reference");
      const double d = (cfg.references[i] - xf).norm();
      if (d < best) {
        best = d;
        rec.reference_id = static_cast<int>(i);
      }
    }
    ref = cfg.references[static_cast<std::size_t>(rec.reference_id)];
  }
  for (auto& r : rec.iterations) r.error = (r.x - ref).norm();

  if (rec.status == RunStatus::converged && cfg.verify_index && p.dimension() <= cfg.dense_cap) {
    DenseSpectrum spec = sphere ? dense_eigensolve(riemannian_hessian(p, *M, xf)) : dense_eigensolve(p, xf);
    rec.terminal_index = spec.negative_count();
    rec.iterations.back().lambda1 = spec.eigenvalues[0];
    if (rec.terminal_index != cfg.index) {
      rec.status = RunStatus::wrong_index;
      rec.message = fmt::format("terminal point has index {}, expected {}", rec.terminal_index, cfg.index);
    }
  }

  try {
    rec.order = estimate_order(rec.errors());
  } catch (const ContractError&) {
    rec.order.reset();
  }
  return rec;
}

Matrix jacobian_of_phi(const Potential& p, const Vector& x, const IMFConfig& cfg, double h) {
  cfg.validate();
  require(!on_manifold(cfg), "jacobian_of_phi: flat space only");
  require(h > 0.0, "jacobian_of_phi: h must be positive");
  const Eigen::Index d = p.dimension();
  Matrix J(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    SearchState plus, minus;
    plus.x = x;
    minus.x = x;
    plus.x[j] += h;
    minus.x[j] -= h;
    J.col(j) = (step(p, plus, cfg).x - step(p, minus, cfg).x) / (2.0 * h);
  }
  return J;
}

double estimate_order(const std::vector<double>& errors, int window, double floor, int min_points) {
  require(window >= 1, "estimate_order: window must be positive");
  require(min_points >= 2, "estimate_order: min_points must be at least 2");
  // Last index above the floor, then walk back while strictly decreasing.
  int end = static_cast<int>(errors.size()) - 1;
  while (end >= 0 && !(errors[static_cast<std::size_t>(end)] > floor && std::isfinite(errors[static_cast<std::size_t>(end)]))) {
    --end;
  }
  int begin = end;
  while (begin > 0) {
    const double prev = errors[static_cast<std::size_t>(begin - 1)];
    if (!(std::isfinite(prev) && prev > errors[static_cast<std::size_t>(begin)])) break;
    --begin;
  }
  const int usable = end < 0 ? 0 : end - begin + 1;
  if (usable < min_points) {
    throw ContractError(fmt::format("estimate_order: {} usable errors, need {}", usable, min_points));
  }
  begin = std::max(begin, end - window);
  const int n = end - begin;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int k = begin; k < end; ++k) {
    const double a = std::log(errors[static_cast<std::size_t>(k)]);
    const double b = std::log(errors[static_cast<std::size_t>(k + 1)]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  const double denom = n * sxx - sx * sx;
  if (n == 1 || std::abs(denom) < 1e-300) {
    return std::log(errors[static_cast<std::size_t>(end)]) / std::log(errors[static_cast<std::size_t>(end - 1)]);
  }
  return (n * sxy - sx * sy) / denom;
}

void ConvergenceRecord::write_csv(std::ostream& out) const {
  const Eigen::Index d = iterations.empty() ? 0 : iterations.front().x.size();
  out << "iter,error,grad_norm,lambda1,inner_iters,step_norm";
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& r : iterations) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{},{:.17g}", r.iter, r.error, r.grad_norm, r.lambda1, r.inner_iters,
                       r.step_norm);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out << fmt::format(",{:.17g}", r.x[i]);
    out << '\n';
  }
}

namespace {

// JSON has no NaN; encode as null.
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
double num(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

nlohmann::json ConvergenceRecord::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : iterations) {
    rows.push_back({{"iter", r.iter},
                    {"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
                    {"error", num(r.error)},
                    {"grad_norm", num(r.grad_norm)},
                    {"lambda1", num(r.lambda1)},
                    {"inner_iters", r.inner_iters},
                    {"step_norm", num(r.step_norm)}});
  }
  return {{"status", to_string(status)},
          {"message", message},
          {"terminal_index", terminal_index},
          {"reference_id", reference_id},
          {"order", order ? num(*order) : nlohmann::json(nullptr)},
          {"iterations", rows}};
}

ConvergenceRecord ConvergenceRecord::from_json(const nlohmann::json& j) {
  ConvergenceRecord rec;
  try {
    rec.status = run_status_from_string(j.at("status").get<std::string>());
    rec.message = j.at("message").get<std::string>();
    rec.terminal_index = j.at("terminal_index").get<int>();
    rec.reference_id = j.at("reference_id").get<int>();
    if (!j.at("order").is_null()) rec.order = j.at("order").get<double>();
    for (const auto& r : j.at("iterations")) {
      IterationRecord it;
      it.iter = r.at("iter").get<int>();
      const auto xs = r.at("x").get<std::vector<double>>();
      it.x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      it.error = num(r.at("error"));
      it.grad_norm = num(r.at("grad_norm"));
      it.lambda1 = num(r.at("lambda1"));
      it.inner_iters = r.at("inner_iters").get<int>();
      it.step_norm = num(r.at("step_norm"));
      rec.iterations.push_back(std::move(it));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(fmt::format("convergence record: {}", e.what()));
  }
  return rec;
}

}  // namespace saddle
