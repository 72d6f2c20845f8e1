#include "saddle/harness/config.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "saddle/manifold.hpp"

namespace saddle::harness {

namespace {

using nlohmann::json;

/// One JSON object level: type check, unknown-key check, typed getters.
class Node {
 public:
  Node(const json& j, std::string path, std::set<std::string> keys) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ContractError(fmt::format("config: {} must be an object", where()));
    for (const auto& [k, _] : j_.items()) {
      if (!keys.count(k)) throw ContractError(fmt::format("config: unknown key '{}' in {}", k, where()));
    }
  }

  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string sub(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  template <class T>
  T get(const std::string& k, T fallback) const {
    if (!has(k)) return fallback;
    return as<T>(j_.at(k), sub(k));
  }

  template <class T>
  T need(const std::string& k) const {
    if (!has(k)) throw ContractError(fmt::format("config: missing key '{}' in {}", k, where()));
    return as<T>(j_.at(k), sub(k));
  }

  template <class T>
  static T as(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ContractError("");
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer()) throw ContractError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ContractError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ContractError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ContractError(fmt::format("config: {} has the wrong type", path));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "the top level" : "'" + path_ + "'"; }
  const json& j_;
  std::string path_;
};

Vector as_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ContractError(fmt::format("config: {} must be a non-empty number array", path));
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = Node::as<double>(v[i], path);
  return out;
}

std::vector<Vector> as_points(const json& v, const std::string& path) {
  if (!v.is_array()) throw ContractError(fmt::format("config: {} must be an array of points", path));
  std::vector<Vector> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vector(v[i], fmt::format("{}[{}]", path, i)));
  return out;
}

json from_vector(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json from_points(const std::vector<Vector>& ps) {
  json out = json::array();
  for (const auto& p : ps) out.push_back(from_vector(p));
  return out;
}

Coefficients parse_coefficients(const json& v, const std::string& path) {
  if (v.is_string()) return coefficient_preset(v.get<std::string>());
  const Vector c = as_vector(v, path);
  if (c.size() != 2) throw ContractError(fmt::format("config: {} must be a preset name or [alpha, beta]", path));
  return {c[0], c[1]};
}

std::map<unsigned, double> parse_subset_map(const json& v, const std::string& path) {
  if (!v.is_object()) throw ContractError(fmt::format("config: {} must map subset masks to weights", path));
  std::map<unsigned, double> out;
  for (const auto& [k, w] : v.items()) {
    unsigned mask = 0;
    try {
      std::size_t used = 0;
      mask = static_cast<unsigned>(std::stoul(k, &used));
      if (used != k.size() || mask == 0) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw ContractError(fmt::format("config: {} key '{}' is not a positive subset mask", path, k));
    }
    out[mask] = Node::as<double>(w, path + "." + k);
  }
  return out;
}

SubsolveConfig parse_subsolve(const json& j, const std::string& path) {
  const Node n(j, path, {"method", "max_inner_iters", "grad_tol", "step_size", "box_radius", "box_norm", "ncg_restart"});
  SubsolveConfig c;
  const std::string m = n.get<std::string>("method", "ncg");
  if (m == "ncg") {
    c.method = SubsolveMethod::ncg;
  } else if (m == "sd") {
    c.method = SubsolveMethod::sd;
  } else {
    throw ContractError(fmt::format("config: {} must be 'sd' or 'ncg'", n.sub("method")));
  }
  c.max_inner_iters = n.get("max_inner_iters", c.max_inner_iters);
  c.grad_tol = n.get("grad_tol", c.grad_tol);
  c.step_size = n.get("step_size", c.step_size);
  if (n.has("box_radius")) c.box_radius = n.need<double>("box_radius");
  const std::string norm = n.get<std::string>("box_norm", "inf");
  if (norm == "inf") {
    c.box_norm = BoxNorm::inf;
  } else if (norm == "2") {
    c.box_norm = BoxNorm::two;
  } else {
    throw ContractError(fmt::format("config: {} must be 'inf' or '2'", n.sub("box_norm")));
  }
  c.ncg_restart = n.get("ncg_restart", c.ncg_restart);
  return c;
}

IMFConfig parse_imf(const json& j, const std::string& path) {
  const Node n(j, path,
               {"coefficients", "subset_coefficients", "index", "eigen_tol", "eigen_max_iters", "subsolve", "grad_tol",
                "floor_grad_tol", "max_outer_iters", "references", "manifold", "sphere_projection", "domain_bound",
                "energy_floor", "region", "adaptive", "verify_index", "dense_cap"});
  IMFConfig c;
  if (n.has("coefficients")) c.coeffs = parse_coefficients(n.raw("coefficients"), n.sub("coefficients"));
  if (n.has("subset_coefficients")) {
    const Node s(n.raw("subset_coefficients"), n.sub("subset_coefficients"), {"alpha", "beta"});
    SubsetCoefficients sc;
    if (s.has("alpha")) sc.alpha = parse_subset_map(s.raw("alpha"), s.sub("alpha"));
    if (s.has("beta")) sc.beta = parse_subset_map(s.raw("beta"), s.sub("beta"));
    c.subset_coeffs = sc;
  }
  c.index = n.get("index", c.index);
  c.eigen_tol = n.get("eigen_tol", c.eigen_tol);
  c.eigen_max_iters = n.get("eigen_max_iters", c.eigen_max_iters);
  if (n.has("subsolve")) c.subsolve = parse_subsolve(n.raw("subsolve"), n.sub("subsolve"));
  c.grad_tol = n.get("grad_tol", c.grad_tol);
  c.floor_grad_tol = n.get("floor_grad_tol", c.floor_grad_tol);
  c.max_outer_iters = n.get("max_outer_iters", c.max_outer_iters);
  if (n.has("references")) c.references = as_points(n.raw("references"), n.sub("references"));
  const std::string man = n.get<std::string>("manifold", "none");
  if (man == "sphere") {
    c.manifold = ManifoldKind::sphere;
  } else if (man != "none") {
    throw ContractError(fmt::format("config: {} must be 'none' or 'sphere'", n.sub("manifold")));
  }
  const std::string proj = n.get<std::string>("sphere_projection", "geodesic");
  if (proj == "retraction") {
    c.sphere_projection = SphereProjection::retraction;
  } else if (proj != "geodesic") {
    throw ContractError(fmt::format("config: {} must be 'geodesic' or 'retraction'", n.sub("sphere_projection")));
  }
  c.domain_bound = n.get("domain_bound", c.domain_bound);
  c.energy_floor = n.get("energy_floor", c.energy_floor);
  if (n.has("region")) {
    const Node r(n.raw("region"), n.sub("region"), {"lo", "hi"});
    c.region = std::make_pair(as_vector(r.raw("lo"), r.sub("lo")), as_vector(r.raw("hi"), r.sub("hi")));
  }
  c.adaptive = n.get("adaptive", c.adaptive);
  c.verify_index = n.get("verify_index", c.verify_index);
  c.dense_cap = n.get<int>("dense_cap", static_cast<int>(c.dense_cap));
  return c;
}

StartSpec parse_start(const json& j) {
  const Node n(j, "start", {"points", "circle", "perturbed_minimum"});
  const int kinds = n.has("points") + n.has("circle") + n.has("perturbed_minimum");
  if (kinds != 1) throw ContractError("config: 'start' needs exactly one of points, circle, perturbed_minimum");
  StartSpec s;
  if (n.has("points")) {
    s.kind = StartSpec::Kind::points;
    s.points = as_points(n.raw("points"), "start.points");
  } else if (n.has("circle")) {
    const Node c(n.raw("circle"), "start.circle", {"center", "radius", "count", "seed"});
    s.kind = StartSpec::Kind::circle;
    s.center = as_vector(c.raw("center"), c.sub("center"));
    s.radius = c.need<double>("radius");
    s.count = c.get("count", 1);
    s.seed = c.need<std::uint64_t>("seed");
  } else {
    const Node c(n.raw("perturbed_minimum"), "start.perturbed_minimum",
                 {"from", "sigma", "tail", "count", "seed", "relax_tol"});
    s.kind = StartSpec::Kind::perturbed_minimum;
    if (c.has("from")) s.from = as_vector(c.raw("from"), c.sub("from"));
    s.sigma = c.need<double>("sigma");
    s.tail = c.get("tail", 0);
    s.count = c.get("count", 1);
    s.seed = c.need<std::uint64_t>("seed");
    s.relax_tol = c.get("relax_tol", s.relax_tol);
  }
  return s;
}

GADConfig parse_gad(const json& j) {
  const Node n(j, "gad", {"dt", "max_steps", "tol", "record_every", "gamma", "reversal", "exact_direction",
                          "eigen_tol", "direction"});
  GADConfig g;
  g.dt = n.get("dt", g.dt);
  g.max_steps = n.get("max_steps", g.max_steps);
  g.tol = n.get("tol", g.tol);
  g.record_every = n.get("record_every", g.record_every);
  g.params.gamma = n.get("gamma", g.params.gamma);
  g.params.reversal = n.get("reversal", g.params.reversal);
  g.params.exact_direction = n.get("exact_direction", g.params.exact_direction);
  g.params.eigen_tol = n.get("eigen_tol", g.params.eigen_tol);
  if (n.has("direction")) g.direction = as_vector(n.raw("direction"), "gad.direction");
  return g;
}

OutputSpec parse_output(const json& j) {
  const Node n(j, "output", {"dir", "formats", "xyz"});
  OutputSpec o;
  o.dir = n.get<std::string>("dir", "");
  if (n.has("formats")) {
    const json& f = n.raw("formats");
    if (!f.is_array()) throw ContractError("config: output.formats must be an array");
    o.formats.clear();
    for (const auto& s : f) o.formats.push_back(table_format_from_string(Node::as<std::string>(s, "output.formats")));
  }
  o.xyz = n.get("xyz", o.xyz);
  return o;
}

// Uniform direction in the tangent space of the sphere at c (or in R^d).
Vector random_direction(std::mt19937_64& rng, const Vector& c, bool sphere) {
  std::normal_distribution<double> nd(0.0, 1.0);
  if (!sphere && c.size() == 2) {
    std::uniform_real_distribution<double> ud(0.0, 2.0 * std::numbers::pi);
    const double t = ud(rng);
    return Eigen::Vector2d(std::cos(t), std::sin(t));
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector u(c.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = nd(rng);
    if (sphere) u -= c.dot(u) * c;
    const double n = u.norm();
    if (n > 1e-8) return u / n;
  }
  throw SolverError("could not draw a random direction");
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::imf: return "imf";
    case Method::gad: return "gad";
    case Method::newton: return "newton";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "imf") return Method::imf;
  if (s == "gad") return Method::gad;
  if (s == "newton") return Method::newton;
  throw ContractError(fmt::format("config: unknown method '{}' (imf, gad, newton)", s));
}

std::string to_string(TableFormat f) {
  switch (f) {
    case TableFormat::csv: return "csv";
    case TableFormat::json: return "json";
    case TableFormat::markdown: return "markdown";
  }
  return "?";
}

TableFormat table_format_from_string(const std::string& s) {
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  if (s == "markdown" || s == "md") return TableFormat::markdown;
  throw ContractError(fmt::format("config: unknown table format '{}' (csv, json, markdown)", s));
}

void ExperimentConfig::validate() const {
  const auto names = builtin_names();
  require(std::find(names.begin(), names.end(), problem) != names.end(),
          fmt::format("config: unknown problem '{}'", problem));
  imf.validate();
  require(start.count >= 1, "config: start count must be positive");
  switch (start.kind) {
    case StartSpec::Kind::points: require(!start.points.empty(), "config: start.points is empty"); break;
    case StartSpec::Kind::circle: require(start.radius > 0.0, "config: start.circle.radius must be positive"); break;
    case StartSpec::Kind::perturbed_minimum:
      require(start.sigma >= 0.0 && start.tail >= 0 && start.relax_tol > 0.0,
              "config: start.perturbed_minimum needs sigma >= 0, tail >= 0, relax_tol > 0");
      break;
  }
  require(gad.dt > 0.0 && gad.max_steps >= 0 && gad.tol > 0.0 && gad.record_every >= 1, "config: invalid gad settings");
  require(newton.tol > 0.0 && newton.max_iters >= 1 && newton.max_step > 0.0, "config: invalid newton settings");
  if (doa) {
    require(doa->n >= 1 && doa->budget >= 1, "config: doa.n and doa.budget must be positive");
    require((doa->hi.array() >= doa->lo.array()).all(), "config: doa region has hi < lo");
  }
  require(threads >= 0, "config: threads must be non-negative");
}

ExperimentConfig parse_config(const json& j) {
  const Node n(j, "", {"name", "problem", "method", "imf", "gad", "newton", "start", "references", "doa", "output",
                       "threads", "columns"});
  ExperimentConfig c;
  c.name = n.get<std::string>("name", c.name);
  {
    if (!j.contains("problem")) throw ContractError("config: missing key 'problem' in the top level");
    const json& p = j.at("problem");
    if (p.is_string()) {
      c.problem = p.get<std::string>();
    } else {
      const Node pn(p, "problem", {"name", "params"});
      c.problem = pn.need<std::string>("name");
      if (pn.has("params")) c.problem_params = pn.raw("params");
    }
  }
  c.method = method_from_string(n.get<std::string>("method", "imf"));
  if (n.has("imf")) c.imf = parse_imf(n.raw("imf"), "imf");
  if (n.has("gad")) c.gad = parse_gad(n.raw("gad"));
  if (n.has("newton")) {
    const Node nn(n.raw("newton"), "newton", {"tol", "max_iters", "max_step"});
    c.newton.tol = nn.get("tol", c.newton.tol);
    c.newton.max_iters = nn.get("max_iters", c.newton.max_iters);
    c.newton.max_step = nn.get("max_step", c.newton.max_step);
  }
  if (n.has("doa")) {
    const Node d(n.raw("doa"), "doa", {"region", "n", "budget"});
    DoaSpec s;
    if (d.has("region")) {
      const json& r = d.raw("region");
      if (!r.is_array() || r.size() != 2) throw ContractError("config: doa.region must be [[x_lo, x_hi], [y_lo, y_hi]]");
      const Vector xs = as_vector(r[0], "doa.region[0]");
      const Vector ys = as_vector(r[1], "doa.region[1]");
      if (xs.size() != 2 || ys.size() != 2) throw ContractError("config: doa.region must be [[x_lo, x_hi], [y_lo, y_hi]]");
      s.lo = {xs[0], ys[0]};
      s.hi = {xs[1], ys[1]};
    }
    s.n = d.get("n", s.n);
    s.budget = d.get("budget", s.budget);
    c.doa = s;
  }
  if (n.has("start")) {
    c.start = parse_start(n.raw("start"));
  } else if (!c.doa) {
    throw ContractError("config: missing key 'start' in the top level");
  } else {
    c.start.kind = StartSpec::Kind::points;
    c.start.points = {Vector::Zero(2)};   // unused by grid scans
  }
  const std::string refs = n.get<std::string>("references", "known");
  if (refs == "none") {
    c.known_references = false;
  } else if (refs != "known") {
    throw ContractError("config: references must be 'known' or 'none' (explicit points go in imf.references)");
  }
  if (n.has("output")) c.output = parse_output(n.raw("output"));
  c.threads = n.get("threads", c.threads);
  if (n.has("columns")) {
    const json& cols = n.raw("columns");
    if (!cols.is_array()) throw ContractError("config: columns must be an array of strings");
    for (const auto& s : cols) c.column_labels.push_back(Node::as<std::string>(s, "columns"));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError(fmt::format("config: cannot open {}", path.string()));
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ContractError(fmt::format("config: {} is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json imf;
  imf["coefficients"] = {c.imf.coeffs.alpha, c.imf.coeffs.beta};
  if (c.imf.subset_coeffs) {
    json a = json::object(), b = json::object();
    for (const auto& [k, v] : c.imf.subset_coeffs->alpha) a[std::to_string(k)] = v;
    for (const auto& [k, v] : c.imf.subset_coeffs->beta) b[std::to_string(k)] = v;
    imf["subset_coefficients"] = {{"alpha", a}, {"beta", b}};
  }
  imf["index"] = c.imf.index;
  imf["eigen_tol"] = c.imf.eigen_tol;
  imf["eigen_max_iters"] = c.imf.eigen_max_iters;
  const auto& s = c.imf.subsolve;
  imf["subsolve"] = {{"method", s.method == SubsolveMethod::ncg ? "ncg" : "sd"},
                     {"max_inner_iters", s.max_inner_iters},
                     {"grad_tol", s.grad_tol},
                     {"step_size", s.step_size},
                     {"box_radius", s.box_radius ? json(*s.box_radius) : json(nullptr)},
                     {"box_norm", s.box_norm == BoxNorm::two ? "2" : "inf"},
                     {"ncg_restart", s.ncg_restart}};
  imf["grad_tol"] = c.imf.grad_tol;
  imf["floor_grad_tol"] = c.imf.floor_grad_tol;
  imf["max_outer_iters"] = c.imf.max_outer_iters;
  if (!c.imf.references.empty()) imf["references"] = from_points(c.imf.references);
  imf["manifold"] = c.imf.manifold == ManifoldKind::sphere ? "sphere" : "none";
  imf["sphere_projection"] = c.imf.sphere_projection == SphereProjection::geodesic ? "geodesic" : "retraction";
  imf["domain_bound"] = c.imf.domain_bound;
  if (std::isfinite(c.imf.energy_floor)) imf["energy_floor"] = c.imf.energy_floor;
  if (c.imf.region) imf["region"] = {{"lo", from_vector(c.imf.region->first)}, {"hi", from_vector(c.imf.region->second)}};
  imf["adaptive"] = c.imf.adaptive;
  imf["verify_index"] = c.imf.verify_index;
  imf["dense_cap"] = static_cast<int>(c.imf.dense_cap);

  json gad = {{"dt", c.gad.dt},
              {"max_steps", c.gad.max_steps},
              {"tol", c.gad.tol},
              {"record_every", c.gad.record_every},
              {"gamma", c.gad.params.gamma},
              {"reversal", c.gad.params.reversal},
              {"exact_direction", c.gad.params.exact_direction},
              {"eigen_tol", c.gad.params.eigen_tol}};
  if (c.gad.direction) gad["direction"] = from_vector(*c.gad.direction);

  json start;
  switch (c.start.kind) {
    case StartSpec::Kind::points: start["points"] = from_points(c.start.points); break;
    case StartSpec::Kind::circle:
      start["circle"] = {{"center", from_vector(c.start.center)},
                         {"radius", c.start.radius},
                         {"count", c.start.count},
                         {"seed", c.start.seed}};
      break;
    case StartSpec::Kind::perturbed_minimum: {
      json pm = {{"sigma", c.start.sigma},
                 {"tail", c.start.tail},
                 {"count", c.start.count},
                 {"seed", c.start.seed},
                 {"relax_tol", c.start.relax_tol}};
      if (c.start.from) pm["from"] = from_vector(*c.start.from);
      start["perturbed_minimum"] = pm;
      break;
    }
  }

  json out = {{"name", c.name},
              {"problem", {{"name", c.problem}, {"params", c.problem_params}}},
              {"method", to_string(c.method)},
              {"imf", imf},
              {"gad", gad},
              {"newton", {{"tol", c.newton.tol}, {"max_iters", c.newton.max_iters}, {"max_step", c.newton.max_step}}},
              {"start", start},
              {"references", c.known_references ? "known" : "none"},
              {"threads", c.threads}};
  if (c.doa) {
    out["doa"] = {{"region", {{c.doa->lo.x(), c.doa->hi.x()}, {c.doa->lo.y(), c.doa->hi.y()}}},
                  {"n", c.doa->n},
                  {"budget", c.doa->budget}};
  }
  json formats = json::array();
  for (auto f : c.output.formats) formats.push_back(to_string(f));
  out["output"] = {{"dir", c.output.dir.string()}, {"formats", formats}, {"xyz", c.output.xyz}};
  if (!c.column_labels.empty()) out["columns"] = c.column_labels;
  return out;
}

std::vector<Vector> generate_starts(const ExperimentConfig& cfg, const Potential& p) {
  const StartSpec& s = cfg.start;
  const bool sphere = cfg.imf.manifold == ManifoldKind::sphere;
  std::vector<Vector> out;
  switch (s.kind) {
    case StartSpec::Kind::points:
      for (const auto& x : s.points) {
        require_dimension(x.size(), p.dimension(), "start point");
        out.push_back(x);
      }
      break;
    case StartSpec::Kind::circle: {
      require_dimension(s.center.size(), p.dimension(), "start.circle.center");
      if (sphere) make_sphere(p.dimension()).require_feasible(s.center);
      std::mt19937_64 rng(s.seed);
      for (int k = 0; k < s.count; ++k) {
        const Vector u = random_direction(rng, s.center, sphere);
        out.push_back(sphere ? Vector(std::cos(s.radius) * s.center + std::sin(s.radius) * u)
                             : Vector(s.center + s.radius * u));
      }
      break;
    }
    case StartSpec::Kind::perturbed_minimum: {
      Vector x0;
      if (s.from) {
        x0 = *s.from;
      } else if (const auto* m = dynamic_cast<const MorseIsland*>(&p)) {
        x0 = m->initial_point();
      } else {
        throw ContractError("config: start.perturbed_minimum.from is required for this problem");
      }
      require_dimension(x0.size(), p.dimension(), "start.perturbed_minimum.from");
      require(s.tail <= p.dimension(), "config: start.perturbed_minimum.tail exceeds the dimension");
      SubsolveConfig rc;
      rc.grad_tol = s.relax_tol;
      rc.max_inner_iters = 100000;
      const SubsolveResult relaxed = minimize_potential(p, x0, rc);
      if (relaxed.grad_norm > s.relax_tol) {
        throw SolverError(fmt::format("start relaxation stopped at gradient {:.3e}", relaxed.grad_norm));
      }
      std::mt19937_64 rng(s.seed);
      std::normal_distribution<double> nd(0.0, s.sigma);
      const Eigen::Index first = s.tail == 0 ? 0 : p.dimension() - s.tail;
      for (int k = 0; k < s.count; ++k) {
        Vector x = relaxed.y;
        for (Eigen::Index i = first; i < x.size(); ++i) x[i] += s.sigma > 0.0 ? nd(rng) : 0.0;
        out.push_back(std::move(x));
      }
      break;
    }
  }
  return out;
}

}  // namespace saddle::harness
