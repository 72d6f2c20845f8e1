#include "saddle/harness/bench.hpp"

#include <fmt/core.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "saddle/harness/table.hpp"

namespace saddle::harness {

namespace {

struct Column {
  std::string preset;      // coefficient preset name
  Vector center;
  std::uint64_t seed;
  std::string label;
};

ExperimentConfig three_hole_base(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.problem = "three_hole";
  c.method = Method::imf;
  c.imf.grad_tol = 1e-14;
  c.imf.max_outer_iters = 50;
  c.threads = 1;
  return c;
}

Vector known(const std::string& problem, const std::string& label) {
  const PotentialPtr p = make_builtin(problem);
  for (const auto& sp : p->stationary_points()) {
    if (sp.label == label) return sp.point;
  }
  throw ContractError(fmt::format("no stationary point {} on {}", label, problem));
}

std::vector<ExperimentConfig> circle_columns(const std::string& table, const std::vector<Column>& cols, double radius,
                                             const std::function<void(ExperimentConfig&)>& tweak) {
  std::vector<ExperimentConfig> out;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    ExperimentConfig c = three_hole_base(fmt::format("{}_col{}", table, k + 1));
    c.imf.coeffs = coefficient_preset(cols[k].preset);
    c.start.kind = StartSpec::Kind::circle;
    c.start.center = cols[k].center;
    c.start.radius = radius;
    c.start.count = 1;
    c.start.seed = cols[k].seed;
    c.column_labels = {cols[k].label};
    tweak(c);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Column> per_saddle_columns(const std::vector<std::string>& presets) {
  const Vector sp1 = known("three_hole", "SP1");
  const Vector sp2 = known("three_hole", "SP2");
  std::vector<Column> cols;
  for (const auto& p : presets) cols.push_back({p, sp1, 1, fmt::format("SP1 ({})", p)});
  for (const auto& p : presets) cols.push_back({p, sp2, 2, fmt::format("SP2 ({})", p)});
  return cols;
}

}  // namespace

std::vector<std::string> bench_presets() { return {"table1", "table2", "table3", "table4", "table5", "fig2"}; }

std::vector<ExperimentConfig> bench_experiments(const std::string& preset) {
  if (preset == "table1") {
    return circle_columns("table1", per_saddle_columns({"2,0", "0,2", "1,1"}), 0.2, [](ExperimentConfig&) {});
  }
  if (preset == "table2") {
    // Starts around the left well; both column groups share a start.
    const Vector center = Eigen::Vector2d(-1.0, 0.0);
    std::vector<Column> cols;
    for (std::uint64_t seed : {1u, 2u}) {
      for (const char* p : {"2,0", "0,2", "1,1"}) cols.push_back({p, center, seed, fmt::format("start{} ({})", seed, p)});
    }
    return circle_columns("table2", cols, 0.1, [](ExperimentConfig& c) { c.imf.subsolve.box_radius = 0.25; });
  }
  if (preset == "table3") {
    return circle_columns("table3", per_saddle_columns({"2,0", "0,2"}), 0.2, [](ExperimentConfig& c) {
      c.imf.subsolve.max_inner_iters = 3;
      c.imf.grad_tol = 1e-13;
    });
  }
  if (preset == "table4") {
    std::vector<ExperimentConfig> out;
    const char* presets[] = {"2,0", "0,2", "1,1"};
    for (int k = 0; k < 3; ++k) {
      ExperimentConfig c;
      c.name = fmt::format("table4_col{}", k + 1);
      c.problem = "morse_island";
      c.method = Method::imf;
      c.imf.coeffs = coefficient_preset(presets[k]);
      c.imf.subsolve.box_radius = 0.2;
      c.imf.grad_tol = 1e-10;
      c.imf.max_outer_iters = 30;
      c.start.kind = StartSpec::Kind::perturbed_minimum;
      c.start.sigma = 0.05;
      c.start.tail = 21;   // the seven island atoms
      c.start.count = 1;
      c.start.seed = static_cast<std::uint64_t>(k + 1);
      c.start.relax_tol = 1e-10;
      c.known_references = false;
      c.output.xyz = true;
      c.threads = 1;
      c.column_labels = {fmt::format("({})", presets[k])};
      out.push_back(std::move(c));
    }
    return out;
  }
  if (preset == "table5") {
    std::vector<ExperimentConfig> out;
    struct Variant {
      const char* label;
      ManifoldTerm term;
      SphereProjection proj;
    };
    const Variant variants[] = {{"V+W1", ManifoldTerm::w1, SphereProjection::geodesic},
                                {"V+W2", ManifoldTerm::w2, SphereProjection::geodesic},
                                {"V+W2 naive", ManifoldTerm::w2, SphereProjection::retraction}};
    int k = 0;
    for (const auto& v : variants) {
      ExperimentConfig c;
      c.name = fmt::format("table5_col{}", ++k);
      c.problem = "sphere_quadratic";
      c.method = Method::imf;
      c.imf.manifold = ManifoldKind::sphere;
      c.imf.sphere_projection = v.proj;
      c.imf.coeffs = coefficients_for(v.term);
      c.imf.grad_tol = 1e-14;
      c.imf.max_outer_iters = 30;
      c.start.kind = StartSpec::Kind::circle;
      c.start.center = Eigen::Vector3d(1.0, 0.0, 0.0);
      c.start.radius = 0.1;
      c.start.count = 1;
      c.start.seed = 1;
      c.threads = 1;
      c.column_labels = {v.label};
      out.push_back(std::move(c));
    }
    return out;
  }
  if (preset == "fig2") return {};
  throw ContractError(fmt::format("unknown bench preset '{}'", preset));
}

std::vector<ConvergenceRecord> BenchResult::columns() const {
  std::vector<ConvergenceRecord> out;
  for (const auto& r : reports) {
    if (!r.runs.empty()) out.push_back(r.runs.front().record);
  }
  return out;
}

std::vector<std::string> BenchResult::labels() const {
  std::vector<std::string> out;
  for (const auto& r : reports) {
    if (!r.runs.empty()) out.push_back(r.labels.empty() ? r.name : r.labels.front());
  }
  return out;
}

bool BenchResult::ok() const {
  if (imf_grid && newton_grid) {
    if (imf_grid->labeled_count() <= newton_grid->labeled_count()) return false;
    for (int id = 0; id < 3; ++id) {
      if (imf_grid->count(id) > 0 && imf_grid->components(id) != 1) return false;
    }
    return true;
  }
  for (const auto& r : reports) {
    if (!r.all_converged()) return false;
  }
  return !reports.empty();
}

BenchResult run_bench(const std::string& preset, const std::filesystem::path& out_dir, int threads) {
  BenchResult res;
  res.preset = preset;
  if (preset == "fig2") {
    const PotentialPtr p = make_builtin("three_hole");
    const DoaSpec spec;   // 50 x 50 over [-1.5, 1.5] x [-1.5, 2.0], budget 200
    const auto saddles = known_points(*p, 1);
    res.imf_grid = doa_scan(*p, DoaMethod::imf, spec, saddles, doa_imf_config(spec.budget), NewtonConfig{}, threads);
    NewtonConfig nc;
    nc.max_iters = spec.budget;
    res.newton_grid = doa_scan(*p, DoaMethod::newton, spec, saddles, IMFConfig{}, nc, threads);
    if (!out_dir.empty()) {
      const auto dir = out_dir / preset;
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "grid_imf.csv") << [&] {
        std::ostringstream s;
        res.imf_grid->write_csv(s);
        return s.str();
      }();
      std::ofstream(dir / "grid_newton.csv") << [&] {
        std::ostringstream s;
        res.newton_grid->write_csv(s);
        return s.str();
      }();
      nlohmann::json j = {{"imf_labeled", res.imf_grid->labeled_count()},
                          {"newton_labeled", res.newton_grid->labeled_count()},
                          {"n", spec.n},
                          {"region", {{spec.lo.x(), spec.hi.x()}, {spec.lo.y(), spec.hi.y()}}}};
      for (int id = 0; id < static_cast<int>(saddles.size()); ++id) {
        j["imf_basins"].push_back({{"saddle", id},
                                   {"cells", res.imf_grid->count(id)},
                                   {"components", res.imf_grid->components(id)}});
        j["newton_basins"].push_back({{"saddle", id},
                                      {"cells", res.newton_grid->count(id)},
                                      {"components", res.newton_grid->components(id)}});
      }
      std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
    }
    return res;
  }

  res.configs = bench_experiments(preset);
  for (auto& c : res.configs) {
    if (threads > 0) c.threads = threads;
    if (!out_dir.empty()) c.output.dir = out_dir / preset / c.name;
    res.reports.push_back(run_experiment(c));
    write_report(res.reports.back(), c);
  }
  if (!out_dir.empty()) {
    const auto dir = out_dir / preset;
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "table.md") << render_table(res.columns(), TableFormat::markdown, res.labels());
    std::ofstream(dir / "table.csv") << render_table(res.columns(), TableFormat::csv, res.labels());
  }
  return res;
}

}  // namespace saddle::harness
