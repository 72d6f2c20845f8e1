#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "saddle/harness/bench.hpp"
#include "saddle/harness/check.hpp"
#include "saddle/harness/config.hpp"
#include "saddle/harness/doa.hpp"
#include "saddle/harness/experiment.hpp"
#include "saddle/harness/table.hpp"

using namespace saddle;
using namespace saddle::harness;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "name": "unit",
    "problem": "three_hole",
    "imf": {"coefficients": "1,1", "grad_tol": 1e-12},
    "start": {"circle": {"center": [0.0, -0.31582655], "radius": 0.2, "count": 3, "seed": 11}},
    "threads": 2
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("saddle_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(small_config());
  CHECK(c.name == "unit");
  CHECK(c.problem == "three_hole");
  CHECK(c.method == Method::imf);
  CHECK(c.imf.coeffs.alpha == 1.0);
  CHECK(c.imf.coeffs.beta == 1.0);
  CHECK(c.start.kind == StartSpec::Kind::circle);
  CHECK(c.start.count == 3);

  SUBCASE("trust-region shape") {
    json j = small_config();
    j["imf"]["subsolve"] = {{"box_radius", 0.2}, {"box_norm", "2"}};
    const ExperimentConfig b = parse_config(j);
    CHECK(b.imf.subsolve.box_norm == BoxNorm::two);
    CHECK(parse_config(config_to_json(b)).imf.subsolve.box_norm == BoxNorm::two);
    j["imf"]["subsolve"]["box_norm"] = "1";
    CHECK_THROWS_AS(parse_config(j), ContractError);
  }
  SUBCASE("round trip") {
    const ExperimentConfig back = parse_config(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
  }
  SUBCASE("unknown keys are rejected") {
    json j = small_config();
    j["imf"]["grad_tl"] = 1e-10;
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = small_config();
    j["bogus"] = 1;
    CHECK_THROWS_AS(parse_config(j), ContractError);
  }
  SUBCASE("bad values are rejected") {
    json j = small_config();
    j["imf"]["grad_tol"] = -1.0;
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = small_config();
    j["method"] = "bfgs";
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = small_config();
    j.erase("problem");
    CHECK_THROWS_AS(parse_config(j), ContractError);
    j = small_config();
    j["problem"] = "no_such_surface";
    CHECK_THROWS_AS(run_experiment(parse_config(j)), ContractError);
  }
}

TEST_CASE("start generation is reproducible") {
  const ExperimentConfig c = parse_config(small_config());
  const auto p = make_builtin("three_hole");
  const auto a = generate_starts(c, *p);
  const auto b = generate_starts(c, *p);
  REQUIRE(a.size() == 3);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k] == b[k]);
    CHECK((a[k] - c.start.center).norm() == doctest::Approx(0.2).epsilon(1e-14));
  }
}

TEST_CASE("table rendering") {
  const auto p = make_builtin("three_hole");
  ExperimentConfig c = parse_config(small_config());
  const ExperimentReport rep = run_experiment(c, *p);
  REQUIRE(rep.all_converged());
  const auto recs = rep.records();

  SUBCASE("markdown layout") {
    const std::string md = render_table(recs, TableFormat::markdown, {"a", "b", "c"});
    std::istringstream in(md);
    std::string header, rule;
    std::getline(in, header);
    std::getline(in, rule);
    CHECK(header.find("a") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), '|') == 5);
    CHECK(rule.find("---") != std::string::npos);
    int rows = 0;
    for (std::string line; std::getline(in, line);)
      if (!line.empty() && line[0] == '|') ++rows;
    int longest = 0;
    for (const auto& r : recs) longest = std::max(longest, r.outer_iterations());
    CHECK(rows >= longest);
  }
  SUBCASE("empty list renders the header only") {
    const std::string csv = render_table({}, TableFormat::csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') <= 1);
    const std::string md = render_table({}, TableFormat::markdown);
    CHECK(std::count(md.begin(), md.end(), '\n') <= 2);
  }
  SUBCASE("json round trip") {
    const json j = json::parse(render_table(recs, TableFormat::json));
    const auto back = parse_table_json(j);
    REQUIRE(back.size() == recs.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
      REQUIRE(back[k].iterations.size() == recs[k].iterations.size());
      for (std::size_t i = 0; i < recs[k].iterations.size(); ++i)
        CHECK(back[k].iterations[i].error == recs[k].iterations[i].error);
    }
    CHECK(json::parse(render_table(back, TableFormat::json)) == j);
  }
}

TEST_CASE("single-node grid at a saddle") {
  const auto p = make_builtin("three_hole");
  const auto saddles = known_points(*p, 1);
  const Vector sp1 = p->stationary_points()[0].point;
  DoaSpec spec;
  spec.lo = sp1;
  spec.hi = sp1;
  spec.n = 1;
  for (auto m : {DoaMethod::imf, DoaMethod::newton}) {
    const DoaGrid g = doa_scan(*p, m, spec, saddles, doa_imf_config(200), {}, 1);
    REQUIRE(g.labels.size() == 1);
    CHECK(g.labels[0] >= 0);
    CHECK((saddles[static_cast<std::size_t>(g.labels[0])] - sp1).norm() < 1e-12);
  }
}

TEST_CASE("grid labels agree with direct runs") {
  const auto p = make_builtin("three_hole");
  const auto saddles = known_points(*p, 1);
  DoaSpec spec;
  spec.n = 12;
  const IMFConfig icfg = doa_imf_config(200);
  const DoaGrid g = doa_scan(*p, DoaMethod::imf, spec, saddles, icfg, {}, 2);
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> pick(0, spec.n - 1);
  for (int k = 0; k < 10; ++k) {
    const int i = pick(gen), j = pick(gen);
    int expect = -1;
    try {
      const ConvergenceRecord r = run(*p, g.point(i, j), icfg);
      if (r.status == RunStatus::converged && r.terminal_index == 1) {
        for (std::size_t s = 0; s < saddles.size(); ++s)
          if ((r.final_x() - saddles[s]).norm() <= 1e-3) expect = static_cast<int>(s);
      }
    } catch (const std::exception&) {
    }
    CHECK_MESSAGE(g.label(i, j) == expect, "node " << i << "," << j);
  }
  // thread count does not change the result
  const DoaGrid g1 = doa_scan(*p, DoaMethod::imf, spec, saddles, icfg, {}, 1);
  CHECK(g1.labels == g.labels);
  CHECK(g1.iterations == g.iterations);
}

TEST_CASE("connected components") {
  DoaGrid g;
  g.n = 3;
  g.labels = {0, 0, 1,
              1, 0, 1,
              0, 1, 1};
  CHECK(g.components(0) == 2);
  CHECK(g.components(1) == 2);
  CHECK(g.components(2) == 0);
  CHECK(g.count(1) == 5);
  CHECK(g.labeled_count() == 9);
  std::ostringstream out;
  g.write_csv(out);
  CHECK(out.str() == "0,0,1\n1,0,1\n0,1,1\n");
}

TEST_CASE("outputs are bit-identical on rerun") {
  json j = small_config();
  const auto d1 = scratch("rerun1"), d2 = scratch("rerun2");
  j["output"] = {{"dir", d1.string()}, {"formats", {"csv", "json", "markdown"}}};
  ExperimentConfig c1 = parse_config(j);
  write_report(run_experiment(c1), c1);
  j["output"]["dir"] = d2.string();
  j["threads"] = 1;
  ExperimentConfig c2 = parse_config(j);
  write_report(run_experiment(c2), c2);
  int compared = 0;
  for (const auto& e : std::filesystem::directory_iterator(d1)) {
    if (e.path().extension() != ".csv") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(d2 / e.path().filename()), e.path().filename().string());
    ++compared;
  }
  CHECK(compared >= 4);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("experiment outcomes") {
  SUBCASE("all converge") {
    CHECK(run_experiment(parse_config(small_config())).all_converged());
  }
  SUBCASE("a starved budget is reported, not thrown") {
    json j = small_config();
    j["imf"]["max_outer_iters"] = 1;
    const ExperimentReport r = run_experiment(parse_config(j));
    CHECK(!r.all_converged());
    for (const auto& o : r.runs) CHECK(o.record.status == RunStatus::max_iters);
  }
  SUBCASE("gad and newton share the record format") {
    json j = small_config();
    j["method"] = "newton";
    const ExperimentReport rn = run_experiment(parse_config(j));
    CHECK(rn.all_converged());
    j["method"] = "gad";
    j["gad"] = {{"dt", 0.01}, {"max_steps", 20000}, {"tol", 1e-9}};
    const ExperimentReport rg = run_experiment(parse_config(j));
    CHECK(rg.all_converged());
    for (const auto& o : rg.runs) CHECK(o.record.iterations.back().grad_norm <= 1e-9);
  }
}

TEST_CASE("bench presets are known") {
  const auto names = bench_presets();
  for (const char* n : {"table1", "table2", "table3", "table4", "table5", "fig2"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(bench_experiments("table1").size() == 6);
  CHECK_THROWS_AS(bench_experiments("table9"), ContractError);
}

TEST_CASE("invariant suite passes") {
  const auto results = run_invariant_checks();
  CHECK(!results.empty());
  for (const auto& r : results) CHECK_MESSAGE(r.passed, r.name << " worst " << r.worst << " tol " << r.tolerance);
  CHECK(all_passed(results));
}
