// Command-line front end: run / doa / bench / check.

#include <fmt/core.h>

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "saddle/harness/bench.hpp"
#include "saddle/harness/check.hpp"
#include "saddle/harness/config.hpp"
#include "saddle/harness/doa.hpp"
#include "saddle/harness/experiment.hpp"
#include "saddle/harness/table.hpp"

using namespace saddle;
using namespace saddle::harness;

namespace {

void print_report(const ExperimentReport& rep) {
  fmt::print("{} [{} / {}]\n", rep.name, rep.problem, to_string(rep.method));
  for (const auto& r : rep.runs) {
    const auto& last = r.record.iterations.back();
    fmt::print("  run {:>3}: {:<11} iters {:>4}  |grad| {:.3e}  error {:.3e}  order {}  index {}  {:.2f}s{}\n", r.id,
               to_string(r.record.status), r.record.outer_iterations(), last.grad_norm, last.error,
               r.record.order ? fmt::format("{:.2f}", *r.record.order) : "-", r.record.terminal_index, r.seconds,
               r.record.message.empty() ? "" : "  (" + r.record.message + ")");
  }
}

int cmd_run(const std::string& path, const std::string& out, int threads) {
  ExperimentConfig cfg = load_config(path);
  if (!out.empty()) cfg.output.dir = out;
  if (threads >= 0) cfg.threads = threads;
  const ExperimentReport rep = run_experiment(cfg);
  write_report(rep, cfg);
  print_report(rep);
  return rep.all_converged() ? 0 : 1;
}

int cmd_doa(const std::string& path, const std::string& out, int threads) {
  ExperimentConfig cfg = load_config(path);
  if (!out.empty()) cfg.output.dir = out;
  if (threads >= 0) cfg.threads = threads;
  if (!cfg.doa) throw ContractError("config: a doa section is required for the doa command");
  if (cfg.method == Method::gad) throw ContractError("config: doa supports the imf and newton methods");
  const PotentialPtr p = make_builtin(cfg.problem, cfg.problem_params);
  auto saddles = cfg.imf.references.empty() ? known_points(*p, 1) : cfg.imf.references;
  const DoaMethod m = cfg.method == Method::imf ? DoaMethod::imf : DoaMethod::newton;
  NewtonConfig nc = cfg.newton;
  nc.max_iters = cfg.doa->budget;
  IMFConfig ic = cfg.imf;
  ic.max_outer_iters = cfg.doa->budget;
  const DoaGrid g = doa_scan(*p, m, *cfg.doa, saddles, ic, nc, cfg.threads);
  fmt::print("{}: {} x {} grid, {} labelled nodes\n", cfg.name, g.n, g.n, g.labeled_count());
  for (int id = 0; id < static_cast<int>(saddles.size()); ++id) {
    fmt::print("  saddle {}: {} nodes in {} component(s)\n", id, g.count(id), g.components(id));
  }
  if (!cfg.output.dir.empty()) {
    std::filesystem::create_directories(cfg.output.dir);
    std::ofstream grid(cfg.output.dir / "grid.csv");
    g.write_csv(grid);
    std::ofstream iters(cfg.output.dir / "iterations.csv");
    for (int j = 0; j < g.n; ++j) {
      for (int i = 0; i < g.n; ++i) iters << (i ? "," : "") << g.iterations[static_cast<std::size_t>(j * g.n + i)];
      iters << '\n';
    }
  }
  return 0;
}

int cmd_bench(const std::string& preset, const std::string& out, int threads) {
  const BenchResult res = run_bench(preset, out, threads < 0 ? 0 : threads);
  if (res.imf_grid) {
    fmt::print("fig2: IMF labels {} nodes, Newton labels {}\n", res.imf_grid->labeled_count(),
               res.newton_grid->labeled_count());
    for (int id = 0; id < 3; ++id) {
      fmt::print("  saddle {}: IMF {} nodes / {} component(s), Newton {} nodes / {} component(s)\n", id,
                 res.imf_grid->count(id), res.imf_grid->components(id), res.newton_grid->count(id),
                 res.newton_grid->components(id));
    }
  } else {
    for (const auto& r : res.reports) print_report(r);
    fmt::print("\n{}", render_table(res.columns(), TableFormat::markdown, res.labels()));
  }
  return res.ok() ? 0 : 1;
}

int cmd_check(std::uint64_t seed) {
  const auto results = run_invariant_checks(seed);
  for (const auto& r : results) {
    fmt::print("{} {}  (worst {:.3e}, tol {:.0e}){}\n", r.passed ? "PASS" : "FAIL", r.name, r.worst, r.tolerance,
               r.detail.empty() ? "" : "  " + r.detail);
  }
  return all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saddle point search by iterative minimization"};
  app.require_subcommand(1);
  std::string path, out, preset;
  int threads = -1;
  std::uint64_t seed = 2024;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", path, "JSON config file")->required();
  run->add_option("--out", out, "Output directory (overrides output.dir)");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* doa = app.add_subcommand("doa", "Domain-of-attraction grid scan");
  doa->add_option("config", path, "JSON config file with a doa section")->required();
  doa->add_option("--out", out, "Output directory (overrides output.dir)");
  doa->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* bench = app.add_subcommand("bench", "Reproduce a benchmark table or figure");
  bench->add_option("preset", preset, "table1 | table2 | table3 | table4 | table5 | fig2")
      ->required()
      ->check(CLI::IsMember(bench_presets()));
  bench->add_option("--out", out, "Output directory");
  bench->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* check = app.add_subcommand("check", "Invariant suite over the builtin surfaces");
  check->add_option("--seed", seed, "Seed for the random sample points");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(path, out, threads);
    if (*doa) return cmd_doa(path, out, threads);
    if (*bench) return cmd_bench(preset, out, threads);
    if (*check) return cmd_check(seed);
  } catch (const ContractError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "failure: {}\n", e.what());
    return 3;
  }
  return 0;
}
