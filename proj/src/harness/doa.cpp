#include "saddle/harness/doa.hpp"

#include <fmt/core.h>

#include <ostream>

#include "parallel.hpp"
#include "saddle/eigensolver.hpp"

namespace saddle::harness {

Eigen::Vector2d DoaGrid::point(int i, int j) const {
  if (n == 1) return 0.5 * (lo + hi);
  const double fx = static_cast<double>(i) / (n - 1);
  const double fy = static_cast<double>(j) / (n - 1);
  return {lo.x() + fx * (hi.x() - lo.x()), lo.y() + fy * (hi.y() - lo.y())};
}

int DoaGrid::labeled_count() const {
  int c = 0;
  for (int l : labels) c += l >= 0;
  return c;
}

int DoaGrid::count(int id) const {
  int c = 0;
  for (int l : labels) c += l == id;
  return c;
}

int DoaGrid::components(int id) const {
  std::vector<char> seen(labels.size(), 0);
  int comps = 0;
  std::vector<int> stack;
  for (int start = 0; start < n * n; ++start) {
    if (labels[static_cast<std::size_t>(start)] != id || seen[static_cast<std::size_t>(start)]) continue;
    ++comps;
    stack.push_back(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      const int i = c % n, j = c / n;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[0] >= n || q[1] < 0 || q[1] >= n) continue;
        const auto k = static_cast<std::size_t>(q[1] * n + q[0]);
        if (labels[k] == id && !seen[k]) {
          seen[k] = 1;
          stack.push_back(static_cast<int>(k));
        }
      }
    }
  }
  return comps;
}

void DoaGrid::write_csv(std::ostream& out) const {
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) out << (i ? "," : "") << label(i, j);
    out << '\n';
  }
}

IMFConfig doa_imf_config(int budget) {
  IMFConfig c;
  c.subsolve.box_radius = 0.25;
  c.max_outer_iters = budget;
  return c;
}

DoaGrid doa_scan(const Potential& p, DoaMethod method, const DoaSpec& spec, const std::vector<Vector>& saddles,
                 const IMFConfig& imf, const NewtonConfig& newton, int threads, double match_tol) {
  require(p.dimension() == 2, "doa_scan: the surface must be 2-dimensional");
  require(spec.n >= 1, "doa_scan: n must be positive");
  for (const auto& s : saddles) require_dimension(s.size(), 2, "doa_scan saddle");

  DoaGrid g;
  g.lo = spec.lo;
  g.hi = spec.hi;
  g.n = spec.n;
  const auto cells = static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.n);
  g.labels.assign(cells, -1);
  g.iterations.assign(cells, 0);

  IMFConfig c = imf;
  c.references.clear();
  c.verify_index = true;

  detail::parallel_for(cells, threads, [&](std::size_t k) {
    const int i = static_cast<int>(k) % spec.n, j = static_cast<int>(k) / spec.n;
    const Vector x0 = g.point(i, j);
    Vector xf;
    try {
      if (method == DoaMethod::imf) {
        const ConvergenceRecord rec = run(p, x0, c);
        g.iterations[k] = rec.outer_iterations();
        if (rec.status != RunStatus::converged || rec.terminal_index != 1) return;
        xf = rec.final_x();
      } else {
        const NewtonResult res = newton_stationary(p, x0, newton.tol, newton.max_iters, newton.max_step);
        g.iterations[k] = res.iterations;
        if (!res.converged || res.index != 1) return;
        xf = res.x;
      }
    } catch (const std::exception&) {
      return;
    }
    for (std::size_t s = 0; s < saddles.size(); ++s) {
      if ((xf - saddles[s]).norm() <= match_tol) {
        g.labels[k] = static_cast<int>(s);
        return;
      }
    }
  });
  return g;
}

}  // namespace saddle::harness
