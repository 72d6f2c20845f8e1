#include "saddle/eigensolver.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace saddle {

namespace {

constexpr double kDropTol = 1e-10;
constexpr int kRefreshEvery = 25;

// Appends the columns of `cand` to `basis` after projection and two passes of
// modified Gram-Schmidt; columns that lose all but kDropTol of their norm are
// discarded. Returns the number of columns appended.
int append_orthonormal(Matrix& basis, Eigen::Index& used, const Matrix& cand, const Projector& proj) {
  int added = 0;
  for (Eigen::Index c = 0; c < cand.cols(); ++c) {
    Vector v = proj ? proj(cand.col(c)) : Vector(cand.col(c));
    const double n0 = v.norm();
    if (!(n0 > 0.0) || !std::isfinite(n0)) continue;
    v /= n0;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < used; ++j) v -= basis.col(j).dot(v) * basis.col(j);
    }
    const double n1 = v.norm();
    if (n1 < kDropTol) continue;
    basis.col(used++) = v / n1;
    ++added;
  }
  return added;
}

Matrix random_block(Eigen::Index dim, Eigen::Index cols, std::mt19937& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix r(dim, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) r(i, j) = normal(rng);
  }
  return r;
}

}  // namespace

MinModeResult lobpcg(const LinearOperator& apply_raw, Eigen::Index dim, int m, const MinModeOptions& opt) {
  const Eigen::Index eff = dim - opt.constraint_count;
  require(m >= 1, "min_modes: m must be positive");
  require(m <= eff, fmt::format("min_modes: m = {} exceeds the available dimension {}", m, eff));
  require(opt.tol > 0.0, "min_modes: tol must be positive");
  require(opt.guard >= 0, "min_modes: guard must be non-negative");

  const Projector& proj = opt.projector;
  auto apply = [&](const Vector& v) -> Vector { return proj ? proj(apply_raw(v)) : apply_raw(v); };
  const Eigen::Index k = std::min<Eigen::Index>(m + opt.guard, eff);

  std::mt19937 rng(opt.seed);

  // Initial block: warm-start columns first, random fill after.
  Matrix x(dim, k);
  Eigen::Index nx = 0;
  if (opt.warm_start.size() > 0) {
    require_dimension(opt.warm_start.rows(), dim, "min_modes warm start");
    Matrix seed = opt.warm_start.leftCols(std::min<Eigen::Index>(opt.warm_start.cols(), k));
    append_orthonormal(x, nx, seed, proj);
  }
  for (int attempt = 0; nx < k && attempt < 20; ++attempt) {
    Matrix fill = random_block(dim, k - nx, rng);
    append_orthonormal(x, nx, fill, proj);
  }
  if (nx < k) throw SolverError("min_modes: could not build an initial block in the projector range");

  Matrix ax(dim, k);
  for (Eigen::Index j = 0; j < k; ++j) ax.col(j) = apply(x.col(j));

  // Rayleigh-Ritz on the initial block.
  Vector theta;
  double scale = 0.0;
  {
    Matrix g = x.transpose() * ax;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    x = (x * es.eigenvectors()).eval();
    ax = (ax * es.eigenvectors()).eval();
    theta = es.eigenvalues();
    scale = theta.cwiseAbs().maxCoeff();
  }

  Matrix p;  // previous search directions
  double next_ritz = std::numeric_limits<double>::infinity();
  MinModeResult out;

  auto fill_result = [&](int iters) {
    out.eigenvalues.assign(theta.data(), theta.data() + m);
    out.eigenvectors = x.leftCols(m);
    out.residual_norms.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      out.residual_norms[static_cast<std::size_t>(i)] = (ax.col(i) - theta[i] * x.col(i)).norm();
    }
    out.iterations = iters;
    const double after = k > m ? theta[m] : next_ritz;
    out.gap = after - theta[m - 1];
    out.scale = scale;
    out.near_degenerate = false;
    for (int i = 0; i < m; ++i) {
      const double upper = i + 1 < k ? theta[i + 1] : next_ritz;
      if (upper - theta[i] < 1e-8 * scale) out.near_degenerate = true;
    }
  };

  for (int it = 0; it <= opt.max_iters; ++it) {
    if (it > 0 && it % kRefreshEvery == 0) {
      // Re-orthonormalise the block and refresh its image to stop drift.
      Matrix fresh(dim, k);
      Eigen::Index nf = 0;
      append_orthonormal(fresh, nf, x, proj);
      if (nf == k) {
        x = fresh;
        for (Eigen::Index j = 0; j < k; ++j) ax.col(j) = apply(x.col(j));
        Matrix g = x.transpose() * ax;
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        x = (x * es.eigenvectors()).eval();
        ax = (ax * es.eigenvectors()).eval();
        theta = es.eigenvalues();
      }
    }

    Matrix r = ax - x * theta.asDiagonal();
    bool converged = true;
    for (int i = 0; i < m; ++i) converged = converged && r.col(i).norm() <= opt.tol * scale;
    if (converged) {
      // Confirm against a freshly applied operator before returning.
      for (int i = 0; i < m; ++i) ax.col(i) = apply(x.col(i));
      r.leftCols(m) = ax.leftCols(m) - x.leftCols(m) * theta.head(m).asDiagonal();
      bool confirmed = true;
      for (int i = 0; i < m; ++i) confirmed = confirmed && r.col(i).norm() <= opt.tol * scale;
      if (confirmed) {
        fill_result(it);
        return out;
      }
    }
    if (it == opt.max_iters) break;

    // Search space [X, R, P].
    Matrix s(dim, 3 * k);
    Eigen::Index ns = 0;
    for (Eigen::Index j = 0; j < k; ++j) s.col(ns++) = x.col(j);
    append_orthonormal(s, ns, r, proj);
    if (p.cols() > 0) append_orthonormal(s, ns, p, proj);

    Matrix as(dim, ns);
    as.leftCols(k) = ax;
    for (Eigen::Index j = k; j < ns; ++j) as.col(j) = apply(s.col(j));

    Matrix g = s.leftCols(ns).transpose() * as;
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Vector& ritz = es.eigenvalues();
    const Matrix& c = es.eigenvectors();
    scale = std::max(scale, ritz.cwiseAbs().maxCoeff());
    next_ritz = ns > k ? ritz[k] : std::numeric_limits<double>::infinity();

    x = s.leftCols(ns) * c.leftCols(k);
    ax = as * c.leftCols(k);
    theta = ritz.head(k);
    if (ns > k) {
      p = s.middleCols(k, ns - k) * c.block(k, 0, ns - k, k);
    } else {
      p.resize(dim, 0);
    }
  }

  fill_result(opt.max_iters);
  throw MinModeError(fmt::format("min_modes: no convergence in {} iterations (residual {:.3e}, tol {:.3e})",
                                 opt.max_iters, *std::max_element(out.residual_norms.begin(), out.residual_norms.end()),
                                 opt.tol * scale),
                     out);
}

MinModeResult min_modes(const Potential& p, const Vector& x, int m, const MinModeOptions& opt) {
  require_dimension(x.size(), p.dimension(), "min_modes");
  return lobpcg([&](const Vector& u) { return p.hessian_vec(x, u); }, p.dimension(), m, opt);
}

int DenseSpectrum::negative_count(double tol) const {
  return static_cast<int>((eigenvalues.array() < -tol).count());
}

Matrix dense_hessian(const Potential& p, const Vector& x, Eigen::Index cap) {
  const Eigen::Index d = p.dimension();
  require(d <= cap, fmt::format("dense_hessian: dimension {} exceeds cap {}", d, cap));
  require_dimension(x.size(), d, "dense_hessian");
  Matrix h(d, d);
  Vector e = Vector::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    e[i] = 1.0;
    h.col(i) = p.hessian_vec(x, e);
    e[i] = 0.0;
  }
  return 0.5 * (h + h.transpose());
}

DenseSpectrum dense_eigensolve(const Potential& p, const Vector& x, Eigen::Index cap) {
  return dense_eigensolve(dense_hessian(p, x, cap));
}

DenseSpectrum dense_eigensolve(const Matrix& m, const Matrix& basis) {
  Matrix a = basis.size() > 0 ? Matrix(basis.transpose() * m * basis) : m;
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw SolverError("dense_eigensolve: decomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace saddle
