#pragma once

// Small helpers shared by the unit tests: seeded random vectors and
// independent finite-difference oracles.

#include <functional>
#include <random>

#include "saddle/common.hpp"

namespace testing_support {

using saddle::Matrix;
using saddle::Vector;

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 7) : gen_(seed) {}

  Vector gaussian(Eigen::Index n, double sigma = 1.0) {
    std::normal_distribution<double> nd(0.0, sigma);
    Vector v(n);
    for (auto& c : v) c = nd(gen_);
    return v;
  }

  Vector unit(Eigen::Index n) {
    Vector v = gaussian(n);
    return v / v.norm();
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

 private:
  std::mt19937_64 gen_;
};

inline double rel_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

// Central differences of a scalar function, written out here rather than
// reusing the library's fd helpers so the oracle stays independent.
inline Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline Vector central_directional(const std::function<Vector(const Vector&)>& g, const Vector& x, const Vector& u,
                                  double h = 1e-5) {
  return (g(x + h * u) - g(x - h * u)) / (2.0 * h);
}

// Dense matrix of a linear map by applying it to the unit basis.
inline Matrix dense_of(const std::function<Vector(const Vector&)>& apply, Eigen::Index n) {
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) m.col(j) = apply(Vector::Unit(n, j));
  return m;
}

}  // namespace testing_support
