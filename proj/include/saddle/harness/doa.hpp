#pragma once

#include <iosfwd>
#include <vector>

#include "saddle/harness/config.hpp"
#include "saddle/imf.hpp"

/**
 * \file doa.hpp
 *
 * @brief Domain-of-attraction scan of a 2-d surface: run a method from every
 * grid node and label the node by the index-1 saddle it reaches.
 */

namespace saddle::harness {

enum class DoaMethod { imf, newton };

struct DoaGrid {
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Zero();
  int n = 0;
  std::vector<int> labels;       ///< saddle id or -1, node (i, j) at j * n + i
  std::vector<int> iterations;   ///< outer iterations used per node

  /// Node (i, j): i along x, j along y, endpoints included. A 1x1 grid sits
  /// at the centre of the region.
  Eigen::Vector2d point(int i, int j) const;
  int label(int i, int j) const { return labels[static_cast<std::size_t>(j * n + i)]; }
  int labeled_count() const;
  int count(int id) const;
  /// Number of 4-connected components of the nodes carrying id.
  int components(int id) const;
  /// n x n label matrix; row j holds y = point(., j).y, ascending.
  void write_csv(std::ostream& out) const;
};

/**
 * @brief Scan the grid. A node is labelled by saddle s when the run
 * converges, the dense Hessian at the end has exactly one negative
 * eigenvalue and the end point lies within match_tol of saddles[s]. Any
 * failure leaves the node unlabelled. Nodes are processed in parallel;
 * results do not depend on the thread count.
 */
DoaGrid doa_scan(const Potential& p, DoaMethod method, const DoaSpec& spec, const std::vector<Vector>& saddles,
                 const IMFConfig& imf, const NewtonConfig& newton, int threads = 0, double match_tol = 1e-3);

/// IMF settings used for grid scans: box 0.25, exact inner solves and the
/// given per-node budget.
IMFConfig doa_imf_config(int budget);

}  // namespace saddle::harness
