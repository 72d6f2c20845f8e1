#pragma once

#include <cstdint>
#include <string>
#include <vector>

/**
 * \file check.hpp
 *
 * @brief Self-check over the builtin surfaces: finite-difference gradient
 * and Hessian checks, sign-flip invariance of L, projector idempotence,
 * stationarity transfer from V to L, and geodesic projection against brute
 * force.
 */

namespace saddle::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      ///< largest observed discrepancy
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> run_invariant_checks(std::uint64_t seed = 2024);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace saddle::harness
