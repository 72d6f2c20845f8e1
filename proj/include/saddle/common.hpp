#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saddle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a caller violates an operation's preconditions (dimension
/// mismatch, invalid parameters, coefficient conditions).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver cannot deliver its postcondition.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

inline void require_dimension(Eigen::Index got, Eigen::Index want, const char* where) {
  if (got != want) {
    throw ContractError(std::string(where) + ": dimension mismatch (got " + std::to_string(got) + ", expected " +
                        std::to_string(want) + ")");
  }
}

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace saddle
