#pragma once

#include "lgpr/common.hpp"

#include <string>

namespace lgpr {

// Cholesky factor of K + jitter * I. The jitter starts at 1e-9 of the mean
// diagonal and escalates by 10x up to 1e-4 of it before giving up. A factor
// whose estimated reciprocal condition number, times the size, is below
// kConditionFloor also counts as a failure: it succeeds but its solves lose
// most of their digits.
struct Cholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;

  Matrix solve(const Matrix& rhs) const { return llt.solve(rhs); }
  Matrix lower() const { return llt.matrixL(); }
  double log_det() const;
  Matrix inverse() const;
};

inline constexpr double kJitterRelative = 1e-9;
inline constexpr double kJitterRelativeMax = 1e-4;
inline constexpr double kConditionFloor = 1e-6;

// Throws Error(failure_message) when every jitter level fails.
Cholesky robust_cholesky(const Matrix& K, const std::string& failure_message);

}  // namespace lgpr
