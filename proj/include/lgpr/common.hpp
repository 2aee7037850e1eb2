#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lgpr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Point sets (one point per row) are stored row-major so a row is a contiguous span.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected length " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// Column split of an extended input: observed columns first, then one latent
// coordinate per mixture component.
struct Layout {
  std::size_t observed = 0;
  std::size_t latent = 0;

  std::size_t extended() const { return observed + latent; }
  bool operator==(const Layout&) const = default;
};

}  // namespace lgpr
