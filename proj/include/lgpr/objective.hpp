#pragma once

#include "lgpr/variational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lgpr {

enum class PsiMode { MonteCarlo, Analytic };

std::string to_string(PsiMode mode);
PsiMode psi_mode_from_string(const std::string& name);

// A contiguous slice of the packed parameter vector.
struct ParamGroup {
  std::string name;
  std::size_t begin = 0;
  std::size_t count = 0;
};

// The collapsed bound as a function of one flat parameter vector:
//   [kernel log-hyperparameters] [log noise] [latent means N x L]
//   [latent log-variances N x L] [inducing inputs M x Q]
// Matrices are packed row by row. The observed columns of the means are the
// data and are not parameters.
class Objective {
 public:
  Objective(Matrix X, Matrix Y, const KernelSpec& spec, std::size_t latent, std::size_t inducing,
            PsiMode mode, std::size_t samples);

  std::size_t size() const { return size_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const Layout& layout() const { return layout_; }
  PsiMode mode() const { return mode_; }
  std::size_t samples() const { return samples_; }
  const Matrix& outputs() const { return Y_; }

  Vector pack(const KernelSpec& spec, const VariationalState& state) const;
  KernelSpec unpack_kernel(const Vector& theta) const;
  VariationalState unpack_state(const Vector& theta) const;

  // Bound (data term minus KL) with the Monte Carlo draws fixed by seed. When
  // grad is non-null it receives the exact gradient of that sampled bound.
  double evaluate(const Vector& theta, double alpha, std::uint64_t seed, Vector* grad) const;

 private:
  double evaluate_mc(const Kernel& kernel, const VariationalState& state, double alpha,
                     std::uint64_t seed, Vector* grad) const;
  double evaluate_analytic(const Kernel& kernel, const VariationalState& state, double alpha,
                           Vector* grad) const;

  Matrix X_;
  Matrix Y_;
  KernelSpec spec_;
  Layout layout_;
  std::size_t inducing_;
  PsiMode mode_;
  std::size_t samples_;
  std::size_t num_kernel_params_ = 0;
  std::size_t size_ = 0;
  std::vector<ParamGroup> groups_;
};

}  // namespace lgpr
