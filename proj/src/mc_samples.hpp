#pragma once

#include "lgpr/variational.hpp"

namespace lgpr::detail {

// Everything one Monte Carlo evaluation of the statistics touches, kept so the
// gradient pass can reuse the per-sample kernel matrices.
struct McSamples {
  std::vector<Matrix> eps;            // T x (N x L)
  std::vector<Matrix> raw;            // T x (N x Q)
  std::vector<PointMatrix> inputs;    // raw samples after the latent map
  std::vector<Matrix> kfu;            // T x (N x M)
  std::vector<Vector> total_diag;     // k(x, x) including white-noise terms
  std::vector<Vector> smooth_diag;    // k(x, x) without them
};

McSamples evaluate_samples(const Kernel& kernel, const Matrix& mu, const Matrix& s,
                           const PointMatrix& inducing_inputs, LatentMap map, std::size_t T,
                           double alpha, std::uint64_t seed);

// Means over samples: psi1, smooth/noise diagonals and xi. psi2 fields are
// left empty.
PsiStats reduce_first_moments(const McSamples& samples);

// (1/T) sum_t K_uf^t diag(weights) K_fu^t, reduced in sample order.
Matrix weighted_second_moment(const McSamples& samples, const Vector& weights);

}  // namespace lgpr::detail
