#pragma once

#include "lgpr/optimize.hpp"

#include <cstdint>
#include <vector>

namespace lgpr {

struct MixturePrediction {
  Vector x_star;
  std::vector<Vector> mean;    // per component, length P
  std::vector<Vector> stddev;  // per component, length P, includes likelihood noise
  Vector probability;          // per component

  // sum_l p_l mean_l
  Vector mixture_mean() const;
};

// rho_l = (sum_l' s_l') / s_l, normalised to sum to one.
Vector component_probabilities(const Vector& stddevs);

// Sparse-GP predictor for each component with the training latents snapped to
// their hard-assignment corners. The factorisations are computed once; all
// queries are const and may run concurrently.
class Predictor {
 public:
  explicit Predictor(const TrainedModel& model);

  std::size_t components() const { return layout_.latent; }
  std::size_t outputs() const { return static_cast<std::size_t>(C_.cols()); }
  std::size_t inputs() const { return layout_.observed; }

  // Predictive mean and standard deviation of component l at x_star, per output.
  std::pair<Vector, Vector> component_posterior(const Vector& x_star, std::size_t l) const;

  // Likelihood noise seen by component l at x_star: the shared noise plus any
  // white-noise term the component carries.
  double noise_variance(const Vector& x_star, std::size_t l) const;

  MixturePrediction predict(const Vector& x_star) const;

  // Ancestral draws: component by probability, then Gaussian per output.
  std::vector<Vector> sample(const Vector& x_star, std::size_t count, std::uint64_t seed) const;

 private:
  PointMatrix corner_point(const Vector& x_star, std::size_t l) const;

  Kernel kernel_;
  Layout layout_;
  double alpha_;
  double noise_var_;
  PointMatrix Zk_;
  Matrix Li_;  // inverse Cholesky factor of K_uu
  Eigen::LLT<Matrix> A_;
  Matrix C_;   // A^{-1} Li K_uf B Y
};

std::pair<Vector, Vector> component_posterior(const TrainedModel& model, const Vector& x_star,
                                              std::size_t l);
MixturePrediction predict_mixture(const TrainedModel& model, const Vector& x_star);
std::vector<Vector> sample_posterior(const TrainedModel& model, const Vector& x_star,
                                     std::size_t count, std::uint64_t seed);

}  // namespace lgpr
