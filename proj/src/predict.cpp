#include "lgpr/predict.hpp"

#include "lgpr/linalg.hpp"

#include <cmath>
#include <random>

namespace lgpr {

Vector MixturePrediction::mixture_mean() const {
  Vector out = Vector::Zero(mean.empty() ? 0 : mean.front().size());
  for (std::size_t l = 0; l < mean.size(); ++l) {
    out += probability(static_cast<Eigen::Index>(l)) * mean[l];
  }
  return out;
}

Vector component_probabilities(const Vector& stddevs) {
  if (stddevs.size() == 0) throw Error("component probabilities need at least one stddev");
  for (Eigen::Index l = 0; l < stddevs.size(); ++l) {
    if (!(stddevs(l) > 0.0) || !std::isfinite(stddevs(l))) {
      throw Error("component stddev must be positive and finite, got " +
                  std::to_string(stddevs(l)) + " for component " + std::to_string(l));
    }
  }
  const Vector rho = stddevs.sum() * stddevs.cwiseInverse();
  return rho / rho.sum();
}

namespace {

// White-noise share of k(p, p).
double white_share(const Kernel& kernel, const PointMatrix& p, double alpha) {
  const std::span<const double> row(p.row(0).data(), static_cast<std::size_t>(p.cols()));
  return std::max(0.0, kernel(row, row, true, alpha) - kernel(row, row, false, alpha));
}

}  // namespace

Predictor::Predictor(const TrainedModel& model)
    : kernel_(model.spec, model.state.layout),
      layout_(model.state.layout),
      alpha_(model.alpha_final),
      noise_var_(model.state.noise_var) {
  model.state.validate();
  const auto N = model.X.rows();
  const auto D = static_cast<Eigen::Index>(layout_.observed);
  const auto Q = static_cast<Eigen::Index>(layout_.extended());
  if (model.X.cols() != D) throw DimensionError("training inputs", layout_.observed, model.X.cols());
  if (model.Y.rows() != N) throw DimensionError("training outputs", N, model.Y.rows());
  if (static_cast<Eigen::Index>(model.hard_assignments.size()) != N) {
    throw DimensionError("hard assignments", N, model.hard_assignments.size());
  }

  Zk_ = to_kernel_inputs(model.state.Z, layout_, latent_map_for(model.spec));
  PointMatrix train = PointMatrix::Zero(N, Q);
  train.leftCols(D) = model.X;
  Vector beta(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    if (layout_.latent > 0) train(i, D + model.hard_assignments[static_cast<std::size_t>(i)]) = 1.0;
    beta(i) = 1.0 / (noise_var_ + white_share(kernel_, train.row(i), alpha_));
  }

  const Matrix Kuu = kernel_.cross(Zk_, Zk_, alpha_, SameMode::Never);
  const Cholesky kuu = robust_cholesky(Kuu, "ill-conditioned inducing matrix");
  const auto M = Kuu.rows();
  Li_ = kuu.llt.matrixL().solve(Matrix::Identity(M, M));
  const Matrix Kfu = kernel_.cross(train, Zk_, alpha_, SameMode::Never);
  const Matrix V = Li_ * Kfu.transpose();  // M x N
  Matrix A = Matrix::Identity(M, M) + V * beta.asDiagonal() * V.transpose();
  A = 0.5 * (A + A.transpose());
  A_.compute(A);
  if (A_.info() != Eigen::Success) throw Error("ill-conditioned predictive system");
  C_ = A_.solve(V * beta.asDiagonal() * model.Y);
}

PointMatrix Predictor::corner_point(const Vector& x_star, std::size_t l) const {
  if (static_cast<std::size_t>(x_star.size()) != layout_.observed) {
    throw DimensionError("query input", layout_.observed, x_star.size());
  }
  const std::size_t L = layout_.latent;
  if (L > 0 && l >= L) throw Error("component " + std::to_string(l) + " out of range");
  PointMatrix p = PointMatrix::Zero(1, static_cast<Eigen::Index>(layout_.extended()));
  p.leftCols(x_star.size()) = x_star.transpose();
  if (L > 0) p(0, static_cast<Eigen::Index>(layout_.observed + l)) = 1.0;
  return p;
}

double Predictor::noise_variance(const Vector& x_star, std::size_t l) const {
  return noise_var_ + white_share(kernel_, corner_point(x_star, l), alpha_);
}

std::pair<Vector, Vector> Predictor::component_posterior(const Vector& x_star,
                                                         std::size_t l) const {
  const PointMatrix p = corner_point(x_star, l);
  const Vector ks = kernel_.cross(p, Zk_, alpha_, SameMode::Never).transpose();
  const Vector a = Li_ * ks;
  const Vector mean = C_.transpose() * a;
  const std::span<const double> row(p.row(0).data(), static_cast<std::size_t>(p.cols()));
  const double prior = kernel_(row, row, false, alpha_);
  const double var = prior - a.squaredNorm() + a.dot(A_.solve(a)) + noise_variance(x_star, l);
  const double sd = std::sqrt(std::max(var, 1e-300));
  return {mean, Vector::Constant(mean.size(), sd)};
}

MixturePrediction Predictor::predict(const Vector& x_star) const {
  const std::size_t L = std::max<std::size_t>(1, layout_.latent);
  MixturePrediction out;
  out.x_star = x_star;
  Vector rms(static_cast<Eigen::Index>(L));
  for (std::size_t l = 0; l < L; ++l) {
    auto [mean, sd] = component_posterior(x_star, l);
    rms(static_cast<Eigen::Index>(l)) = std::sqrt(sd.squaredNorm() / static_cast<double>(sd.size()));
    out.mean.push_back(std::move(mean));
    out.stddev.push_back(std::move(sd));
  }
  out.probability = component_probabilities(rms);
  return out;
}

std::vector<Vector> Predictor::sample(const Vector& x_star, std::size_t count,
                                      std::uint64_t seed) const {
  const MixturePrediction pred = predict(x_star);
  std::mt19937_64 gen(seed);
  std::discrete_distribution<std::size_t> pick(pred.probability.data(),
                                               pred.probability.data() + pred.probability.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t l = pick(gen);
    Vector y(pred.mean[l].size());
    for (Eigen::Index j = 0; j < y.size(); ++j) y(j) = pred.mean[l](j) + pred.stddev[l](j) * normal(gen);
    out.push_back(std::move(y));
  }
  return out;
}

std::pair<Vector, Vector> component_posterior(const TrainedModel& model, const Vector& x_star,
                                              std::size_t l) {
  return Predictor(model).component_posterior(x_star, l);
}

MixturePrediction predict_mixture(const TrainedModel& model, const Vector& x_star) {
  return Predictor(model).predict(x_star);
}

std::vector<Vector> sample_posterior(const TrainedModel& model, const Vector& x_star,
                                     std::size_t count, std::uint64_t seed) {
  return Predictor(model).sample(x_star, count, seed);
}

}  // namespace lgpr
