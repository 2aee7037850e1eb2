#include "lgpr/objective.hpp"

#include "lgpr/parallel.hpp"
#include "mc_samples.hpp"

#include <cmath>

namespace lgpr {

std::string to_string(PsiMode mode) {
  return mode == PsiMode::Analytic ? "analytic" : "mc";
}

PsiMode psi_mode_from_string(const std::string& name) {
  if (name == "mc") return PsiMode::MonteCarlo;
  if (name == "analytic") return PsiMode::Analytic;
  throw Error("unknown statistics mode '" + name + "' (expected mc or analytic)");
}

Objective::Objective(Matrix X, Matrix Y, const KernelSpec& spec, std::size_t latent,
                     std::size_t inducing, PsiMode mode, std::size_t samples)
    : X_(std::move(X)),
      Y_(std::move(Y)),
      spec_(spec),
      layout_{static_cast<std::size_t>(X_.cols()), latent},
      inducing_(inducing),
      mode_(mode),
      samples_(samples) {
  if (X_.rows() != Y_.rows()) throw DimensionError("output rows", X_.rows(), Y_.rows());
  if (inducing_ == 0) throw Error("inducing count must be at least 1");
  if (inducing_ > static_cast<std::size_t>(X_.rows())) {
    throw Error("inducing count " + std::to_string(inducing_) + " exceeds data count " +
                std::to_string(X_.rows()));
  }
  if (samples_ == 0) throw Error("sample count must be at least 1");
  const Kernel kernel(spec_, layout_);
  if (mode_ == PsiMode::Analytic) {
    double variance = 0.0;
    Vector lengthscale;
    detail::analytic_se_params(spec_, layout_, variance, lengthscale);
  }
  num_kernel_params_ = kernel.num_params();

  const std::size_t N = static_cast<std::size_t>(X_.rows());
  const std::size_t L = layout_.latent;
  std::size_t at = 0;
  auto add = [&](std::string name, std::size_t count) {
    groups_.push_back({std::move(name), at, count});
    at += count;
  };
  add("log_hyperparameters", num_kernel_params_);
  add("log_noise", 1);
  add("latent_mean", N * L);
  add("latent_log_variance", N * L);
  add("inducing_inputs", inducing_ * layout_.extended());
  size_ = at;
}

Vector Objective::pack(const KernelSpec& spec, const VariationalState& state) const {
  state.validate();
  if (state.layout != layout_) throw Error("state layout does not match the objective");
  if (state.num_points() != static_cast<std::size_t>(X_.rows())) {
    throw DimensionError("state rows", X_.rows(), state.num_points());
  }
  if (state.num_inducing() != inducing_) {
    throw DimensionError("inducing rows", inducing_, state.num_inducing());
  }
  const Kernel kernel(spec, layout_);
  Vector theta(size_);
  const auto logs = kernel.log_params();
  for (std::size_t p = 0; p < logs.size(); ++p) theta(static_cast<Eigen::Index>(p)) = logs[p];
  theta(static_cast<Eigen::Index>(groups_[1].begin)) = std::log(state.noise_var);

  const auto D = static_cast<Eigen::Index>(layout_.observed);
  const auto L = static_cast<Eigen::Index>(layout_.latent);
  auto at = static_cast<Eigen::Index>(groups_[2].begin);
  for (Eigen::Index i = 0; i < state.mu.rows(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) theta(at++) = state.mu(i, D + l);
  }
  for (Eigen::Index i = 0; i < state.mu.rows(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) theta(at++) = std::log(state.s(i, D + l));
  }
  for (Eigen::Index m = 0; m < state.Z.rows(); ++m) {
    for (Eigen::Index q = 0; q < state.Z.cols(); ++q) theta(at++) = state.Z(m, q);
  }
  return theta;
}

KernelSpec Objective::unpack_kernel(const Vector& theta) const {
  Kernel kernel(spec_, layout_);
  kernel.set_log_params({theta.data(), num_kernel_params_});
  return kernel.spec();
}

VariationalState Objective::unpack_state(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != size_) {
    throw DimensionError("parameter vector", size_, theta.size());
  }
  const auto N = X_.rows();
  const auto D = static_cast<Eigen::Index>(layout_.observed);
  const auto L = static_cast<Eigen::Index>(layout_.latent);
  const auto Q = D + L;
  VariationalState state;
  state.layout = layout_;
  state.noise_var = std::exp(theta(static_cast<Eigen::Index>(groups_[1].begin)));
  state.mu.resize(N, Q);
  state.s = Matrix::Zero(N, Q);
  state.mu.leftCols(D) = X_;
  auto at = static_cast<Eigen::Index>(groups_[2].begin);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index l = 0; l < L; ++l) state.mu(i, D + l) = theta(at++);
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index l = 0; l < L; ++l) state.s(i, D + l) = std::exp(theta(at++));
  }
  state.Z.resize(static_cast<Eigen::Index>(inducing_), Q);
  for (Eigen::Index m = 0; m < state.Z.rows(); ++m) {
    for (Eigen::Index q = 0; q < Q; ++q) state.Z(m, q) = theta(at++);
  }
  return state;
}

double Objective::evaluate(const Vector& theta, double alpha, std::uint64_t seed,
                           Vector* grad) const {
  Kernel kernel(spec_, layout_);
  kernel.set_log_params({theta.data(), num_kernel_params_});
  const VariationalState state = unpack_state(theta);
  if (grad) grad->setZero(static_cast<Eigen::Index>(size_));
  return mode_ == PsiMode::Analytic ? evaluate_analytic(kernel, state, alpha, grad)
                                    : evaluate_mc(kernel, state, alpha, seed, grad);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Writes the KL contribution and the gradient blocks that follow the kernel
// parameters into grad.
void add_state_gradient(const VariationalState& state, const Matrix& d_mu_latent,
                        const Matrix& d_logs_latent, const Matrix& d_Z, double d_noise_var,
                        std::size_t noise_at, Vector& grad) {
  const auto D = static_cast<Eigen::Index>(state.layout.observed);
  const auto L = static_cast<Eigen::Index>(state.layout.latent);
  grad(static_cast<Eigen::Index>(noise_at)) += state.noise_var * d_noise_var;
  auto at = static_cast<Eigen::Index>(noise_at) + 1;
  for (Eigen::Index i = 0; i < state.mu.rows(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) grad(at++) += d_mu_latent(i, l) - state.mu(i, D + l);
  }
  for (Eigen::Index i = 0; i < state.mu.rows(); ++i) {
    for (Eigen::Index l = 0; l < L; ++l) {
      grad(at++) += d_logs_latent(i, l) - 0.5 * (state.s(i, D + l) - 1.0);
    }
  }
  for (Eigen::Index m = 0; m < d_Z.rows(); ++m) {
    for (Eigen::Index q = 0; q < d_Z.cols(); ++q) grad(at++) += d_Z(m, q);
  }
}

// Gradient w.r.t. kernel-space latent columns back to raw coordinates.
void unmap_latents(PointMatrix& d, const Matrix& raw, const Layout& layout, LatentMap map) {
  if (map != LatentMap::Softplus) return;
  const auto D = static_cast<Eigen::Index>(layout.observed);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index q = D; q < d.cols(); ++q) d(i, q) *= sigmoid(raw(i, q));
  }
}

}  // namespace

double Objective::evaluate_mc(const Kernel& kernel, const VariationalState& state, double alpha,
                              std::uint64_t seed, Vector* grad) const {
  const LatentMap map = latent_map_for(spec_);
  const PointMatrix Zk = to_kernel_inputs(state.Z, layout_, map);
  const auto samples =
      detail::evaluate_samples(kernel, state.mu, state.s, Zk, map, samples_, alpha, seed);
  const PsiStats stats = detail::reduce_first_moments(samples);
  const Vector beta = (state.noise_var + stats.noise_diag.array()).inverse().matrix();
  const Matrix phi = detail::weighted_second_moment(samples, beta);
  const Matrix Kuu = kernel.cross(Zk, Zk, alpha, SameMode::Never);
  const auto cb = detail::collapsed_bound(Y_, stats.psi1, phi, stats.smooth_diag, beta, Kuu,
                                          grad != nullptr);
  const double value = cb.value - kl_term(state);
  if (!grad) return value;

  const std::size_t T = samples_;
  const double inv_t = 1.0 / static_cast<double>(T);
  const auto N = state.mu.rows();
  const auto M = Zk.rows();
  const auto Q = static_cast<Eigen::Index>(layout_.extended());
  const auto D = static_cast<Eigen::Index>(layout_.observed);
  const auto L = static_cast<Eigen::Index>(layout_.latent);
  const std::size_t H = num_kernel_params_;

  // beta enters directly and through phi.
  Vector g_beta = cb.d_beta;
  std::vector<Matrix> kg(T);
  parallel_for(T, [&](std::size_t t) { kg[t] = samples.kfu[t] * cb.d_psi2; });
  for (std::size_t t = 0; t < T; ++t) {
    g_beta += inv_t * (kg[t].array() * samples.kfu[t].array()).rowwise().sum().matrix();
  }
  // beta_i = 1 / (noise_var + rho_i)
  const Vector g_var = -(beta.array().square() * g_beta.array()).matrix();
  const double g_noise = g_var.sum();
  const Vector g_total = inv_t * g_var;
  const Vector g_smooth = inv_t * (cb.d_smooth_diag - g_var);

  std::vector<std::vector<double>> d_params(T, std::vector<double>(H, 0.0));
  std::vector<Matrix> d_mu(T), d_logs(T);
  std::vector<PointMatrix> d_z(T);
  parallel_for(T, [&](std::size_t t) {
    const Matrix G = inv_t * (cb.d_psi1 + 2.0 * beta.asDiagonal() * kg[t]);
    PointMatrix dX = PointMatrix::Zero(N, Q);
    d_z[t] = PointMatrix::Zero(M, Q);
    kernel.cross_vjp(samples.inputs[t], Zk, alpha, SameMode::Never, G, d_params[t], &dX, &d_z[t]);
    kernel.diagonal_vjp(samples.inputs[t], alpha, true, g_total, d_params[t], &dX);
    kernel.diagonal_vjp(samples.inputs[t], alpha, false, g_smooth, d_params[t], &dX);
    unmap_latents(dX, samples.raw[t], layout_, map);
    d_mu[t].resize(N, L);
    d_logs[t].resize(N, L);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index l = 0; l < L; ++l) {
        const double g = dX(i, D + l);
        d_mu[t](i, l) = g;
        // x = mu + exp(logs / 2) * eps
        d_logs[t](i, l) = g * 0.5 * std::sqrt(state.s(i, D + l)) * samples.eps[t](i, l);
      }
    }
  });

  std::vector<double> dp(H, 0.0);
  Matrix mu_total = Matrix::Zero(N, L);
  Matrix logs_total = Matrix::Zero(N, L);
  PointMatrix dZk = PointMatrix::Zero(M, Q);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t p = 0; p < H; ++p) dp[p] += d_params[t][p];
    mu_total += d_mu[t];
    logs_total += d_logs[t];
    dZk += d_z[t];
  }
  kernel.cross_vjp(Zk, Zk, alpha, SameMode::Never, cb.d_kuu, dp, &dZk, &dZk);
  unmap_latents(dZk, state.Z, layout_, map);

  for (std::size_t p = 0; p < H; ++p) (*grad)(static_cast<Eigen::Index>(p)) += dp[p];
  add_state_gradient(state, mu_total, logs_total, Matrix(dZk), g_noise, groups_[1].begin, *grad);
  return value;
}

double Objective::evaluate_analytic(const Kernel& kernel, const VariationalState& state,
                                    double alpha, Vector* grad) const {
  double variance = 0.0;
  Vector lengthscale;
  detail::analytic_se_params(kernel.spec(), layout_, variance, lengthscale);
  const auto se = detail::se_statistics(state.mu, state.s, state.Z, variance, lengthscale);
  const auto N = state.mu.rows();
  const double beta0 = 1.0 / state.noise_var;
  const Vector beta = Vector::Constant(N, beta0);
  const Vector smooth = Vector::Constant(N, variance);
  const PointMatrix Zk = state.Z;
  const Matrix Kuu = kernel.cross(Zk, Zk, alpha, SameMode::Never);
  const auto cb =
      detail::collapsed_bound(Y_, se.psi1, beta0 * se.psi2, smooth, beta, Kuu, grad != nullptr);
  const double value = cb.value - kl_term(state);
  if (!grad) return value;

  const auto Q = static_cast<Eigen::Index>(layout_.extended());
  const auto L = static_cast<Eigen::Index>(layout_.latent);
  const auto M = Zk.rows();
  const double g_beta = cb.d_beta.sum() + (cb.d_psi2.array() * se.psi2.array()).sum();
  const double g_noise = -beta0 * beta0 * g_beta;

  double d_log_variance = cb.d_smooth_diag.sum() * variance;
  Vector d_log_lengthscale = Vector::Zero(Q);
  Matrix d_mu = Matrix::Zero(N, Q);
  Matrix d_s = Matrix::Zero(N, Q);
  Matrix d_Z = Matrix::Zero(M, Q);
  detail::se_statistics_vjp(state.mu, state.s, state.Z, variance, lengthscale, 0.0, cb.d_psi1,
                            beta0 * cb.d_psi2, d_log_variance, d_log_lengthscale, d_mu, d_s, d_Z);

  std::vector<double> dp(num_kernel_params_, 0.0);
  PointMatrix dZk = PointMatrix::Zero(M, Q);
  kernel.cross_vjp(Zk, Zk, alpha, SameMode::Never, cb.d_kuu, dp, &dZk, &dZk);
  dp[0] += d_log_variance;
  for (Eigen::Index q = 0; q < Q; ++q) dp[static_cast<std::size_t>(q) + 1] += d_log_lengthscale(q);
  d_Z += Matrix(dZk);

  const Matrix d_logs = (d_s.rightCols(L).array() * state.s.rightCols(L).array()).matrix();
  for (std::size_t p = 0; p < dp.size(); ++p) (*grad)(static_cast<Eigen::Index>(p)) += dp[p];
  add_state_gradient(state, d_mu.rightCols(L), d_logs, d_Z, g_noise, groups_[1].begin, *grad);
  return value;
}

}  // namespace lgpr
