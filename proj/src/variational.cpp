#include "lgpr/variational.hpp"

#include "lgpr/linalg.hpp"
#include "lgpr/parallel.hpp"
#include "mc_samples.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lgpr {

void VariationalState::validate() const {
  const auto Q = static_cast<Eigen::Index>(layout.extended());
  if (mu.cols() != Q) throw DimensionError("variational mean columns", layout.extended(), mu.cols());
  if (s.rows() != mu.rows()) throw DimensionError("variational variance rows", mu.rows(), s.rows());
  if (s.cols() != Q) throw DimensionError("variational variance columns", layout.extended(), s.cols());
  if (Z.cols() != Q) throw DimensionError("inducing input columns", layout.extended(), Z.cols());
  if (Z.rows() > mu.rows()) {
    throw Error("inducing count " + std::to_string(Z.rows()) + " exceeds data count " +
                std::to_string(mu.rows()));
  }
  const auto D = static_cast<Eigen::Index>(layout.observed);
  if (D > 0 && (s.leftCols(D).array() != 0.0).any()) {
    throw Error("observed columns must carry zero variance");
  }
  if ((s.array() < 0.0).any()) throw Error("variational variances must be nonnegative");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw Error("noise variance must be positive");
}

LatentMap latent_map_for(const KernelSpec& spec) {
  return uses_simplex(spec) ? LatentMap::Softplus : LatentMap::Identity;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

PointMatrix to_kernel_inputs(const Matrix& raw, const Layout& layout, LatentMap map) {
  PointMatrix out = raw;
  if (map == LatentMap::Softplus) {
    const auto D = static_cast<Eigen::Index>(layout.observed);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index q = D; q < out.cols(); ++q) out(i, q) = softplus(out(i, q));
    }
  }
  return out;
}

std::vector<Matrix> draw_noise(std::size_t T, std::size_t N, std::size_t L, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> eps(T, Matrix(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(L)));
  for (auto& e : eps) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      for (Eigen::Index l = 0; l < e.cols(); ++l) e(i, l) = normal(gen);
    }
  }
  return eps;
}

namespace {

Matrix perturb(const Matrix& mu, const Matrix& s, const Matrix& eps, std::size_t observed) {
  Matrix x = mu;
  const auto D = static_cast<Eigen::Index>(observed);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index l = 0; l < eps.cols(); ++l) {
      x(i, D + l) += std::sqrt(s(i, D + l)) * eps(i, l);
    }
  }
  return x;
}

}  // namespace

std::vector<Matrix> sample_extended_inputs(const VariationalState& state, std::size_t T,
                                           std::uint64_t seed) {
  if (T == 0) throw Error("sample count must be at least 1");
  const auto eps = draw_noise(T, state.num_points(), state.layout.latent, seed);
  std::vector<Matrix> out;
  out.reserve(T);
  for (const auto& e : eps) out.push_back(perturb(state.mu, state.s, e, state.layout.observed));
  return out;
}

namespace detail {

McSamples evaluate_samples(const Kernel& kernel, const Matrix& mu, const Matrix& s,
                           const PointMatrix& inducing_inputs, LatentMap map, std::size_t T,
                           double alpha, std::uint64_t seed) {
  if (T == 0) throw Error("sample count must be at least 1");
  const Layout& layout = kernel.layout();
  McSamples out;
  out.eps = draw_noise(T, static_cast<std::size_t>(mu.rows()), layout.latent, seed);
  out.raw.resize(T);
  out.inputs.resize(T);
  out.kfu.resize(T);
  out.total_diag.resize(T);
  out.smooth_diag.resize(T);
  parallel_for(T, [&](std::size_t t) {
    out.raw[t] = perturb(mu, s, out.eps[t], layout.observed);
    out.inputs[t] = to_kernel_inputs(out.raw[t], layout, map);
    out.kfu[t] = kernel.cross(out.inputs[t], inducing_inputs, alpha, SameMode::Never);
    out.total_diag[t] = kernel.diagonal(out.inputs[t], alpha, true);
    out.smooth_diag[t] = kernel.diagonal(out.inputs[t], alpha, false);
  });
  return out;
}

PsiStats reduce_first_moments(const McSamples& samples) {
  const double inv_t = 1.0 / static_cast<double>(samples.kfu.size());
  PsiStats stats;
  stats.psi1 = Matrix::Zero(samples.kfu.front().rows(), samples.kfu.front().cols());
  stats.smooth_diag = Vector::Zero(samples.kfu.front().rows());
  stats.noise_diag = Vector::Zero(samples.kfu.front().rows());
  double trace = 0.0;
  for (std::size_t t = 0; t < samples.kfu.size(); ++t) {
    stats.psi1 += samples.kfu[t];
    stats.smooth_diag += samples.smooth_diag[t];
    stats.noise_diag += samples.total_diag[t] - samples.smooth_diag[t];
    trace += samples.total_diag[t].sum();
  }
  stats.psi1 *= inv_t;
  stats.smooth_diag *= inv_t;
  stats.noise_diag *= inv_t;
  stats.xi = trace * inv_t;
  return stats;
}

Matrix weighted_second_moment(const McSamples& samples, const Vector& weights) {
  const std::size_t T = samples.kfu.size();
  std::vector<Matrix> parts(T);
  parallel_for(T, [&](std::size_t t) {
    const Matrix& K = samples.kfu[t];
    parts[t] = K.transpose() * weights.asDiagonal() * K;
  });
  Matrix total = Matrix::Zero(samples.kfu.front().cols(), samples.kfu.front().cols());
  for (const auto& p : parts) total += p;
  return total / static_cast<double>(T);
}

CollapsedBound collapsed_bound(const Matrix& Y, const Matrix& psi1, const Matrix& psi2_weighted,
                               const Vector& smooth_diag, const Vector& beta, const Matrix& Kuu,
                               bool with_adjoints) {
  const auto N = Y.rows();
  const auto P = static_cast<double>(Y.cols());
  const auto M = Kuu.rows();
  if (psi1.rows() != N) throw DimensionError("psi1 rows", N, psi1.rows());
  if (psi1.cols() != M) throw DimensionError("psi1 columns", M, psi1.cols());
  if (psi2_weighted.rows() != M) throw DimensionError("psi2 rows", M, psi2_weighted.rows());

  const Cholesky kuu = robust_cholesky(Kuu, "ill-conditioned inducing matrix");
  const Matrix Li = kuu.llt.matrixL().solve(Matrix::Identity(M, M));
  Matrix inner = Li * psi2_weighted * Li.transpose();
  inner = 0.5 * (inner + inner.transpose());
  Matrix A = Matrix::Identity(M, M) + inner;
  const Eigen::LLT<Matrix> a_llt(A);
  if (a_llt.info() != Eigen::Success) throw Error("ill-conditioned inducing matrix");
  double log_det_a = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) log_det_a += 2.0 * std::log(a_llt.matrixLLT()(i, i));

  const Matrix BY = beta.asDiagonal() * Y;
  const Matrix W = psi1.transpose() * BY;                        // M x P
  const Matrix CW = Li.transpose() * a_llt.solve(Li * W);        // A^{-1} W

  double value = -0.5 * static_cast<double>(N) * P * std::log(2.0 * std::numbers::pi);
  value += 0.5 * P * beta.array().log().sum();
  value -= 0.5 * P * log_det_a;
  value -= 0.5 * (beta.array() * Y.rowwise().squaredNorm().array()).sum();
  value += 0.5 * (W.array() * CW.array()).sum();
  value -= 0.5 * P * (beta.array() * smooth_diag.array()).sum();
  value += 0.5 * P * (inner.trace());

  CollapsedBound out;
  out.value = value;
  if (!with_adjoints) return out;

  const Matrix A_inv = a_llt.solve(Matrix::Identity(M, M));
  const Matrix I = Matrix::Identity(M, M);
  const Matrix outer = CW * CW.transpose();
  out.d_psi2 = Li.transpose() * (0.5 * P * (I - A_inv)) * Li - 0.5 * outer;
  out.d_kuu = Li.transpose() * (0.5 * P * (2.0 * I - A - A_inv)) * Li - 0.5 * outer;
  out.d_psi2 = 0.5 * (out.d_psi2 + out.d_psi2.transpose());
  out.d_kuu = 0.5 * (out.d_kuu + out.d_kuu.transpose());
  // The jitter is proportional to the mean diagonal, so it moves with Kuu too.
  const double diag_mean = M > 0 ? Kuu.diagonal().mean() : 0.0;
  if (diag_mean > 0.0 && kuu.jitter > 0.0) {
    const double rel = kuu.jitter / diag_mean;
    out.d_kuu.diagonal().array() += rel / static_cast<double>(M) * out.d_kuu.trace();
  }
  out.d_psi1 = BY * CW.transpose();
  out.d_smooth_diag = -0.5 * P * beta;
  const Matrix fitted = psi1 * CW;  // N x P
  out.d_beta = (0.5 * P / beta.array()) - 0.5 * Y.rowwise().squaredNorm().array() -
               0.5 * P * smooth_diag.array() + (fitted.array() * Y.array()).rowwise().sum();
  return out;
}

}  // namespace detail

PsiStats psi_monte_carlo(const KernelSpec& spec, const VariationalState& state, std::size_t T,
                         double alpha, std::uint64_t seed) {
  state.validate();
  const Kernel kernel(spec, state.layout);
  const LatentMap map = latent_map_for(spec);
  const PointMatrix Zk = to_kernel_inputs(state.Z, state.layout, map);
  const auto samples =
      detail::evaluate_samples(kernel, state.mu, state.s, Zk, map, T, alpha, seed);
  PsiStats stats = detail::reduce_first_moments(samples);
  stats.psi2 = detail::weighted_second_moment(samples, Vector::Ones(state.mu.rows()));
  const Vector beta = (state.noise_var + stats.noise_diag.array()).inverse().matrix();
  stats.psi2_weighted = detail::weighted_second_moment(samples, beta);
  return stats;
}

double kl_term(const VariationalState& state) {
  const auto L = static_cast<Eigen::Index>(state.layout.latent);
  if (L == 0) return 0.0;
  const auto mu = state.mu.rightCols(L).array();
  const auto s = state.s.rightCols(L).array();
  return 0.5 * (s + mu.square() - 1.0 - s.log()).sum();
}

double bound_data_term(const Matrix& Y, const PsiStats& stats, const VariationalState& state,
                       const KernelSpec& spec, double alpha) {
  state.validate();
  if (Y.rows() != state.mu.rows()) throw DimensionError("output rows", state.mu.rows(), Y.rows());
  const Kernel kernel(spec, state.layout);
  const PointMatrix Zk = to_kernel_inputs(state.Z, state.layout, latent_map_for(spec));
  const Matrix Kuu = kernel.cross(Zk, Zk, alpha, SameMode::Never);
  const Vector noise = stats.noise_diag.size() == Y.rows() ? stats.noise_diag
                                                           : Vector::Zero(Y.rows());
  const Vector beta = (state.noise_var + noise.array()).inverse().matrix();
  const Matrix& psi2w = stats.psi2_weighted.size() > 0 ? stats.psi2_weighted : stats.psi2;
  const Matrix weighted = stats.psi2_weighted.size() > 0 ? psi2w : Matrix(psi2w / state.noise_var);
  const Vector smooth = stats.smooth_diag.size() == Y.rows()
                            ? stats.smooth_diag
                            : Vector::Constant(Y.rows(), stats.xi / static_cast<double>(Y.rows()));
  return detail::collapsed_bound(Y, stats.psi1, weighted, smooth, beta, Kuu, false).value;
}

double lower_bound(const Matrix& Y, const PsiStats& stats, const VariationalState& state,
                   const KernelSpec& spec, double alpha) {
  return bound_data_term(Y, stats, state, spec, alpha) - kl_term(state);
}

}  // namespace lgpr
