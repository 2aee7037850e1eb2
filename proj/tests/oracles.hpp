#pragma once

// Reference computations the library results are checked against. Written
// directly from the textbook definitions and kept free of library internals.

#include <lgpr/kernels.hpp>
#include <lgpr/variational.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double se(const Vector& a, const Vector& b, double variance, const Vector& lengthscale) {
  double r2 = 0.0;
  for (Eigen::Index q = 0; q < a.size(); ++q) {
    const double d = (a(q) - b(q)) / lengthscale(q);
    r2 += d * d;
  }
  return variance * std::exp(-0.5 * r2);
}

inline Matrix se_gram(const Matrix& A, const Matrix& B, double variance, const Vector& lengthscale) {
  Matrix K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = se(A.row(i).transpose(), B.row(j).transpose(), variance, lengthscale);
    }
  }
  return K;
}

// sum over output columns of log N(y_d | 0, K + noise I)
inline double dense_log_marginal(const Matrix& K, const Matrix& Y, double noise) {
  const Eigen::Index n = K.rows();
  Matrix C = K;
  C.diagonal().array() += noise;
  const Eigen::LLT<Matrix> llt(C);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const Matrix alpha = llt.solve(Y);
  const double fit = (Y.array() * alpha.array()).sum();
  return -0.5 * fit - 0.5 * static_cast<double>(Y.cols()) * log_det -
         0.5 * static_cast<double>(n * Y.cols()) * std::log(2.0 * std::numbers::pi);
}

inline double min_eigenvalue(const Matrix& K) {
  const Matrix S = 0.5 * (K + K.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Physicists' Gauss-Hermite rule by Golub-Welsch.
struct HermiteRule {
  Vector nodes;
  Vector weights;
};

inline HermiteRule gauss_hermite(int n) {
  Matrix J = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i) / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
  HermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = std::sqrt(std::numbers::pi) * eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

// E[f(x)], x ~ N(mean, var), on a tensor grid of Gauss-Hermite nodes.
inline double gaussian_expectation(const std::function<double(const Vector&)>& f, const Vector& mean,
                                   const Vector& var, const HermiteRule& rule) {
  const Eigen::Index Q = mean.size();
  const Eigen::Index n = rule.nodes.size();
  std::vector<Eigen::Index> index(static_cast<std::size_t>(Q), 0);
  double total = 0.0;
  Vector x(Q);
  for (;;) {
    double w = 1.0;
    for (Eigen::Index q = 0; q < Q; ++q) {
      const auto k = index[static_cast<std::size_t>(q)];
      x(q) = mean(q) + std::sqrt(2.0 * var(q)) * rule.nodes(k);
      w *= rule.weights(k) / std::sqrt(std::numbers::pi);
    }
    total += w * f(x);
    Eigen::Index q = 0;
    while (q < Q && ++index[static_cast<std::size_t>(q)] == n) index[static_cast<std::size_t>(q++)] = 0;
    if (q == Q) break;
  }
  return total;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Random kernel from the grammar over observed columns, depth-limited.
inline lgpr::KernelSpec random_observed_kernel(std::mt19937_64& gen, std::size_t D, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 4 : 2);
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  switch (pick(gen)) {
    case 0: {
      std::vector<double> ls(D);
      for (auto& l : ls) l = pos(gen);
      return lgpr::KernelSpec::squared_exponential(pos(gen), ls);
    }
    case 1: return lgpr::KernelSpec::linear(pos(gen));
    case 2: return lgpr::KernelSpec::white_noise(pos(gen));
    case 3:
      return lgpr::KernelSpec::sum({random_observed_kernel(gen, D, depth - 1),
                                    random_observed_kernel(gen, D, depth - 1)});
    default:
      return lgpr::KernelSpec::product({random_observed_kernel(gen, D, depth - 1),
                                        random_observed_kernel(gen, D, depth - 1)});
  }
}


// Monte Carlo statistics rebuilt from the library's own draws for a single SE
// kernel over every column: the sample mean, its standard error per entry, and
// the deviation from the library estimate computed from the same draws.
struct McOracle {
  Matrix psi1_mean, psi1_se;
  Matrix psi2_mean, psi2_se;
  double xi_mean = 0.0, xi_se = 0.0;
  double psi1_library_gap = 0.0, psi2_library_gap = 0.0;
};

inline McOracle mc_oracle(const lgpr::VariationalState& st, double variance, const Vector& lengthscale,
                          std::size_t T, std::uint64_t seed) {
  const auto N = st.mu.rows(), M = st.Z.rows();
  Matrix s1 = Matrix::Zero(N, M), q1 = s1, s2 = Matrix::Zero(M, M), q2 = s2;
  double sx = 0.0, qx = 0.0;
  for (const auto& x : lgpr::sample_extended_inputs(st, T, seed)) {
    const Matrix K = se_gram(x, st.Z, variance, lengthscale);
    const Matrix P = K.transpose() * K;
    double xi = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) xi += se(x.row(i).transpose(), x.row(i).transpose(), variance, lengthscale);
    s1 += K;
    q1 += K.cwiseProduct(K);
    s2 += P;
    q2 += P.cwiseProduct(P);
    sx += xi;
    qx += xi * xi;
  }
  const double n = static_cast<double>(T);
  McOracle o;
  o.psi1_mean = s1 / n;
  o.psi2_mean = s2 / n;
  o.xi_mean = sx / n;
  o.psi1_se = ((q1 / n - o.psi1_mean.cwiseProduct(o.psi1_mean)).cwiseMax(0.0) / (n - 1)).cwiseSqrt();
  o.psi2_se = ((q2 / n - o.psi2_mean.cwiseProduct(o.psi2_mean)).cwiseMax(0.0) / (n - 1)).cwiseSqrt();
  o.xi_se = std::sqrt(std::max(0.0, qx / n - o.xi_mean * o.xi_mean) / (n - 1));
  lgpr::KernelSpec spec = lgpr::KernelSpec::squared_exponential(
      variance, std::vector<double>(lengthscale.data(), lengthscale.data() + lengthscale.size()),
      lgpr::InputScope::Extended);
  const auto lib = lgpr::psi_monte_carlo(spec, st, T, 1.0, seed);
  o.psi1_library_gap = (lib.psi1 - o.psi1_mean).cwiseAbs().maxCoeff();
  o.psi2_library_gap = (lib.psi2 - o.psi2_mean).cwiseAbs().maxCoeff();
  return o;
}

// |estimate - exact| / se, entry-wise; entries with zero spread must match exactly.
inline Matrix z_scores(const Matrix& estimate, const Matrix& exact, const Matrix& se) {
  Matrix z(estimate.rows(), estimate.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double d = std::abs(estimate(i, j) - exact(i, j));
      z(i, j) = se(i, j) > 0.0 ? d / se(i, j) : (d < 1e-12 ? 0.0 : INFINITY);
    }
  }
  return z;
}

}  // namespace oracle
