#include "oracles.hpp"

#include <lgpr/optimize.hpp>
#include <lgpr/variational.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lgpr;

namespace {

// Random state over D observed and L latent columns, M inducing points.
VariationalState random_state(std::size_t N, std::size_t D, std::size_t L, std::size_t M,
                              std::uint64_t seed, double max_var = 0.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> e(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, max_var);
  VariationalState st;
  st.layout = {D, L};
  const auto n = static_cast<Eigen::Index>(N), q = static_cast<Eigen::Index>(D + L);
  st.mu.resize(n, q);
  st.s = Matrix::Zero(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < q; ++c) {
      st.mu(i, c) = e(gen);
      if (c >= static_cast<Eigen::Index>(D)) st.s(i, c) = u(gen);
    }
  }
  st.Z.resize(static_cast<Eigen::Index>(M), q);
  for (Eigen::Index m = 0; m < st.Z.rows(); ++m) {
    for (Eigen::Index c = 0; c < q; ++c) st.Z(m, c) = e(gen);
  }
  st.noise_var = 0.05;
  return st;
}

KernelSpec se_all(std::size_t Q, double variance = 1.4) {
  std::vector<double> ls(Q);
  for (std::size_t q = 0; q < Q; ++q) ls[q] = 0.6 + 0.3 * static_cast<double>(q);
  return KernelSpec::squared_exponential(variance, ls, InputScope::Extended);
}

Vector lengthscales(const KernelSpec& spec) {
  const auto& ls = spec.hyperparams.at("lengthscale");
  return Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
}

Matrix random_outputs(std::size_t N, std::size_t P, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> e(0.0, 1.0);
  Matrix Y(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(P));
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index p = 0; p < Y.cols(); ++p) Y(i, p) = e(gen);
  }
  return Y;
}

}  // namespace

TEST(Variational, ZeroVarianceSamplesEqualMean) {
  auto st = random_state(7, 1, 2, 3, 1);
  st.s.setZero();
  for (const auto& x : sample_extended_inputs(st, 5, 9)) EXPECT_EQ((x - st.mu).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Variational, SamplesDeterministicAndObservedUntouched) {
  const auto st = random_state(7, 2, 2, 3, 2);
  const auto a = sample_extended_inputs(st, 4, 11), b = sample_extended_inputs(st, 4, 11);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ((a[t] - b[t]).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a[t].leftCols(2) - st.mu.leftCols(2)).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Variational, SampleMomentsFollowTheMeanAndVariance) {
  VariationalState st;
  st.layout = {0, 1};
  st.mu = Matrix::Constant(1, 1, 0.3);
  st.s = Matrix::Constant(1, 1, 1.0);
  st.Z = Matrix::Zero(1, 1);
  const std::size_t T = 100000;
  const auto xs = sample_extended_inputs(st, T, 5);
  double sum = 0.0, sq = 0.0;
  for (const auto& x : xs) {
    sum += x(0, 0);
    sq += x(0, 0) * x(0, 0);
  }
  const double mean = sum / T, var = sq / T - mean * mean;
  EXPECT_LT(std::abs(mean - 0.3), 3.0 / std::sqrt(static_cast<double>(T)));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Variational, DegenerateMonteCarloEqualsPlugIn) {
  auto st = random_state(9, 1, 2, 4, 3);
  st.s.setZero();
  const auto spec = KernelSpec::factorizing({KernelSpec::squared_exponential(1.2, {0.8}),
                                             KernelSpec::sum({KernelSpec::squared_exponential(0.5, {2.0}),
                                                              KernelSpec::white_noise(0.1)})});
  const Kernel k(spec, st.layout);
  const PointMatrix X = to_kernel_inputs(st.mu, st.layout, LatentMap::Softplus);
  const PointMatrix Z = to_kernel_inputs(st.Z, st.layout, LatentMap::Softplus);
  const Matrix Kfu = k.cross(X, Z, 1.7, SameMode::Never);
  for (std::size_t T : {1u, 3u}) {
    const PsiStats ps = psi_monte_carlo(spec, st, T, 1.7, 4);
    EXPECT_LT((ps.psi1 - Kfu).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((ps.psi2 - Kfu.transpose() * Kfu).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR(ps.xi, k.diagonal(X, 1.7, true).sum(), 1e-12);
  }
}

TEST(Variational, SeXiIsConstantForEverySampleCount) {
  const auto st = random_state(11, 1, 1, 4, 4);
  const auto spec = se_all(2, 1.4);
  for (std::size_t T : {1u, 2u, 17u}) EXPECT_NEAR(psi_monte_carlo(spec, st, T, 1.0, 5).xi, 11 * 1.4, 1e-12);
  EXPECT_NEAR(psi_analytic_se(st, spec).xi, 11 * 1.4, 1e-12);
}

TEST(Variational, AnalyticZeroVarianceEqualsPlugIn) {
  auto st = random_state(8, 1, 1, 3, 5);
  st.s.setZero();
  const auto spec = se_all(2);
  const Matrix Kfu = oracle::se_gram(st.mu, st.Z, 1.4, lengthscales(spec));
  const PsiStats ps = psi_analytic_se(st, spec);
  EXPECT_LT((ps.psi1 - Kfu).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((ps.psi2 - Kfu.transpose() * Kfu).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Variational, AnalyticMatchesGaussHermite) {
  const auto st = random_state(5, 1, 2, 3, 6, 0.8);
  const auto spec = se_all(3);
  const Vector ls = lengthscales(spec);
  const PsiStats ps = psi_analytic_se(st, spec);
  const auto rule = oracle::gauss_hermite(50);
  Matrix psi2 = Matrix::Zero(3, 3);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const Vector mean = st.mu.row(i).transpose(), var = st.s.row(i).transpose();
    for (Eigen::Index m = 0; m < 3; ++m) {
      const Vector zm = st.Z.row(m).transpose();
      const double e1 = oracle::gaussian_expectation([&](const Vector& x) { return oracle::se(x, zm, 1.4, ls); },
                                                     mean, var, rule);
      EXPECT_NEAR(ps.psi1(i, m), e1, 1e-8);
      for (Eigen::Index m2 = 0; m2 < 3; ++m2) {
        const Vector zn = st.Z.row(m2).transpose();
        psi2(m, m2) += oracle::gaussian_expectation(
            [&](const Vector& x) { return oracle::se(x, zm, 1.4, ls) * oracle::se(x, zn, 1.4, ls); }, mean, var, rule);
      }
    }
  }
  EXPECT_LT((ps.psi2 - psi2).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Variational, AnalyticRejectsOtherKernels) {
  const auto st = random_state(5, 1, 1, 2, 7);
  try {
    psi_analytic_se(st, KernelSpec::factorizing({KernelSpec::squared_exponential(1.0, {1.0})}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("analytic statistics unavailable"), std::string::npos);
  }
  EXPECT_THROW(psi_analytic_se(st, KernelSpec::linear(1.0, InputScope::Extended)), Error);
}

// The library estimate must equal the mean rebuilt from the same draws, and
// lie within three standard errors of the closed form entry by entry.
TEST(Variational, MonteCarloWithinThreeStandardErrors) {
  const auto st = random_state(20, 1, 1, 5, 8);
  const auto spec = se_all(2);
  const auto o = oracle::mc_oracle(st, 1.4, lengthscales(spec), 10000, 24);
  const PsiStats an = psi_analytic_se(st, spec);
  EXPECT_LT(o.psi1_library_gap, 1e-12);
  EXPECT_LT(o.psi2_library_gap, 1e-10);
  EXPECT_NEAR(o.xi_mean, an.xi, 1e-9);
  EXPECT_LE(oracle::z_scores(o.psi1_mean, an.psi1, o.psi1_se).maxCoeff(), 3.0);
  EXPECT_LE(oracle::z_scores(o.psi2_mean, an.psi2, o.psi2_se).maxCoeff(), 3.0);
}

// Over many entries and several states the standardised errors behave like
// standard normals and shrink with the sample count.
TEST(Variational, MonteCarloErrorsLookUnbiased) {
  std::vector<double> zs;
  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const auto st = random_state(20, 1, 2, 5, seed);
    const auto spec = se_all(3);
    const PsiStats an = psi_analytic_se(st, spec);
    const auto o = oracle::mc_oracle(st, 1.4, lengthscales(spec), 4000, seed + 100);
    const Matrix z = (o.psi1_mean - an.psi1).cwiseQuotient(o.psi1_se);
    for (Eigen::Index k = 0; k < z.size(); ++k) zs.push_back(z.data()[k]);
    err_small += (psi_monte_carlo(spec, st, 100, 1.0, seed).psi1 - an.psi1).cwiseAbs().mean();
    err_large += (psi_monte_carlo(spec, st, 10000, 1.0, seed).psi1 - an.psi1).cwiseAbs().mean();
  }
  double mean = 0.0, sq = 0.0;
  for (double z : zs) mean += z;
  mean /= static_cast<double>(zs.size());
  for (double z : zs) sq += (z - mean) * (z - mean);
  const double sd = std::sqrt(sq / static_cast<double>(zs.size()));
  EXPECT_LT(std::abs(mean), 0.25);
  EXPECT_NEAR(sd, 1.0, 0.25);
  // a hundredfold increase in samples cuts the error about tenfold
  EXPECT_LT(err_large, 0.2 * err_small);
}

TEST(Variational, PsiStatisticsAreSymmetricPsd) {
  const auto st = random_state(15, 1, 2, 6, 9);
  const auto spec = KernelSpec::factorizing({KernelSpec::squared_exponential(1.0, {0.7}), KernelSpec::linear(0.4)});
  const PsiStats ps = psi_monte_carlo(spec, st, 3, 2.0, 10);
  EXPECT_LT((ps.psi2 - ps.psi2.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(oracle::min_eigenvalue(ps.psi2), -1e-8);
  EXPECT_GE(ps.xi, 0.0);
}

TEST(Variational, KlExamples) {
  VariationalState st;
  st.layout = {1, 2};
  st.mu = Matrix::Zero(3, 3);
  st.s = Matrix::Zero(3, 3);
  st.s.rightCols(2).setOnes();
  st.Z = Matrix::Zero(1, 3);
  st.mu.col(0).setConstant(5.0);  // observed columns never contribute
  EXPECT_EQ(kl_term(st), 0.0);
  st.mu(1, 2) = 1.0;
  EXPECT_DOUBLE_EQ(kl_term(st), 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_GE(kl_term(random_state(6, 1, 2, 2, seed, 3.0)), 0.0);
}

TEST(Variational, BoundEqualsDenseGpWithInducingAtData) {
  const std::size_t N = 20;
  auto st = random_state(N, 2, 0, N, 12);
  st.Z = st.mu;
  st.noise_var = 0.1;
  const auto spec = se_all(2);
  const Matrix Y = random_outputs(N, 1, 13);
  const double dense = oracle::dense_log_marginal(oracle::se_gram(st.mu, st.mu, 1.4, lengthscales(spec)), Y, 0.1);
  EXPECT_NEAR(lower_bound(Y, psi_analytic_se(st, spec), st, spec), dense, 1e-6);
  EXPECT_NEAR(lower_bound(Y, psi_monte_carlo(spec, st, 1, 1.0, 3), st, spec), dense, 1e-6);
}

// The sparse bound written densely, log N(y | 0, Q + s2 I) - tr(K - Q) / (2 s2)
// with Q = Kfu (Kuu + jitter)^-1 Kuf, matches to rounding for any M.
TEST(Variational, BoundMatchesDenseFormOfSparseBound) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t N = 15 + seed, M = 3 + seed;
    auto st = random_state(N, 2, 0, M, 500 + seed);
    st.noise_var = 0.03 + 0.05 * static_cast<double>(seed);
    const auto spec = se_all(2);
    const Vector ls = lengthscales(spec);
    const Matrix Y = random_outputs(N, 1 + seed % 3, 600 + seed);
    Matrix Kuu = oracle::se_gram(st.Z, st.Z, 1.4, ls);
    Kuu.diagonal().array() += 1e-9 * Kuu.diagonal().mean();
    const Matrix Kfu = oracle::se_gram(st.mu, st.Z, 1.4, ls);
    const Matrix Q = Kfu * Kuu.llt().solve(Kfu.transpose());
    const double trace = (oracle::se_gram(st.mu, st.mu, 1.4, ls) - Q).trace();
    const double expect = oracle::dense_log_marginal(Q, Y, st.noise_var) -
                          static_cast<double>(Y.cols()) * trace / (2 * st.noise_var);
    EXPECT_NEAR(lower_bound(Y, psi_analytic_se(st, spec), st, spec), expect, 1e-9 * std::abs(expect)) << seed;
  }
}

TEST(Variational, BoundNeverExceedsDenseGp) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t N = 10 + gen() % 21, M = 1 + gen() % (N - 1);
    auto st = random_state(N, 1 + trial % 2, 0, M, 100 + static_cast<std::uint64_t>(trial));
    st.noise_var = 0.02 + 0.1 * static_cast<double>(trial % 4);
    const auto spec = se_all(st.layout.observed, 0.5 + 0.1 * trial);
    const Matrix Y = random_outputs(N, 1 + trial % 3, 200 + static_cast<std::uint64_t>(trial));
    const double dense = oracle::dense_log_marginal(
        oracle::se_gram(st.mu, st.mu, 0.5 + 0.1 * trial, lengthscales(spec)), Y, st.noise_var);
    EXPECT_LE(lower_bound(Y, psi_analytic_se(st, spec), st, spec), dense + 1e-9) << "trial " << trial;
  }
}

TEST(Variational, CollapsedLatentsStayBelowDenseGp) {
  // latent columns collapsed to their means: the data term is a sparse bound on
  // the dense GP over the extended inputs
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto st = random_state(25, 1, 2, 6, 300 + seed);
    st.s.setZero();
    const auto spec = se_all(3);
    const Matrix Y = random_outputs(25, 1, 400 + seed);
    const double dense = oracle::dense_log_marginal(oracle::se_gram(st.mu, st.mu, 1.4, lengthscales(spec)), Y, st.noise_var);
    EXPECT_LE(bound_data_term(Y, psi_analytic_se(st, spec), st, spec), dense + 1e-9);
  }
}

TEST(Variational, KlEntersAdditively) {
  const auto st = random_state(12, 1, 2, 4, 15);
  const auto spec = KernelSpec::factorizing({KernelSpec::squared_exponential(1.0, {0.7}), KernelSpec::squared_exponential(1.0, {0.3})});
  const Matrix Y = random_outputs(12, 1, 16);
  const PsiStats ps = psi_monte_carlo(spec, st, 2, 1.0, 17);
  EXPECT_EQ(lower_bound(Y, ps, st, spec), bound_data_term(Y, ps, st, spec) - kl_term(st));
}

TEST(Variational, BoundIsDeterministic) {
  const auto st = random_state(30, 1, 2, 8, 18);
  const auto spec = KernelSpec::factorizing({KernelSpec::squared_exponential(1.0, {0.7}),
                                             KernelSpec::sum({KernelSpec::squared_exponential(1.0, {0.3}), KernelSpec::white_noise(0.2)})});
  const Matrix Y = random_outputs(30, 2, 19);
  const double a = lower_bound(Y, psi_monte_carlo(spec, st, 5, 3.0, 20), st, spec, 3.0);
  const double b = lower_bound(Y, psi_monte_carlo(spec, st, 5, 3.0, 20), st, spec, 3.0);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, lower_bound(Y, psi_monte_carlo(spec, st, 5, 3.0, 21), st, spec, 3.0));
}

// At a converged analytic fit, duplicating a data point into the inducing set
// cannot lower the bound.
TEST(Variational, ExtraInducingPointNeverLowersBound) {
  std::mt19937_64 gen(22);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::normal_distribution<double> e(0.0, 0.1);
  Dataset d;
  d.X.resize(40, 1);
  d.Y.resize(40, 1);
  for (Eigen::Index i = 0; i < 40; ++i) {
    d.X(i, 0) = u(gen);
    d.Y(i, 0) = std::sin(2 * d.X(i, 0)) + e(gen);
  }
  TrainConfig c;
  c.components = 1;
  c.inducing = 6;
  c.iterations = 400;
  c.psi = PsiMode::Analytic;
  c.kernel = extended_se_model(1, 1);
  c.seed = 3;
  const TrainedModel m = train(d, c);
  const double base = lower_bound(d.Y, psi_analytic_se(m.state, m.spec), m.state, m.spec);
  for (Eigen::Index i = 0; i < 40; i += 7) {
    VariationalState more = m.state;
    more.Z.conservativeResize(more.Z.rows() + 1, Eigen::NoChange);
    more.Z.row(more.Z.rows() - 1) = m.state.mu.row(i);
    EXPECT_GE(lower_bound(d.Y, psi_analytic_se(more, m.spec), more, m.spec), base - 1e-8 * std::abs(base));
  }
}
