#include "lgpr/variational.hpp"

#include <cmath>

namespace lgpr {
namespace detail {

void analytic_se_params(const KernelSpec& spec, const Layout& layout, double& variance,
                        Vector& lengthscale) {
  const bool covers_all =
      spec.scope == InputScope::Extended ||
      (spec.scope == InputScope::Observed && layout.latent == 0) ||
      (spec.scope == InputScope::Latent && layout.observed == 0);
  if (spec.kind != KernelKind::SquaredExponential || !covers_all) {
    throw Error("analytic statistics unavailable: need a single squared-exponential kernel over "
                "all extended columns");
  }
  // Kernel construction validates the hyperparameters and their count.
  const Kernel kernel(spec, layout);
  const auto logs = kernel.log_params();
  variance = std::exp(logs[0]);
  lengthscale.resize(static_cast<Eigen::Index>(layout.extended()));
  for (std::size_t q = 0; q < layout.extended(); ++q) {
    lengthscale(static_cast<Eigen::Index>(q)) = std::exp(logs[q + 1]);
  }
}

// psi1_im = sf2 prod_q (1 + s/l2)^(-1/2) exp(-(mu - z)^2 / (2 (l2 + s)))
// psi2_mm' = sum_i sf2^2 prod_q (1 + 2s/l2)^(-1/2)
//            exp(-(z - z')^2 / (4 l2) - (mu - zbar)^2 / (l2 + 2s))
SeAnalytic se_statistics(const Matrix& mu, const Matrix& s, const Matrix& Z, double variance,
                         const Vector& lengthscale) {
  const auto N = mu.rows();
  const auto M = Z.rows();
  const auto Q = mu.cols();
  const Vector l2 = lengthscale.array().square();

  SeAnalytic out;
  out.xi = static_cast<double>(N) * variance;
  out.psi1.resize(N, M);
  out.psi2 = Matrix::Zero(M, M);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index m = 0; m < M; ++m) {
      double log_value = std::log(variance);
      for (Eigen::Index q = 0; q < Q; ++q) {
        const double denom = l2(q) + s(i, q);
        const double d = mu(i, q) - Z(m, q);
        log_value += -0.5 * std::log(denom / l2(q)) - 0.5 * d * d / denom;
      }
      out.psi1(i, m) = std::exp(log_value);
    }
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index m = 0; m < M; ++m) {
      for (Eigen::Index k = m; k < M; ++k) {
        double log_value = 2.0 * std::log(variance);
        for (Eigen::Index q = 0; q < Q; ++q) {
          const double denom = l2(q) + 2.0 * s(i, q);
          const double diff = Z(m, q) - Z(k, q);
          const double d = mu(i, q) - 0.5 * (Z(m, q) + Z(k, q));
          log_value += -0.5 * std::log(denom / l2(q)) - diff * diff / (4.0 * l2(q)) - d * d / denom;
        }
        const double v = std::exp(log_value);
        out.psi2(m, k) += v;
        if (k != m) out.psi2(k, m) += v;
      }
    }
  }
  return out;
}

void se_statistics_vjp(const Matrix& mu, const Matrix& s, const Matrix& Z, double variance,
                       const Vector& lengthscale, double g_xi, const Matrix& g_psi1,
                       const Matrix& g_psi2, double& d_log_variance, Vector& d_log_lengthscale,
                       Matrix& d_mu, Matrix& d_s, Matrix& d_Z) {
  const auto N = mu.rows();
  const auto M = Z.rows();
  const auto Q = mu.cols();
  const Vector l2 = lengthscale.array().square();

  d_log_variance += g_xi * static_cast<double>(N) * variance;

  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index m = 0; m < M; ++m) {
      if (g_psi1(i, m) == 0.0) continue;
      double log_value = std::log(variance);
      for (Eigen::Index q = 0; q < Q; ++q) {
        const double denom = l2(q) + s(i, q);
        const double d = mu(i, q) - Z(m, q);
        log_value += -0.5 * std::log(denom / l2(q)) - 0.5 * d * d / denom;
      }
      const double c = g_psi1(i, m) * std::exp(log_value);
      d_log_variance += c;
      for (Eigen::Index q = 0; q < Q; ++q) {
        const double denom = l2(q) + s(i, q);
        const double d = mu(i, q) - Z(m, q);
        d_mu(i, q) -= c * d / denom;
        d_Z(m, q) += c * d / denom;
        d_s(i, q) += c * (-0.5 / denom + 0.5 * d * d / (denom * denom));
        d_log_lengthscale(q) += c * (s(i, q) / denom + l2(q) * d * d / (denom * denom));
      }
    }
  }

  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index m = 0; m < M; ++m) {
      for (Eigen::Index k = 0; k < M; ++k) {
        if (g_psi2(m, k) == 0.0) continue;
        double log_value = 2.0 * std::log(variance);
        for (Eigen::Index q = 0; q < Q; ++q) {
          const double denom = l2(q) + 2.0 * s(i, q);
          const double diff = Z(m, q) - Z(k, q);
          const double d = mu(i, q) - 0.5 * (Z(m, q) + Z(k, q));
          log_value += -0.5 * std::log(denom / l2(q)) - diff * diff / (4.0 * l2(q)) - d * d / denom;
        }
        const double c = g_psi2(m, k) * std::exp(log_value);
        d_log_variance += 2.0 * c;
        for (Eigen::Index q = 0; q < Q; ++q) {
          const double denom = l2(q) + 2.0 * s(i, q);
          const double diff = Z(m, q) - Z(k, q);
          const double d = mu(i, q) - 0.5 * (Z(m, q) + Z(k, q));
          d_mu(i, q) -= c * 2.0 * d / denom;
          d_Z(m, q) += c * (-diff / (2.0 * l2(q)) + d / denom);
          d_Z(k, q) += c * (diff / (2.0 * l2(q)) + d / denom);
          d_s(i, q) += c * (-1.0 / denom + 2.0 * d * d / (denom * denom));
          d_log_lengthscale(q) += c * (2.0 * s(i, q) / denom + diff * diff / (2.0 * l2(q)) +
                                       2.0 * l2(q) * d * d / (denom * denom));
        }
      }
    }
  }
}

}  // namespace detail

PsiStats psi_analytic_se(const VariationalState& state, const KernelSpec& spec) {
  state.validate();
  double variance = 0.0;
  Vector lengthscale;
  detail::analytic_se_params(spec, state.layout, variance, lengthscale);
  auto se = detail::se_statistics(state.mu, state.s, state.Z, variance, lengthscale);
  PsiStats stats;
  stats.xi = se.xi;
  stats.psi1 = std::move(se.psi1);
  stats.psi2 = std::move(se.psi2);
  stats.smooth_diag = Vector::Constant(state.mu.rows(), variance);
  stats.noise_diag = Vector::Zero(state.mu.rows());
  stats.psi2_weighted = stats.psi2 / state.noise_var;
  return stats;
}

}  // namespace lgpr
