#pragma once

#include "lgpr/kernels.hpp"

#include <cstdint>
#include <vector>

namespace lgpr {

// q(X) over the extended inputs. Observed columns carry the data with zero
// variance; latent columns carry Gaussian means and variances.
struct VariationalState {
  Layout layout;
  Matrix mu;  // N x Q
  Matrix s;   // N x Q, zero on observed columns
  Matrix Z;   // M x Q inducing inputs in the extended space
  double noise_var = 1.0;
  std::uint64_t iteration = 0;

  std::size_t num_points() const { return static_cast<std::size_t>(mu.rows()); }
  std::size_t num_inducing() const { return static_cast<std::size_t>(Z.rows()); }

  // Throws on shape mismatch, M > N, non-zero observed variance or
  // non-positive noise.
  void validate() const;
};

// Expectations of kernel quantities under q. psi2_weighted is the Phi that
// enters the bound: <K_uf B K_fu> with B = diag(1 / (noise_var + noise_diag)).
// noise_diag holds the white-noise share of k(x_i, x_i); it is zero unless the
// kernel contains white-noise terms, in which case B is heteroscedastic.
struct PsiStats {
  double xi = 0.0;    // <Tr K_ff>
  Matrix psi1;        // N x M, <K_fu>
  Matrix psi2;        // M x M, <K_uf K_fu>
  Vector smooth_diag; // N, <k(x_i, x_i)> without white-noise terms
  Vector noise_diag;  // N, <white-noise part of k(x_i, x_i)>
  Matrix psi2_weighted;
};

enum class LatentMap { Identity, Softplus };

// Simplex-transforming kernels need positive latents; raw Gaussian samples are
// pushed through softplus first.
LatentMap latent_map_for(const KernelSpec& spec);

double softplus(double x);

// Applies the latent map to the latent columns of raw extended points.
PointMatrix to_kernel_inputs(const Matrix& raw, const Layout& layout, LatentMap map);

// Standard normal draws for the latent columns, T x (N x L), fixed by seed.
std::vector<Matrix> draw_noise(std::size_t T, std::size_t N, std::size_t L, std::uint64_t seed);

// Reparameterised samples mu + sqrt(s) * eps; observed columns unperturbed.
std::vector<Matrix> sample_extended_inputs(const VariationalState& state, std::size_t T,
                                           std::uint64_t seed);

PsiStats psi_monte_carlo(const KernelSpec& spec, const VariationalState& state, std::size_t T,
                         double alpha, std::uint64_t seed);

// Closed-form statistics for a single squared-exponential kernel over every
// extended column. Throws "analytic statistics unavailable" for anything else.
PsiStats psi_analytic_se(const VariationalState& state, const KernelSpec& spec);

// KL(q || N(0, I)) summed over latent entries.
double kl_term(const VariationalState& state);

// Collapsed bound without the KL term.
double bound_data_term(const Matrix& Y, const PsiStats& stats, const VariationalState& state,
                       const KernelSpec& spec, double alpha = 1.0);

// Collapsed bound: data term summed over output columns minus kl_term.
double lower_bound(const Matrix& Y, const PsiStats& stats, const VariationalState& state,
                   const KernelSpec& spec, double alpha = 1.0);

namespace detail {

// Collapsed bound from the weighted statistics plus adjoints w.r.t. each input.
struct CollapsedBound {
  double value = 0.0;
  Matrix d_psi1;        // N x M
  Matrix d_psi2;        // M x M, w.r.t. psi2_weighted (symmetric)
  Vector d_smooth_diag; // N
  Vector d_beta;        // N, direct dependence only (not through psi2_weighted)
  Matrix d_kuu;         // M x M (symmetric)
};

CollapsedBound collapsed_bound(const Matrix& Y, const Matrix& psi1, const Matrix& psi2_weighted,
                               const Vector& smooth_diag, const Vector& beta, const Matrix& Kuu,
                               bool with_adjoints);

struct SeAnalytic {
  double xi = 0.0;
  Matrix psi1;
  Matrix psi2;
};

SeAnalytic se_statistics(const Matrix& mu, const Matrix& s, const Matrix& Z, double variance,
                         const Vector& lengthscale);

// Accumulates adjoints of se_statistics into d_log_variance, d_log_lengthscale,
// d_mu, d_s and d_Z.
void se_statistics_vjp(const Matrix& mu, const Matrix& s, const Matrix& Z, double variance,
                       const Vector& lengthscale, double g_xi, const Matrix& g_psi1,
                       const Matrix& g_psi2, double& d_log_variance, Vector& d_log_lengthscale,
                       Matrix& d_mu, Matrix& d_s, Matrix& d_Z);

// Parameters of an SE kernel eligible for the analytic path, or throws.
void analytic_se_params(const KernelSpec& spec, const Layout& layout, double& variance,
                        Vector& lengthscale);

}  // namespace detail

}  // namespace lgpr
