#pragma once

#include "lgpr/common.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lgpr {

enum class KernelKind {
  SquaredExponential,
  Linear,
  WhiteNoise,
  Sum,
  Product,
  Juxtaposition,
  Factorizing,
};

// Which columns of the extended input a base kernel reads when it is not
// nested inside a component or weight slot.
enum class InputScope { Observed, Latent, Extended };

// Mapping applied to the latent coordinates before juxtaposition weight
// kernels see them.
enum class LatentTransform { Identity, Simplex };

std::string to_string(KernelKind kind);
std::string to_string(InputScope scope);
std::string to_string(LatentTransform transform);

// Composable covariance description. Hyperparameters are positive reals keyed
// by name ("variance", "lengthscale"); optimisation happens on their logs.
//
// Juxtaposition children are laid out as [w_0 .. w_{L-1}, k_0 .. k_{L-1}]:
// L weight kernels over single latent coordinates followed by L component
// kernels over the observed columns. Factorizing children are the L components.
struct KernelSpec {
  KernelKind kind = KernelKind::SquaredExponential;
  std::vector<KernelSpec> children;
  std::map<std::string, std::vector<double>> hyperparams;
  InputScope scope = InputScope::Observed;
  LatentTransform transform = LatentTransform::Identity;

  static KernelSpec squared_exponential(double variance, std::vector<double> lengthscales,
                                        InputScope scope = InputScope::Observed);
  static KernelSpec linear(double variance, InputScope scope = InputScope::Observed);
  static KernelSpec white_noise(double variance);
  static KernelSpec sum(std::vector<KernelSpec> terms);
  static KernelSpec product(std::vector<KernelSpec> factors);
  static KernelSpec factorizing(std::vector<KernelSpec> components);
  static KernelSpec juxtaposition(std::vector<KernelSpec> weights,
                                  std::vector<KernelSpec> components,
                                  LatentTransform transform = LatentTransform::Identity);

  // L for factorizing / juxtaposition nodes, 0 otherwise.
  std::size_t component_count() const;

  bool operator==(const KernelSpec&) const = default;
};

// Largest L any single latent node may carry.
inline constexpr std::size_t kMaxComponents = 32;

// True if any node pushes latents through the simplex transform. Such models
// feed softplus-mapped latents to the kernel (see to_kernel_inputs).
bool uses_simplex(const KernelSpec& spec);

// Number of latent columns the spec needs, or 0 if it reads none.
std::size_t required_latent_count(const KernelSpec& spec);

struct ExtendedInput {
  std::vector<double> observed;
  std::vector<double> latent;
};

struct AnnealingSchedule {
  double alpha0 = 1.0;
  double growth = 1.005;
  double alpha_max = 50.0;

  double operator()(std::uint64_t iteration) const;
};

// v_l^alpha / sum_l' v_l'^alpha, evaluated in log space.
Vector simplex_transform(std::span<const double> v, double alpha);

// How white-noise terms decide whether two points coincide.
enum class SameMode {
  Never,     // white noise contributes nothing
  Diagonal,  // rows i and j coincide iff i == j (Gram of a set with itself)
  Equal,     // rows coincide iff all coordinates are equal
};

// Compiled kernel over a fixed layout. Evaluation is pure given the parameter
// values and alpha, so one instance may be shared across threads.
class Kernel {
 public:
  Kernel(const KernelSpec& spec, Layout layout);

  const Layout& layout() const { return layout_; }
  std::size_t num_params() const { return values_.size(); }
  std::vector<std::string> param_names() const;

  std::vector<double> log_params() const;
  void set_log_params(std::span<const double> log_values);

  // Spec with the current hyperparameter values written back.
  KernelSpec spec() const;

  // a and b are rows of the extended layout (observed then latent columns).
  double operator()(std::span<const double> a, std::span<const double> b, bool same,
                    double alpha) const;

  // Adds scale * d k(a,b) into d_params (w.r.t. log-hyperparameters) and,
  // when non-empty, into d_a / d_b (w.r.t. the input coordinates).
  void accumulate(std::span<const double> a, std::span<const double> b, bool same, double alpha,
                  double scale, std::span<double> d_params, std::span<double> d_a,
                  std::span<double> d_b) const;

  Matrix cross(const PointMatrix& A, const PointMatrix& B, double alpha, SameMode mode) const;
  Vector diagonal(const PointMatrix& A, double alpha, bool with_white) const;

  // Vector-Jacobian products: G holds dF/dK entrywise. dA / dB may be null and
  // may alias when A and B are the same point set.
  void cross_vjp(const PointMatrix& A, const PointMatrix& B, double alpha, SameMode mode,
                 const Matrix& G, std::span<double> d_params, PointMatrix* dA,
                 PointMatrix* dB) const;
  void diagonal_vjp(const PointMatrix& A, double alpha, bool with_white, const Vector& g,
                    std::span<double> d_params, PointMatrix* dA) const;

 private:
  struct Node {
    KernelKind kind = KernelKind::SquaredExponential;
    std::size_t begin = 0;  // first visible column read by a base kernel
    std::size_t width = 0;
    std::size_t param_offset = 0;
    std::size_t param_count = 0;
    std::vector<std::size_t> children;
    LatentTransform transform = LatentTransform::Identity;
    std::size_t latent_begin = 0;  // latent nodes: offset of the L latent columns
    std::size_t components = 0;
  };
  enum class Context { Root, Component, Weight };

  std::size_t compile(const KernelSpec& spec, Context context, const std::string& path);
  double eval(std::size_t n, const double* a, const double* b, bool same, double alpha) const;
  void accum(std::size_t n, const double* a, const double* b, bool same, double alpha,
             double scale, double* d_params, double* d_a, double* d_b) const;
  void latent_coordinates(const Node& node, const double* x, double alpha, double* out) const;
  void latent_vjp(const Node& node, const double* x, const double* coords, const double* g,
                  double alpha, double* d_x) const;

  Layout layout_;
  std::vector<Node> nodes_;
  std::vector<double> values_;  // positive hyperparameter values
  std::vector<std::string> names_;
  KernelSpec template_;
};

double eval_kernel(const KernelSpec& spec, const ExtendedInput& a, const ExtendedInput& b,
                   double alpha);

Matrix kernel_matrix(const KernelSpec& spec, std::span<const ExtendedInput> A,
                     std::span<const ExtendedInput> B, double alpha);

// Sum over l of w_l(a.latent[l], b.latent[l]) * k_l(a.observed, b.observed).
// Weight kernels see the latent coordinates as given (identity transform).
double juxtaposition_eval(std::span<const KernelSpec> weight_kernels,
                          std::span<const KernelSpec> component_kernels, const ExtendedInput& a,
                          const ExtendedInput& b, double alpha = 1.0);

// Entry-wise gradients of kernel_matrix(spec, A, B):
// hyper[p](i,j)     = dK_ij / d log theta_p
// latent_a[l](i,j)  = dK_ij / d A_i.latent[l]   (and likewise for B)
struct KernelGradients {
  std::vector<std::string> names;
  std::vector<Matrix> hyper;
  std::vector<Matrix> latent_a;
  std::vector<Matrix> latent_b;
};

KernelGradients kernel_gradients(const KernelSpec& spec, std::span<const ExtendedInput> A,
                                 std::span<const ExtendedInput> B, double alpha);

// JSON document {"kind", "children", "hyperparams", ...}.
std::string kernel_to_json(const KernelSpec& spec, int indent = -1);
KernelSpec kernel_from_json(const std::string& text);

}  // namespace lgpr
