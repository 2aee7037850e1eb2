#include "lgpr/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace lgpr {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::SquaredExponential: return "squared-exponential";
    case KernelKind::Linear: return "linear";
    case KernelKind::WhiteNoise: return "white-noise";
    case KernelKind::Sum: return "sum";
    case KernelKind::Product: return "product";
    case KernelKind::Juxtaposition: return "juxtaposition";
    case KernelKind::Factorizing: return "factorizing";
  }
  throw Error("unsupported kernel kind");
}

std::string to_string(InputScope scope) {
  switch (scope) {
    case InputScope::Observed: return "observed";
    case InputScope::Latent: return "latent";
    case InputScope::Extended: return "extended";
  }
  throw Error("unknown input scope");
}

std::string to_string(LatentTransform transform) {
  return transform == LatentTransform::Simplex ? "simplex" : "identity";
}

KernelSpec KernelSpec::squared_exponential(double variance, std::vector<double> lengthscales,
                                           InputScope scope) {
  KernelSpec spec;
  spec.kind = KernelKind::SquaredExponential;
  spec.hyperparams["variance"] = {variance};
  spec.hyperparams["lengthscale"] = std::move(lengthscales);
  spec.scope = scope;
  return spec;
}

KernelSpec KernelSpec::linear(double variance, InputScope scope) {
  KernelSpec spec;
  spec.kind = KernelKind::Linear;
  spec.hyperparams["variance"] = {variance};
  spec.scope = scope;
  return spec;
}

KernelSpec KernelSpec::white_noise(double variance) {
  KernelSpec spec;
  spec.kind = KernelKind::WhiteNoise;
  spec.hyperparams["variance"] = {variance};
  return spec;
}

KernelSpec KernelSpec::sum(std::vector<KernelSpec> terms) {
  KernelSpec spec;
  spec.kind = KernelKind::Sum;
  spec.children = std::move(terms);
  return spec;
}

KernelSpec KernelSpec::product(std::vector<KernelSpec> factors) {
  KernelSpec spec;
  spec.kind = KernelKind::Product;
  spec.children = std::move(factors);
  return spec;
}

KernelSpec KernelSpec::factorizing(std::vector<KernelSpec> components) {
  KernelSpec spec;
  spec.kind = KernelKind::Factorizing;
  spec.children = std::move(components);
  spec.transform = LatentTransform::Simplex;
  return spec;
}

KernelSpec KernelSpec::juxtaposition(std::vector<KernelSpec> weights,
                                     std::vector<KernelSpec> components,
                                     LatentTransform transform) {
  if (weights.size() != components.size()) {
    throw DimensionError("juxtaposition weight kernels", components.size(), weights.size());
  }
  KernelSpec spec;
  spec.kind = KernelKind::Juxtaposition;
  spec.children = std::move(weights);
  for (auto& c : components) spec.children.push_back(std::move(c));
  spec.transform = transform;
  return spec;
}

std::size_t KernelSpec::component_count() const {
  switch (kind) {
    case KernelKind::Factorizing: return children.size();
    case KernelKind::Juxtaposition: return children.size() / 2;
    default: return 0;
  }
}

bool uses_simplex(const KernelSpec& spec) {
  if (spec.kind == KernelKind::Factorizing) return true;
  if (spec.kind == KernelKind::Juxtaposition && spec.transform == LatentTransform::Simplex) {
    return true;
  }
  return std::any_of(spec.children.begin(), spec.children.end(),
                     [](const KernelSpec& c) { return uses_simplex(c); });
}

std::size_t required_latent_count(const KernelSpec& spec) {
  std::size_t count = spec.component_count();
  if (count > 0) return count;
  if ((spec.kind == KernelKind::SquaredExponential || spec.kind == KernelKind::Linear) &&
      spec.scope != InputScope::Observed) {
    return 0;  // width decided by the layout
  }
  for (const auto& c : spec.children) count = std::max(count, required_latent_count(c));
  return count;
}

double AnnealingSchedule::operator()(std::uint64_t iteration) const {
  const double raw = alpha0 * std::pow(growth, static_cast<double>(iteration));
  return std::min(alpha_max, raw);
}

namespace {

// Fills out[0..n) with the simplex weights of v and returns false when the
// input is invalid. Works in log space so large alpha does not overflow.
void simplex_weights(const double* v, std::size_t n, double alpha, double* out) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error("simplex transform needs alpha > 0");
  std::array<double, kMaxComponents> logs{};
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n; ++l) {
    if (v[l] < 0.0 || std::isnan(v[l])) {
      throw Error("negative latent coordinate passed to simplex transform");
    }
    logs[l] = alpha * std::log(v[l]);
    top = std::max(top, logs[l]);
  }
  if (!std::isfinite(top)) throw Error("degenerate latent: all simplex coordinates are zero");
  double total = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    out[l] = std::exp(logs[l] - top);
    total += out[l];
  }
  for (std::size_t l = 0; l < n; ++l) out[l] /= total;
}

const std::vector<double>& hyper(const KernelSpec& spec, const std::string& name,
                                 const std::string& path) {
  auto it = spec.hyperparams.find(name);
  if (it == spec.hyperparams.end()) {
    throw Error("kernel " + path + " is missing hyperparameter '" + name + "'");
  }
  for (double v : it->second) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw Error("kernel " + path + " hyperparameter '" + name +
                  "' must be finite and positive");
    }
  }
  return it->second;
}

}  // namespace

Vector simplex_transform(std::span<const double> v, double alpha) {
  if (v.empty() || v.size() > kMaxComponents) {
    throw Error("simplex transform needs between 1 and " + std::to_string(kMaxComponents) +
                " coordinates");
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  simplex_weights(v.data(), v.size(), alpha, out.data());
  return out;
}

Kernel::Kernel(const KernelSpec& spec, Layout layout) : layout_(layout), template_(spec) {
  compile(spec, Context::Root, to_string(spec.kind));
}

std::size_t Kernel::compile(const KernelSpec& spec, Context context, const std::string& path) {
  const std::size_t index = nodes_.size();
  nodes_.emplace_back();
  Node node;
  node.kind = spec.kind;
  node.param_offset = values_.size();

  auto add_param = [&](const std::string& name, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      values_.push_back(values[i]);
      names_.push_back(values.size() == 1 && name != "lengthscale"
                           ? path + "." + name
                           : path + "." + name + "[" + std::to_string(i) + "]");
    }
  };

  switch (spec.kind) {
    case KernelKind::SquaredExponential:
    case KernelKind::Linear: {
      if (context == Context::Weight) {
        node.begin = 0;
        node.width = 1;
      } else if (context == Context::Component) {
        if (spec.scope != InputScope::Observed) {
          throw Error("kernel " + path + ": component kernels read observed columns only");
        }
        node.begin = 0;
        node.width = layout_.observed;
      } else {
        switch (spec.scope) {
          case InputScope::Observed:
            node.begin = 0;
            node.width = layout_.observed;
            break;
          case InputScope::Latent:
            node.begin = layout_.observed;
            node.width = layout_.latent;
            break;
          case InputScope::Extended:
            node.begin = 0;
            node.width = layout_.extended();
            break;
        }
      }
      if (node.width == 0) throw Error("kernel " + path + " reads no input columns");
      const auto& variance = hyper(spec, "variance", path);
      if (variance.size() != 1) throw DimensionError(path + " variance", 1, variance.size());
      add_param("variance", variance);
      if (spec.kind == KernelKind::SquaredExponential) {
        const auto& ls = hyper(spec, "lengthscale", path);
        if (ls.size() != node.width) throw DimensionError(path + " lengthscales", node.width, ls.size());
        add_param("lengthscale", ls);
      }
      break;
    }
    case KernelKind::WhiteNoise: {
      const auto& variance = hyper(spec, "variance", path);
      if (variance.size() != 1) throw DimensionError(path + " variance", 1, variance.size());
      add_param("variance", variance);
      break;
    }
    case KernelKind::Sum:
    case KernelKind::Product: {
      if (spec.children.empty()) throw Error("kernel " + path + " has no children");
      for (std::size_t c = 0; c < spec.children.size(); ++c) {
        node.children.push_back(compile(spec.children[c], context,
                                        path + ".c" + std::to_string(c) + "." +
                                            to_string(spec.children[c].kind)));
      }
      break;
    }
    case KernelKind::Factorizing:
    case KernelKind::Juxtaposition: {
      if (context != Context::Root) {
        throw Error("kernel " + path + ": latent kernels cannot be nested in component slots");
      }
      const bool juxta = spec.kind == KernelKind::Juxtaposition;
      if (juxta && spec.children.size() % 2 != 0) {
        throw Error("kernel " + path + ": juxtaposition needs matching weight/component lists");
      }
      const std::size_t L = spec.component_count();
      if (L == 0 || L > kMaxComponents) {
        throw Error("kernel " + path + " needs between 1 and " + std::to_string(kMaxComponents) +
                    " components");
      }
      if (layout_.latent != L) throw DimensionError(path + " latent coordinates", L, layout_.latent);
      node.components = L;
      node.latent_begin = layout_.observed;
      node.transform = spec.kind == KernelKind::Factorizing ? LatentTransform::Simplex
                                                            : spec.transform;
      for (std::size_t c = 0; c < spec.children.size(); ++c) {
        const bool weight = juxta && c < L;
        const std::string child_path = path + (weight ? ".w" : ".k") +
                                       std::to_string(juxta && !weight ? c - L : c) + "." +
                                       to_string(spec.children[c].kind);
        node.children.push_back(compile(spec.children[c],
                                        weight ? Context::Weight : Context::Component, child_path));
      }
      break;
    }
  }
  node.param_count = values_.size() - node.param_offset;
  nodes_[index] = std::move(node);
  return index;
}

std::vector<std::string> Kernel::param_names() const { return names_; }

std::vector<double> Kernel::log_params() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](double v) { return std::log(v); });
  return out;
}

void Kernel::set_log_params(std::span<const double> log_values) {
  if (log_values.size() != values_.size()) {
    throw DimensionError("kernel parameter vector", values_.size(), log_values.size());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = std::exp(log_values[i]);
    if (!std::isfinite(v) || !(v > 0.0)) throw Error("non-finite kernel hyperparameter " + names_[i]);
    values_[i] = v;
  }
}

KernelSpec Kernel::spec() const {
  KernelSpec out = template_;
  std::size_t offset = 0;
  auto write = [&](auto&& self, KernelSpec& node) -> void {
    if (node.kind == KernelKind::SquaredExponential || node.kind == KernelKind::Linear ||
        node.kind == KernelKind::WhiteNoise) {
      node.hyperparams["variance"] = {values_[offset++]};
      if (node.kind == KernelKind::SquaredExponential) {
        for (double& l : node.hyperparams["lengthscale"]) l = values_[offset++];
      }
    }
    for (auto& c : node.children) self(self, c);
  };
  write(write, out);
  return out;
}

void Kernel::latent_coordinates(const Node& node, const double* x, double alpha,
                                double* out) const {
  const double* v = x + node.latent_begin;
  if (node.transform == LatentTransform::Simplex) {
    simplex_weights(v, node.components, alpha, out);
  } else {
    std::copy(v, v + node.components, out);
  }
}

void Kernel::latent_vjp(const Node& node, const double* x, const double* coords, const double* g,
                        double alpha, double* d_x) const {
  double* d = d_x + node.latent_begin;
  if (node.transform == LatentTransform::Identity) {
    for (std::size_t l = 0; l < node.components; ++l) d[l] += g[l];
    return;
  }
  // d phi_l / d v_j = alpha * phi_l * (delta_lj - phi_j) / v_j
  const double* v = x + node.latent_begin;
  double dot = 0.0;
  for (std::size_t l = 0; l < node.components; ++l) dot += g[l] * coords[l];
  for (std::size_t j = 0; j < node.components; ++j) {
    if (v[j] > 0.0) d[j] += alpha * coords[j] * (g[j] - dot) / v[j];
  }
}

double Kernel::eval(std::size_t n, const double* a, const double* b, bool same,
                    double alpha) const {
  const Node& node = nodes_[n];
  const double* p = values_.data() + node.param_offset;
  switch (node.kind) {
    case KernelKind::SquaredExponential: {
      double sq = 0.0;
      for (std::size_t d = 0; d < node.width; ++d) {
        const double r = (a[node.begin + d] - b[node.begin + d]) / p[1 + d];
        sq += r * r;
      }
      return p[0] * std::exp(-0.5 * sq);
    }
    case KernelKind::Linear: {
      double dot = 0.0;
      for (std::size_t d = 0; d < node.width; ++d) dot += a[node.begin + d] * b[node.begin + d];
      return p[0] * dot;
    }
    case KernelKind::WhiteNoise:
      return same ? p[0] : 0.0;
    case KernelKind::Sum: {
      double total = 0.0;
      for (auto c : node.children) total += eval(c, a, b, same, alpha);
      return total;
    }
    case KernelKind::Product: {
      double total = 1.0;
      for (auto c : node.children) total *= eval(c, a, b, same, alpha);
      return total;
    }
    case KernelKind::Factorizing: {
      std::array<double, kMaxComponents> wa{}, wb{};
      latent_coordinates(node, a, alpha, wa.data());
      latent_coordinates(node, b, alpha, wb.data());
      double total = 0.0;
      for (std::size_t l = 0; l < node.components; ++l) {
        const double w = wa[l] * wb[l];
        if (w != 0.0) total += w * eval(node.children[l], a, b, same, alpha);
      }
      return total;
    }
    case KernelKind::Juxtaposition: {
      std::array<double, kMaxComponents> ca{}, cb{};
      latent_coordinates(node, a, alpha, ca.data());
      latent_coordinates(node, b, alpha, cb.data());
      const std::size_t L = node.components;
      double total = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        const double w = eval(node.children[l], &ca[l], &cb[l], same, alpha);
        if (w != 0.0) total += w * eval(node.children[L + l], a, b, same, alpha);
      }
      return total;
    }
  }
  throw Error("unsupported kernel kind");
}

void Kernel::accum(std::size_t n, const double* a, const double* b, bool same, double alpha,
                   double scale, double* d_params, double* d_a, double* d_b) const {
  if (scale == 0.0) return;
  const Node& node = nodes_[n];
  const double* p = values_.data() + node.param_offset;
  double* dp = d_params + node.param_offset;
  switch (node.kind) {
    case KernelKind::SquaredExponential: {
      const double k = eval(n, a, b, same, alpha);
      dp[0] += scale * k;
      for (std::size_t d = 0; d < node.width; ++d) {
        const double diff = a[node.begin + d] - b[node.begin + d];
        const double inv = 1.0 / (p[1 + d] * p[1 + d]);
        dp[1 + d] += scale * k * diff * diff * inv;
        const double g = scale * k * diff * inv;
        if (d_a) d_a[node.begin + d] -= g;
        if (d_b) d_b[node.begin + d] += g;
      }
      return;
    }
    case KernelKind::Linear: {
      double dot = 0.0;
      for (std::size_t d = 0; d < node.width; ++d) {
        dot += a[node.begin + d] * b[node.begin + d];
        if (d_a) d_a[node.begin + d] += scale * p[0] * b[node.begin + d];
        if (d_b) d_b[node.begin + d] += scale * p[0] * a[node.begin + d];
      }
      dp[0] += scale * p[0] * dot;
      return;
    }
    case KernelKind::WhiteNoise:
      if (same) dp[0] += scale * p[0];
      return;
    case KernelKind::Sum:
      for (auto c : node.children) accum(c, a, b, same, alpha, scale, d_params, d_a, d_b);
      return;
    case KernelKind::Product: {
      const std::size_t count = node.children.size();
      std::vector<double> values(count), prefix(count + 1, 1.0), suffix(count + 1, 1.0);
      for (std::size_t c = 0; c < count; ++c) values[c] = eval(node.children[c], a, b, same, alpha);
      for (std::size_t c = 0; c < count; ++c) prefix[c + 1] = prefix[c] * values[c];
      for (std::size_t c = count; c > 0; --c) suffix[c - 1] = suffix[c] * values[c - 1];
      for (std::size_t c = 0; c < count; ++c) {
        accum(node.children[c], a, b, same, alpha, scale * prefix[c] * suffix[c + 1], d_params,
              d_a, d_b);
      }
      return;
    }
    case KernelKind::Factorizing: {
      const std::size_t L = node.components;
      std::array<double, kMaxComponents> wa{}, wb{}, ga{}, gb{};
      latent_coordinates(node, a, alpha, wa.data());
      latent_coordinates(node, b, alpha, wb.data());
      for (std::size_t l = 0; l < L; ++l) {
        const double w = wa[l] * wb[l];
        accum(node.children[l], a, b, same, alpha, scale * w, d_params, d_a, d_b);
        if (d_a || d_b) {
          const double k = eval(node.children[l], a, b, same, alpha);
          ga[l] = scale * wb[l] * k;
          gb[l] = scale * wa[l] * k;
        }
      }
      if (d_a) latent_vjp(node, a, wa.data(), ga.data(), alpha, d_a);
      if (d_b) latent_vjp(node, b, wb.data(), gb.data(), alpha, d_b);
      return;
    }
    case KernelKind::Juxtaposition: {
      const std::size_t L = node.components;
      std::array<double, kMaxComponents> ca{}, cb{}, ga{}, gb{};
      latent_coordinates(node, a, alpha, ca.data());
      latent_coordinates(node, b, alpha, cb.data());
      for (std::size_t l = 0; l < L; ++l) {
        const double w = eval(node.children[l], &ca[l], &cb[l], same, alpha);
        const double k = eval(node.children[L + l], a, b, same, alpha);
        accum(node.children[l], &ca[l], &cb[l], same, alpha, scale * k, d_params, &ga[l], &gb[l]);
        accum(node.children[L + l], a, b, same, alpha, scale * w, d_params, d_a, d_b);
      }
      if (d_a) latent_vjp(node, a, ca.data(), ga.data(), alpha, d_a);
      if (d_b) latent_vjp(node, b, cb.data(), gb.data(), alpha, d_b);
      return;
    }
  }
  throw Error("unsupported kernel kind");
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b, bool same,
                          double alpha) const {
  if (a.size() != layout_.extended()) throw DimensionError("kernel input a", layout_.extended(), a.size());
  if (b.size() != layout_.extended()) throw DimensionError("kernel input b", layout_.extended(), b.size());
  return eval(0, a.data(), b.data(), same, alpha);
}

void Kernel::accumulate(std::span<const double> a, std::span<const double> b, bool same,
                        double alpha, double scale, std::span<double> d_params,
                        std::span<double> d_a, std::span<double> d_b) const {
  const std::size_t Q = layout_.extended();
  if (a.size() != Q) throw DimensionError("kernel input a", Q, a.size());
  if (b.size() != Q) throw DimensionError("kernel input b", Q, b.size());
  if (d_params.size() != values_.size()) {
    throw DimensionError("kernel parameter gradient", values_.size(), d_params.size());
  }
  if (!d_a.empty() && d_a.size() != Q) throw DimensionError("input gradient a", Q, d_a.size());
  if (!d_b.empty() && d_b.size() != Q) throw DimensionError("input gradient b", Q, d_b.size());
  accum(0, a.data(), b.data(), same, alpha, scale, d_params.data(),
        d_a.empty() ? nullptr : d_a.data(), d_b.empty() ? nullptr : d_b.data());
}

namespace {

bool rows_equal(const PointMatrix& A, Eigen::Index i, const PointMatrix& B, Eigen::Index j) {
  return (A.row(i).array() == B.row(j).array()).all();
}

bool coincide(SameMode mode, const PointMatrix& A, Eigen::Index i, const PointMatrix& B,
              Eigen::Index j) {
  switch (mode) {
    case SameMode::Never: return false;
    case SameMode::Diagonal: return i == j;
    case SameMode::Equal: return rows_equal(A, i, B, j);
  }
  return false;
}

}  // namespace

Matrix Kernel::cross(const PointMatrix& A, const PointMatrix& B, double alpha,
                     SameMode mode) const {
  const auto Q = static_cast<Eigen::Index>(layout_.extended());
  if (A.cols() != Q) throw DimensionError("kernel input rows", layout_.extended(), A.cols());
  if (B.cols() != Q) throw DimensionError("kernel input rows", layout_.extended(), B.cols());
  Matrix K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = eval(0, A.row(i).data(), B.row(j).data(), coincide(mode, A, i, B, j), alpha);
    }
  }
  return K;
}

Vector Kernel::diagonal(const PointMatrix& A, double alpha, bool with_white) const {
  const auto Q = static_cast<Eigen::Index>(layout_.extended());
  if (A.cols() != Q) throw DimensionError("kernel input rows", layout_.extended(), A.cols());
  Vector d(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    d(i) = eval(0, A.row(i).data(), A.row(i).data(), with_white, alpha);
  }
  return d;
}

void Kernel::cross_vjp(const PointMatrix& A, const PointMatrix& B, double alpha, SameMode mode,
                       const Matrix& G, std::span<double> d_params, PointMatrix* dA,
                       PointMatrix* dB) const {
  if (G.rows() != A.rows() || G.cols() != B.rows()) {
    throw DimensionError("cotangent matrix rows", static_cast<std::size_t>(A.rows()),
                         static_cast<std::size_t>(G.rows()));
  }
  if (d_params.size() != values_.size()) {
    throw DimensionError("kernel parameter gradient", values_.size(), d_params.size());
  }
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      accum(0, A.row(i).data(), B.row(j).data(), coincide(mode, A, i, B, j), alpha, G(i, j),
            d_params.data(), dA ? dA->row(i).data() : nullptr, dB ? dB->row(j).data() : nullptr);
    }
  }
}

void Kernel::diagonal_vjp(const PointMatrix& A, double alpha, bool with_white, const Vector& g,
                          std::span<double> d_params, PointMatrix* dA) const {
  if (g.size() != A.rows()) {
    throw DimensionError("diagonal cotangent", static_cast<std::size_t>(A.rows()),
                         static_cast<std::size_t>(g.size()));
  }
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double* row = dA ? dA->row(i).data() : nullptr;
    accum(0, A.row(i).data(), A.row(i).data(), with_white, alpha, g(i), d_params.data(), row, row);
  }
}

namespace {

Layout layout_of(const ExtendedInput& x) { return Layout{x.observed.size(), x.latent.size()}; }

std::vector<double> flatten(const ExtendedInput& x) {
  std::vector<double> out(x.observed);
  out.insert(out.end(), x.latent.begin(), x.latent.end());
  return out;
}

PointMatrix stack(std::span<const ExtendedInput> points, const Layout& layout) {
  PointMatrix M(static_cast<Eigen::Index>(points.size()),
                static_cast<Eigen::Index>(layout.extended()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].observed.size() != layout.observed) {
      throw DimensionError("observed input", layout.observed, points[i].observed.size());
    }
    if (points[i].latent.size() != layout.latent) {
      throw DimensionError("latent input", layout.latent, points[i].latent.size());
    }
    const auto row = flatten(points[i]);
    for (std::size_t q = 0; q < row.size(); ++q) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = row[q];
  }
  return M;
}

Layout common_layout(std::span<const ExtendedInput> A, std::span<const ExtendedInput> B) {
  if (!A.empty()) return layout_of(A.front());
  if (!B.empty()) return layout_of(B.front());
  return Layout{};
}

}  // namespace

double eval_kernel(const KernelSpec& spec, const ExtendedInput& a, const ExtendedInput& b,
                   double alpha) {
  const Layout layout = layout_of(a);
  if (b.observed.size() != layout.observed) {
    throw DimensionError("observed input b", layout.observed, b.observed.size());
  }
  if (b.latent.size() != layout.latent) {
    throw DimensionError("latent input b", layout.latent, b.latent.size());
  }
  const Kernel kernel(spec, layout);
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  return kernel(fa, fb, fa == fb, alpha);
}

Matrix kernel_matrix(const KernelSpec& spec, std::span<const ExtendedInput> A,
                     std::span<const ExtendedInput> B, double alpha) {
  const Layout layout = common_layout(A, B);
  const Kernel kernel(spec, layout);
  return kernel.cross(stack(A, layout), stack(B, layout), alpha, SameMode::Equal);
}

double juxtaposition_eval(std::span<const KernelSpec> weight_kernels,
                          std::span<const KernelSpec> component_kernels, const ExtendedInput& a,
                          const ExtendedInput& b, double alpha) {
  if (weight_kernels.size() != component_kernels.size()) {
    throw DimensionError("juxtaposition weight kernels", component_kernels.size(),
                         weight_kernels.size());
  }
  const auto spec = KernelSpec::juxtaposition(
      std::vector<KernelSpec>(weight_kernels.begin(), weight_kernels.end()),
      std::vector<KernelSpec>(component_kernels.begin(), component_kernels.end()),
      LatentTransform::Identity);
  return eval_kernel(spec, a, b, alpha);
}

KernelGradients kernel_gradients(const KernelSpec& spec, std::span<const ExtendedInput> A,
                                 std::span<const ExtendedInput> B, double alpha) {
  const Layout layout = common_layout(A, B);
  const Kernel kernel(spec, layout);
  const PointMatrix PA = stack(A, layout);
  const PointMatrix PB = stack(B, layout);
  const auto n_a = PA.rows();
  const auto n_b = PB.rows();
  const std::size_t H = kernel.num_params();
  const std::size_t Q = layout.extended();

  KernelGradients out;
  out.names = kernel.param_names();
  out.hyper.assign(H, Matrix::Zero(n_a, n_b));
  out.latent_a.assign(layout.latent, Matrix::Zero(n_a, n_b));
  out.latent_b.assign(layout.latent, Matrix::Zero(n_a, n_b));

  std::vector<double> dp(H), da(Q), db(Q);
  for (Eigen::Index i = 0; i < n_a; ++i) {
    for (Eigen::Index j = 0; j < n_b; ++j) {
      std::fill(dp.begin(), dp.end(), 0.0);
      std::fill(da.begin(), da.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      const bool same = rows_equal(PA, i, PB, j);
      kernel.accumulate({PA.row(i).data(), Q}, {PB.row(j).data(), Q}, same, alpha, 1.0, dp, da, db);
      for (std::size_t p = 0; p < H; ++p) out.hyper[p](i, j) = dp[p];
      for (std::size_t l = 0; l < layout.latent; ++l) {
        out.latent_a[l](i, j) = da[layout.observed + l];
        out.latent_b[l](i, j) = db[layout.observed + l];
      }
    }
  }
  return out;
}

}  // namespace lgpr
