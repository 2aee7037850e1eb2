#include "lgpr/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace lgpr {

void TrainConfig::validate() const {
  if (components < 1) throw Error("component count must be at least 1");
  if (components > kMaxComponents) {
    throw Error("component count " + std::to_string(components) + " exceeds the maximum of " +
                std::to_string(kMaxComponents));
  }
  if (inducing < 1) throw Error("inducing count must be at least 1");
  if (samples < 1) throw Error("sample count must be at least 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw Error("step size must be positive");
  if (!(annealing.alpha0 > 0.0) || !(annealing.growth > 0.0) || !(annealing.alpha_max > 0.0)) {
    throw Error("annealing parameters must be positive");
  }
}

KernelSpec factorizing_model(const std::vector<KernelSpec>& component_templates,
                             std::size_t components) {
  if (component_templates.empty()) throw Error("factorizing model needs a component kernel");
  if (component_templates.size() != 1 && component_templates.size() != components) {
    throw DimensionError("component kernels", components, component_templates.size());
  }
  std::vector<KernelSpec> children;
  for (std::size_t l = 0; l < components; ++l) {
    children.push_back(component_templates.size() == 1 ? component_templates.front()
                                                       : component_templates[l]);
  }
  return KernelSpec::factorizing(std::move(children));
}

KernelSpec extended_se_model(std::size_t observed, std::size_t latent) {
  return KernelSpec::squared_exponential(1.0, std::vector<double>(observed + latent, 1.0),
                                         InputScope::Extended);
}

namespace {

enum class Slot { Root, Component, Weight };

struct InitScales {
  std::vector<double> input_std;  // per observed column
  std::size_t latent = 0;
  double output_var = 1.0;
};

void init_hyperparameters(KernelSpec& spec, Slot slot, const InitScales& scales) {
  switch (spec.kind) {
    case KernelKind::SquaredExponential:
    case KernelKind::Linear: {
      std::vector<double> ls;
      if (slot == Slot::Weight) {
        ls = {1.0};
      } else {
        const InputScope scope = slot == Slot::Component ? InputScope::Observed : spec.scope;
        if (scope != InputScope::Latent) ls = scales.input_std;
        // Latent coordinates live on a unit scale under the prior.
        if (scope != InputScope::Observed) ls.insert(ls.end(), scales.latent, 1.0);
      }
      spec.hyperparams["variance"] = {slot == Slot::Weight ? 1.0 : scales.output_var};
      if (spec.kind == KernelKind::SquaredExponential) spec.hyperparams["lengthscale"] = ls;
      break;
    }
    case KernelKind::WhiteNoise:
      spec.hyperparams["variance"] = {0.1 * scales.output_var};
      break;
    case KernelKind::Sum:
    case KernelKind::Product:
      for (auto& c : spec.children) init_hyperparameters(c, slot, scales);
      break;
    case KernelKind::Factorizing:
      for (auto& c : spec.children) init_hyperparameters(c, Slot::Component, scales);
      break;
    case KernelKind::Juxtaposition: {
      const std::size_t L = spec.children.size() / 2;
      for (std::size_t c = 0; c < spec.children.size(); ++c) {
        init_hyperparameters(spec.children[c], c < L ? Slot::Weight : Slot::Component, scales);
      }
      break;
    }
  }
}

double output_variance(const Matrix& Y) {
  if (Y.rows() == 0) return 1e-6;
  double total = 0.0;
  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    const double mean = Y.col(c).mean();
    total += (Y.col(c).array() - mean).square().mean();
  }
  return std::max(1e-6, total / static_cast<double>(Y.cols()));
}

}  // namespace

std::pair<VariationalState, KernelSpec> initialize(const Dataset& data, const TrainConfig& config) {
  data.validate();
  config.validate();
  const std::size_t N = data.size();
  if (config.inducing > N) {
    throw Error("inducing count " + std::to_string(config.inducing) + " exceeds data count " +
                std::to_string(N));
  }
  const auto D = static_cast<Eigen::Index>(data.input_dim());
  const auto L = static_cast<Eigen::Index>(config.components);

  InitScales scales;
  scales.latent = config.components;
  scales.output_var = output_variance(data.Y);
  for (Eigen::Index j = 0; j < D; ++j) {
    const double mean = data.X.col(j).mean();
    const double sd = std::sqrt((data.X.col(j).array() - mean).square().mean());
    scales.input_std.push_back(sd > 0.0 ? sd : 1.0);
  }
  KernelSpec spec = config.kernel;
  if (!config.keep_hyperparameters) init_hyperparameters(spec, Slot::Root, scales);

  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> unit(0.4, 0.6);
  VariationalState state;
  state.layout = Layout{static_cast<std::size_t>(D), config.components};
  const auto n = static_cast<Eigen::Index>(N);
  state.mu.resize(n, D + L);
  state.s = Matrix::Zero(n, D + L);
  state.mu.leftCols(D) = data.X;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < L; ++l) {
      state.mu(i, D + l) = unit(gen);
      state.s(i, D + l) = 0.1;
    }
  }
  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), gen);
  state.Z.resize(static_cast<Eigen::Index>(config.inducing), D + L);
  for (Eigen::Index m = 0; m < state.Z.rows(); ++m) {
    state.Z.row(m) = state.mu.row(order[static_cast<std::size_t>(m)]);
  }
  state.noise_var = 0.1 * scales.output_var;
  state.iteration = 0;
  state.validate();
  // Fails early on a kernel that does not fit the layout.
  const Kernel check(spec, state.layout);
  return {std::move(state), std::move(spec)};
}

std::vector<int> hard_assignments(const VariationalState& state, const KernelSpec& spec) {
  const auto D = static_cast<Eigen::Index>(state.layout.observed);
  const auto L = static_cast<Eigen::Index>(state.layout.latent);
  const LatentMap map = latent_map_for(spec);
  std::vector<int> out(state.num_points(), 0);
  if (L == 0) return out;
  for (Eigen::Index i = 0; i < state.mu.rows(); ++i) {
    Eigen::Index best = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < L; ++l) {
      const double raw = state.mu(i, D + l);
      const double v = map == LatentMap::Softplus ? softplus(raw) : raw;
      if (v > top) {
        top = v;
        best = l;
      }
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t iteration) {
  // splitmix64 finaliser over a Weyl step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;
constexpr double kLogBound = 12.0;
constexpr int kMaxRejections = 10;

void adam_ascent(OptimizerState& opt, const Vector& grad, std::size_t clamped) {
  ++opt.steps;
  opt.m = kBeta1 * opt.m + (1.0 - kBeta1) * grad;
  opt.v = kBeta2 * opt.v + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.steps));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.steps));
  for (Eigen::Index p = 0; p < opt.theta.size(); ++p) {
    const double m_hat = opt.m(p) / c1;
    const double v_hat = opt.v(p) / c2;
    opt.theta(p) += opt.step_size * m_hat / (std::sqrt(v_hat) + kEpsilon);
  }
  for (std::size_t p = 0; p < clamped; ++p) {
    auto& x = opt.theta(static_cast<Eigen::Index>(p));
    x = std::clamp(x, -kLogBound, kLogBound);
  }
}

Objective make_objective(const Dataset& data, const TrainConfig& config, const KernelSpec& spec) {
  return Objective(data.X, data.Y, spec, config.components, config.inducing, config.psi,
                   config.samples);
}

}  // namespace

TrainedModel resume(const Dataset& data, const TrainConfig& config, TrainedModel model,
                    std::size_t until, const ProgressFn& progress) {
  config.validate();
  const Objective objective = make_objective(data, config, model.spec);
  // Log-hyperparameters and log noise sit at the front of theta.
  const std::size_t clamped = objective.groups()[0].count + 1;
  OptimizerState& opt = model.optimizer;
  if (static_cast<std::size_t>(opt.theta.size()) != objective.size()) {
    throw DimensionError("optimizer parameters", objective.size(), opt.theta.size());
  }

  struct Snapshot {
    Vector theta, m, v, grad;
    std::uint64_t steps = 0;
    bool valid = false;
  } previous;

  const std::uint64_t start = opt.next_iteration;
  int rejections = 0;
  Vector grad;
  while (opt.next_iteration < until) {
    const std::uint64_t t = opt.next_iteration;
    const double alpha = config.annealing(t);
    double value = 0.0;
    bool ok = true;
    try {
      value = objective.evaluate(opt.theta, alpha, iteration_seed(config.seed, t), &grad);
      ok = std::isfinite(value) && grad.allFinite();
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      if (++rejections >= kMaxRejections) {
        throw Error("training failed at iteration " + std::to_string(t) + ": bound not finite after " +
                    std::to_string(kMaxRejections) + " step-size reductions");
      }
      opt.step_size *= 0.5;
      if (previous.valid) {
        opt.theta = previous.theta;
        opt.m = previous.m;
        opt.v = previous.v;
        opt.steps = previous.steps;
        adam_ascent(opt, previous.grad, clamped);
      }
      continue;
    }
    rejections = 0;
    model.bound_trace.push_back({t, value, alpha});
    if (progress) progress({t, value, alpha, opt.step_size});
    previous = {opt.theta, opt.m, opt.v, grad, opt.steps, true};
    adam_ascent(opt, grad, clamped);
    opt.next_iteration = t + 1;
  }

  if (opt.next_iteration > start) {
    model.spec = objective.unpack_kernel(opt.theta);
    model.state = objective.unpack_state(opt.theta);
    model.alpha_final = config.annealing(opt.next_iteration - 1);
  }
  model.state.iteration = opt.next_iteration;
  model.hard_assignments = hard_assignments(model.state, model.spec);
  return model;
}

TrainedModel train(const Dataset& data, const TrainConfig& config, const ProgressFn& progress) {
  auto [state, spec] = initialize(data, config);
  const Objective objective = make_objective(data, config, spec);
  TrainedModel model;
  model.optimizer.theta = objective.pack(spec, state);
  model.optimizer.m = Vector::Zero(model.optimizer.theta.size());
  model.optimizer.v = Vector::Zero(model.optimizer.theta.size());
  model.optimizer.step_size = config.step_size;
  model.spec = std::move(spec);
  model.state = std::move(state);
  model.alpha_final = config.annealing(0);
  model.X = data.X;
  model.Y = data.Y;
  return resume(data, config, std::move(model), config.iterations, progress);
}

double gradient_relative_error(double analytic, double numeric, double bound) {
  const double floor = 1e-6 * std::max(1.0, std::abs(bound));
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradientReport gradient_check(const Objective& objective, const Vector& theta, double alpha,
                              std::uint64_t seed, double h) {
  Vector grad;
  const double value = objective.evaluate(theta, alpha, seed, &grad);
  GradientReport report;
  Vector probe = theta;
  for (const auto& group : objective.groups()) {
    GroupError err;
    err.name = group.name;
    for (std::size_t k = 0; k < group.count; ++k) {
      const auto p = static_cast<Eigen::Index>(group.begin + k);
      probe(p) = theta(p) + h;
      const double up = objective.evaluate(probe, alpha, seed, nullptr);
      probe(p) = theta(p) - h;
      const double down = objective.evaluate(probe, alpha, seed, nullptr);
      probe(p) = theta(p);
      const double numeric = (up - down) / (2.0 * h);
      err.max_relative_error =
          std::max(err.max_relative_error, gradient_relative_error(grad(p), numeric, value));
      err.max_abs_analytic = std::max(err.max_abs_analytic, std::abs(grad(p)));
      err.max_abs_numeric = std::max(err.max_abs_numeric, std::abs(numeric));
    }
    report.max_relative_error = std::max(report.max_relative_error, err.max_relative_error);
    report.groups.push_back(std::move(err));
  }
  return report;
}

GradientReport gradient_check(const Dataset& data, const TrainConfig& config, double h,
                              double alpha) {
  const auto [state, spec] = initialize(data, config);
  const Objective objective = make_objective(data, config, spec);
  return gradient_check(objective, objective.pack(spec, state), alpha,
                        iteration_seed(config.seed, 0), h);
}

}  // namespace lgpr
