#pragma once

#include "lgpr/data.hpp"
#include "lgpr/objective.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lgpr {

struct TrainConfig {
  std::size_t components = 1;  // L
  std::size_t inducing = 20;   // M, at most N
  std::size_t samples = 1;     // T
  std::size_t iterations = 1000;
  double step_size = 1e-2;
  AnnealingSchedule annealing;
  std::uint64_t seed = 0;
  PsiMode psi = PsiMode::MonteCarlo;
  // Full model kernel. Hyperparameter values are replaced by data-driven
  // defaults unless keep_hyperparameters is set.
  KernelSpec kernel;
  bool keep_hyperparameters = false;

  void validate() const;
};

// Kernel for L components: factorizing over component templates (one template
// repeated when a single one is given).
KernelSpec factorizing_model(const std::vector<KernelSpec>& component_templates,
                             std::size_t components);

// Squared-exponential over every extended column.
KernelSpec extended_se_model(std::size_t observed, std::size_t latent);

struct TracePoint {
  std::uint64_t iteration = 0;
  double bound = 0.0;
  double alpha = 0.0;
};

// Adam moments over the packed parameter vector. Together with theta this is
// everything needed to resume a run bitwise.
struct OptimizerState {
  Vector theta;
  Vector m;
  Vector v;
  std::uint64_t steps = 0;  // accepted Adam updates
  double step_size = 1e-2;
  std::uint64_t next_iteration = 0;
};

struct TrainedModel {
  KernelSpec spec;          // final hyperparameters
  VariationalState state;   // final
  double alpha_final = 1.0;
  std::vector<TracePoint> bound_trace;
  std::vector<int> hard_assignments;
  Matrix X;  // training data, kept for prediction
  Matrix Y;
  OptimizerState optimizer;

  std::size_t components() const { return state.layout.latent; }
};

// Initial variational state and kernel hyperparameters. Throws when M > N.
std::pair<VariationalState, KernelSpec> initialize(const Dataset& data, const TrainConfig& config);

// Argmax over components of the mapped latent means, which is also the argmax
// of their simplex transform at any alpha.
std::vector<int> hard_assignments(const VariationalState& state, const KernelSpec& spec);

struct Progress {
  std::uint64_t iteration = 0;
  double bound = 0.0;
  double alpha = 0.0;
  double step_size = 0.0;
};
using ProgressFn = std::function<void(const Progress&)>;

// Maximises the bound with Adam for config.iterations steps.
TrainedModel train(const Dataset& data, const TrainConfig& config, const ProgressFn& progress = {});

// Continues a run until `until` iterations have been taken in total. A run
// resumed from a checkpoint reproduces the uninterrupted one bitwise.
TrainedModel resume(const Dataset& data, const TrainConfig& config, TrainedModel model,
                    std::size_t until, const ProgressFn& progress = {});

// Per-iteration draw seed, a fixed mix of the run seed and the iteration.
std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t iteration);

struct GroupError {
  std::string name;
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
};

struct GradientReport {
  std::vector<GroupError> groups;
  double max_relative_error = 0.0;
};

// |a - n| / max(|a|, |n|, floor), floor = 1e-6 * max(1, |bound|): below that
// scale central differences are dominated by rounding in the bound itself.
double gradient_relative_error(double analytic, double numeric, double bound);

// Analytic gradient of the frozen-sample bound at the initial state against
// central differences with step h, per parameter group.
GradientReport gradient_check(const Dataset& data, const TrainConfig& config, double h = 1e-5,
                              double alpha = 1.0);

// Same check at an explicit parameter vector.
GradientReport gradient_check(const Objective& objective, const Vector& theta, double alpha,
                              std::uint64_t seed, double h);

// Checkpoint JSON: config, kernel, parameters, optimizer moments, trace.
std::string checkpoint_to_json(const TrainedModel& model, const TrainConfig& config);
std::pair<TrainedModel, TrainConfig> checkpoint_from_json(const std::string& text);
void save_checkpoint(const TrainedModel& model, const TrainConfig& config, const std::string& path);
std::pair<TrainedModel, TrainConfig> load_checkpoint(const std::string& path);

std::string train_config_to_json(const TrainConfig& config);

}  // namespace lgpr
