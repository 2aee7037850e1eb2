#include "lgpr/optimize.hpp"

#include "json_convert.hpp"

#include <fstream>
#include <sstream>

namespace lgpr {

namespace {

using nlohmann::ordered_json;

std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ordered_json config_value(const TrainConfig& c) {
  ordered_json j;
  j["components"] = c.components;
  j["inducing"] = c.inducing;
  j["samples"] = c.samples;
  j["iterations"] = c.iterations;
  j["step_size"] = c.step_size;
  j["alpha0"] = c.annealing.alpha0;
  j["alpha_growth"] = c.annealing.growth;
  j["alpha_max"] = c.annealing.alpha_max;
  j["seed"] = c.seed;
  j["psi"] = to_string(c.psi);
  j["keep_hyperparameters"] = c.keep_hyperparameters;
  j["kernel"] = detail::kernel_to_value(c.kernel);
  return j;
}

TrainConfig config_from_value(const nlohmann::json& j) {
  TrainConfig c;
  c.components = j.at("components").get<std::size_t>();
  c.inducing = j.at("inducing").get<std::size_t>();
  c.samples = j.at("samples").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.step_size = j.at("step_size").get<double>();
  c.annealing.alpha0 = j.at("alpha0").get<double>();
  c.annealing.growth = j.at("alpha_growth").get<double>();
  c.annealing.alpha_max = j.at("alpha_max").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.psi = psi_mode_from_string(j.at("psi").get<std::string>());
  c.keep_hyperparameters = j.at("keep_hyperparameters").get<bool>();
  c.kernel = detail::kernel_from_value(j.at("kernel"));
  return c;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config) {
  return config_value(config).dump(2);
}

std::string checkpoint_to_json(const TrainedModel& model, const TrainConfig& config) {
  ordered_json j;
  j["format"] = "lgpr-checkpoint";
  j["version"] = 1;
  j["config"] = config_value(config);
  j["kernel"] = detail::kernel_to_value(model.spec);
  j["alpha"] = model.alpha_final;
  j["iteration"] = model.state.iteration;
  j["seed"] = config.seed;
  j["layout"] = {{"observed", model.state.layout.observed}, {"latent", model.state.layout.latent}};
  j["noise_var"] = model.state.noise_var;
  j["mu"] = detail::matrix_to_value(model.state.mu);
  j["s"] = detail::matrix_to_value(model.state.s);
  j["Z"] = detail::matrix_to_value(model.state.Z);
  j["hard_assignments"] = model.hard_assignments;
  j["data"] = {{"X", detail::matrix_to_value(model.X)}, {"Y", detail::matrix_to_value(model.Y)}};
  const auto& opt = model.optimizer;
  j["optimizer"] = {{"theta", to_vector(opt.theta)}, {"m", to_vector(opt.m)},
                    {"v", to_vector(opt.v)},         {"steps", opt.steps},
                    {"step_size", opt.step_size},    {"next_iteration", opt.next_iteration}};
  ordered_json trace = ordered_json::array();
  for (const auto& p : model.bound_trace) trace.push_back({p.iteration, p.bound, p.alpha});
  j["trace"] = std::move(trace);
  return j.dump(1);
}

std::pair<TrainedModel, TrainConfig> checkpoint_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "lgpr-checkpoint") throw Error("not a model checkpoint");
    TrainConfig config = config_from_value(j.at("config"));
    TrainedModel model;
    model.spec = detail::kernel_from_value(j.at("kernel"));
    model.alpha_final = j.at("alpha").get<double>();
    model.state.layout.observed = j.at("layout").at("observed").get<std::size_t>();
    model.state.layout.latent = j.at("layout").at("latent").get<std::size_t>();
    model.state.iteration = j.at("iteration").get<std::uint64_t>();
    model.state.noise_var = j.at("noise_var").get<double>();
    model.state.mu = detail::matrix_from_value(j.at("mu"));
    model.state.s = detail::matrix_from_value(j.at("s"));
    model.state.Z = detail::matrix_from_value(j.at("Z"));
    model.state.validate();
    model.hard_assignments = j.at("hard_assignments").get<std::vector<int>>();
    model.X = detail::matrix_from_value(j.at("data").at("X"));
    model.Y = detail::matrix_from_value(j.at("data").at("Y"));
    const auto& o = j.at("optimizer");
    model.optimizer.theta = from_vector(o.at("theta").get<std::vector<double>>());
    model.optimizer.m = from_vector(o.at("m").get<std::vector<double>>());
    model.optimizer.v = from_vector(o.at("v").get<std::vector<double>>());
    model.optimizer.steps = o.at("steps").get<std::uint64_t>();
    model.optimizer.step_size = o.at("step_size").get<double>();
    model.optimizer.next_iteration = o.at("next_iteration").get<std::uint64_t>();
    for (const auto& p : j.at("trace")) {
      model.bound_trace.push_back(
          {p.at(0).get<std::uint64_t>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
    return {std::move(model), std::move(config)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const TrainConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << checkpoint_to_json(model, config) << '\n';
  if (!out) throw Error("failed writing " + path);
}

std::pair<TrainedModel, TrainConfig> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace lgpr
