#include "artifacts.hpp"
#include "kernel_flags.hpp"
#include "svg.hpp"

#include <lgpr/data.hpp>
#include <lgpr/optimize.hpp>
#include <lgpr/parallel.hpp>
#include <lgpr/predict.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace lgpr;
using namespace lgpr::tool;
using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

// Misuse of the command line that parsing alone cannot catch. Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// key = value lines (TOML subset) whose keys are the subcommand's long flag
// names. Values fill only options absent from the command line.
void apply_config(CLI::App* sub, const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path);
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    const std::string key = item.fullname();
    if (key == "config") throw UsageError("config files cannot include other config files");
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

std::vector<std::size_t> parse_size_list(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream in(list);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || v == 0) {
      throw UsageError("expected a comma-separated list of positive integers, got '" + list + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t steps = 0;

  double at(std::size_t i) const {
    return steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
};

Axis parse_axis(const std::string& spec) {
  Axis a;
  char tail = 0;
  unsigned long steps = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lu%c", &a.lo, &a.hi, &steps, &tail) != 3 || steps == 0 ||
      !(a.lo <= a.hi)) {
    throw UsageError("grid axis must be min:max:steps with min <= max and steps >= 1, got '" +
                     spec + "'");
  }
  a.steps = steps;
  return a;
}

// One axis per input dimension, or a single axis used for all of them. The
// first dimension varies fastest.
std::pair<Matrix, std::vector<Axis>> grid_points(const std::vector<std::string>& specs,
                                                 std::size_t dims) {
  std::vector<Axis> axes;
  for (const auto& s : specs) axes.push_back(parse_axis(s));
  if (axes.size() == 1 && dims > 1) axes.assign(dims, axes.front());
  if (axes.size() != dims) throw DimensionError("grid axes", dims, axes.size());
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.steps;
  Matrix X(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dims));
  for (std::size_t r = 0; r < total; ++r) {
    std::size_t rem = r;
    for (std::size_t d = 0; d < dims; ++d) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = axes[d].at(rem % axes[d].steps);
      rem /= axes[d].steps;
    }
  }
  return {X, axes};
}

// Query inputs from a CSV with columns x0, x1, ...; other columns are ignored.
Matrix query_points(const std::string& path, std::size_t dims) {
  const Table t = read_csv(path);
  std::size_t found = 0;
  while (t.has_column("x" + std::to_string(found))) ++found;
  if (found != dims) throw DimensionError(path + ": query input columns", dims, found);
  Matrix X(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(dims));
  for (std::size_t d = 0; d < dims; ++d) {
    const auto col = t.numbers("x" + std::to_string(d));
    for (std::size_t r = 0; r < col.size(); ++r) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = col[r];
    }
  }
  return X;
}

std::vector<double> column(const Matrix& M, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(M.rows()));
  for (Eigen::Index r = 0; r < M.rows(); ++r) out[static_cast<std::size_t>(r)] = M(r, c);
  return out;
}

void write_text(const std::string& path, const std::string& text, Manifest& manifest) {
  write_file_atomic(path, text);
  manifest.add_output(path);
}

void write_table(const std::string& path, const Table& table, Manifest& manifest) {
  write_csv(table, path);
  manifest.add_output(path);
}

// Mixture figure for 1-D inputs, first output: data, component bands over a
// grid spanning the data, probabilities below.
MixtureFigure model_figure(const TrainedModel& model, const std::string& title) {
  MixtureFigure fig;
  fig.title = title;
  fig.train_x = column(model.X, 0);
  fig.train_y = column(model.Y, 0);
  fig.train_component = model.hard_assignments;
  const Predictor predictor(model);
  const double lo = model.X.col(0).minCoeff(), hi = model.X.col(0).maxCoeff();
  const std::size_t steps = 200;
  const std::size_t L = predictor.components();
  fig.mean.assign(L, {});
  fig.sd.assign(L, {});
  fig.prob.assign(L, {});
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    fig.grid.push_back(x);
    const auto p = predictor.predict(Vector::Constant(1, x));
    for (std::size_t l = 0; l < L; ++l) {
      fig.mean[l].push_back(p.mean[l](0));
      fig.sd[l].push_back(p.stddev[l](0));
      fig.prob[l].push_back(p.probability(static_cast<Eigen::Index>(l)));
    }
  }
  return fig;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string name;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string plot;
};

int cmd_synth(const SynthOptions& o, const std::vector<std::string>& argv) {
  if (!is_generator(o.name)) {
    throw UsageError("unknown dataset '" + o.name + "' (expected antiphase, hetero, sshape or gpdraws)");
  }
  const std::string out = o.out.empty() ? o.name + ".csv" : o.out;
  Manifest manifest("synth", argv);
  manifest.set_seed(o.seed);
  manifest.set_config(ojson{{"dataset", o.name}, {"n", o.n}, {"seed", o.seed}, {"out", out}});

  const auto t0 = Clock::now();
  const Dataset data = generate(o.name, o.n, o.seed);
  manifest.add_timing("generate", seconds_since(t0));

  write_dataset_csv(data, out);
  manifest.add_output(out);
  const std::string meta = sibling_path(out, ".meta.json");
  write_dataset_meta(data, meta);
  manifest.add_output(meta);

  if (!o.plot.empty()) {
    std::string svg;
    if (data.output_dim() > 1) {
      std::vector<LineSeries> series;
      const auto x = column(data.X, 0);
      for (Eigen::Index p = 0; p < data.Y.cols(); ++p) series.push_back({"", x, column(data.Y, p)});
      svg = render_lines(o.name, "x", "y", series);
    } else if (data.input_dim() == 1) {
      MixtureFigure fig;
      fig.title = o.name;
      fig.train_x = column(data.X, 0);
      fig.train_y = column(data.Y, 0);
      fig.train_component = data.labels;
      svg = render_mixture(fig);
    }
    write_text(o.plot, svg, manifest);
  }
  manifest.write(sibling_path(out, ".manifest.json"));
  std::cout << "wrote " << data.size() << " rows to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string jura;
  std::string element = "Co";
  std::string out = "model.json";
  std::size_t components = 1;
  std::size_t inducing = 20;
  std::size_t samples = 1;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  double step_size = 1e-2;
  std::string psi = "mc";
  double alpha0 = 1.0;
  double alpha_growth = 1.005;
  double alpha_max = 50.0;
  std::string kernel = "factorizing";
  std::string component_kernels = "se";
  std::string kernel_file;
  bool keep_hyperparameters = false;
  std::string resume;
  std::string plot;
  bool quiet = false;
};

Dataset load_training_data(const TrainOptions& o) {
  if (!o.jura.empty()) return load_jura(o.jura, o.element);
  Dataset data = read_dataset_csv(o.data);
  const std::string meta = sibling_path(o.data, ".meta.json");
  if (std::filesystem::exists(meta)) read_dataset_meta(meta, data);
  return data;
}

TrainConfig resolve_train_config(const TrainOptions& o, std::size_t observed) {
  TrainConfig c;
  c.components = o.components;
  c.inducing = o.inducing;
  c.samples = o.samples;
  c.iterations = o.iterations;
  c.step_size = o.step_size;
  c.seed = o.seed;
  c.annealing = {o.alpha0, o.alpha_growth, o.alpha_max};
  c.keep_hyperparameters = o.keep_hyperparameters;
  c.psi = psi_mode_from_string(o.psi);

  if (!o.kernel_file.empty()) {
    c.kernel = kernel_from_json(read_file(o.kernel_file));
    const std::size_t needed = required_latent_count(c.kernel);
    if (needed > c.components) {
      throw UsageError("kernel file reads " + std::to_string(needed) + " latent columns but --components is " +
                       std::to_string(c.components));
    }
    if (c.psi == PsiMode::Analytic &&
        !(c.kernel.kind == KernelKind::SquaredExponential && c.kernel.scope == InputScope::Extended)) {
      throw UsageError("--psi analytic needs a single squared-exponential kernel over all columns");
    }
  } else if (o.kernel == "se") {
    c.kernel = extended_se_model(observed, c.components);
  } else {
    if (c.psi == PsiMode::Analytic) {
      throw UsageError("--psi analytic is only available with --kernel se");
    }
    auto templates = parse_component_kernels(o.component_kernels, observed);
    if (templates.size() != 1 && templates.size() != c.components) {
      throw UsageError("--component-kernels gives " + std::to_string(templates.size()) +
                       " kernels for " + std::to_string(c.components) + " components");
    }
    c.kernel = factorizing_model(templates, c.components);
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

int cmd_train(const TrainOptions& o, const std::vector<std::string>& argv) {
  const int sources = !o.data.empty() + !o.jura.empty() + !o.resume.empty();
  if (sources != 1) throw UsageError("give exactly one of --data, --jura or --resume");
  if (o.psi != "mc" && o.psi != "analytic") throw UsageError("--psi must be mc or analytic");
  if (o.kernel != "factorizing" && o.kernel != "se") {
    throw UsageError("--kernel must be factorizing or se");
  }

  Manifest manifest("train", argv);
  const auto t0 = Clock::now();
  ProgressFn progress;
  if (!o.quiet) {
    progress = [](const Progress& p) {
      if (p.iteration % 100 == 0) {
        std::fprintf(stderr, "iter %6llu  bound %.6g  alpha %.4g\n",
                     static_cast<unsigned long long>(p.iteration), p.bound, p.alpha);
      }
    };
  }

  TrainedModel model;
  TrainConfig config;
  std::string dataset_name, meta_path;
  if (!o.resume.empty()) {
    auto [loaded, cfg] = load_checkpoint(o.resume);
    manifest.add_input(o.resume);
    config = cfg;
    config.iterations = o.iterations;
    Dataset data;
    data.X = loaded.X;
    data.Y = loaded.Y;
    dataset_name = "checkpoint";
    model = resume(data, config, std::move(loaded), config.iterations, progress);
  } else {
    Dataset data = load_training_data(o);
    manifest.add_input(o.jura.empty() ? o.data : o.jura);
    dataset_name = data.name;
    config = resolve_train_config(o, data.input_dim());
    if (config.inducing > data.size()) {
      throw UsageError("--inducing " + std::to_string(config.inducing) + " exceeds the " +
                       std::to_string(data.size()) + " data points");
    }
    model = train(data, config, progress);
    if (!o.jura.empty()) {
      // standardisation moments, to map grids and predictions back to raw units
      meta_path = sibling_path(o.out, ".data.meta.json");
      write_dataset_meta(data, meta_path);
    }
  }
  manifest.add_timing("train", seconds_since(t0));
  manifest.set_seed(config.seed);
  ojson resolved = ojson::parse(train_config_to_json(config));
  resolved["dataset"] = dataset_name;
  manifest.set_config(resolved);

  save_checkpoint(model, config, o.out);
  manifest.add_output(o.out);
  if (!meta_path.empty()) manifest.add_output(meta_path);

  Table trace;
  trace.header = {"iteration", "bound", "alpha"};
  for (const auto& tp : model.bound_trace) {
    trace.add_row({std::to_string(tp.iteration), format_number(tp.bound), format_number(tp.alpha)});
  }
  write_table(sibling_path(o.out, ".trace.csv"), trace, manifest);

  Table assign;
  assign.header = {"index", "component"};
  for (std::size_t i = 0; i < model.hard_assignments.size(); ++i) {
    assign.add_row({std::to_string(i), std::to_string(model.hard_assignments[i])});
  }
  write_table(sibling_path(o.out, ".assignments.csv"), assign, manifest);

  if (!o.plot.empty()) {
    if (model.X.cols() != 1) throw UsageError("--plot needs one-dimensional inputs");
    write_text(o.plot, render_mixture(model_figure(model, dataset_name)), manifest);
  }
  manifest.write(sibling_path(o.out, ".manifest.json"));
  const double final_bound = model.bound_trace.empty() ? 0.0 : model.bound_trace.back().bound;
  std::cout << "final bound " << format_number(final_bound) << ", model written to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict / sample

struct QueryOptions {
  std::string model;
  std::string query;
  std::vector<std::string> grid;
  std::string out;
  std::string plot;
  std::size_t count = 10;
  std::uint64_t seed = 0;
};

struct Queries {
  Matrix X;
  std::vector<Axis> axes;  // empty for file queries
};

Queries load_queries(const QueryOptions& o, std::size_t dims, Manifest& manifest) {
  if (o.query.empty() == o.grid.empty()) throw UsageError("give exactly one of --query or --grid");
  Queries q;
  if (!o.query.empty()) {
    q.X = query_points(o.query, dims);
    manifest.add_input(o.query);
  } else {
    std::tie(q.X, q.axes) = grid_points(o.grid, dims);
  }
  return q;
}

std::vector<std::string> input_header(std::size_t dims) {
  std::vector<std::string> h;
  for (std::size_t d = 0; d < dims; ++d) h.push_back("x" + std::to_string(d));
  return h;
}

int cmd_predict(const QueryOptions& o, const std::vector<std::string>& argv) {
  Manifest manifest("predict", argv);
  const auto [model, config] = load_checkpoint(o.model);
  manifest.add_input(o.model);
  manifest.set_config(ojson{{"model", o.model}, {"query", o.query}, {"grid", o.grid}, {"out", o.out}});
  manifest.set_seed(config.seed);

  const Predictor predictor(model);
  const std::size_t D = predictor.inputs(), P = predictor.outputs(), L = predictor.components();
  const Queries q = load_queries(o, D, manifest);
  const auto n = static_cast<std::size_t>(q.X.rows());

  const auto t0 = Clock::now();
  std::vector<MixturePrediction> preds(n);
  parallel_for(n, [&](std::size_t r) {
    preds[r] = predictor.predict(q.X.row(static_cast<Eigen::Index>(r)).transpose());
  });
  manifest.add_timing("predict", seconds_since(t0));

  Table t;
  t.header = input_header(D);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t p = 0; p < P; ++p) t.header.push_back("mean" + std::to_string(l) + "_y" + std::to_string(p));
    for (std::size_t p = 0; p < P; ++p) t.header.push_back("sd" + std::to_string(l) + "_y" + std::to_string(p));
    t.header.push_back("p" + std::to_string(l));
  }
  for (std::size_t p = 0; p < P; ++p) t.header.push_back("mix_y" + std::to_string(p));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& pr = preds[r];
    std::vector<std::string> row;
    for (std::size_t d = 0; d < D; ++d) row.push_back(format_number(pr.x_star(static_cast<Eigen::Index>(d))));
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t p = 0; p < P; ++p) row.push_back(format_number(pr.mean[l](static_cast<Eigen::Index>(p))));
      for (std::size_t p = 0; p < P; ++p) row.push_back(format_number(pr.stddev[l](static_cast<Eigen::Index>(p))));
      row.push_back(format_number(pr.probability(static_cast<Eigen::Index>(l))));
    }
    const Vector mix = pr.mixture_mean();
    for (std::size_t p = 0; p < P; ++p) row.push_back(format_number(mix(static_cast<Eigen::Index>(p))));
    t.add_row(std::move(row));
  }
  write_table(o.out, t, manifest);

  if (!o.plot.empty()) {
    std::string svg;
    if (D == 2 && q.axes.size() == 2) {
      std::vector<double> values(n);
      for (std::size_t r = 0; r < n; ++r) values[r] = preds[r].mixture_mean()(0);
      svg = render_map("mixture mean", q.axes[0].steps, q.axes[1].steps, q.axes[0].lo, q.axes[0].hi,
                       q.axes[1].lo, q.axes[1].hi, values);
    } else if (D == 1) {
      MixtureFigure fig;
      fig.title = "prediction";
      fig.train_x = column(model.X, 0);
      fig.train_y = column(model.Y, 0);
      fig.train_component = model.hard_assignments;
      fig.mean.assign(L, {});
      fig.sd.assign(L, {});
      fig.prob.assign(L, {});
      // the band polygon assumes an ordered grid
      std::vector<std::size_t> order(n);
      for (std::size_t r = 0; r < n; ++r) order[r] = r;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return q.X(static_cast<Eigen::Index>(a), 0) < q.X(static_cast<Eigen::Index>(b), 0); });
      for (std::size_t r : order) {
        fig.grid.push_back(q.X(static_cast<Eigen::Index>(r), 0));
        for (std::size_t l = 0; l < L; ++l) {
          fig.mean[l].push_back(preds[r].mean[l](0));
          fig.sd[l].push_back(preds[r].stddev[l](0));
          fig.prob[l].push_back(preds[r].probability(static_cast<Eigen::Index>(l)));
        }
      }
      svg = render_mixture(fig);
    } else {
      throw UsageError("--plot needs 1-D queries or a 2-D grid");
    }
    write_text(o.plot, svg, manifest);
  }
  manifest.write(sibling_path(o.out, ".manifest.json"));
  std::cout << "wrote " << n << " predictions to " << o.out << "\n";
  return 0;
}

int cmd_sample(const QueryOptions& o, const std::vector<std::string>& argv) {
  if (o.count == 0) throw UsageError("--count must be positive");
  Manifest manifest("sample", argv);
  const auto [model, config] = load_checkpoint(o.model);
  manifest.add_input(o.model);
  manifest.set_seed(o.seed);
  manifest.set_config(ojson{{"model", o.model}, {"query", o.query}, {"grid", o.grid},
                            {"count", o.count}, {"seed", o.seed}, {"out", o.out}});

  const Predictor predictor(model);
  const std::size_t D = predictor.inputs(), P = predictor.outputs();
  const Queries q = load_queries(o, D, manifest);
  const auto n = static_cast<std::size_t>(q.X.rows());

  const auto t0 = Clock::now();
  std::vector<std::vector<Vector>> draws(n);
  // one stream per query point, so results do not depend on thread count
  parallel_for(n, [&](std::size_t r) {
    draws[r] = predictor.sample(q.X.row(static_cast<Eigen::Index>(r)).transpose(), o.count,
                                iteration_seed(o.seed, r));
  });
  manifest.add_timing("sample", seconds_since(t0));

  Table t;
  t.header = {"query", "draw"};
  for (const auto& h : input_header(D)) t.header.push_back(h);
  for (std::size_t p = 0; p < P; ++p) t.header.push_back("y" + std::to_string(p));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < draws[r].size(); ++k) {
      std::vector<std::string> row{std::to_string(r), std::to_string(k)};
      for (std::size_t d = 0; d < D; ++d) {
        row.push_back(format_number(q.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d))));
      }
      for (std::size_t p = 0; p < P; ++p) row.push_back(format_number(draws[r][k](static_cast<Eigen::Index>(p))));
      t.add_row(std::move(row));
    }
  }
  write_table(o.out, t, manifest);
  manifest.write(sibling_path(o.out, ".manifest.json"));
  std::cout << "wrote " << t.rows.size() << " draws to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench-psi

struct BenchOptions {
  std::string T = "1,10,50,250,500";
  std::size_t iterations = 1000;
  std::size_t inducing = 20;
  std::uint64_t seed = 0;
  std::string out = "bench.csv";
  std::string plot;
  bool quiet = false;
};

int cmd_bench(const BenchOptions& o, const std::vector<std::string>& argv) {
  const auto sample_counts = parse_size_list(o.T);
  Manifest manifest("bench-psi", argv);
  manifest.set_seed(o.seed);
  manifest.set_config(ojson{{"T", sample_counts}, {"iterations", o.iterations}, {"inducing", o.inducing},
                            {"seed", o.seed}, {"dataset", "gpdraws"}, {"out", o.out}});

  const Dataset data = gen_gp_draws(100, 50, o.seed);
  struct Run {
    std::string name;
    std::vector<TracePoint> trace;
    double seconds = 0.0;
  };
  std::vector<Run> runs;
  // analytic first, then T ascending as given; runs are sequential so the
  // timings do not compete for cores
  std::vector<std::pair<std::string, std::size_t>> plan{{"analytic", 0}};
  for (std::size_t T : sample_counts) plan.emplace_back("T" + std::to_string(T), T);
  for (const auto& [name, T] : plan) {
    TrainConfig c;
    c.components = 1;
    c.inducing = o.inducing;
    c.iterations = o.iterations;
    c.kernel = extended_se_model(1, 1);
    c.psi = T == 0 ? PsiMode::Analytic : PsiMode::MonteCarlo;
    c.samples = T == 0 ? 1 : T;
    // each configuration gets its own stream derived from (seed, T)
    c.seed = iteration_seed(o.seed, T);
    const auto t0 = Clock::now();
    TrainedModel m = train(data, c);
    const double secs = seconds_since(t0);
    if (!o.quiet) {
      std::fprintf(stderr, "%-9s final bound %.8g  %.3f s\n", name.c_str(), m.bound_trace.back().bound, secs);
    }
    runs.push_back({name, std::move(m.bound_trace), secs});
    manifest.add_timing(name, secs);
  }

  Table t;
  t.header = {"config", "iteration", "bound"};
  for (const auto& r : runs) {
    for (const auto& tp : r.trace) t.add_row({r.name, std::to_string(tp.iteration), format_number(tp.bound)});
  }
  write_table(o.out, t, manifest);

  // wall-clock numbers live apart from the deterministic trace file
  Table timing;
  timing.header = {"config", "samples", "iterations", "seconds", "seconds_per_iteration"};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double per = o.iterations ? runs[k].seconds / static_cast<double>(o.iterations) : 0.0;
    timing.add_row({runs[k].name, std::to_string(plan[k].second), std::to_string(o.iterations),
                    format_number(runs[k].seconds), format_number(per)});
  }
  const std::string timing_path = sibling_path(o.out, ".timing.csv");
  write_csv(timing, timing_path);

  if (!o.plot.empty()) {
    std::vector<LineSeries> series;
    for (const auto& r : runs) {
      LineSeries s{r.name, {}, {}};
      // the first iterations dwarf the rest of the curve
      for (const auto& tp : r.trace) {
        if (tp.iteration < 20) continue;
        s.x.push_back(static_cast<double>(tp.iteration));
        s.y.push_back(tp.bound);
      }
      series.push_back(std::move(s));
    }
    write_text(o.plot, render_lines("lower bound", "iteration", "bound", series), manifest);
  }
  manifest.write(sibling_path(o.out, ".manifest.json"));
  std::cout << "wrote " << runs.size() << " traces to " << o.out << " and timings to " << timing_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Sparse variational GP regression with latent mixture inputs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lgpr 0.1.0");

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("name", synth.name, "antiphase, hetero, sshape or gpdraws")->required();
  s->add_option("--n", synth.n, "Number of points (0 for the generator default)");
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out, "Output CSV (default <name>.csv)");
  s->add_option("--plot", synth.plot, "Write an SVG figure");

  TrainOptions train_opts;
  std::string train_config;
  auto* t = app.add_subcommand("train", "Fit a model and write a checkpoint");
  t->add_option("--data", train_opts.data, "Dataset CSV");
  t->add_option("--jura", train_opts.jura, "Jura-style table");
  t->add_option("--element", train_opts.element, "Output column for --jura");
  t->add_option("--out", train_opts.out, "Checkpoint JSON");
  t->add_option("--components", train_opts.components, "Mixture components L");
  t->add_option("--inducing", train_opts.inducing, "Inducing points M");
  t->add_option("--samples", train_opts.samples, "Monte Carlo samples T per iteration");
  t->add_option("--iterations", train_opts.iterations);
  t->add_option("--seed", train_opts.seed);
  t->add_option("--step-size", train_opts.step_size);
  t->add_option("--psi", train_opts.psi, "mc or analytic");
  t->add_option("--alpha0", train_opts.alpha0);
  t->add_option("--alpha-growth", train_opts.alpha_growth);
  t->add_option("--alpha-max", train_opts.alpha_max);
  t->add_option("--kernel", train_opts.kernel, "factorizing or se");
  t->add_option("--component-kernels", train_opts.component_kernels,
                "Comma-separated component kernels, e.g. se,se+white");
  t->add_option("--kernel-file", train_opts.kernel_file, "Full kernel as JSON");
  t->add_flag("--keep-hyperparameters", train_opts.keep_hyperparameters,
              "Start from the kernel file's hyperparameters");
  t->add_option("--resume", train_opts.resume, "Continue a checkpoint up to --iterations");
  t->add_option("--plot", train_opts.plot, "Write an SVG figure (1-D inputs)");
  t->add_flag("--quiet", train_opts.quiet);
  t->add_option("--config", train_config, "key = value file of defaults for these flags");

  QueryOptions pred;
  auto* p = app.add_subcommand("predict", "Mixture predictions at query points");
  p->add_option("--model", pred.model)->required();
  p->add_option("--query", pred.query, "CSV with columns x0, x1, ...");
  p->add_option("--grid", pred.grid, "min:max:steps, once per input or once for all");
  p->add_option("--out", pred.out)->required();
  p->add_option("--plot", pred.plot);

  QueryOptions samp;
  auto* sa = app.add_subcommand("sample", "Posterior draws at query points");
  sa->add_option("--model", samp.model)->required();
  sa->add_option("--query", samp.query);
  sa->add_option("--grid", samp.grid);
  sa->add_option("--count", samp.count, "Draws per query point");
  sa->add_option("--seed", samp.seed);
  sa->add_option("--out", samp.out)->required();

  BenchOptions bench;
  auto* b = app.add_subcommand("bench-psi", "Monte Carlo against analytic statistics on GP draws");
  b->add_option("--T", bench.T, "Comma-separated sample counts");
  b->add_option("--iterations", bench.iterations);
  b->add_option("--inducing", bench.inducing);
  b->add_option("--seed", bench.seed);
  b->add_option("--out", bench.out);
  b->add_option("--plot", bench.plot);
  b->add_flag("--quiet", bench.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, args);
    if (t->parsed()) {
      if (!train_config.empty()) apply_config(t, train_config);
      return cmd_train(train_opts, args);
    }
    if (p->parsed()) return cmd_predict(pred, args);
    if (sa->parsed()) return cmd_sample(samp, args);
    if (b->parsed()) return cmd_bench(bench, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
