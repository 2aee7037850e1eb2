#include <gtest/gtest.h>

#include <artifacts.hpp>
#include <json.hpp>
#include <lgpr/data.hpp>
#include <lgpr/kernels.hpp>
#include <lgpr/optimize.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

using namespace lgpr;
using lgpr::tool::read_csv;
using lgpr::tool::sha256_file;
using lgpr::tool::Table;
namespace fs = std::filesystem;

namespace {

class Workdir {
 public:
  Workdir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("lgpr_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

  // Runs the tool inside the directory and returns its exit code.
  int run(const std::string& args) const {
    const std::string cmd = "cd '" + path_.string() + "' && '" LGPR_CLI_PATH "' " + args +
                            " > '" + file("last.log") + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string log() const {
    std::ifstream in(file("last.log"));
    return {std::istreambuf_iterator<char>(in), {}};
  }

 private:
  fs::path path_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST(Cli, SynthAntiphaseHasRequestedRowsAndLabels) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 200 --seed 7 --out a.csv"), 0) << w.log();
  const Table t = read_csv(w.file("a.csv"));
  EXPECT_EQ(t.rows.size(), 200u);
  EXPECT_TRUE(t.has_column("label"));
  EXPECT_TRUE(fs::exists(w.file("a.meta.json")));
  EXPECT_TRUE(fs::exists(w.file("a.manifest.json")));

  const Dataset d = read_dataset_csv(w.file("a.csv"));
  const Dataset direct = gen_antiphase(200, 7);
  ASSERT_EQ(d.size(), 200u);
  EXPECT_EQ(d.labels, direct.labels);
  EXPECT_LT((d.X - direct.X).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((d.Y - direct.Y).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cli, SynthTwiceGivesIdenticalChecksums) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 200 --seed 7 --out a.csv"), 0);
  ASSERT_EQ(w.run("synth antiphase --n 200 --seed 7 --out b.csv"), 0);
  EXPECT_EQ(sha256_file(w.file("a.csv")), sha256_file(w.file("b.csv")));
  ASSERT_EQ(w.run("synth antiphase --n 200 --seed 8 --out c.csv"), 0);
  EXPECT_NE(sha256_file(w.file("a.csv")), sha256_file(w.file("c.csv")));
}

TEST(Cli, SynthGpDrawsDefaultsToHundredByFifty) {
  Workdir w;
  ASSERT_EQ(w.run("synth gpdraws --out g.csv"), 0) << w.log();
  const Dataset d = read_dataset_csv(w.file("g.csv"));
  // one row per input, one output column per draw
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(d.X.cols(), 1);
  EXPECT_EQ(d.Y.cols(), 50);
  std::set<double> xs(d.X.col(0).data(), d.X.col(0).data() + d.X.rows());
  EXPECT_EQ(xs.size(), 100u);
  EXPECT_EQ(d.Y, gen_gp_draws(100, 50, 0).Y);
}

TEST(Cli, UsageErrorsExitWithTwo) {
  Workdir w;
  EXPECT_EQ(w.run("synth nope"), 2);
  EXPECT_NE(w.log().find("unknown dataset"), std::string::npos);
  EXPECT_EQ(w.run("synth antiphase --bogus 3"), 2);
  EXPECT_EQ(w.run("frobnicate"), 2);
  EXPECT_EQ(w.run(""), 2);
  ASSERT_EQ(w.run("synth antiphase --n 40 --seed 1 --out a.csv"), 0);
  EXPECT_EQ(w.run("train --data a.csv --psi analytic --kernel factorizing --out m.json"), 2);
  EXPECT_EQ(w.run("train --data a.csv --psi sometimes --out m.json"), 2);
  EXPECT_EQ(w.run("train --data a.csv --inducing 500 --out m.json"), 2);
  EXPECT_EQ(w.run("train --data a.csv --config missing.toml --out m.json"), 2);
}

TEST(Cli, RuntimeFailuresExitWithOne) {
  Workdir w;
  EXPECT_EQ(w.run("train --data does_not_exist.csv --out m.json"), 1);
  write_text(w.file("bad.csv"), "x0,y0\n1,2\n3\n");
  EXPECT_EQ(w.run("train --data bad.csv --out m.json"), 1);
  EXPECT_NE(w.log().find("error"), std::string::npos);
}

TEST(Cli, TrainWritesAllArtifacts) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 60 --seed 2 --out a.csv"), 0);
  ASSERT_EQ(w.run("train --data a.csv --components 2 --inducing 10 --iterations 25 --out m.json --quiet"),
            0)
      << w.log();
  for (const char* f : {"m.json", "m.trace.csv", "m.assignments.csv", "m.manifest.json"}) {
    EXPECT_TRUE(fs::exists(w.file(f))) << f;
  }
  const Table trace = read_csv(w.file("m.trace.csv"));
  ASSERT_EQ(trace.rows.size(), 25u);
  for (double b : trace.numbers("bound")) EXPECT_TRUE(std::isfinite(b));

  const Table assign = read_csv(w.file("m.assignments.csv"));
  ASSERT_EQ(assign.rows.size(), 60u);
  const auto [model, config] = load_checkpoint(w.file("m.json"));
  const auto comp = assign.numbers("component");
  for (std::size_t i = 0; i < comp.size(); ++i) {
    EXPECT_EQ(static_cast<int>(comp[i]), model.hard_assignments[i]);
    EXPECT_TRUE(comp[i] == 0.0 || comp[i] == 1.0);
  }
  EXPECT_EQ(config.components, 2u);
  EXPECT_EQ(config.inducing, 10u);
  EXPECT_EQ(model.bound_trace.back().bound, trace.numbers("bound").back());

  const auto manifest = nlohmann::json::parse(lgpr::tool::read_file(w.file("m.manifest.json")));
  EXPECT_EQ(manifest.at("command"), "train");
  EXPECT_EQ(manifest.at("config").at("components"), 2);
  EXPECT_EQ(manifest.at("config").at("iterations"), 25);
  EXPECT_TRUE(manifest.contains("timings"));
  bool listed = false;
  for (const auto& o : manifest.at("outputs")) {
    if (o.at("path").get<std::string>().find("m.json") != std::string::npos) {
      listed = true;
      EXPECT_EQ(o.at("sha256"), sha256_file(w.file("m.json")));
    }
  }
  EXPECT_TRUE(listed);
}

TEST(Cli, ZeroIterationsCheckpointEqualsInitialization) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 50 --seed 4 --out a.csv"), 0);
  ASSERT_EQ(w.run("train --data a.csv --components 2 --inducing 8 --iterations 0 --seed 9 --out m.json --quiet"),
            0)
      << w.log();
  const auto [model, config] = load_checkpoint(w.file("m.json"));
  const Dataset data = read_dataset_csv(w.file("a.csv"));
  const auto [state, spec] = initialize(data, config);

  EXPECT_EQ(model.state.mu, state.mu);
  EXPECT_EQ(model.state.s, state.s);
  EXPECT_EQ(model.state.Z, state.Z);
  EXPECT_EQ(model.state.noise_var, state.noise_var);
  EXPECT_EQ(model.state.iteration, 0u);
  EXPECT_EQ(Kernel(model.spec, model.state.layout).log_params(), Kernel(spec, state.layout).log_params());
}

TEST(Cli, PredictProbabilitiesSumToOne) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 60 --seed 2 --out a.csv"), 0);
  ASSERT_EQ(w.run("train --data a.csv --components 2 --inducing 10 --iterations 30 --out m.json --quiet"), 0);
  ASSERT_EQ(w.run("predict --model m.json --grid 0:12:41 --out p.csv"), 0) << w.log();
  const Table t = read_csv(w.file("p.csv"));
  ASSERT_EQ(t.rows.size(), 41u);
  const auto p0 = t.numbers("p0"), p1 = t.numbers("p1");
  for (std::size_t r = 0; r < p0.size(); ++r) {
    EXPECT_NEAR(p0[r] + p1[r], 1.0, 1e-12);
    EXPECT_GE(p0[r], 0.0);
    EXPECT_GE(p1[r], 0.0);
  }
  for (const char* c : {"x0", "mean0_y0", "sd0_y0", "mean1_y0", "sd1_y0", "mix_y0"}) {
    EXPECT_TRUE(t.has_column(c)) << c;
  }
  for (double sd : t.numbers("sd1_y0")) EXPECT_GT(sd, 0.0);
}

TEST(Cli, SingleComponentProbabilityColumnIsOne) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 40 --seed 3 --out a.csv"), 0);
  ASSERT_EQ(w.run("train --data a.csv --components 1 --inducing 8 --iterations 20 --out m.json --quiet"), 0);
  write_text(w.file("q.csv"), "x0\n0.5\n3\n7.25\n11\n");
  ASSERT_EQ(w.run("predict --model m.json --query q.csv --out p.csv"), 0) << w.log();
  const Table t = read_csv(w.file("p.csv"));
  ASSERT_EQ(t.rows.size(), 4u);
  for (double p : t.numbers("p0")) EXPECT_EQ(p, 1.0);
  EXPECT_FALSE(t.has_column("p1"));
  EXPECT_EQ(t.numbers("x0")[2], 7.25);
}

TEST(Cli, JuraGridGivesOneRowPerCell) {
  Workdir w;
  write_text(w.file("jura.csv"),
             "Xloc,Yloc,Landuse,Rock,Cd,Co,Cr,Cu,Ni,Pb,Zn\n"
             "2.386,3.077,3,3,1.74,9.32,38.32,25.72,21.32,77.36,92.56\n"
             "2.544,1.972,2,2,1.335,10,40.2,24.76,29.72,77.88,73.56\n"
             "2.807,3.347,2,3,1.61,10.6,47,8.88,21.4,30.8,64.8\n"
             "4.308,1.933,3,2,2.15,11.92,43.52,22.7,29.72,56.4,90\n"
             "4.383,1.081,3,5,1.565,16.32,38.52,34.32,26.2,66.4,88.4\n"
             "3.244,4.519,3,5,1.145,3.508,40.4,31.28,22.04,72.4,75.2\n"
             "3.925,3.785,3,5,0.894,15.08,30.52,27.44,21.76,60,72.4\n"
             "2.116,3.498,3,1,0.525,4.124,25.4,66.12,9.72,141,72.08\n");
  ASSERT_EQ(w.run("train --jura jura.csv --element Co --components 2 --inducing 5 --iterations 20 "
                  "--out m.json --quiet"),
            0)
      << w.log();
  Dataset moments;
  read_dataset_meta(w.file("m.data.meta.json"), moments);
  EXPECT_TRUE(moments.constants.contains("x0_mean"));
  EXPECT_TRUE(moments.constants.contains("y0_std"));
  ASSERT_EQ(w.run("predict --model m.json --grid -2:2:50 -2:2:50 --out p.csv"), 0) << w.log();
  const Table t = read_csv(w.file("p.csv"));
  EXPECT_EQ(t.rows.size(), 2500u);
  for (const char* c : {"x0", "x1", "mean0_y0", "mean1_y0", "p0", "p1"}) EXPECT_TRUE(t.has_column(c)) << c;
  std::set<std::pair<double, double>> cells;
  const auto x0 = t.numbers("x0"), x1 = t.numbers("x1");
  for (std::size_t r = 0; r < x0.size(); ++r) cells.emplace(x0[r], x1[r]);
  EXPECT_EQ(cells.size(), 2500u);

  // one axis given for two inputs is reused for both
  ASSERT_EQ(w.run("predict --model m.json --grid -1:1:7 --out q.csv"), 0) << w.log();
  EXPECT_EQ(read_csv(w.file("q.csv")).rows.size(), 49u);
}

TEST(Cli, QueryDimensionMismatchIsRuntimeError) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 40 --seed 3 --out a.csv"), 0);
  ASSERT_EQ(w.run("train --data a.csv --components 1 --inducing 8 --iterations 5 --out m.json --quiet"), 0);
  write_text(w.file("q.csv"), "x0,x1\n0.5,1\n");
  EXPECT_EQ(w.run("predict --model m.json --query q.csv --out p.csv"), 1);
  EXPECT_EQ(w.run("predict --model m.json --grid 0:1:3 0:1:3 0:1:3 --out p.csv"), 1);
  EXPECT_FALSE(fs::exists(w.file("p.csv")));
  EXPECT_EQ(w.run("predict --model m.json --out p.csv"), 2);
}

TEST(Cli, EveryCommandIsDeterministicUnderSeed) {
  Workdir w;
  ASSERT_EQ(w.run("synth hetero --n 80 --seed 5 --out h.csv"), 0);
  const std::string train = "train --data h.csv --components 2 --inducing 10 --iterations 30 --seed 3 --quiet";
  ASSERT_EQ(w.run(train + " --out m1.json"), 0) << w.log();
  ASSERT_EQ(w.run(train + " --out m2.json"), 0);
  EXPECT_EQ(sha256_file(w.file("m1.trace.csv")), sha256_file(w.file("m2.trace.csv")));
  EXPECT_EQ(sha256_file(w.file("m1.assignments.csv")), sha256_file(w.file("m2.assignments.csv")));
  EXPECT_EQ(lgpr::tool::read_file(w.file("m1.json")), lgpr::tool::read_file(w.file("m2.json")));

  ASSERT_EQ(w.run("predict --model m1.json --grid 0:1:9 --out p1.csv"), 0);
  ASSERT_EQ(w.run("predict --model m1.json --grid 0:1:9 --out p2.csv"), 0);
  EXPECT_EQ(sha256_file(w.file("p1.csv")), sha256_file(w.file("p2.csv")));

  ASSERT_EQ(w.run("sample --model m1.json --grid 0:1:5 --count 7 --seed 11 --out s1.csv"), 0) << w.log();
  ASSERT_EQ(w.run("sample --model m1.json --grid 0:1:5 --count 7 --seed 11 --out s2.csv"), 0);
  ASSERT_EQ(w.run("sample --model m1.json --grid 0:1:5 --count 7 --seed 12 --out s3.csv"), 0);
  EXPECT_EQ(sha256_file(w.file("s1.csv")), sha256_file(w.file("s2.csv")));
  EXPECT_NE(sha256_file(w.file("s1.csv")), sha256_file(w.file("s3.csv")));
  const Table s = read_csv(w.file("s1.csv"));
  EXPECT_EQ(s.rows.size(), 35u);
  for (double v : s.numbers("y0")) EXPECT_TRUE(std::isfinite(v));
}

TEST(Cli, ConfigFileSitsBetweenFlagsAndDefaults) {
  Workdir w;
  ASSERT_EQ(w.run("synth antiphase --n 40 --seed 1 --out a.csv"), 0);
  write_text(w.file("run.toml"), "# defaults for this run\ncomponents = 2\ninducing = 6\niterations = 4\n");
  ASSERT_EQ(w.run("train --data a.csv --config run.toml --inducing 9 --out m.json --quiet"), 0) << w.log();
  const auto [model, config] = load_checkpoint(w.file("m.json"));
  EXPECT_EQ(config.components, 2u);  // from the file
  EXPECT_EQ(config.inducing, 9u);    // the flag wins
  EXPECT_EQ(config.iterations, 4u);
  EXPECT_EQ(config.samples, 1u);     // default
  EXPECT_EQ(config.step_size, 0.01);

  const auto manifest = nlohmann::json::parse(lgpr::tool::read_file(w.file("m.manifest.json")));
  EXPECT_EQ(manifest.at("config").at("inducing"), 9);
  EXPECT_EQ(manifest.at("config").at("components"), 2);

  write_text(w.file("bad.toml"), "nonsense = 3\n");
  EXPECT_EQ(w.run("train --data a.csv --config bad.toml --out x.json"), 2);
}

TEST(Cli, EmittedCsvsParseBackThroughReaders) {
  Workdir w;
  for (const std::string name : {"antiphase", "hetero", "sshape"}) {
    ASSERT_EQ(w.run("synth " + name + " --seed 6 --out d.csv"), 0);
    const Dataset d = read_dataset_csv(w.file("d.csv"));
    const Dataset direct = generate(name, 0, 6);
    ASSERT_EQ(d.size(), direct.size()) << name;
    EXPECT_EQ(d.X, direct.X) << name;
    EXPECT_EQ(d.Y, direct.Y) << name;
    EXPECT_EQ(d.labels, direct.labels) << name;
    // a dataset written by the library loads in the tool
    write_dataset_csv(d, w.file("again.csv"));
    EXPECT_EQ(sha256_file(w.file("again.csv")), sha256_file(w.file("d.csv"))) << name;
  }
  ASSERT_EQ(w.run("train --data d.csv --components 3 --inducing 10 --iterations 5 --out m.json --quiet"), 0);
  ASSERT_EQ(w.run("predict --model m.json --grid -1:1:4 --out p.csv"), 0);
  const Table p = read_csv(w.file("p.csv"));
  EXPECT_EQ(lgpr::tool::parse_csv(p.to_csv(), "memory").rows, p.rows);
}

TEST(Cli, BenchPsiReportsEveryConfiguration) {
  Workdir w;
  ASSERT_EQ(w.run("bench-psi --T 1,4 --iterations 5 --inducing 6 --seed 2 --out b.csv --quiet"), 0) << w.log();
  const Table t = read_csv(w.file("b.csv"));
  std::set<std::string> configs;
  for (const auto& row : t.rows) configs.insert(row[t.column("config")]);
  EXPECT_EQ(configs, (std::set<std::string>{"analytic", "T1", "T4"}));
  EXPECT_EQ(t.rows.size(), 3u * 5u);

  const Table timing = read_csv(w.file("b.timing.csv"));
  ASSERT_EQ(timing.rows.size(), 3u);
  for (double s : timing.numbers("seconds_per_iteration")) EXPECT_GT(s, 0.0);
  EXPECT_TRUE(fs::exists(w.file("b.manifest.json")));

  ASSERT_EQ(w.run("bench-psi --T 1,4 --iterations 5 --inducing 6 --seed 2 --out c.csv --quiet"), 0);
  EXPECT_EQ(sha256_file(w.file("b.csv")), sha256_file(w.file("c.csv")));
  EXPECT_EQ(w.run("bench-psi --T 1,x --iterations 5 --out d.csv"), 2);
}
