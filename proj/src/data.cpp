#include "lgpr/data.hpp"

#include "lgpr/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace lgpr {

namespace {

constexpr double kPi = std::numbers::pi;

double beta_draw(std::mt19937_64& gen, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(gen);
  const double y = gb(gen);
  return x / (x + y);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, bool allow_whitespace) {
  std::vector<std::string> out;
  if (line.find(',') != std::string::npos || !allow_whitespace) {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
  } else {
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) out.push_back(field);
  }
  return out;
}

bool parse_number(const std::string& field, double& out) {
  if (field.empty()) return false;
  char* end = nullptr;
  out = std::strtod(field.c_str(), &end);
  return end == field.c_str() + field.size() && std::isfinite(out);
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() != Y.rows()) {
    throw DimensionError("dataset output rows", static_cast<std::size_t>(X.rows()),
                         static_cast<std::size_t>(Y.rows()));
  }
  if (!X.allFinite() || !Y.allFinite()) throw Error("dataset contains non-finite values");
  if (!labels.empty()) {
    if (labels.size() != size()) throw DimensionError("dataset labels", size(), labels.size());
    if (std::any_of(labels.begin(), labels.end(), [](int l) { return l < 0; })) {
      throw Error("dataset labels must be nonnegative");
    }
  }
}

Dataset gen_antiphase(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw Error("antiphase dataset needs n >= 4");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  Dataset d;
  d.name = "antiphase";
  d.seed = seed;
  d.X.resize(static_cast<Eigen::Index>(n), 1);
  d.Y.resize(static_cast<Eigen::Index>(n), 1);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = unit(gen) < 0.5;
    const double u = left ? beta_draw(gen, 2.0, 5.0) : beta_draw(gen, 5.0, 2.0);
    const double x = 4.0 * kPi * u;
    const int label = unit(gen) < 0.5 ? 0 : 1;
    const double y = label == 0 ? std::sin(x) : std::sin(x + kPi);
    const auto r = static_cast<Eigen::Index>(i);
    d.X(r, 0) = x;
    d.Y(r, 0) = y + noise(gen);
    d.labels[i] = label;
  }
  d.constants = {{"x_max", 4.0 * kPi}, {"beta_a", 2.0}, {"beta_b", 5.0},
                 {"mix_weight", 0.5}, {"label_weight", 0.5}, {"noise_std", 0.05}};
  return d;
}

Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw Error("heteroscedastic dataset needs n >= 4");
  constexpr double range = 3.0 * kPi;
  constexpr double boundary = 0.5 * range;
  constexpr double band = 0.1 * range;
  constexpr double quiet = 0.01;
  constexpr double loud = 0.3;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.name = "hetero";
  d.seed = seed;
  d.X.resize(static_cast<Eigen::Index>(n), 1);
  d.Y.resize(static_cast<Eigen::Index>(n), 1);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = range * unit(gen);
    const double p_loud = std::clamp((x - (boundary - 0.5 * band)) / band, 0.0, 1.0);
    const int label = unit(gen) < p_loud ? 1 : 0;
    const auto r = static_cast<Eigen::Index>(i);
    d.X(r, 0) = x;
    d.Y(r, 0) = std::sin(x) + (label == 1 ? loud : quiet) * normal(gen);
    d.labels[i] = label;
  }
  d.constants = {{"x_max", range},    {"boundary", boundary},  {"band_width", band},
                 {"noise_std_0", quiet}, {"noise_std_1", loud}};
  return d;
}

Dataset gen_sshape(std::size_t n, std::uint64_t seed, double noise_std) {
  if (n < 4) throw Error("S-shape dataset needs n >= 4");
  constexpr double margin = 0.1 * kPi;
  // Allowed parameter intervals, one per branch.
  const double lo[3] = {-1.5 * kPi, -0.5 * kPi + margin, 0.5 * kPi + margin};
  const double hi[3] = {-0.5 * kPi - margin, 0.5 * kPi - margin, 1.5 * kPi};
  const double total = (hi[0] - lo[0]) + (hi[1] - lo[1]) + (hi[2] - lo[2]);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.name = "sshape";
  d.seed = seed;
  d.X.resize(static_cast<Eigen::Index>(n), 1);
  d.Y.resize(static_cast<Eigen::Index>(n), 1);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = total * unit(gen);
    int branch = 0;
    while (branch < 2 && u > hi[branch] - lo[branch]) {
      u -= hi[branch] - lo[branch];
      ++branch;
    }
    const double t = lo[branch] + u;
    const double sign = t < 0.0 ? -1.0 : 1.0;
    const auto r = static_cast<Eigen::Index>(i);
    d.X(r, 0) = std::sin(t) + noise_std * normal(gen);
    d.Y(r, 0) = sign * (std::cos(t) - 1.0) + noise_std * normal(gen);
    d.labels[i] = branch;
  }
  d.constants = {{"fold_margin", margin}, {"noise_std", noise_std}};
  return d;
}

Dataset gen_gp_draws(std::size_t n_points, std::size_t n_draws, std::uint64_t seed) {
  if (n_points < 2 || n_draws < 1) throw Error("GP draws need at least 2 points and 1 draw");
  constexpr double lengthscale = 0.2;
  constexpr double noise_var = 1e-4;
  const auto N = static_cast<Eigen::Index>(n_points);
  Dataset d;
  d.name = "gpdraws";
  d.seed = seed;
  d.X = Vector::LinSpaced(N, 0.0, 1.0);
  Matrix K(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double r = (d.X(i, 0) - d.X(j, 0)) / lengthscale;
      K(i, j) = std::exp(-0.5 * r * r);
    }
  }
  K.diagonal().array() += noise_var;
  const Cholesky chol = robust_cholesky(K, "GP draw covariance is not positive definite");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix E(N, static_cast<Eigen::Index>(n_draws));
  for (Eigen::Index c = 0; c < E.cols(); ++c) {
    for (Eigen::Index i = 0; i < N; ++i) E(i, c) = normal(gen);
  }
  d.Y = chol.lower() * E;
  d.constants = {{"variance", 1.0}, {"lengthscale", lengthscale}, {"noise_var", noise_var}};
  return d;
}

bool is_generator(const std::string& name) {
  return name == "antiphase" || name == "hetero" || name == "sshape" || name == "gpdraws";
}

std::size_t generator_components(const std::string& name) {
  if (name == "antiphase" || name == "hetero") return 2;
  if (name == "sshape") return 3;
  if (name == "gpdraws") return 1;
  throw Error("unknown dataset '" + name + "'");
}

Dataset generate(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (name == "antiphase") return gen_antiphase(n ? n : 200, seed);
  if (name == "hetero") return gen_heteroscedastic(n ? n : 500, seed);
  if (name == "sshape") return gen_sshape(n ? n : 300, seed);
  if (name == "gpdraws") return gen_gp_draws(n ? n : 100, 50, seed);
  throw Error("unknown dataset '" + name + "'");
}

Dataset load_jura(const std::string& path, const std::string& element) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_fields(trim(line), true);
      break;
    }
  }
  if (header.empty()) throw Error(path + ": empty file");

  std::vector<std::string> missing;
  auto find = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      missing.push_back(name);
      return 0;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cx = find("Xloc");
  const std::size_t cy = find("Yloc");
  const std::size_t ce = find(element);
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(path + ": missing required columns: " + names);
  }

  std::vector<std::array<double, 3>> rows;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t, true);
    std::array<double, 3> row{};
    const std::size_t cols[3] = {cx, cy, ce};
    bool ok = true;
    for (int k = 0; k < 3 && ok; ++k) {
      ok = cols[k] < fields.size() && parse_number(fields[cols[k]], row[static_cast<std::size_t>(k)]);
    }
    if (ok) {
      rows.push_back(row);
    } else {
      ++dropped;
    }
  }
  if (rows.empty()) throw Error(path + ": no complete data rows");

  Dataset d;
  d.name = "jura-" + element;
  const auto N = static_cast<Eigen::Index>(rows.size());
  d.X.resize(N, 2);
  d.Y.resize(N, 1);
  for (Eigen::Index i = 0; i < N; ++i) {
    d.X(i, 0) = rows[static_cast<std::size_t>(i)][0];
    d.X(i, 1) = rows[static_cast<std::size_t>(i)][1];
    d.Y(i, 0) = rows[static_cast<std::size_t>(i)][2];
  }
  auto standardize = [&](Matrix& A, const std::string& prefix) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      const double mean = A.col(c).mean();
      A.col(c).array() -= mean;
      const double var = A.col(c).squaredNorm() / static_cast<double>(A.rows());
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      A.col(c) /= sd;
      d.constants[prefix + std::to_string(c) + "_mean"] = mean;
      d.constants[prefix + std::to_string(c) + "_std"] = sd;
    }
  };
  standardize(d.X, "x");
  standardize(d.Y, "y");
  d.constants["dropped_rows"] = static_cast<double>(dropped);
  return d;
}

Matrix unstandardize_outputs(const Dataset& data, const Matrix& Y) {
  Matrix out = Y;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const std::string p = "y" + std::to_string(c);
    const auto m = data.constants.find(p + "_mean");
    const auto s = data.constants.find(p + "_std");
    if (m == data.constants.end() || s == data.constants.end()) continue;
    out.col(c) = (out.col(c).array() * s->second + m->second).matrix();
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  std::string header;
  for (std::size_t j = 0; j < data.input_dim(); ++j) header += "x" + std::to_string(j) + ",";
  for (std::size_t j = 0; j < data.output_dim(); ++j) header += "y" + std::to_string(j) + ",";
  if (!data.labels.empty()) header += "label,";
  header.pop_back();
  out << header << '\n';
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    std::string row;
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) row += format_double(data.X(i, j)) + ",";
    for (Eigen::Index j = 0; j < data.Y.cols(); ++j) row += format_double(data.Y(i, j)) + ",";
    if (!data.labels.empty()) row += std::to_string(data.labels[static_cast<std::size_t>(i)]) + ",";
    row.pop_back();
    out << row << '\n';
  }
  if (!out) throw Error("failed writing " + path);
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw Error(path + ": empty file");
  const auto header = split_fields(trim(line), false);
  std::size_t D = 0, P = 0;
  bool has_label = false;
  for (const auto& h : header) {
    if (!h.empty() && h[0] == 'x') {
      ++D;
    } else if (!h.empty() && h[0] == 'y') {
      ++P;
    } else if (h == "label") {
      has_label = true;
    } else {
      throw Error(path + ": unexpected column '" + h + "'");
    }
  }
  if (D == 0 || P == 0) throw Error(path + ": need at least one x and one y column");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line), false);
    if (fields.size() != header.size()) {
      throw DimensionError(path + " line " + std::to_string(line_no) + " fields", header.size(),
                           fields.size());
    }
    std::vector<double> row(D + P);
    for (std::size_t k = 0; k < D + P; ++k) {
      if (!parse_number(fields[k], row[k])) {
        throw Error(path + " line " + std::to_string(line_no) + ": bad number '" + fields[k] + "'");
      }
    }
    rows.push_back(std::move(row));
    if (has_label) labels.push_back(std::stoi(fields[D + P]));
  }
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(D));
  d.Y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(P));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < D; ++k) d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    for (std::size_t k = 0; k < P; ++k) d.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][D + k];
  }
  d.labels = std::move(labels);
  d.validate();
  return d;
}

void write_dataset_meta(const Dataset& data, const std::string& path) {
  nlohmann::ordered_json j;
  j["name"] = data.name;
  j["seed"] = data.seed;
  j["rows"] = data.size();
  j["inputs"] = data.input_dim();
  j["outputs"] = data.output_dim();
  j["labelled"] = !data.labels.empty();
  j["constants"] = data.constants;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void read_dataset_meta(const std::string& path, Dataset& data) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    data.name = j.at("name").get<std::string>();
    data.seed = j.at("seed").get<std::uint64_t>();
    data.constants = j.at("constants").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

double assignment_purity(const std::vector<int>& labels, const std::vector<int>& predicted) {
  if (labels.size() != predicted.size()) {
    throw DimensionError("predicted assignments", labels.size(), predicted.size());
  }
  if (labels.empty()) return 1.0;
  const int K = 1 + std::max(*std::max_element(labels.begin(), labels.end()),
                             *std::max_element(predicted.begin(), predicted.end()));
  std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(K),
                                               std::vector<std::size_t>(static_cast<std::size_t>(K), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++counts[static_cast<std::size_t>(predicted[i])][static_cast<std::size_t>(labels[i])];
  }
  std::size_t best = 0;
  if (K <= 8) {
    std::vector<std::size_t> perm(static_cast<std::size_t>(K));
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    do {
      std::size_t hit = 0;
      for (std::size_t k = 0; k < perm.size(); ++k) hit += counts[k][perm[k]];
      best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    for (const auto& row : counts) best += *std::max_element(row.begin(), row.end());
  }
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

}  // namespace lgpr
