#pragma once

#include "lgpr/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lgpr {

struct Dataset {
  Matrix X;                 // N x D
  Matrix Y;                 // N x P
  std::vector<int> labels;  // empty, or one ground-truth component per row
  std::string name;
  std::uint64_t seed = 0;
  // Generator constants, standardisation moments, dropped-row counts and the like.
  std::map<std::string, double> constants;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(Y.cols()); }

  // Throws on row mismatch, non-finite entries or negative labels.
  void validate() const;
};

// Two anti-phase sinusoids, sin(x) and sin(x + pi), over [0, 4 pi] with inputs
// from an equal mixture of Beta(2, 5) and Beta(5, 2).
Dataset gen_antiphase(std::size_t n, std::uint64_t seed);

// sin(x) on [0, 3 pi]; label 0 (noise std 0.01) left of the midpoint, label 1
// (noise std 0.3) right of it, mixing linearly across a band 10% of the range wide.
Dataset gen_heteroscedastic(std::size_t n, std::uint64_t seed);

// S curve x = sin t, y = sign(t) (cos t - 1) for t in [-1.5 pi, 1.5 pi], cut at
// the folds t = +-pi/2 into three single-valued branches. Points within 0.1 pi
// of a fold are not sampled.
Dataset gen_sshape(std::size_t n, std::uint64_t seed, double noise_std = 0.01);

// Independent draws from a zero-mean SE GP (variance 1, lengthscale 0.2) on an
// even grid over [0, 1], with noise variance 1e-4.
Dataset gen_gp_draws(std::size_t n_points = 100, std::size_t n_draws = 50, std::uint64_t seed = 0);

// Generator by name: antiphase, hetero, sshape, gpdraws. n = 0 picks the
// generator's default size.
Dataset generate(const std::string& name, std::size_t n, std::uint64_t seed);
bool is_generator(const std::string& name);

// Number of mixture components the generator's experiment uses.
std::size_t generator_components(const std::string& name);

// Jura-style table: Xloc, Yloc and element columns, comma or whitespace
// separated. Rows with a missing field (empty, NA, nan, *) are dropped and
// counted in constants["dropped_rows"]. Inputs and output are standardised;
// the moments are stored as x0_mean, x0_std, ..., y0_mean, y0_std.
Dataset load_jura(const std::string& path, const std::string& element = "Co");

// Maps standardised outputs back to the original units using the stored moments.
Matrix unstandardize_outputs(const Dataset& data, const Matrix& Y);

// Header x0..x{D-1}, y0..y{P-1}[, label], values with 17 significant digits.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

// Sidecar with name, seed, sizes and constants.
void write_dataset_meta(const Dataset& data, const std::string& path);
void read_dataset_meta(const std::string& path, Dataset& data);

// Purity of predicted components against labels under the best relabelling.
double assignment_purity(const std::vector<int>& labels, const std::vector<int>& predicted);

}  // namespace lgpr
