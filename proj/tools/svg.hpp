#pragma once

#include <string>
#include <vector>

namespace lgpr::tool {

// Scatter of training data coloured by component, per-component predictive
// mean with a two-sigma band, and a strip of component probabilities below.
// Grid and the per-component series may be empty for a scatter-only figure.
struct MixtureFigure {
  std::string title;
  std::vector<double> train_x;
  std::vector<double> train_y;
  std::vector<int> train_component;  // colour index, may be empty
  std::vector<double> grid;
  std::vector<std::vector<double>> mean;  // [component][grid point]
  std::vector<std::vector<double>> sd;
  std::vector<std::vector<double>> prob;
};

std::string render_mixture(const MixtureFigure& fig);

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string render_lines(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<LineSeries>& series);

// Heat map of values on a regular nx x ny grid (row-major, x fastest).
std::string render_map(const std::string& title, std::size_t nx, std::size_t ny, double x0,
                       double x1, double y0, double y1, const std::vector<double>& values);

}  // namespace lgpr::tool
