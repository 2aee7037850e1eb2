#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lgpr::tool {

// Writes to a temporary sibling, then renames over the target, so a reader never
// sees a half-written file.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

// Header plus rows of cells. Numeric cells are written with 17 significant digits.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws when absent
  bool has_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  std::vector<double> numbers(const std::string& name) const;

  void add_row(std::vector<std::string> cells);
  std::string to_csv() const;
};

std::string format_number(double v);
Table parse_csv(const std::string& text, const std::string& origin);
Table read_csv(const std::string& path);
void write_csv(const Table& table, const std::string& path);

// Record written next to a command's primary output. Everything except
// "timings" is a function of the command line and the inputs.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv);

  void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void add_timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  nlohmann::ordered_json to_json() const;
  void write(const std::string& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::map<std::string, double> timings_;
};

// "model.json" -> "model.manifest.json"; the suffix replaces the last extension.
std::string sibling_path(const std::string& path, const std::string& suffix);

}  // namespace lgpr::tool
