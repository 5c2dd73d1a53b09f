#pragma once

// Pressure/loading datasets, the ground-truth isotherm catalog, and a
// synthetic data generator built on it.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isosr/expr.hpp"

namespace isosr {

struct DataPoint {
  double pressure = 0.0;
  double loading = 0.0;
};

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what, std::size_t line = 0) : std::runtime_error(what), line_(line) {}
  /// 1-based line of the offending CSV row, 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Dataset {
  std::string name;
  std::string units;
  /// File path, or a synthetic descriptor.
  std::string source;
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
  std::vector<double> pressures() const;
  std::vector<double> loadings() const;
  double max_pressure() const { return points.empty() ? 0.0 : points.back().pressure; }
};

/// Throws DatasetError unless there are >= 3 points with finite values and
/// strictly increasing positive pressures.
void validate(const Dataset& d);

/// CSV with header `pressure,loading`. Rows are sorted by pressure.
Dataset read_csv(std::istream& in, std::string name = "dataset");
Dataset load_csv(const std::filesystem::path& path);
void write_csv(const Dataset& d, std::ostream& out);
void save_csv(const Dataset& d, const std::filesystem::path& path);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct IsothermModel {
  std::string name;
  std::string literature;
  Expr sr_form;
  int complexity = 0;
  /// Default range of each parameter, c1 first.
  std::vector<ParamRange> ranges;
  /// Largest pressure where the model is physical for the given parameters
  /// (+inf when unbounded).
  std::function<double(std::span<const double>)> validity_limit;
};

/// Langmuir, Dual-Site Langmuir, BET, Freundlich and Sips in their SR forms.
const std::vector<IsothermModel>& catalog();
/// Case-insensitive lookup by name ("langmuir", "dual-site", "bet",
/// "freundlich", "sips"). Throws std::out_of_range.
const IsothermModel& catalog_model(std::string_view name);

/// BET parameters (c1, c2, c3) of the SR form for monolayer capacity v_m and
/// BET constant c > 1, with pressure measured relative to saturation.
std::vector<double> bet_parameters(double vm, double c);

struct GridSpec {
  double lo = 0.01;
  double hi = 100.0;
  int count = 20;
  bool log_spaced = true;
};

std::vector<double> make_grid(const GridSpec& g);

enum class NoiseKind { Relative, Additive };

/// Samples y = f(p)(1 + e), e ~ N(0, sigma^2) for relative noise, or
/// y = f(p) + e for additive noise. Throws DatasetError if the grid leaves
/// the model's validity range or f is undefined on it.
Dataset synthesize(const IsothermModel& model, std::span<const double> params, const GridSpec& grid, double sigma,
                   Rng& rng, NoiseKind noise = NoiseKind::Relative);

}  // namespace isosr
