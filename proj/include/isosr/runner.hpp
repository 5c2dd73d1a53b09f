#pragma once

// Multi-run search orchestration and the files a search leaves behind.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "isosr/bsr.hpp"
#include "isosr/dataset.hpp"
#include "isosr/ga.hpp"
#include "isosr/pareto.hpp"

namespace isosr {

enum class Engine { Ga, Bsr };

std::string to_string(Engine e);
Engine parse_engine(const std::string& s);

/// Either a CSV file or a synthetic draw from a catalog model.
struct DatasetSpec {
  std::string csv_path;
  std::string model = "langmuir";
  std::vector<double> params{5.0, 2.0};
  GridSpec grid;
  double sigma = 0.0;
  NoiseKind noise = NoiseKind::Relative;
  std::uint64_t seed = 7;
};

Dataset load_dataset(const DatasetSpec& spec);

struct RunConfig {
  Engine engine = Engine::Ga;
  DatasetSpec dataset;
  GaConfig ga;
  BsrConfig bsr;
  CheckerConfig checker;
  std::uint64_t seed = 1;
  int runs = 8;
  std::filesystem::path out_dir = "isosr-out";
  bool deterministic = false;
};

/// Penalties used when constraints are switched on.
inline constexpr std::array<double, 3> kDefaultGaPenalties{1.3, 1.3, 1.3};
inline constexpr std::array<double, 2> kDefaultBsrPenalties{20.0, 10.0};

/// Switch constraints on (default penalties) or off (neutral penalties).
void set_constraints(RunConfig& cfg, bool on);
bool constraints_active(const RunConfig& cfg);

/// Seed of run `index`, derived from the base seed.
std::uint64_t run_seed(std::uint64_t base, int index);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

struct SearchResult {
  std::vector<RunRecord> runs;
  /// Per-run fronts with all three verdicts attached.
  std::vector<ParetoFront> fronts;
  ParetoFront merged;
  PassRates rates;
};

/// Executes cfg.runs independent runs (concurrently unless deterministic)
/// and builds fronts and pass rates. Results do not depend on scheduling.
SearchResult run_search(const RunConfig& cfg, const Dataset& d,
                        const std::function<void(int, const RunRecord&)>& on_run = {});

/// Writes run_XXX_front.csv, merged_front.csv, pass_rates.csv and
/// manifest.ini (seed, config hash, version, then `config_text`).
void write_outputs(const RunConfig& cfg, const SearchResult& r, const std::string& config_text);

}  // namespace isosr
