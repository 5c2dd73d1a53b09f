#include "isosr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace isosr {
namespace {

struct Binding {
  std::string section;  // empty for top level
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("'{}' is not a number", s));
  }
  if (used != s.size()) throw ConfigError(fmt::format("'{}' is not a number", s));
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(fmt::format("'{}' is not an integer", s));
  return v;
}

bool to_bool(const std::string& s) {
  const std::string l = boost::algorithm::to_lower_copy(s);
  if (l == "true" || l == "on" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "off" || l == "no" || l == "0") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

std::vector<double> to_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(to_double(p));
  }
  return out;
}

std::string fmt_list(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_double(v[i]);
  return out;
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& s) {
  const auto v = to_list(s);
  if (v.size() != N) throw ConfigError(fmt::format("expected {} comma-separated values, got '{}'", N, s));
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

// Bindings for a member reached through `field`.
template <typename F>
Binding real(std::string sec, std::string key, F field) {
  return {std::move(sec), std::move(key), [field](const RunConfig& c) { return fmt_double(field(c)); },
          [field](RunConfig& c, const std::string& s) { field(c) = to_double(s); }};
}

template <typename F>
Binding integer(std::string sec, std::string key, F field) {
  return {std::move(sec), std::move(key),
          [field](const RunConfig& c) { return std::to_string(field(c)); },
          [field](RunConfig& c, const std::string& s) {
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_integer(s));
          }};
}

template <typename F>
Binding boolean(std::string sec, std::string key, F field) {
  return {std::move(sec), std::move(key),
          [field](const RunConfig& c) { return std::string(field(c) ? "true" : "false"); },
          [field](RunConfig& c, const std::string& s) { field(c) = to_bool(s); }};
}

template <std::size_t N, typename F>
Binding array(std::string sec, std::string key, F field) {
  return {std::move(sec), std::move(key), [field](const RunConfig& c) { return fmt_list(field(c)); },
          [field](RunConfig& c, const std::string& s) { field(c) = to_array<N>(s); }};
}

template <typename F>
void add_fit(std::vector<Binding>& b, const std::string& sec, F fit) {
  b.push_back(integer(sec, "fit_restarts", [fit](auto& c) -> auto& { return fit(c).restarts; }));
  b.push_back(integer(sec, "fit_max_iterations", [fit](auto& c) -> auto& { return fit(c).max_iterations; }));
  b.push_back(real(sec, "fit_tolerance", [fit](auto& c) -> auto& { return fit(c).tolerance; }));
  b.push_back(real(sec, "fit_start_lo", [fit](auto& c) -> auto& { return fit(c).start_lo; }));
  b.push_back(real(sec, "fit_start_hi", [fit](auto& c) -> auto& { return fit(c).start_hi; }));
  b.push_back(
      real(sec, "fit_positive_probability", [fit](auto& c) -> auto& { return fit(c).positive_probability; }));
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back({"", "engine", [](const RunConfig& c) { return to_string(c.engine); },
                 [](RunConfig& c, const std::string& s) {
                   try {
                     c.engine = parse_engine(s);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(e.what());
                   }
                 }});
    b.push_back(integer("", "seed", [](auto& c) -> auto& { return c.seed; }));
    b.push_back(integer("", "runs", [](auto& c) -> auto& { return c.runs; }));
    b.push_back({"", "out", [](const RunConfig& c) { return c.out_dir.string(); },
                 [](RunConfig& c, const std::string& s) { c.out_dir = s; }});
    b.push_back(boolean("", "deterministic", [](auto& c) -> auto& { return c.deterministic; }));

    b.push_back({"dataset", "csv", [](const RunConfig& c) { return c.dataset.csv_path; },
                 [](RunConfig& c, const std::string& s) { c.dataset.csv_path = s; }});
    b.push_back({"dataset", "model", [](const RunConfig& c) { return c.dataset.model; },
                 [](RunConfig& c, const std::string& s) { c.dataset.model = s; }});
    b.push_back({"dataset", "params", [](const RunConfig& c) { return fmt_list(c.dataset.params); },
                 [](RunConfig& c, const std::string& s) { c.dataset.params = to_list(s); }});
    b.push_back(real("dataset", "grid_lo", [](auto& c) -> auto& { return c.dataset.grid.lo; }));
    b.push_back(real("dataset", "grid_hi", [](auto& c) -> auto& { return c.dataset.grid.hi; }));
    b.push_back(integer("dataset", "grid_count", [](auto& c) -> auto& { return c.dataset.grid.count; }));
    b.push_back(boolean("dataset", "grid_log", [](auto& c) -> auto& { return c.dataset.grid.log_spaced; }));
    b.push_back(real("dataset", "sigma", [](auto& c) -> auto& { return c.dataset.sigma; }));
    b.push_back({"dataset", "noise",
                 [](const RunConfig& c) {
                   return std::string(c.dataset.noise == NoiseKind::Relative ? "relative" : "additive");
                 },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "relative")
                     c.dataset.noise = NoiseKind::Relative;
                   else if (s == "additive")
                     c.dataset.noise = NoiseKind::Additive;
                   else
                     throw ConfigError(fmt::format("unknown noise kind '{}'", s));
                 }});
    b.push_back(integer("dataset", "seed", [](auto& c) -> auto& { return c.dataset.seed; }));

    b.push_back(integer("ga", "population", [](auto& c) -> auto& { return c.ga.population; }));
    b.push_back(integer("ga", "islands", [](auto& c) -> auto& { return c.ga.islands; }));
    b.push_back(integer("ga", "generations", [](auto& c) -> auto& { return c.ga.generations; }));
    b.push_back(array<3>("ga", "penalties", [](auto& c) -> auto& { return c.ga.penalties; }));
    b.push_back(real("ga", "parsimony", [](auto& c) -> auto& { return c.ga.parsimony; }));
    b.push_back({"ga", "weights", [](const RunConfig& c) { return fmt_list(c.ga.weights.as_array()); },
                 [](RunConfig& c, const std::string& s) {
                   const auto w = to_array<kMutationKinds>(s);
                   c.ga.weights = {w[0], w[1], w[2], w[3], w[4], w[5], w[6]};
                 }});
    b.push_back(integer("ga", "max_size", [](auto& c) -> auto& { return c.ga.max_size; }));
    b.push_back(integer("ga", "tournament", [](auto& c) -> auto& { return c.ga.tournament; }));
    b.push_back(real("ga", "replace_fraction", [](auto& c) -> auto& { return c.ga.replace_fraction; }));
    b.push_back(
        real("ga", "crossover_probability", [](auto& c) -> auto& { return c.ga.crossover_probability; }));
    b.push_back(integer("ga", "hof_period", [](auto& c) -> auto& { return c.ga.hof_period; }));
    b.push_back(integer("ga", "hof_submissions", [](auto& c) -> auto& { return c.ga.hof_submissions; }));
    b.push_back(integer("ga", "init_max_depth", [](auto& c) -> auto& { return c.ga.init.max_depth; }));
    b.push_back(real("ga", "init_target_size", [](auto& c) -> auto& { return c.ga.init.target_size; }));
    b.push_back(
        real("ga", "init_variable_leaf_prob", [](auto& c) -> auto& { return c.ga.init.variable_leaf_prob; }));
    add_fit(b, "ga", [](auto& c) -> auto& { return c.ga.fit; });

    b.push_back(real("bsr", "c_ops", [](auto& c) -> auto& { return c.bsr.c_ops; }));
    b.push_back(array<2>("bsr", "penalties", [](auto& c) -> auto& { return c.bsr.penalties; }));
    b.push_back(real("bsr", "c_par", [](auto& c) -> auto& { return c.bsr.c_par; }));
    b.push_back(integer("bsr", "steps", [](auto& c) -> auto& { return c.bsr.steps; }));
    b.push_back(array<3>("bsr", "move_frequencies",
                         [](auto& c) -> auto& { return c.bsr.move_frequencies; }));
    b.push_back(integer("bsr", "max_size", [](auto& c) -> auto& { return c.bsr.max_size; }));
    b.push_back(integer("bsr", "thinning", [](auto& c) -> auto& { return c.bsr.thinning; }));
    add_fit(b, "bsr", [](auto& c) -> auto& { return c.bsr.fit; });

    b.push_back({"checker", "budget_ms",
                 [](const RunConfig& c) { return fmt_double(c.checker.budget.count() / 1000.0); },
                 [](RunConfig& c, const std::string& s) {
                   c.checker.budget = std::chrono::microseconds(static_cast<long long>(to_double(s) * 1000.0));
                 }});
    b.push_back(real("checker", "scan_start", [](auto& c) -> auto& { return c.checker.range.start; }));
    b.push_back(real("checker", "scan_stop", [](auto& c) -> auto& { return c.checker.range.stop; }));
    b.push_back(integer("checker", "scan_points", [](auto& c) -> auto& { return c.checker.range.scan_points; }));
    b.push_back(real("checker", "scan_tolerance", [](auto& c) -> auto& { return c.checker.range.tolerance; }));
    return b;
  }();
  return table;
}

const Binding* find(const std::string& section, const std::string& key) {
  for (const auto& b : bindings())
    if (b.section == section && b.key == key) return &b;
  return nullptr;
}

void check(const RunConfig& c) {
  if (c.runs < 1) throw ConfigError("runs must be >= 1");
  if (c.ga.population < 2 || c.ga.islands < 1 || c.ga.generations < 0) throw ConfigError("invalid [ga] sizes");
  for (double g : c.ga.penalties)
    if (!(g >= 1.0)) throw ConfigError("[ga] penalties must be >= 1");
  for (double b : c.bsr.penalties)
    if (!(b >= 0.0)) throw ConfigError("[bsr] penalties must be >= 0");
  if (c.bsr.steps < 0 || c.bsr.thinning < 1) throw ConfigError("invalid [bsr] steps or thinning");
  if (c.ga.fit.restarts < 1 || c.bsr.fit.restarts < 1) throw ConfigError("fit_restarts must be >= 1");
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
  }
  RunConfig cfg;
  auto apply = [&](const std::string& section, const std::string& key, const std::string& value) {
    const Binding* b = find(section, key);
    if (!b) throw ConfigError(section.empty() ? fmt::format("unknown key '{}'", key)
                                              : fmt::format("unknown key '{}' in [{}]", key, section));
    try {
      b->set(cfg, boost::algorithm::trim_copy(value));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}{}: {}", section.empty() ? "" : section + ".", key, e.what()));
    }
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply("", name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) apply(name, key, leaf.data());
  }
  check(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  return parse_config(in);
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section = "";
  for (const auto& b : bindings()) {
    if (b.section != section) {
      section = b.section;
      out << "\n[" << section << "]\n";
    }
    out << b.key << " = " << b.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace isosr
